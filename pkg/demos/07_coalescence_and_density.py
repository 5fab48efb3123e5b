"""Coalescence of the extreme starts, and the density envelope between them.

Over a shared background and shared marks, the all-zeros and all-ones spin
starts can only merge; the plotted-to-console probability that they agree on
a centered window grows with the horizon.  The density curves from the two
extreme joint starts bracket every other start of the chain.
"""

from envspin import density_curves, estimate_coalescence, preset
from envspin.experiments import density_csv_text

spec = preset("cpree", gamma=1.0, delta0=2.0, delta1=1.0, p=0.5, lam=1.0, sites=33)

print("P[extreme starts agree on the centered 5-site window]")
for t in (0.5, 1.0, 2.0, 4.0, 8.0):
    rep = estimate_coalescence(spec, "0" * 33, k=2, t=t, replicas=20_000, seed=11)
    print("   t=%-4g  %.4f +- %.4f" % (t, rep.estimate, rep.stderr))

rep = density_curves(spec, [0.0, 0.5, 1.0, 2.0, 4.0, 8.0], replicas=20_000, seed=12)
print("\ndensity from the two extreme joint starts:")
print(density_csv_text(rep))
