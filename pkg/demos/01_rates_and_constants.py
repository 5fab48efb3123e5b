"""Define a model, validate its rate tables, and read off the derived constants.

The stock preset is a contact process whose recovery rate is switched by an
independently flipping background bit at every site: births arrive at
lam per occupied neighbor, deaths at delta0 (background 0) or delta1
(background 1), and the background flips 0->1 at gamma*p and 1->0 at
gamma*(1-p).
"""

from envspin import check_attractive, check_compatible, format_config, preset

spec = preset("cpree", gamma=1.0, delta0=2.0, delta1=1.0, p=0.5, lam=1.0, sites=16)

ok0, _ = check_attractive(spec.spin.c0)
ok1, _ = check_attractive(spec.spin.c1)
okc, _ = check_compatible(spec.spin)
print("c0 attractive:", ok0, "| c1 attractive:", ok1, "| pair compatible:", okc)

c = spec.constants()
print("boundary-pair floor C =", c.C)
print("rate ceiling       K =", c.K)
print("dominating clocks: background", c.b_bar, "| spin", c.c_bar,
      "(split", c.c_bar0, "/", c.c_bar1, ")")

print("\nserialized config:\n")
print(format_config(spec))
