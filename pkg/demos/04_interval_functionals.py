"""Run-count functionals of an ordered triple and the agreement classes.

Restricting the middle layer to the sites where the outer layers disagree,
count its maximal constant runs and the interior runs of each exact length.
A middle layer that is monotone along that subsequence sits in one of the
four agreement classes; any interior run rules them all out.
"""

from envspin import (
    Configuration,
    classify_agreement,
    interior_run_histogram,
    interval_run_count,
)

upper = "10111110111"
middle = "10110010110"
lower = "10000000000"

print("upper :", upper)
print("middle:", middle)
print("lower :", lower)

f = interval_run_count(lower, middle, upper, 0, 10)
g = interior_run_histogram(lower, middle, upper, 0, 10)
print("\nrun count over the full window:", f)
print("interior runs by length:", g)

cls = classify_agreement(Configuration(lower), Configuration(middle), Configuration(upper))
print("agreement class:", cls.kind, "(interior runs force NONE)")

for mid, label in (
    ("0000", "middle = lower everywhere"),
    ("1111", "middle = upper everywhere"),
    ("0011", "single interface, lower side first"),
    ("1100", "single interface, upper side first"),
):
    cls = classify_agreement(Configuration("0000"), Configuration(mid), Configuration("1111"))
    print("middle %s (%s) -> %s interface=%s" % (mid, label, cls.kind, cls.interface))
