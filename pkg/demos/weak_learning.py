"""Weak learning of symmetric bodies from random examples.

For a volume-1/2 slab the best of {median ball, everything, nothing} agrees
with the target on slightly more than half of the space. The edge shrinks like
1/sqrt(n), so advantage*sqrt(n) should stay roughly flat as n grows.
"""
import math
from statistics import NormalDist

from gausskk import RngStream, slab
from gausskk.learners import GaussianExamples, three_hypothesis_learner

root = RngStream(7, 0)
d = NormalDist().inv_cdf(0.75)  # Pr[|g_1| <= d] = 1/2
for i, n in enumerate([16, 64, 256]):
    body = slab(n, d)
    res = three_hypothesis_learner(GaussianExamples(body, root.derive(i)), 400_000, n)
    print(f"n={n:4d}  picked {res.hypothesis.describe():12s} gate={res.gate:7s} "
          f"adv={res.advantage:.4f} +- {res.std_error:.4f}  adv*sqrt(n)={res.advantage * math.sqrt(n):.3f}")
