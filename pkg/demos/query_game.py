"""A learner probing a random intersection of slabs with membership queries.

The target removes each of M random slab complements independently with small
probability p. Queries reveal membership, but a point outside the target only
says that at least one of the slabs it crosses is active. Even after 64
queries the exact-posterior predictor barely beats guessing.
"""
from gausskk.lowerbound import advantage_bound, build_hard_params, run_query_sweep

n, s = 64, 16
params = build_hard_params(n, s, gamma=2, M_override=20_000, seed=3)
print(f"slab width d={params.d:.3f}  M={params.M}  p={params.p:.2e}  Lambda={params.Lambda:.1f}")

sweep = run_query_sweep(params, "random", [0, 4, 16, 64], trials=40, eval_samples=200, rng=params.stream.derive(5))
for rep in sweep.reports:
    print(f"{rep.queries:3d} queries: error {rep.error:.4f} +- {rep.std_error:.4f}")
print(f"advantage ceiling at 16 queries: {advantage_bound(n, s, 2):.4f}")
