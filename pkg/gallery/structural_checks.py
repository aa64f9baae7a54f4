"""
Structure behind the greedy guarantee
=====================================

The greedy algorithm comes within a factor two of the best placement
because the delay is supermodular in the set of cached (cluster, file)
pairs and the per-cluster capacity limits form a partition matroid.
Both facts are checked here by random sampling, and the greedy result is
compared with exhaustive search on a small instance.
"""

from d2dcache import (
    SystemParams,
    brute_force_optimal,
    check_matroid,
    check_supermodularity,
    greedy_caching,
)

params = SystemParams(K=3, F=6, m0=6, N=2, lam=0.5, beta=0.7)
print(check_supermodularity(params, trials=1000, seed=0))
print(check_matroid(params, trials=1000, seed=0))

opt = brute_force_optimal(params)
greedy = greedy_caching(params)
print(f"searched {opt.candidates} placements; optimum {opt.delay:.5f} s, "
      f"greedy {greedy.delays[-1]:.5f} s")
