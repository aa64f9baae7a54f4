"""
Greedy placement against caching the popular files
==================================================

With slow cellular and backhaul links (15 and 10 Mbit/s) and a flat
popularity curve, it pays to coordinate: the greedy placement avoids
storing the same file in several clusters and beats each cluster caching
its own favourites.  With a steep curve the two coincide.
"""

from d2dcache import (
    RateModel,
    build_popularity,
    cpf_placement,
    greedy_caching,
    network_delay,
    reference_params,
    random_placement,
)
from d2dcache.params import MBIT

rates = RateModel.fixed(15 * MBIT, 10 * MBIT)

for beta in (0.5, 2.0):
    params = reference_params(beta=beta, rate_d2d=50 * MBIT, rate_cell=15 * MBIT,
                          rate_backhaul=10 * MBIT)
    pop = build_popularity(params)
    trace = greedy_caching(params, pop, rates)
    d_gca = trace.delays[-1]
    d_cpf = network_delay(cpf_placement(params), pop, params, rates).network_delay
    d_rc = sum(network_delay(random_placement(params, s), pop, params, rates).network_delay
               for s in range(20)) / 20
    print(f"beta={beta}: greedy {d_gca:.4f} s, popular {d_cpf:.4f} s, random {d_rc:.4f} s")

###############################################################################
# The trace records every step, so the diminishing returns are visible.

print(trace.to_csv().splitlines()[:6])
