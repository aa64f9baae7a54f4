"""
Checking the model against simulation
=====================================

The analytic delay assumes a first-come first-served queue per cluster
with Poisson arrivals and exponential service in each mode.  The
simulator draws exactly that system, so the two should agree.
"""

from d2dcache import SimConfig, build_popularity, cpf_placement, network_delay, reference_params, simulate

for beta in (0.5, 1.0, 1.5, 2.0):
    params = reference_params(beta=beta, N=10)
    pop = build_popularity(params)
    c = cpf_placement(params)
    analytic = network_delay(c, pop, params).network_delay
    sim = simulate(SimConfig(params, c, horizon=10**6, seed=1), pop)
    err = abs(sim.network_mean_delay - analytic) / analytic
    print(f"beta={beta}: analytic {analytic:.4f}  simulated {sim.network_mean_delay:.4f} "
          f"+/- {sim.confidence_halfwidth:.4f}  ({100 * err:.2f}%)")

###############################################################################
# Little's law holds on the simulated sample path too.

print("mean in system:", sim.mean_in_system)
print("arrival rate x delay:", sim.arrival_rate * sim.mean_delay_per_cluster)
