"""
Delay of a cache placement
==========================

Five clusters share a 108-file library.  Each cluster caches its own 20
most popular files, and we ask the queueing model how long an average
request waits and where the traffic goes.
"""

import numpy as np

from d2dcache import build_popularity, cpf_placement, network_delay, reference_params

params = reference_params()
pop = build_popularity(params)

# Popularity rows are rotations of one Zipf curve, so the clusters like
# different files and their top-20 lists only partly overlap.
print("most popular file per cluster:", [pop.top_files(k, 1)[0] for k in range(1, params.K + 1)])

placement = cpf_placement(params)
report = network_delay(placement, pop, params)

###############################################################################
# Per-cluster breakdown.  ``mode_shares`` splits each cluster's traffic into
# local D2D, remote (another cluster through the base station) and backhaul.

np.set_printoptions(precision=3, suppress=True)
print("shares (local, remote, backhaul):")
print(report.mode_shares())
print("utilization:", report.rho)
print(f"network delay: {report.network_delay * 1e3:.1f} ms")

###############################################################################
# The same report as CSV, ready for a spreadsheet.

print(report.to_csv())
