"""
What cooperation between clusters buys
======================================

Without cooperation a request that misses the local cache goes straight
to the core network.  ``cooperation_gain`` evaluates the same placement
both ways across a cache-size sweep and writes a CSV.
"""

from d2dcache.experiments import cooperation_gain, gain_vs_cache_size_spec

rows = cooperation_gain(gain_vs_cache_size_spec(values=(5, 10, 15, 20, 30, 40)))
for r in rows:
    g = "unstable without cooperation" if r["gain"] is None else f"{r['gain']:.3f}"
    print(f"N={int(r['value']):3d}  with {r['delay_with']:.4f} s  gain {g}")
