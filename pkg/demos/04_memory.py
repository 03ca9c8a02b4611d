"""
Memory against the number of streams
====================================

The counter memory of VariableBucket depends on eps, delta, rho and U, not
on how many streams share the braid. Only the set of observed ids grows.
"""

from __future__ import annotations

from braidsketch.experiments import grid_settings, memory_vs_m

settings = grid_settings(rho=0.02, width=32, depth=8)
for row in memory_vs_m([250, 500, 1000, 2000], items=200, settings=settings):
    print(f"m={row.m:5d}  counters {row.counter_bytes / 2**20:6.2f} MiB  "
          f"structure {row.structure_bytes / 1024:6.1f} KiB  ids {row.id_bytes / 1024:5.1f} KiB")
