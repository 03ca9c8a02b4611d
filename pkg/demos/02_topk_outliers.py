"""
Finding outlier streams
=======================

A braid of 300 streams, 30 of which run high. Both bucket synopses are fed
the braid once; their top-k lists are scored against the exact oracle.
"""

from __future__ import annotations

from braidsketch import MEDIAN, P95, GenSpec, MaterializedBraid, evaluate, generate
from braidsketch.core import ApproxParams
from braidsketch.datagen import outlier_ids
from braidsketch.metrics import SketchSettings

spec = GenSpec(kind="outlier", m=300, items_per_stream=1000, a=0.8, seed=3, interleave="random")
braid = generate(spec)
print(len(braid), "items from", braid.m, "streams")

oracle = MaterializedBraid.from_braid(braid)
planted = set(outlier_ids(spec).tolist())
found = {sid for sid, _ in oracle.topk(MEDIAN, 30)}
print("planted outliers among the true top 30 by median:", len(planted & found))

# 64 x 64 Count-Min sketches in every bucket, rho = 0.005
settings = SketchSettings(ApproxParams(0.05, 0.01, 0.005, 1 << 16), width=64, depth=64, seed=7)

for algo in ("varb", "expb"):
    for weight in (MEDIAN, P95):
        for r in evaluate(algo, weight, [10, 30], braid.stream_ids, braid.values,
                          settings=settings, oracle=oracle, dataset="outlier"):
            print(f"{algo:5s} {weight.label:7s} k={r.k:3d}  precision {r.precision:.2f}  "
                  f"distortion {r.distortion:.2f}  value error {r.avg_value_error:.4f}  "
                  f"{r.memory_bytes / 2**20:.1f} MiB")
