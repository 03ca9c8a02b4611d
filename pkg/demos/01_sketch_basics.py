"""
Count-Min sketches and q-digests
================================

The two building blocks, on their own, before they are combined.
"""

from __future__ import annotations

import numpy as np

from braidsketch import CmConfig, CountMinSketch, QDigest

rng = np.random.default_rng(0)

# A Count-Min sketch sized for eps = 0.01, delta = 0.01: width ceil(e/eps),
# depth ceil(ln 1/delta).
config = CmConfig.from_error(0.01, 0.01, seed=1)
print("sketch shape", config.depth, "x", config.width)

keys = rng.zipf(1.5, size=20_000) % 5000
cms = CountMinSketch(config)
uniq, counts = np.unique(keys, return_counts=True)
cms.insert_many(uniq, counts)

# Estimates never fall below the truth; the excess is at most eps * n
# for all but a delta fraction of keys.
est = cms.query(uniq)
excess = est - counts
print("underestimates:", int((excess < 0).sum()))
print("largest excess:", int(excess.max()), "  eps * n =", 0.01 * keys.size)

# A q-digest over [1, 1024] with rho = 0.02: no internal bucket holds more
# than floor(n rho / log2 U) items, so a quantile is off by at most rho n ranks.
values = np.clip(np.rint(rng.normal(400, 80, size=10_000)), 1, 1024).astype(int)
qd = QDigest(0.02, 1024)
qd.extend(values.tolist())
print("buckets kept:", len(qd), "for", qd.n, "items")
for phi in (0.05, 0.5, 0.95):
    exact = np.sort(values)[int(np.ceil(phi * values.size)) - 1]
    print(f"phi={phi}: digest {qd.quantile(phi)}, exact {exact}")
