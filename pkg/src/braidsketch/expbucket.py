"""ExponentialBucket: fixed geometric value buckets, one Count-Min sketch each.

Bucket ``b`` holds values in ``[(1+rho)**b, (1+rho)**(b+1))``; the last
bucket is closed at ``U``. Each bucket's sketch counts stream ids, so a
stream's value distribution is recovered, bucket by bucket, from point
queries. No rank guarantee exists: everything can land in one bucket.

Quantiles report the *left* edge of the bracketing bucket. Averages weight
each bucket by the geometric mean of its edges.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .cmsketch import CmConfig, CountMinSketch
from .core import ApproxParams, DomainError, is_power_of_two
from .synopsis import BucketSynopsis, MemoryReport, Profile, decode_ids, encode_ids


class ExponentialBucketSynopsis(BucketSynopsis):
    algo = "expb"
    MAGIC = b"EXB1"
    HEADER = struct.Struct("<4sdQIIQII")
    BUCKET = struct.Struct("<IQ")

    def __init__(self, rho: float, U: int, cm_config: CmConfig):
        super().__init__()
        if not 0.0 < rho <= 1.0:
            raise DomainError(f"rho must lie in (0, 1], got {rho}")
        if U < 2 or not is_power_of_two(U):
            raise DomainError(f"U must be a power of two >= 2, got {U}")
        self.rho = float(rho)
        self.U = int(U)
        self.cm_config = cm_config
        self.n_buckets = math.ceil(round(math.log(U) / math.log1p(rho), 9)) + 1
        ratio = 1.0 + self.rho
        # Left edges; searchsorted(side="right") sends a value sitting exactly
        # on an edge to the higher bucket.
        self.lefts = np.array([ratio ** b for b in range(self.n_buckets + 1)])
        self.bucket_totals = np.zeros(self.n_buckets, dtype=np.int64)
        self.sketches: dict[int, CountMinSketch] = {}

    @classmethod
    def from_params(cls, params: ApproxParams, cm_config: CmConfig | None = None,
                    seed: int = 0) -> "ExponentialBucketSynopsis":
        if cm_config is None:
            cm_config = CmConfig.from_error(params.eps, params.delta, seed)
        return cls(params.rho, params.U, cm_config)

    def bucket_of(self, value) -> int | np.ndarray:
        idx = np.searchsorted(self.lefts, value, side="right") - 1
        idx = np.clip(idx, 0, self.n_buckets - 1)
        return int(idx) if np.ndim(idx) == 0 else idx

    def bucket_range(self, b: int) -> tuple[float, float]:
        return float(self.lefts[b]), float(min(self.lefts[b + 1], self.U))

    def _check_values(self, values: np.ndarray) -> None:
        if values.size and (values.min() < 1 or values.max() > self.U):
            raise DomainError(f"values must lie in [1, {self.U}]")

    def insert(self, stream_id: int, value: int) -> None:
        if not 1 <= value <= self.U:
            raise DomainError(f"value {value} outside [1, {self.U}]")
        b = self.bucket_of(value)
        sketch = self.sketches.get(b)
        if sketch is None:
            sketch = self.sketches[b] = CountMinSketch(self.cm_config)
        sketch.insert(int(stream_id))
        self.bucket_totals[b] += 1
        self._ids.add(int(stream_id))
        self.n += 1

    def ingest_arrays(self, stream_ids, values) -> None:
        # Buckets are fixed, so a whole batch can be routed at once; the
        # sketches are linear, so the result equals item-by-item insertion.
        ids = np.asarray(stream_ids, dtype=np.int64)
        values = np.asarray(values)
        self._check_values(values)
        buckets = self.bucket_of(values)
        order = np.argsort(buckets, kind="stable")
        buckets, ids_sorted = buckets[order], ids[order]
        cuts = np.flatnonzero(np.diff(buckets)) + 1
        for chunk_b, chunk_ids in zip(np.split(buckets, cuts), np.split(ids_sorted, cuts)):
            if chunk_b.size == 0:
                continue
            b = int(chunk_b[0])
            sketch = self.sketches.get(b)
            if sketch is None:
                sketch = self.sketches[b] = CountMinSketch(self.cm_config)
            keys, counts = np.unique(chunk_ids, return_counts=True)
            sketch.insert_many(keys, counts)
            self.bucket_totals[b] += chunk_ids.size
        self._ids.update(np.unique(ids).tolist())
        self.n += ids.size

    # -- queries -------------------------------------------------------------

    def _build_profile(self, ids: np.ndarray) -> Profile:
        present = sorted(self.sketches)
        cols = self.cm_config.columns(ids)
        rows = np.arange(self.cm_config.depth)[:, None]
        per_bucket = np.zeros((len(present), ids.size), dtype=np.int64)
        for j, b in enumerate(present):
            grid = self.sketches[b].counters
            per_bucket[j] = grid[rows, cols].min(axis=0)
        running = np.cumsum(per_bucket, axis=0)
        sizes = running[-1] if present else np.zeros(ids.size, dtype=np.int64)
        lo = np.array([self.bucket_range(b)[0] for b in present])
        hi = np.array([self.bucket_range(b)[1] for b in present])
        return Profile(ids, lo, hi, per_bucket, running, sizes)

    def _report_edges(self, prof: Profile) -> np.ndarray:
        return prof.lo

    def _representatives(self, prof: Profile) -> np.ndarray:
        return np.sqrt(prof.lo * prof.hi)

    # -- persistence ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        c = self.cm_config
        present = sorted(self.sketches)
        parts = [self.HEADER.pack(self.MAGIC, self.rho, self.U, c.width, c.depth, c.seed,
                                  self.n_buckets, len(present))]
        for b in present:
            parts.append(self.BUCKET.pack(b, int(self.bucket_totals[b])))
            parts.append(self.sketches[b].to_bytes())
        parts.append(encode_ids(self._ids))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ExponentialBucketSynopsis":
        magic, rho, U, width, depth, seed, n_buckets, present = cls.HEADER.unpack_from(data)
        if magic != cls.MAGIC:
            raise ValueError(f"bad ExponentialBucket magic {magic!r}")
        config = CmConfig(width, depth, seed)
        syn = cls(rho, U, config)
        offset = cls.HEADER.size
        sketch_size = CountMinSketch.HEADER.size + 8 * width * depth
        for _ in range(present):
            b, total = cls.BUCKET.unpack_from(data, offset)
            offset += cls.BUCKET.size
            syn.sketches[b] = CountMinSketch.from_bytes(data[offset: offset + sketch_size])
            syn.bucket_totals[b] = total
            offset += sketch_size
        syn._ids, offset = decode_ids(data, offset)
        syn.n = int(syn.bucket_totals.sum())
        return syn

    def memory(self) -> MemoryReport:
        # counter blocks only; each sketch's own header counts as structure
        counters = sum(s.nbytes - CountMinSketch.HEADER.size for s in self.sketches.values())
        structure = (self.HEADER.size
                     + (self.BUCKET.size + CountMinSketch.HEADER.size) * len(self.sketches))
        return MemoryReport(counters, structure, 8 + 8 * len(self._ids))
