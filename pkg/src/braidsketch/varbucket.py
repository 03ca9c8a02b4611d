"""VariableBucket: a q-digest whose buckets each carry a Count-Min sketch.

The q-digest adapts bucket boundaries to the data so that no internal
bucket holds more than ``floor(n rho / log2 U)`` items; the sketch in each
bucket tells which streams those items came from. When compression folds
two siblings into their parent, their sketches are unioned into the
parent's, so ``sketch.total == count`` holds for every bucket at all times.

Quantile queries walk the buckets in post-order and report the right edge
of the bucket at which the stream's running count reaches the target rank.
Two ways of forming that running count are offered:

``counting="union"``
    one accumulator sketch absorbs each visited bucket and is point-queried
    after every merge (rank error at most ``2 eps n + rho n``);
``counting="sum"``
    the per-bucket point queries are summed instead. Every term is an
    overestimate of the same true count, and a sum of row minima never
    exceeds the row minimum of the sums, so this is never looser than the
    union and is far tighter when many streams share a sketch.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .cmsketch import U64_MAX, CmConfig, CountMinSketch
from .core import ApproxParams, CounterOverflowError, DomainError
from .qdigest import QDigest
from .synopsis import BucketSynopsis, MemoryReport, Profile, decode_ids, encode_ids

COUNTING_MODES = ("union", "sum")


class VariableBucketSynopsis(BucketSynopsis):
    algo = "varb"
    MAGIC = b"VRB1"
    HEADER = struct.Struct("<4sdQIIQQI")
    BUCKET = struct.Struct("<BIQ")

    def __init__(self, rho: float, U: int, cm_config: CmConfig, *,
                 cadence: str = "insert", counting: str = "union"):
        super().__init__()
        if counting not in COUNTING_MODES:
            raise DomainError(f"counting must be one of {COUNTING_MODES}, got {counting!r}")
        self.cm_config = cm_config
        self.counting = counting
        self.digest = QDigest(rho, U, cadence=cadence, on_merge=self._merge_sketches)
        self.sketches: dict[int, CountMinSketch] = {}

    @classmethod
    def from_params(cls, params: ApproxParams, cm_config: CmConfig | None = None,
                    seed: int = 0, **kwargs) -> "VariableBucketSynopsis":
        if cm_config is None:
            cm_config = CmConfig.from_error(params.eps, params.delta, seed)
        return cls(params.rho, params.U, cm_config, **kwargs)

    @property
    def rho(self) -> float:
        return self.digest.rho

    @property
    def U(self) -> int:
        return self.digest.U

    def _merge_sketches(self, parent: int, child: int, sibling: int) -> None:
        sketches = self.sketches
        target = sketches.get(parent)
        for node in (child, sibling):
            moved = sketches.pop(node, None)
            if moved is None:
                continue
            if target is None:
                # reuse the child's sketch object as the parent's
                sketches[parent] = target = moved
            else:
                target.merge_from(moved)

    def insert(self, stream_id: int, value: int) -> None:
        digest = self.digest
        node, created = digest.add(value)
        self._ids.add(stream_id)
        self.n += 1
        sketches = self.sketches
        if created and digest.cadence == "insert" and not digest.threshold_changed():
            # The new leaf usually merges straight upward; let it climb before
            # giving it a sketch, then count the item where it landed.
            t = digest._last_threshold
            pending = None
            if t > 0:
                node, pending = digest.climb(node, t, payload_free=True)
            sketch = sketches.get(node)
            if sketch is None:
                sketch = sketches[node] = CountMinSketch(self.cm_config)
            sketch.insert(stream_id)
            if pending:
                digest._sweep(pending, t)
            return
        if created:
            sketch = sketches[node] = CountMinSketch(self.cm_config)
        else:
            sketch = sketches[node]
        sketch.insert(stream_id)
        digest.restore(node, created)

    def ingest_arrays(self, stream_ids, values) -> None:
        """Batch form of :meth:`insert`, with the per-item path inlined.

        Produces exactly the state item-by-item insertion would; only the
        Python call overhead differs.
        """
        ids = np.asarray(stream_ids)
        values = np.asarray(values)
        if ids.shape != values.shape:
            raise ValueError("stream_ids and values must have the same length")
        if values.size and (values.min() < 1 or values.max() > self.U):
            raise DomainError(f"values must lie in [1, {self.U}]")
        digest = self.digest
        if digest.cadence != "insert":
            super().ingest_arrays(ids, values)
            return
        if self.n + ids.size > U64_MAX:
            raise CounterOverflowError("item count would exceed 2**64 - 1")
        counts = digest.counts
        sketches = self.sketches
        config = self.cm_config
        base = digest.U - 1
        rho, log_u = digest.rho, digest.log_u
        climb, sweep, compress = digest.climb, digest._sweep, digest.compress
        floor = math.floor
        n = digest.n
        last_t = digest._last_threshold
        for sid, v in zip(ids.tolist(), values.tolist()):
            node = base + v
            n += 1
            t = floor(n * rho / log_u)
            c = counts.get(node)
            if c is not None:
                counts[node] = c + 1
                sketch = sketches[node]
            else:
                counts[node] = 1
                pending = None
                if t == last_t and t > 0:
                    node, pending = climb(node, t, True)
                sketch = sketches.get(node)
                if sketch is None:
                    sketch = sketches[node] = CountMinSketch(config)
            sketch.total += 1
            buf = sketch._pending
            buf[sid] = buf.get(sid, 0) + 1
            if len(buf) > sketch.pending_limit:
                sketch._flush()
            if t != last_t:
                digest.n = n
                compress()
                last_t = t
            elif c is None and pending:
                sweep(pending, t)
        digest.n = n
        self.n += int(ids.size)
        self._ids.update(np.unique(ids).tolist())

    def compress(self) -> None:
        self.digest.compress()

    # -- queries -------------------------------------------------------------

    def _build_profile(self, ids: np.ndarray) -> Profile:
        order = self.digest.post_order()
        cols = self.cm_config.columns(ids)
        rows = np.arange(self.cm_config.depth)[:, None]
        per_bucket = np.zeros((len(order), ids.size), dtype=np.int64)
        if self.counting == "union":
            running = np.zeros_like(per_bucket)
            acc = np.zeros((self.cm_config.depth, self.cm_config.width), dtype=np.uint64)
            for j, node in enumerate(order):
                grid = self.sketches[node].counters
                per_bucket[j] = grid[rows, cols].min(axis=0)
                acc += grid
                running[j] = acc[rows, cols].min(axis=0)
            sizes = running[-1] if order else np.zeros(ids.size, dtype=np.int64)
        else:
            for j, node in enumerate(order):
                per_bucket[j] = self.sketches[node].counters[rows, cols].min(axis=0)
            running = np.cumsum(per_bucket, axis=0)
            sizes = running[-1] if order else np.zeros(ids.size, dtype=np.int64)
        bounds = [self.digest.bounds(node) for node in order]
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        return Profile(ids, lo, hi, per_bucket, running, sizes)

    def _report_edges(self, prof: Profile) -> np.ndarray:
        return prof.hi

    def _representatives(self, prof: Profile) -> np.ndarray:
        return (prof.lo + prof.hi) / 2.0

    def check_invariants(self) -> list[str]:
        problems = self.digest.check_invariants()
        if set(self.sketches) != set(self.digest.counts):
            problems.append("sketch set differs from bucket set")
        for node, count in self.digest.counts.items():
            sketch = self.sketches.get(node)
            if sketch is not None and sketch.total != count:
                problems.append(f"bucket {self.digest.bucket(node)} sketch total {sketch.total}")
        return problems

    # -- persistence ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        c = self.cm_config
        d = self.digest
        nodes = sorted(d.counts, key=lambda x: (d.level(x), x))
        parts = [self.HEADER.pack(self.MAGIC, d.rho, d.U, c.width, c.depth, c.seed, d.n, len(nodes))]
        for node in nodes:
            b = d.bucket(node)
            parts.append(self.BUCKET.pack(b.level, b.index, b.count))
            parts.append(self.sketches[node].to_bytes())
        parts.append(encode_ids(self._ids))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes, **kwargs) -> "VariableBucketSynopsis":
        magic, rho, U, width, depth, seed, n, count = cls.HEADER.unpack_from(data)
        if magic != cls.MAGIC:
            raise ValueError(f"bad VariableBucket magic {magic!r}")
        syn = cls(rho, U, CmConfig(width, depth, seed), **kwargs)
        offset = cls.HEADER.size
        sketch_size = CountMinSketch.HEADER.size + 8 * width * depth
        d = syn.digest
        for _ in range(count):
            level, index, bucket_count = cls.BUCKET.unpack_from(data, offset)
            offset += cls.BUCKET.size
            node = d.node(level, index)
            d.counts[node] = bucket_count
            syn.sketches[node] = CountMinSketch.from_bytes(data[offset: offset + sketch_size])
            offset += sketch_size
        d.n = n
        d._last_threshold = d.threshold
        syn.n = n
        syn._ids, offset = decode_ids(data, offset)
        return syn

    def memory(self) -> MemoryReport:
        # counter blocks only; each sketch's own header counts as structure
        counters = sum(s.nbytes - CountMinSketch.HEADER.size for s in self.sketches.values())
        structure = (self.HEADER.size
                     + (self.BUCKET.size + CountMinSketch.HEADER.size) * len(self.sketches))
        return MemoryReport(counters, structure, 8 + 8 * len(self._ids))
