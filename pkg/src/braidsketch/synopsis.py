"""Machinery shared by the two bucket synopses.

Both synopses answer every rank- or average-based query from a *profile*:
for each bucket (in value order) the per-bucket Count-Min estimate of each
stream, plus the running count the quantile walk compares against the
target rank. Subclasses only decide how the profile is built and which
bucket edge they report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (
    BraidItem,
    DomainError,
    EmptySummaryError,
    UnsupportedWeightError,
    Weight,
    WeightKind,
    target_ranks,
)

SKETCH_WEIGHTS = (WeightKind.AVERAGE, WeightKind.MEDIAN, WeightKind.QUANTILE)


def check_sketch_weight(weight: Weight, algo: str) -> None:
    if weight.kind in SKETCH_WEIGHTS:
        return
    if weight.kind in (WeightKind.MAX, WeightKind.MIN):
        raise UnsupportedWeightError(
            f"{algo} does not answer {weight.label}; the exact O(k) extremes tracker does"
        )
    raise UnsupportedWeightError(
        f"{algo} cannot track {weight.label}: ranking streams by {weight.label} needs "
        f"Omega(m) space in one pass (set-disjointness lower bound); use the exact oracle"
    )


@dataclass(frozen=True)
class MemoryReport:
    """Snapshot size broken down the way the memory experiment plots it."""

    counter_bytes: int
    structure_bytes: int
    id_bytes: int

    @property
    def total(self) -> int:
        return self.counter_bytes + self.structure_bytes + self.id_bytes


@dataclass
class Profile:
    ids: np.ndarray        # (K,) stream ids
    lo: np.ndarray         # (B,) left edge of each bucket, in walk order
    hi: np.ndarray         # (B,) right edge
    per_bucket: np.ndarray  # (B, K) Count-Min estimate of each stream in each bucket
    running: np.ndarray    # (B, K) running count used by the quantile walk
    sizes: np.ndarray      # (K,) estimated stream sizes


class BucketSynopsis:
    """Base class: observed-id bookkeeping, ingestion loops and top-k."""

    algo = "synopsis"

    def __init__(self):
        self._ids: set[int] = set()
        self.n = 0
        self._profile_cache: tuple[int, Profile] | None = None

    # -- ingestion -----------------------------------------------------------

    def insert(self, stream_id: int, value: int) -> None:
        raise NotImplementedError

    def ingest(self, item: BraidItem) -> None:
        self.insert(item.stream_id, item.value)

    def ingest_many(self, items: Iterable[BraidItem]) -> None:
        for item in items:
            self.insert(item.stream_id, item.value)

    def ingest_arrays(self, stream_ids, values) -> None:
        """Ingest parallel arrays of ids and values, in arrival order."""
        insert = self.insert
        for sid, v in zip(np.asarray(stream_ids).tolist(), np.asarray(values).tolist()):
            insert(sid, v)

    @property
    def stream_ids(self) -> np.ndarray:
        return np.array(sorted(self._ids), dtype=np.int64)

    # -- queries -------------------------------------------------------------

    def _build_profile(self, ids: np.ndarray) -> Profile:
        raise NotImplementedError

    def _report_edges(self, prof: Profile) -> np.ndarray:
        raise NotImplementedError

    def _representatives(self, prof: Profile) -> np.ndarray:
        raise NotImplementedError

    def profile(self, ids=None) -> Profile:
        if ids is None:
            if self._profile_cache is not None and self._profile_cache[0] == self.n:
                return self._profile_cache[1]
            prof = self._build_profile(self.stream_ids)
            self._profile_cache = (self.n, prof)
            return prof
        return self._build_profile(np.atleast_1d(np.asarray(ids, dtype=np.int64)))

    def stream_sizes(self, ids=None) -> np.ndarray:
        return self.profile(ids).sizes

    def stream_size(self, stream_id: int) -> int:
        return int(self.stream_sizes([stream_id])[0])

    def _evaluate(self, weight: Weight, prof: Profile) -> np.ndarray:
        check_sketch_weight(weight, self.algo)
        sizes = prof.sizes
        out = np.full(sizes.shape, np.nan)
        live = sizes > 0
        if not live.any() or prof.per_bucket.shape[0] == 0:
            return out
        if weight.kind is WeightKind.AVERAGE:
            reps = self._representatives(prof)
            out[live] = (reps @ prof.per_bucket[:, live]) / sizes[live]
            return out
        targets = target_ranks(weight, np.where(live, sizes, 1))
        reached = prof.running >= targets[None, :]
        first = np.argmax(reached, axis=0)
        edges = self._report_edges(prof)
        out[live] = edges[first[live]]
        return out

    def estimates(self, weight: Weight, ids=None) -> tuple[np.ndarray, np.ndarray]:
        """Estimated weight of every stream in ``ids`` (default: all observed)."""
        prof = self.profile(ids)
        return prof.ids, self._evaluate(weight, prof)

    def estimate(self, stream_id: int, weight: Weight) -> float:
        check_sketch_weight(weight, self.algo)
        prof = self.profile([stream_id])
        if prof.sizes[0] < 1:
            raise EmptySummaryError(f"stream {stream_id} has no estimated items")
        return float(self._evaluate(weight, prof)[0])

    def quantile(self, stream_id: int, phi: float) -> float:
        return self.estimate(stream_id, Weight.quantile(phi))

    def median(self, stream_id: int) -> float:
        return self.estimate(stream_id, Weight(WeightKind.MEDIAN))

    def average(self, stream_id: int) -> float:
        return self.estimate(stream_id, Weight(WeightKind.AVERAGE))

    def topk(self, weight: Weight, k: int) -> list[tuple[int, float]]:
        """The ``k`` observed streams with the largest estimates, ties to the smaller id."""
        check_sketch_weight(weight, self.algo)
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        ids, est = self.estimates(weight)
        return rank_streams(ids, est)[:k]

    def memory(self) -> MemoryReport:
        raise NotImplementedError

    def memory_bytes(self) -> int:
        return self.memory().total


def rank_streams(ids: np.ndarray, values: np.ndarray) -> list[tuple[int, float]]:
    """Sort (id, value) pairs by value descending, then id ascending."""
    ids = np.asarray(ids)
    values = np.asarray(values, dtype=float)
    order = np.lexsort((ids, -np.nan_to_num(values, nan=-np.inf)))
    return [(int(ids[i]), float(values[i])) for i in order]


def encode_ids(ids: Iterable[int]) -> bytes:
    arr = np.array(sorted(ids), dtype="<u8")
    return np.array([arr.size], dtype="<u8").tobytes() + arr.tobytes()


def decode_ids(data: bytes, offset: int) -> tuple[set[int], int]:
    count = int(np.frombuffer(data, dtype="<u8", count=1, offset=offset)[0])
    offset += 8
    ids = np.frombuffer(data, dtype="<u8", count=count, offset=offset)
    return set(int(x) for x in ids), offset + 8 * count
