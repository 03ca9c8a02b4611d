"""Exact, fully materialised ground truth for every weight function.

Memory is O(n) on purpose; this is the yardstick the sketches are measured
against. Rank conventions come from :func:`braidsketch.core.target_rank`.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .core import DomainError, EmptySummaryError, Weight, WeightKind, target_rank
from .synopsis import rank_streams


class MaterializedBraid:
    """Per-stream sorted value arrays, keyed by stream id."""

    def __init__(self, stream_ids, values):
        ids = np.asarray(stream_ids, dtype=np.int64)
        vals = np.asarray(values)
        if ids.shape != vals.shape:
            raise ValueError("stream_ids and values must have the same length")
        order = np.lexsort((vals, ids))
        ids, vals = ids[order], vals[order]
        uniq, starts = np.unique(ids, return_index=True)
        bounds = np.append(starts, ids.size)
        self.streams: dict[int, np.ndarray] = {
            int(sid): vals[bounds[i]: bounds[i + 1]] for i, sid in enumerate(uniq)
        }
        self.n = int(ids.size)
        self._rankings: dict[Weight, list[tuple[int, float]]] = {}

    @classmethod
    def from_braid(cls, braid) -> "MaterializedBraid":
        return cls(braid.stream_ids, braid.values)

    @classmethod
    def from_items(cls, items: Iterable) -> "MaterializedBraid":
        pairs = [(it[0], it[1]) for it in items]
        if not pairs:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0))
        ids, vals = zip(*pairs)
        return cls(np.array(ids), np.array(vals))

    @property
    def m(self) -> int:
        return len(self.streams)

    @property
    def stream_ids(self) -> np.ndarray:
        return np.array(sorted(self.streams), dtype=np.int64)

    def size(self, stream_id: int) -> int:
        s = self.streams.get(stream_id)
        return 0 if s is None else int(s.size)

    def values(self, stream_id: int) -> np.ndarray:
        return self.streams.get(stream_id, np.zeros(0))

    def weight(self, stream_id: int, weight: Weight) -> float:
        return exact_weight(self.values(stream_id), weight)

    def weights(self, weight: Weight, ids=None) -> tuple[np.ndarray, np.ndarray]:
        ids = self.stream_ids if ids is None else np.asarray(ids, dtype=np.int64)
        return ids, np.array([self.weight(int(i), weight) for i in ids], dtype=float)

    def ranking(self, weight: Weight) -> list[tuple[int, float]]:
        """All streams ordered by exact weight, best first; ties to the smaller id.

        Best means largest, except for Min, whose outliers are the streams
        with the smallest minimum (the only direction a best-so-far value
        can track exactly).
        """
        if weight not in self._rankings:
            ids, vals = self.weights(weight)
            if weight.kind is WeightKind.MIN:
                ranked = rank_streams(ids, -vals)
                self._rankings[weight] = [(sid, -v) for sid, v in ranked]
            else:
                self._rankings[weight] = rank_streams(ids, vals)
        return self._rankings[weight]

    def topk(self, weight: Weight, k: int) -> list[tuple[int, float]]:
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        return self.ranking(weight)[:k]

    def rank_lookup(self, weight: Weight) -> dict[int, int]:
        """1-based exact rank of every stream under ``weight``."""
        return {sid: r for r, (sid, _) in enumerate(self.ranking(weight), start=1)}


def exact_weight(sorted_values: np.ndarray, weight: Weight) -> float:
    """Exact weight of one stream given its values sorted ascending."""
    s = np.asarray(sorted_values)
    n = s.size
    if n == 0:
        raise EmptySummaryError("weight of an empty stream")
    kind = weight.kind
    if kind is WeightKind.AVERAGE:
        return float(s.mean())
    if kind in (WeightKind.MEDIAN, WeightKind.QUANTILE):
        return float(s[target_rank(weight, n) - 1])
    if kind is WeightKind.MAX:
        return float(s[-1])
    if kind is WeightKind.MIN:
        return float(s[0])
    if kind is WeightKind.SECOND_MAX:
        if n < 2:
            raise EmptySummaryError("second largest of a single-item stream")
        return float(s[-2])
    if kind is WeightKind.SPREAD:
        return float(s[-1] - s[0])
    raise DomainError(f"unhandled weight {weight}")


def exact_weight_of(values: Iterable[float], weight: Weight) -> float:
    """:func:`exact_weight` for an unsorted collection."""
    return exact_weight(np.sort(np.asarray(list(values) if not isinstance(values, np.ndarray) else values)),
                        weight)


def exact_topk(braid: MaterializedBraid, weight: Weight, k: int) -> list[tuple[int, float]]:
    return braid.topk(weight, k)
