"""Exact top-k streams by Max or Min item value in O(k) space.

A stream's best value only improves, so a bounded heap of the k best
(stream, best-so-far) pairs is exact: the heap root is the weakest retained
stream, and an item from an unretained stream either beats the root or
could never have placed that stream in the top k.

An evicted stream may come back later with a better item. That is still
correct because an item carries its own value: if the stream had a better
value before, it would not have been evicted in favour of a weaker one.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .core import BraidItem, DomainError, UnsupportedWeightError, Weight, WeightKind


class ExtremeTracker:
    """Indexed binary heap of at most ``k`` streams, weakest at the root.

    ``mode`` is ``"max"`` or ``"min"``. Ties between streams go to the
    smaller id, matching the oracle. ``comparisons`` counts key comparisons
    so per-item cost can be checked against ``O(log k)``.
    """

    def __init__(self, k: int, mode: str = "max"):
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        if mode not in ("max", "min"):
            raise DomainError(f"mode must be 'max' or 'min', got {mode!r}")
        self.k = int(k)
        self.mode = mode
        self._sign = 1 if mode == "max" else -1
        self.heap: list[tuple[float, int]] = []  # (signed best value, stream id)
        self.pos: dict[int, int] = {}
        self.comparisons = 0
        self.items = 0

    @classmethod
    def for_weight(cls, weight: Weight, k: int) -> "ExtremeTracker":
        if weight.kind is WeightKind.MAX:
            return cls(k, "max")
        if weight.kind is WeightKind.MIN:
            return cls(k, "min")
        raise UnsupportedWeightError(f"the extremes tracker answers max and min only, not {weight.label}")

    # Entry a is weaker than b when its value is smaller, or equal with a
    # larger id (the smaller id wins ties, so it ranks higher).
    def _weaker(self, a: tuple[float, int], b: tuple[float, int]) -> bool:
        self.comparisons += 1
        return a[0] < b[0] or (a[0] == b[0] and a[1] > b[1])

    def _place(self, i: int, entry: tuple[float, int]) -> None:
        self.heap[i] = entry
        self.pos[entry[1]] = i

    def _sift_up(self, i: int) -> None:
        heap = self.heap
        entry = heap[i]
        while i > 0:
            parent = (i - 1) >> 1
            if not self._weaker(entry, heap[parent]):
                break
            self._place(i, heap[parent])
            i = parent
        self._place(i, entry)

    def _sift_down(self, i: int) -> None:
        heap = self.heap
        size = len(heap)
        entry = heap[i]
        while True:
            child = 2 * i + 1
            if child >= size:
                break
            if child + 1 < size and self._weaker(heap[child + 1], heap[child]):
                child += 1
            if not self._weaker(heap[child], entry):
                break
            self._place(i, heap[child])
            i = child
        self._place(i, entry)

    def insert(self, stream_id: int, value: float) -> None:
        self.items += 1
        entry = (self._sign * value, stream_id)
        i = self.pos.get(stream_id)
        if i is not None:
            if entry[0] > self.heap[i][0]:
                # a better value can only move the entry away from the root
                self.heap[i] = entry
                self._sift_down(i)
            return
        if len(self.heap) < self.k:
            self.heap.append(entry)
            self._sift_up(len(self.heap) - 1)
            return
        if self._weaker(self.heap[0], entry):
            del self.pos[self.heap[0][1]]
            self.heap[0] = entry
            self._sift_down(0)

    def ingest(self, item: BraidItem) -> None:
        self.insert(item.stream_id, item.value)

    def ingest_many(self, items: Iterable[BraidItem]) -> None:
        for item in items:
            self.insert(item.stream_id, item.value)

    def ingest_arrays(self, stream_ids, values) -> None:
        insert = self.insert
        for sid, v in zip(np.asarray(stream_ids).tolist(), np.asarray(values).tolist()):
            insert(sid, v)

    def topk(self) -> list[tuple[int, float]]:
        """Retained streams, best first, as (stream_id, value)."""
        ordered = sorted(self.heap, key=lambda e: (-e[0], e[1]))
        return [(sid, self._sign * v) for v, sid in ordered]

    def __len__(self) -> int:
        return len(self.heap)

    def __contains__(self, stream_id: int) -> bool:
        return stream_id in self.pos

    def memory_bytes(self) -> int:
        # value, id and index slot per retained entry
        return 24 * len(self.heap)
