"""Mergeable Count-Min sketch keyed by integer stream ids.

Plain Count-Min (no conservative update) so that sketches stay linear:
merging is an entrywise counter sum, and inserting into a merge equals
merging after inserting.

Inserts are buffered as exact per-key counts and folded into the counter
grid lazily. Because the sketch is linear the resulting grid is bitwise
identical to applying every insert immediately; the buffer only exists so
that a braid of millions of items does not pay a numpy call per item.
The buffer is flushed once it holds more than ``pending_limit`` distinct
keys, so it never outgrows the grid it stands in for.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import CounterOverflowError, DomainError, IncompatibleSketchError

U64_MAX = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser over uint64 arrays (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class CmConfig:
    width: int
    depth: int
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.depth < 1:
            raise DomainError(f"width and depth must be positive, got {self.width}x{self.depth}")
        if not 0 <= self.seed <= U64_MAX:
            raise DomainError("seed must fit in an unsigned 64-bit integer")

    @classmethod
    def from_error(cls, eps: float, delta: float, seed: int = 0) -> "CmConfig":
        """width = ceil(e/eps), depth = ceil(ln(1/delta))."""
        if not (0 < eps < 1 and 0 < delta < 1):
            raise DomainError("eps and delta must lie in (0, 1)")
        width = math.ceil(math.e / eps)
        depth = max(1, math.ceil(math.log(1.0 / delta)))
        return cls(width, depth, seed)

    @property
    def eps(self) -> float:
        return math.e / self.width

    @property
    def delta(self) -> float:
        return math.exp(-self.depth)

    def columns(self, keys) -> np.ndarray:
        """Hashed column of every key in every row, shape ``(depth, len(keys))``."""
        keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
        salts = _row_salts(self.seed, self.depth)
        mixed = splitmix64(keys[None, :] ^ salts[:, None])
        return (mixed % np.uint64(self.width)).astype(np.intp)


@functools.lru_cache(maxsize=64)
def _row_salts(seed: int, depth: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        rows = np.arange(1, depth + 1, dtype=np.uint64) * _GOLDEN
        salts = splitmix64(np.uint64(seed) ^ rows)
    salts.flags.writeable = False
    return salts


class CountMinSketch:
    """Count-Min frequency sketch with checked 64-bit counters."""

    MAGIC = b"CMS1"
    HEADER = struct.Struct("<4sIIQQ")

    __slots__ = ("config", "total", "_grid", "_pending", "pending_limit")

    def __init__(self, config: CmConfig):
        self.config = config
        self.pending_limit = max(16, config.width)
        self.total = 0
        self._grid: np.ndarray | None = None
        self._pending: dict[int, int] = {}

    def __repr__(self) -> str:
        c = self.config
        return f"CountMinSketch(width={c.width}, depth={c.depth}, seed={c.seed}, total={self.total})"

    def insert(self, key: int, multiplicity: int = 1) -> None:
        if multiplicity < 1:
            raise DomainError(f"multiplicity must be >= 1, got {multiplicity}")
        if self.total + multiplicity > U64_MAX:
            raise CounterOverflowError("Count-Min total would exceed 2**64 - 1")
        self.total += multiplicity
        pending = self._pending
        pending[key] = pending.get(key, 0) + multiplicity
        if len(pending) > self.pending_limit:
            self._flush()

    def insert_many(self, keys: Iterable[int], counts: Iterable[int] | None = None) -> None:
        keys = np.asarray(keys, dtype=np.int64).ravel()
        if counts is None:
            keys, counts = np.unique(keys, return_counts=True)
        counts = np.asarray(counts, dtype=np.int64).ravel()
        if counts.size and counts.min() < 1:
            raise DomainError("multiplicities must be >= 1")
        added = int(counts.sum())
        if self.total + added > U64_MAX:
            raise CounterOverflowError("Count-Min total would exceed 2**64 - 1")
        self._flush()
        self._apply(keys.astype(np.uint64), counts.astype(np.uint64))
        self.total += added

    def _apply(self, keys: np.ndarray, counts: np.ndarray) -> None:
        if keys.size == 0:
            return
        c = self.config
        if self._grid is None:
            self._grid = np.zeros((c.depth, c.width), dtype=np.uint64)
        flat = self.config.columns(keys) + (np.arange(c.depth, dtype=np.intp) * c.width)[:, None]
        np.add.at(self._grid.reshape(-1), flat.reshape(-1), np.tile(counts, c.depth))

    def _flush(self) -> None:
        if self._pending:
            pending = self._pending
            keys = np.fromiter(pending.keys(), dtype=np.uint64, count=len(pending))
            counts = np.fromiter(pending.values(), dtype=np.uint64, count=len(pending))
            self._pending = {}
            self._apply(keys, counts)

    @property
    def counters(self) -> np.ndarray:
        """The ``depth x width`` counter grid (a read-only view)."""
        self._flush()
        if self._grid is None:
            grid = np.zeros((self.config.depth, self.config.width), dtype=np.uint64)
        else:
            grid = self._grid.view()
        grid.flags.writeable = False
        return grid

    def point_query(self, key: int) -> int:
        return int(self.query(np.array([key]))[0])

    def query(self, keys) -> np.ndarray:
        """Point queries for an array of keys."""
        keys = np.atleast_1d(np.asarray(keys))
        self._flush()
        if self._grid is None:
            return np.zeros(keys.shape, dtype=np.int64)
        cols = self.config.columns(keys)
        rows = np.arange(self.config.depth)[:, None]
        return self._grid[rows, cols].min(axis=0).astype(np.int64)

    def _check_compatible(self, other: "CountMinSketch") -> None:
        if self.config is not other.config and self.config != other.config:
            raise IncompatibleSketchError(
                f"cannot merge sketches with configs {self.config} and {other.config}"
            )

    def merge_from(self, other: "CountMinSketch") -> "CountMinSketch":
        """In-place union: add ``other``'s counters into this sketch."""
        self._check_compatible(other)
        if other is self:
            other = self.copy()
        if self.total + other.total > U64_MAX:
            raise CounterOverflowError("merged Count-Min total would exceed 2**64 - 1")
        if other._grid is not None:
            if self._grid is None:
                self._grid = other._grid.copy()
            else:
                self._grid += other._grid
        if other._pending:
            if self._pending:
                pending = self._pending
                for key, count in other._pending.items():
                    pending[key] = pending.get(key, 0) + count
            else:
                self._pending = dict(other._pending)
            if len(self._pending) > self.pending_limit:
                self._flush()
        self.total += other.total
        return self

    def merge(self, other: "CountMinSketch") -> "CountMinSketch":
        """Entrywise sum of two equal-config sketches, as a new sketch."""
        self._check_compatible(other)
        return self.copy().merge_from(other)

    __or__ = merge

    def copy(self) -> "CountMinSketch":
        out = CountMinSketch(self.config)
        out.total = self.total
        out._grid = None if self._grid is None else self._grid.copy()
        out._pending = dict(self._pending)
        return out

    def row_sums(self) -> np.ndarray:
        return self.counters.sum(axis=1, dtype=np.uint64)

    @property
    def nbytes(self) -> int:
        c = self.config
        return self.HEADER.size + 8 * c.width * c.depth

    def to_bytes(self) -> bytes:
        c = self.config
        header = self.HEADER.pack(self.MAGIC, c.width, c.depth, c.seed, self.total)
        return header + self.counters.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CountMinSketch":
        magic, width, depth, seed, total = cls.HEADER.unpack_from(data)
        if magic != cls.MAGIC:
            raise ValueError(f"bad Count-Min magic {magic!r}")
        body = data[cls.HEADER.size: cls.HEADER.size + 8 * width * depth]
        if len(body) != 8 * width * depth:
            raise ValueError("truncated Count-Min snapshot")
        sketch = cls(CmConfig(width, depth, seed))
        sketch.total = total
        grid = np.frombuffer(body, dtype="<u8").astype(np.uint64).reshape(depth, width)
        sketch._grid = grid if total else None
        return sketch

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountMinSketch):
            return NotImplemented
        return (
            self.config == other.config
            and self.total == other.total
            and np.array_equal(self.counters, other.counters)
        )

    __hash__ = None


def union(sketches: Iterable[CountMinSketch], config: CmConfig) -> CountMinSketch:
    out = CountMinSketch(config)
    for sketch in sketches:
        out.merge_from(sketch)
    return out
