"""Shared vocabulary: braid items, weight functions, parameters and rank helpers.

Every error measurement in the package goes through :func:`rank` and
:func:`target_rank`, so the oracle and the sketches agree on what "the
median" of a stream is.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

DEFAULT_U = 1 << 16


class BraidError(Exception):
    """Base class for errors raised by this package."""


class DomainError(BraidError, ValueError):
    """An argument lies outside its admissible range."""


class ZeroTruthError(BraidError, ZeroDivisionError):
    """Relative error requested against a zero reference value."""


class EmptySummaryError(BraidError, ValueError):
    """A quantity was requested from a summary (or stream) holding no items."""


class IncompatibleSketchError(BraidError, ValueError):
    """Two sketches with different configurations cannot be combined."""


class CounterOverflowError(BraidError, OverflowError):
    """A 64-bit counter would wrap."""


class UnsupportedWeightError(BraidError, ValueError):
    """The synopsis cannot answer queries for this weight function."""


class PromiseViolationError(BraidError, ValueError):
    """Player sets do not satisfy the YES/NO disjointness promise."""


class BraidFormatError(BraidError, ValueError):
    """A braid file could not be parsed."""


class BraidItem(NamedTuple):
    stream_id: int
    value: float
    arrival_index: int


class WeightKind(enum.Enum):
    AVERAGE = "avg"
    MEDIAN = "median"
    QUANTILE = "q"
    MAX = "max"
    MIN = "min"
    SECOND_MAX = "secondmax"
    SPREAD = "spread"


@dataclass(frozen=True)
class Weight:
    """A stream weight function. ``phi`` is only meaningful for quantiles."""

    kind: WeightKind
    phi: float | None = None

    def __post_init__(self):
        if self.kind is WeightKind.QUANTILE:
            if self.phi is None or not 0.0 < self.phi < 1.0:
                raise DomainError(f"quantile fraction must lie in (0, 1), got {self.phi}")
        elif self.phi is not None:
            raise DomainError(f"{self.kind.value} takes no quantile fraction")

    @classmethod
    def quantile(cls, phi: float) -> "Weight":
        return cls(WeightKind.QUANTILE, float(phi))

    @classmethod
    def parse(cls, text: str) -> "Weight":
        """Parse ``avg``, ``median``, ``q:<phi>``, ``max``, ``min``, ``secondmax`` or ``spread``."""
        text = text.strip().lower()
        if text.startswith("q:"):
            try:
                phi = float(text[2:])
            except ValueError:
                raise DomainError(f"bad quantile weight {text!r}") from None
            return cls.quantile(phi)
        aliases = {"average": "avg", "mean": "avg", "med": "median", "2max": "secondmax"}
        text = aliases.get(text, text)
        for kind in WeightKind:
            if kind is not WeightKind.QUANTILE and kind.value == text:
                return cls(kind)
        raise DomainError(f"unknown weight {text!r}")

    @property
    def label(self) -> str:
        if self.kind is WeightKind.QUANTILE:
            return f"q:{self.phi:g}"
        return self.kind.value

    @property
    def is_rank_based(self) -> bool:
        return self.kind in (WeightKind.MEDIAN, WeightKind.QUANTILE)

    def __str__(self) -> str:
        return self.label


AVERAGE = Weight(WeightKind.AVERAGE)
MEDIAN = Weight(WeightKind.MEDIAN)
MAX = Weight(WeightKind.MAX)
MIN = Weight(WeightKind.MIN)
SECOND_MAX = Weight(WeightKind.SECOND_MAX)
SPREAD = Weight(WeightKind.SPREAD)
P95 = Weight.quantile(0.95)


def is_power_of_two(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class ApproxParams:
    """Error knobs shared by the synopses.

    ``eps``/``delta`` size the Count-Min sketches, ``rho`` controls bucket
    granularity (geometric ratio for ExponentialBucket, compression rate for
    the q-digest), and ``U`` is the top of the integer value range.
    """

    eps: float = 0.01
    delta: float = 0.01
    rho: float = 0.01
    U: int = DEFAULT_U

    def __post_init__(self):
        for name in ("eps", "delta", "rho"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise DomainError(f"{name} must lie strictly inside (0, 1), got {value}")
        if self.U < 2 or not is_power_of_two(self.U):
            raise DomainError(f"U must be a power of two >= 2, got {self.U}")


def target_rank(weight: Weight, n: int) -> int:
    """1-based rank of the item that defines ``weight`` in a stream of ``n`` items.

    Median is the floor(n/2)-th smallest item, quantile phi the ceil(phi*n)-th;
    both are clamped to at least 1 so that tiny streams still have an answer.
    """
    if n < 1:
        raise EmptySummaryError("empty stream has no rank-defined weight")
    if weight.kind is WeightKind.MEDIAN:
        return max(1, n // 2)
    if weight.kind is WeightKind.QUANTILE:
        # round() strips float noise such as 0.95 * 100 = 95.00000000000001
        return min(n, max(1, math.ceil(round(weight.phi * n, 9))))
    raise UnsupportedWeightError(f"{weight.label} is not a rank-defined weight")


def target_ranks(weight: Weight, sizes) -> np.ndarray:
    """Vectorised :func:`target_rank` over an array of stream sizes (sizes >= 1)."""
    n = np.asarray(sizes, dtype=np.int64)
    if weight.kind is WeightKind.MEDIAN:
        return np.maximum(1, n // 2)
    if weight.kind is WeightKind.QUANTILE:
        raw = np.ceil(np.round(weight.phi * n, 9)).astype(np.int64)
        return np.minimum(n, np.maximum(1, raw))
    raise UnsupportedWeightError(f"{weight.label} is not a rank-defined weight")


def rank(x: float, stream: Iterable[float]) -> int:
    """Number of items in ``stream`` with value <= ``x``."""
    arr = np.asarray(stream if isinstance(stream, np.ndarray) else list(stream))
    return int(np.count_nonzero(arr <= x))


def rank_error(estimate: float, truth: float, stream: Iterable[float]) -> int:
    arr = np.asarray(stream if isinstance(stream, np.ndarray) else list(stream))
    return abs(rank(estimate, arr) - rank(truth, arr))


def relative_value_error(estimate: float, truth: float) -> float:
    if truth == 0:
        raise ZeroTruthError("relative error is undefined for a zero reference value")
    return abs(estimate - truth) / abs(truth)
