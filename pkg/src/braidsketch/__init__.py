"""Small-memory synopses for finding outlier streams in an interleaved braid.

The main entry points:

* :class:`VariableBucketSynopsis` and :class:`ExponentialBucketSynopsis`,
  one-pass top-k by average, median or any quantile;
* :class:`ExtremeTracker`, exact top-k by max or min in O(k) space;
* :class:`MaterializedBraid`, the exact oracle;
* :func:`generate`, seeded synthetic and adversarial braids;
* :func:`evaluate`, precision, distortion, value error and memory.
"""

from __future__ import annotations

from .cmsketch import CmConfig, CountMinSketch
from .core import (
    AVERAGE,
    MAX,
    MEDIAN,
    MIN,
    P95,
    SECOND_MAX,
    SPREAD,
    ApproxParams,
    BraidError,
    BraidFormatError,
    BraidItem,
    DomainError,
    EmptySummaryError,
    UnsupportedWeightError,
    Weight,
    WeightKind,
)
from .datagen import Braid, GenSpec, generate
from .expbucket import ExponentialBucketSynopsis
from .extremes import ExtremeTracker
from .metrics import EvalReport, SketchSettings, evaluate, make_synopsis
from .oracle import MaterializedBraid
from .qdigest import QDigest
from .varbucket import VariableBucketSynopsis

__version__ = "0.1.0"

__all__ = [
    "AVERAGE", "MAX", "MEDIAN", "MIN", "P95", "SECOND_MAX", "SPREAD",
    "ApproxParams", "Braid", "BraidError", "BraidFormatError", "BraidItem", "CmConfig",
    "CountMinSketch", "DomainError", "EmptySummaryError", "EvalReport",
    "ExponentialBucketSynopsis", "ExtremeTracker", "GenSpec", "MaterializedBraid", "QDigest",
    "SketchSettings", "UnsupportedWeightError", "VariableBucketSynopsis", "Weight", "WeightKind",
    "evaluate", "generate", "make_synopsis",
]
