"""Evaluation measures for a top-k answer, and the harness that produces them.

All four measures compare a synopsis's top-k list against the exact
oracle on the same braid:

* precision and recall, ``|S(k) & S'(k)| / k`` (equal for same-size sets);
* distortion, the mean over returned streams of ``max(r / r', r' / r)``
  where ``r`` is the true rank and ``r'`` the reported position;
* value error, the mean over positions of ``|lam(S_k) - lam(S'_k)| / lam(S_k)``
  using the exact weight of *both* streams;
* memory, the synopsis snapshot size with counters itemized.

A secondary column, :func:`estimate_value_error`, compares each returned
estimate with its own stream's exact weight.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .cmsketch import CmConfig
from .core import ApproxParams, DomainError, Weight, relative_value_error
from .expbucket import ExponentialBucketSynopsis
from .extremes import ExtremeTracker
from .oracle import MaterializedBraid
from .synopsis import MemoryReport, check_sketch_weight
from .varbucket import VariableBucketSynopsis

ALGOS = ("expb", "varb", "extremes", "oracle")
CSV_COLUMNS = ("algo", "dataset", "lambda", "k", "eps", "delta", "rho", "precision", "recall",
               "distortion", "avg_value_error", "memory_bytes", "seed")


def _ids(entries) -> list[int]:
    return [e[0] if isinstance(e, tuple) else int(e) for e in entries]


def precision_at_k(true_set, returned_set, k: int) -> float:
    """``|S(k) & S'(k)| / |S(k)|`` for two k-element id collections."""
    t, r = set(_ids(true_set)), set(_ids(returned_set))
    if len(t) != k or len(r) != k:
        raise DomainError(f"precision needs two sets of size k={k}, got {len(t)} and {len(r)}")
    return len(t & r) / len(t)


def recall_at_k(true_set, returned_set, k: int) -> float:
    """``|S(k) & S'(k)| / |S'(k)|``; identical to precision when both sizes are k."""
    t, r = set(_ids(true_set)), set(_ids(returned_set))
    if len(t) != k or len(r) != k:
        raise DomainError(f"recall needs two sets of size k={k}, got {len(t)} and {len(r)}")
    return len(r & t) / len(r)


def distortion(returned, rank_lookup: dict[int, int]) -> float:
    """Mean of ``max(r / r', r' / r)`` over the returned list (``r'`` is 1-based position)."""
    ids = _ids(returned)
    if not ids:
        raise DomainError("distortion of an empty answer")
    total = 0.0
    for pos, sid in enumerate(ids, start=1):
        r = rank_lookup.get(sid)
        if r is None:
            raise KeyError(f"stream {sid} has no oracle rank")
        total += max(r / pos, pos / r)
    return total / len(ids)


def avg_value_error(true_list, returned_list, weight: Weight, oracle: MaterializedBraid) -> float:
    """Mean relative gap between the exact weights of the i-th true and i-th returned stream."""
    t, r = _ids(true_list), _ids(returned_list)
    if not t or not r:
        raise DomainError("value error of an empty answer")
    if len(t) != len(r):
        raise DomainError(f"lists differ in length: {len(t)} vs {len(r)}")
    errs = [relative_value_error(oracle.weight(b, weight), oracle.weight(a, weight))
            for a, b in zip(t, r)]
    return float(np.mean(errs))


def estimate_value_error(returned: Sequence[tuple[int, float]], weight: Weight,
                         oracle: MaterializedBraid) -> float:
    """Mean relative error of each returned estimate against its own exact weight."""
    if not returned:
        raise DomainError("value error of an empty answer")
    errs = [relative_value_error(est, oracle.weight(sid, weight)) for sid, est in returned]
    return float(np.mean(errs))


def memory_report(synopsis) -> MemoryReport:
    if isinstance(synopsis, ExtremeTracker):
        return MemoryReport(0, synopsis.memory_bytes(), 0)
    return synopsis.memory()


def memory_bytes(synopsis) -> int:
    return memory_report(synopsis).total


@dataclass(frozen=True)
class EvalReport:
    algo: str
    dataset: str
    weight: str
    k: int
    eps: float
    delta: float
    rho: float
    precision: float
    recall: float
    distortion: float
    avg_value_error: float
    memory_bytes: int
    seed: int
    estimate_error: float = float("nan")
    counter_bytes: int = 0

    def __post_init__(self):
        if not 0.0 <= self.precision <= 1.0:
            raise ValueError(f"precision {self.precision} outside [0, 1]")
        if self.distortion < 1.0 - 1e-12:
            raise ValueError(f"distortion {self.distortion} below 1")

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_COLUMNS)

    def csv_row(self) -> str:
        vals = [self.algo, self.dataset, self.weight, self.k, _fmt(self.eps), _fmt(self.delta),
                _fmt(self.rho), _fmt(self.precision), _fmt(self.recall), _fmt(self.distortion),
                _fmt(self.avg_value_error), self.memory_bytes, self.seed]
        return ",".join(str(v) for v in vals)

    def as_dict(self) -> dict:
        return asdict(self)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# -- harness -----------------------------------------------------------------


@dataclass(frozen=True)
class SketchSettings:
    """Everything needed to build a synopsis, besides the algorithm name."""

    params: ApproxParams = ApproxParams()
    width: int | None = None
    depth: int | None = None
    seed: int = 0
    counting: str = "sum"
    cadence: str = "insert"

    def cm_config(self) -> CmConfig:
        base = CmConfig.from_error(self.params.eps, self.params.delta, self.seed)
        return CmConfig(self.width or base.width, self.depth or base.depth, self.seed)


def make_synopsis(algo: str, settings: SketchSettings, weight: Weight | None = None, k: int = 1):
    """Construct an empty synopsis for ``algo``, refusing unsupported weights."""
    if algo == "expb":
        if weight is not None:
            check_sketch_weight(weight, algo)
        return ExponentialBucketSynopsis(settings.params.rho, settings.params.U, settings.cm_config())
    if algo == "varb":
        if weight is not None:
            check_sketch_weight(weight, algo)
        return VariableBucketSynopsis(settings.params.rho, settings.params.U, settings.cm_config(),
                                      cadence=settings.cadence, counting=settings.counting)
    if algo == "extremes":
        if weight is None:
            raise DomainError("the extremes tracker needs a max or min weight")
        return ExtremeTracker.for_weight(weight, k)
    raise DomainError(f"unknown algorithm {algo!r}; choose from {ALGOS}")


def answer_topk(algo: str, weight: Weight, k: int, stream_ids, values,
                settings: SketchSettings = SketchSettings()):
    """One pass over the braid arrays, then the top-k answer and the structure used.

    Returns ``(answer, synopsis)``; for ``oracle`` the synopsis is the
    materialized braid.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if algo == "oracle":
        oracle = MaterializedBraid(stream_ids, values)
        return oracle.topk(weight, k), oracle
    syn = make_synopsis(algo, settings, weight, k)
    syn.ingest_arrays(stream_ids, values)
    if algo == "extremes":
        return syn.topk()[:k], syn
    return syn.topk(weight, k), syn


def score(answer, weight: Weight, k: int, oracle: MaterializedBraid) -> dict:
    """Precision, recall, distortion and both value errors of one answer."""
    truth = oracle.topk(weight, k)
    if len(answer) != len(truth):
        raise DomainError(f"answer has {len(answer)} streams, truth has {len(truth)}")
    k_eff = len(truth)
    return dict(
        precision=precision_at_k(truth, answer, k_eff),
        recall=recall_at_k(truth, answer, k_eff),
        distortion=distortion(answer, oracle.rank_lookup(weight)),
        avg_value_error=avg_value_error(truth, answer, weight, oracle),
        estimate_error=estimate_value_error(answer, weight, oracle),
    )


def evaluate(algo: str, weight: Weight, k_list: Sequence[int], stream_ids, values, *,
             settings: SketchSettings = SketchSettings(), dataset: str = "braid",
             oracle: MaterializedBraid | None = None, synopsis=None) -> list[EvalReport]:
    """One :class:`EvalReport` per k, from a single synopsis built over the braid.

    A prebuilt ``synopsis`` (already fed the same braid) can be passed to
    evaluate several weights without re-ingesting.
    """
    k_list = [int(k) for k in k_list]
    if not k_list or min(k_list) < 1:
        raise DomainError("k-list must contain positive integers")
    if oracle is None:
        oracle = MaterializedBraid(stream_ids, values)
    k_max = min(max(k_list), oracle.m)
    if synopsis is None:
        if algo == "oracle":
            synopsis = oracle
        else:
            synopsis = make_synopsis(algo, settings, weight, k_max)
            synopsis.ingest_arrays(stream_ids, values)
    if algo == "oracle":
        ranked = oracle.topk(weight, k_max)
        mem = MemoryReport(0, 0, 0)
    elif algo == "extremes":
        ranked = synopsis.topk()
        mem = memory_report(synopsis)
    else:
        ranked = synopsis.topk(weight, k_max)
        mem = memory_report(synopsis)
    p = settings.params
    reports = []
    for k in k_list:
        k_eff = min(k, oracle.m)
        s = score(ranked[:k_eff], weight, k_eff, oracle)
        reports.append(EvalReport(algo, dataset, weight.label, k, p.eps, p.delta, p.rho,
                                  memory_bytes=mem.total, seed=settings.seed,
                                  counter_bytes=mem.counter_bytes, **s))
    return reports
