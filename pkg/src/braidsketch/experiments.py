"""Reusable experiment drivers: the precision/distortion/value-error grid,
the memory-versus-m sweep, and adversarial YES/NO trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import AVERAGE, MEDIAN, P95, ApproxParams, Weight
from .datagen import Braid, GenSpec, generate
from .metrics import EvalReport, SketchSettings, evaluate, make_synopsis, memory_report
from .oracle import MaterializedBraid

K_GRID = (10, 20, 50, 100)
WEIGHTS = (AVERAGE, MEDIAN, P95)
DATASETS = ("uniform", "outlier", "normal")


def grid_settings(seed: int = 7, rho: float = 0.003, U: int = 1 << 16, width: int = 64,
                  depth: int = 64, counting: str = "sum") -> SketchSettings:
    """A fixed ``width x depth`` Count-Min grid; eps and delta are echoed from it."""
    eps = min(math.e / width, 0.999)
    delta = max(math.exp(-depth), 1e-300)
    return SketchSettings(ApproxParams(eps, min(delta, 0.999), rho, U), width, depth, seed, counting)


def grid_for_braid(braid: Braid, *, algos: Sequence[str] = ("varb", "expb"),
                   weights: Iterable[Weight] = WEIGHTS, k_list: Sequence[int] = K_GRID,
                   settings: SketchSettings | None = None, dataset: str = "braid",
                   oracle: MaterializedBraid | None = None) -> list[EvalReport]:
    """Every (algo, weight, k) cell on one braid; each synopsis is built once."""
    settings = settings or grid_settings(U=braid.U)
    oracle = oracle or MaterializedBraid.from_braid(braid)
    weights = list(weights)
    reports = []
    for algo in algos:
        syn = None
        if algo in ("expb", "varb"):
            syn = make_synopsis(algo, settings)
            syn.ingest_arrays(braid.stream_ids, braid.values)
        for w in weights:
            reports += evaluate(algo, w, k_list, braid.stream_ids, braid.values, settings=settings,
                                dataset=dataset, oracle=oracle, synopsis=syn)
    return reports


def desk_braid(kind: str, m: int = 1000, items: int = 5000, seed: int = 1, **kwargs) -> Braid:
    """One of the synthetic datasets at the default desk scale (1000 streams x 5000 items)."""
    return generate(GenSpec(kind=kind, m=m, items_per_stream=items, seed=seed, **kwargs))


@dataclass(frozen=True)
class MemoryRow:
    algo: str
    m: int
    items: int
    counter_bytes: int
    structure_bytes: int
    id_bytes: int

    @property
    def total(self) -> int:
        return self.counter_bytes + self.structure_bytes + self.id_bytes


def memory_vs_m(m_list: Sequence[int], items: int, settings: SketchSettings | None = None,
                algo: str = "varb", kind: str = "uniform", seed: int = 0) -> list[MemoryRow]:
    settings = settings or grid_settings()
    rows = []
    for m in m_list:
        braid = generate(GenSpec(kind=kind, m=m, items_per_stream=items, U=settings.params.U,
                                 seed=seed))
        syn = make_synopsis(algo, settings)
        syn.ingest_arrays(braid.stream_ids, braid.values)
        rep = memory_report(syn)
        rows.append(MemoryRow(algo, m, items, rep.counter_bytes, rep.structure_bytes, rep.id_bytes))
    return rows


@dataclass(frozen=True)
class DisjTrial:
    label: str              # "yes" (disjoint) or "no" (one shared element)
    oracle_top: float       # exact largest median
    sketch_top: float       # largest median reported by the synopsis
    oracle_says: str
    sketch_says: str

    @property
    def sketch_correct(self) -> bool:
        return self.sketch_says == self.label


def disj_median_trial(m: int, t: int, p: int, eps: float, rho: float, seed: int,
                      instance: str, algo: str = "varb", delta: float = 0.01) -> DisjTrial:
    """Decide one random DISJ instance through the median reduction.

    After the +1 shift the largest stream median is 2 exactly when one
    stream received a one from every player (the shared element), else 1.
    """
    braid = generate(GenSpec(kind="adv-median", m=m, t=t, p=p, U=2, seed=seed, instance=instance))
    oracle = MaterializedBraid.from_braid(braid)
    top = oracle.topk(MEDIAN, 1)[0][1]
    settings = SketchSettings(ApproxParams(eps, delta, rho, 2), seed=seed)
    syn = make_synopsis(algo, settings, MEDIAN)
    syn.ingest_arrays(braid.stream_ids, braid.values)
    est = syn.topk(MEDIAN, 1)[0][1]

    def verdict(x: float) -> str:
        return "no" if x >= 2 else "yes"

    return DisjTrial(braid.label, top, est, verdict(top), verdict(est))
