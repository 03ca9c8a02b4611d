"""Seeded braid generators.

Three synthetic workloads (per-stream means drawn uniformly, from an
"outlier" mixture, or from a normal law; Gaussian noise around each mean)
and three adversarial braids built from set-disjointness instances, each
returned with its YES/NO label.

Adversarial values are shifted into the positive integer domain the
sketches require ({0,1} -> {1,2}, {-1,0,1} -> {1,2,3}); the shift is kept
on the braid so reports can undo it. The second-largest construction is
real-valued and only meant for the exact oracle.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import DEFAULT_U, BraidItem, DomainError, PromiseViolationError, is_power_of_two

KINDS = ("uniform", "outlier", "normal", "adv-median", "adv-secondmax", "adv-spread")
INTERLEAVINGS = ("rr", "random")


@dataclass(frozen=True)
class GenSpec:
    kind: str = "uniform"
    m: int = 1000
    items_per_stream: int = 5000
    U: int = DEFAULT_U
    seed: int = 0
    interleave: str = "rr"
    a: float = 0.8
    t: int = 4
    p: int = 1
    instance: str = "yes"
    sets: tuple[tuple[int, ...], ...] | None = None
    jitter: float = 0.0
    noise: str = "variance"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown braid kind {self.kind!r}")
        if self.interleave not in INTERLEAVINGS:
            raise DomainError(f"interleave must be one of {INTERLEAVINGS}")
        if self.m < 1 or self.items_per_stream < 1:
            raise DomainError("m and items_per_stream must be positive")
        if self.U < 2 or not is_power_of_two(self.U):
            raise DomainError(f"U must be a power of two >= 2, got {self.U}")
        if self.kind == "outlier" and not 0.0 < self.a <= 0.8:
            raise DomainError(f"outlier parameter a must lie in (0, 0.8], got {self.a}")
        if self.instance not in ("yes", "no"):
            raise DomainError("instance must be 'yes' or 'no'")
        if self.noise not in ("variance", "stddev"):
            raise DomainError("noise must be 'variance' or 'stddev'")
        if not 0.0 <= self.jitter < 1.0:
            raise DomainError("jitter must lie in [0, 1)")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class Braid:
    """An interleaved braid held as parallel arrays in arrival order."""

    stream_ids: np.ndarray
    values: np.ndarray
    m: int
    U: int
    shift: int = 0
    real: bool = False
    gen: str = "-"
    label: str | None = None
    intersection: int | None = None
    player_rows: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.stream_ids.size)

    def __iter__(self) -> Iterator[BraidItem]:
        for j, (sid, v) in enumerate(zip(self.stream_ids.tolist(), self.values.tolist())):
            yield BraidItem(sid, v, j)

    def stream_sizes(self) -> np.ndarray:
        """Size of stream i at index i - 1."""
        return np.bincount(self.stream_ids, minlength=self.m + 1)[1:]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Braid):
            return NotImplemented
        return (
            (self.m, self.U, self.shift, self.real) == (other.m, other.U, other.shift, other.real)
            and np.array_equal(self.stream_ids, other.stream_ids)
            and np.array_equal(self.values, other.values)
        )


def _noise_sd(spec: GenSpec) -> float:
    # "variance U/20" read literally unless the stddev reading is requested
    return math.sqrt(spec.U / 20.0) if spec.noise == "variance" else spec.U / 20.0


def _sizes(spec: GenSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.jitter == 0.0:
        return np.full(spec.m, spec.items_per_stream, dtype=np.int64)
    lo = max(1, math.floor(spec.items_per_stream * (1 - spec.jitter)))
    hi = math.ceil(spec.items_per_stream * (1 + spec.jitter))
    return rng.integers(lo, hi + 1, size=spec.m)


def interleave(per_stream: Sequence[np.ndarray], mode: str, rng: np.random.Generator | None = None,
               first_id: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Merge per-stream value arrays into one arrival order.

    ``rr`` visits the streams in id order, one item per non-exhausted stream
    per round; ``random`` draws a uniformly random arrival order while
    keeping each stream's own order.
    """
    sizes = np.array([len(v) for v in per_stream], dtype=np.int64)
    ids = np.repeat(np.arange(first_id, first_id + len(per_stream)), sizes)
    pos = np.concatenate([np.arange(s) for s in sizes]) if sizes.sum() else np.zeros(0, np.int64)
    values = np.concatenate(per_stream) if len(per_stream) else np.zeros(0)
    if mode == "rr":
        order = np.lexsort((ids, pos))
    elif mode == "random":
        if rng is None:
            raise ValueError("random interleaving needs a generator")
        order = _random_order(ids, pos, rng.random(ids.size))
    else:
        raise DomainError(f"unknown interleaving {mode!r}")
    return ids[order], values[order]


def _random_order(ids: np.ndarray, pos: np.ndarray, keys: np.ndarray) -> np.ndarray:
    # Arrival slots are ranked by random keys; the k-th slot taken by stream i
    # receives stream i's k-th item.
    slot_rank = np.argsort(keys, kind="stable")
    slot_owner = ids[slot_rank]
    by_owner = np.lexsort((np.arange(ids.size), slot_owner))
    item_order = np.lexsort((pos, ids))
    order = np.empty(ids.size, dtype=np.int64)
    order[by_owner] = item_order
    return order


def _noisy_streams(spec: GenSpec, means: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    sizes = _sizes(spec, rng)
    sd = _noise_sd(spec)
    out = []
    for mu, size in zip(means, sizes):
        draws = rng.normal(mu, sd, size=int(size))
        out.append(np.clip(np.rint(draws), 1, spec.U).astype(np.int64))
    return out


def _finish(spec: GenSpec, per_stream: list[np.ndarray], rng: np.random.Generator, **extra) -> Braid:
    ids, values = interleave(per_stream, spec.interleave, rng)
    return Braid(ids.astype(np.int64), values, spec.m, spec.U, gen=spec.digest(), **extra)


def gen_uniform(spec: GenSpec) -> Braid:
    rng = np.random.default_rng(spec.seed)
    means = rng.uniform(1, spec.U, size=spec.m)
    return _finish(spec, _noisy_streams(spec, means, rng), rng)


def outlier_ids(spec: GenSpec) -> np.ndarray:
    """Ids of the outlier streams (10% of m) in an outlier braid."""
    rng = np.random.default_rng(spec.seed)
    n_out = int(round(0.1 * spec.m))
    return np.sort(rng.permutation(spec.m)[:n_out] + 1)


def gen_outlier(spec: GenSpec) -> Braid:
    if not 0.0 < spec.a <= 0.8:
        raise DomainError(f"outlier parameter a must lie in (0, 0.8], got {spec.a}")
    chosen = outlier_ids(spec)
    rng = np.random.default_rng(spec.seed)
    rng.permutation(spec.m)  # keep the stream in step with outlier_ids
    is_out = np.zeros(spec.m, dtype=bool)
    is_out[chosen - 1] = True
    means = rng.uniform(1, 0.6 * spec.U, size=spec.m)
    means[is_out] = rng.uniform(spec.a * spec.U, (spec.a + 0.2) * spec.U, size=int(is_out.sum()))
    return _finish(spec, _noisy_streams(spec, means, rng), rng)


def gen_normal_inter(spec: GenSpec) -> Braid:
    rng = np.random.default_rng(spec.seed)
    means = np.clip(rng.normal(spec.U / 2, spec.U / 4, size=spec.m), 1, spec.U)
    return _finish(spec, _noisy_streams(spec, means, rng), rng)


# -- set-disjointness instances ----------------------------------------------


def random_disjointness(m: int, t: int, instance: str, rng: np.random.Generator,
                        fill: float = 0.5) -> tuple[tuple[int, ...], ...]:
    """Random player sets over {1..m} satisfying the YES/NO promise.

    Each element joins at most one player's set (with probability ``fill``);
    a NO instance additionally adds one common element to every set.
    """
    if t < 1 or m < 1:
        raise DomainError("need at least one player and one element")
    elements = np.arange(1, m + 1)
    common = None
    if instance == "no":
        common = int(rng.integers(1, m + 1))
        elements = elements[elements != common]
    owner = rng.integers(0, t, size=elements.size)
    joined = rng.random(elements.size) < fill
    sets = []
    for j in range(t):
        members = elements[joined & (owner == j)].tolist()
        if common is not None:
            members.append(common)
        sets.append(tuple(sorted(members)))
    return tuple(sets)


def check_promise(sets: Sequence[Sequence[int]], m: int) -> tuple[str, int | None]:
    """Validate the promise; return ("yes", None) or ("no", common element)."""
    if not sets:
        raise PromiseViolationError("no player sets given")
    for s in sets:
        if any(not 1 <= x <= m for x in s):
            raise PromiseViolationError(f"set element outside 1..{m}")
        if len(set(s)) != len(s):
            raise PromiseViolationError("a player set repeats an element")
    common = set(sets[0]).intersection(*map(set, sets[1:]))
    if len(sets) > 1 and len(common) > 1:
        raise PromiseViolationError("sets share more than one common element")
    owners: dict[int, int] = {}
    for j, s in enumerate(sets):
        for x in s:
            if x in common and len(sets) > 1:
                continue
            if x in owners:
                raise PromiseViolationError(f"element {x} held by players {owners[x] + 1} and {j + 1}")
            owners[x] = j
    if len(sets) > 1 and common:
        return "no", common.pop()
    return "yes", None


def _resolve_sets(spec: GenSpec, t: int) -> tuple[tuple[tuple[int, ...], ...], str, int | None]:
    rng = np.random.default_rng(spec.seed)
    sets = spec.sets if spec.sets is not None else random_disjointness(spec.m, t, spec.instance, rng)
    if len(sets) != t:
        raise PromiseViolationError(f"expected {t} player sets, got {len(sets)}")
    label, common = check_promise(sets, spec.m)
    if spec.sets is None and label != spec.instance:
        raise PromiseViolationError("generated instance does not match the requested label")
    return tuple(tuple(s) for s in sets), label, common


def _phases(phases: list[np.ndarray], spec: GenSpec) -> tuple[np.ndarray, np.ndarray]:
    # phases[k] has shape (m, r): r values per stream inserted during phase k.
    # Players act in turn; inside a phase items go round-robin or randomly.
    rng = np.random.default_rng(spec.seed + 1)
    ids_out, vals_out = [], []
    for block in phases:
        ids, vals = interleave(list(block), spec.interleave, rng)
        ids_out.append(ids)
        vals_out.append(vals)
    return np.concatenate(ids_out).astype(np.int64), np.concatenate(vals_out)


def gen_adversarial_median(spec: GenSpec) -> Braid:
    """Every stream starts with p zeros; player j then adds p ones to the streams
    in its set and p zeros to all others. Values are shifted by +1."""
    sets, label, common = _resolve_sets(spec, spec.t)
    m, p = spec.m, spec.p
    rows = np.zeros((spec.t, m), dtype=np.int64)
    for j, s in enumerate(sets):
        rows[j, np.asarray(s, dtype=np.int64) - 1] = 1
    phases = [np.ones((m, p), dtype=np.int64)]
    phases += [np.repeat(rows[j][:, None] + 1, p, axis=1) for j in range(spec.t)]
    ids, vals = _phases(phases, spec)
    return Braid(ids, vals, m, max(spec.U, 2), shift=1, gen=spec.digest(), label=label,
                 intersection=common, player_rows=rows)


def gen_adversarial_secondmax(spec: GenSpec) -> Braid:
    """Player j adds j+1 and 1/(j+1) to the streams in its set, two zeros elsewhere."""
    sets, label, common = _resolve_sets(spec, spec.t)
    m = spec.m
    phases = []
    rows = np.zeros((spec.t, m), dtype=np.int64)
    for j, s in enumerate(sets, start=1):
        block = np.zeros((m, 2), dtype=float)
        idx = np.asarray(s, dtype=np.int64) - 1
        block[idx, 0] = j + 1
        block[idx, 1] = 1.0 / (j + 1)
        rows[j - 1, idx] = 1
        phases.append(block)
    ids, vals = _phases(phases, spec)
    return Braid(ids, vals, m, spec.U, shift=0, real=True, gen=spec.digest(), label=label,
                 intersection=common, player_rows=rows)


def gen_adversarial_spread(spec: GenSpec) -> Braid:
    """One 0 per stream, then ODD adds -1 to its set and EVEN adds +1 to its set.
    Values are shifted by +2 into {1, 2, 3}."""
    sets, label, common = _resolve_sets(spec, 2)
    m = spec.m
    rows = np.zeros((2, m), dtype=np.int64)
    rows[0, np.asarray(sets[0], dtype=np.int64) - 1] = 1
    rows[1, np.asarray(sets[1], dtype=np.int64) - 1] = 1
    phase0 = [np.array([2]) for _ in range(m)]
    phase1 = [np.array([1]) if rows[0, i] else np.zeros(0, dtype=np.int64) for i in range(m)]
    phase2 = [np.array([3]) if rows[1, i] else np.zeros(0, dtype=np.int64) for i in range(m)]
    rng = np.random.default_rng(spec.seed + 1)
    ids_out, vals_out = [], []
    for phase in (phase0, phase1, phase2):
        ids, vals = interleave(phase, spec.interleave, rng)
        ids_out.append(ids)
        vals_out.append(vals)
    return Braid(np.concatenate(ids_out).astype(np.int64),
                 np.concatenate(vals_out).astype(np.int64), m, max(spec.U, 4), shift=2,
                 gen=spec.digest(), label=label, intersection=common, player_rows=rows)


GENERATORS = {
    "uniform": gen_uniform,
    "outlier": gen_outlier,
    "normal": gen_normal_inter,
    "adv-median": gen_adversarial_median,
    "adv-secondmax": gen_adversarial_secondmax,
    "adv-spread": gen_adversarial_spread,
}


def generate(spec: GenSpec) -> Braid:
    return GENERATORS[spec.kind](spec)
