from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from braidsketch.core import (
    AVERAGE,
    MAX,
    MEDIAN,
    MIN,
    SECOND_MAX,
    SPREAD,
    DomainError,
    EmptySummaryError,
    Weight,
)
from braidsketch.datagen import GenSpec, generate
from braidsketch.oracle import MaterializedBraid, exact_weight_of


def test_convention_examples():
    s = [1, 2, 3, 4]
    assert exact_weight_of(s, MEDIAN) == 2
    assert exact_weight_of(s, SPREAD) == 3
    assert exact_weight_of(s, AVERAGE) == 2.5
    assert exact_weight_of(s, Weight.quantile(0.75)) == 3
    assert exact_weight_of([1 / 3, 3, 4, 1 / 4], SECOND_MAX) == 3


def test_empty_and_singleton_errors():
    with pytest.raises(EmptySummaryError):
        exact_weight_of([], MEDIAN)
    with pytest.raises(EmptySummaryError):
        exact_weight_of([7], SECOND_MAX)
    b = MaterializedBraid([1], [3])
    with pytest.raises(DomainError):
        b.topk(MEDIAN, 0)


def test_full_ranking_is_permutation(rng):
    ids = rng.integers(1, 40, size=800)
    b = MaterializedBraid(ids, rng.integers(1, 100, size=800))
    got = [sid for sid, _ in b.topk(MEDIAN, b.m)]
    assert sorted(got) == sorted(set(ids.tolist()))


def test_equal_weights_break_ties_by_id():
    b = MaterializedBraid([7, 3, 7, 3], [5, 5, 5, 5])
    assert b.topk(MEDIAN, 2) == [(3, 5.0), (7, 5.0)]
    assert b.rank_lookup(MEDIAN) == {3: 1, 7: 2}


def test_uniform_dataset_ranking_reproducible():
    spec = GenSpec(kind="uniform", m=1000, items_per_stream=50, seed=5)
    r1 = MaterializedBraid.from_braid(generate(spec)).ranking(MEDIAN)
    r2 = MaterializedBraid.from_braid(generate(spec)).ranking(MEDIAN)
    assert r1 == r2 and len(r1) == 1000


@given(st.lists(st.tuples(st.integers(1, 8), st.floats(-1e6, 1e6, allow_nan=False)),
                min_size=1, max_size=80))
def test_max_is_negated_min(pairs):
    ids = np.array([p[0] for p in pairs])
    vals = np.array([p[1] for p in pairs])
    pos, neg = MaterializedBraid(ids, vals), MaterializedBraid(ids, -vals)
    for sid in pos.streams:
        assert pos.weight(sid, MAX) == -neg.weight(sid, MIN)


@given(st.lists(st.tuples(st.integers(1, 10), st.integers(1, 30)), min_size=1, max_size=100),
       st.sampled_from([AVERAGE, MEDIAN, MAX, MIN, SPREAD, Weight.quantile(0.9)]))
def test_ranking_is_strict_total_order(pairs, weight):
    ids, vals = zip(*pairs)
    ranked = MaterializedBraid(np.array(ids), np.array(vals)).ranking(weight)
    better = (lambda a, b: a < b) if weight == MIN else (lambda a, b: a > b)
    for (s1, v1), (s2, v2) in zip(ranked, ranked[1:]):
        assert better(v1, v2) or (v1 == v2 and s1 < s2)


def test_sizes_and_streams_sorted(rng):
    ids = rng.integers(1, 5, size=200)
    vals = rng.integers(1, 50, size=200)
    b = MaterializedBraid(ids, vals)
    assert b.n == 200
    for sid, s in b.streams.items():
        assert (np.diff(s) >= 0).all()
        assert b.size(sid) == int((ids == sid).sum())
