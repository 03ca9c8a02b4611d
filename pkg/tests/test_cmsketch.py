from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from braidsketch.cmsketch import CmConfig, CountMinSketch, splitmix64, union
from braidsketch.core import CounterOverflowError, DomainError, IncompatibleSketchError

keys = st.lists(st.integers(0, 2**40), min_size=0, max_size=200)


def exact_counts(items) -> Counter:
    return Counter(items)


def build(config: CmConfig, items) -> CountMinSketch:
    s = CountMinSketch(config)
    for k in items:
        s.insert(k)
    return s


def test_splitmix64_reference_values():
    # Published splitmix64 outputs for a generator seeded with 0: the state
    # advances by the golden gamma before each finalisation.
    gamma = 0x9E3779B97F4A7C15
    out = splitmix64(np.array([0, gamma, (2 * gamma) % 2**64], dtype=np.uint64))
    assert [int(x) for x in out] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_from_error_sizing():
    c = CmConfig.from_error(0.05, math.exp(-7))
    assert (c.width, c.depth) == (math.ceil(math.e / 0.05), 7)
    c = CmConfig.from_error(0.01, 0.01)
    assert (c.width, c.depth) == (272, 5)
    with pytest.raises(DomainError):
        CmConfig.from_error(0, 0.1)
    with pytest.raises(DomainError):
        CmConfig(0, 3)


def test_single_insert_is_exact():
    s = CountMinSketch(CmConfig(8, 3, 1))
    s.insert(7)
    assert s.point_query(7) == 1
    assert s.total == 1


def test_empty_sketch_queries_zero():
    s = CountMinSketch(CmConfig(8, 3, 1))
    assert s.point_query(12345) == 0
    assert s.counters.shape == (3, 8)


def test_single_key_repeated_is_exact():
    s = CountMinSketch(CmConfig(4, 2, 9))
    for _ in range(10):
        s.insert(5)
    assert s.point_query(5) == 10


def test_all_ids_once_each_at_least_one():
    w, d = 16, 4
    s = build(CmConfig(w, d, 3), range(1, w + 1))
    assert all(s.point_query(i) >= 1 for i in range(1, w + 1))


def test_repeated_id_within_collision_bound():
    items = [3] * 5 + list(range(100, 140))
    s = build(CmConfig(8, 3, 2), items)
    q = s.point_query(3)
    # the overestimate can only come from keys sharing a cell in every row
    assert 5 <= q <= 5 + 40


def test_multiplicity_must_be_positive():
    s = CountMinSketch(CmConfig(8, 2))
    with pytest.raises(DomainError):
        s.insert(1, 0)


def test_counter_overflow_is_checked():
    s = CountMinSketch(CmConfig(4, 2))
    s.insert(1, 2**64 - 1)
    with pytest.raises(CounterOverflowError):
        s.insert(2)


@given(keys, st.integers(1, 64), st.integers(1, 6), st.integers(0, 2**32))
def test_one_sided_and_row_sums(items, width, depth, seed):
    s = build(CmConfig(width, depth, seed), items)
    truth = exact_counts(items)
    for k, c in truth.items():
        assert s.point_query(k) >= c
    assert s.total == len(items)
    assert all(int(r) == len(items) for r in s.row_sums())


@given(keys, keys, st.integers(0, 2**16))
def test_linearity_insert_then_merge_equals_merge_then_insert(a, b, seed):
    cfg = CmConfig(13, 4, seed)
    sa, sb = build(cfg, a), build(cfg, b)
    merged = sa.merge(sb)
    direct = build(cfg, a + b)
    assert np.array_equal(merged.counters, direct.counters)
    assert merged.total == direct.total
    assert merged == direct


@given(keys, st.integers(0, 2**16))
def test_vectorized_insert_equals_item_by_item(items, seed):
    cfg = CmConfig(11, 3, seed)
    a = build(cfg, items)
    b = CountMinSketch(cfg)
    b.insert_many(items)
    assert a == b


def test_merge_identity_and_doubling():
    cfg = CmConfig(16, 3, 5)
    s = build(cfg, [1, 2, 2, 9, 40])
    empty = CountMinSketch(cfg)
    assert empty.merge(s) == s
    doubled = s.merge(s)
    assert np.array_equal(doubled.counters, 2 * s.counters)
    s.merge_from(s)
    assert s == doubled


def test_merge_disjoint_keys_only_grows():
    cfg = CmConfig(8, 3, 11)
    a = build(cfg, [1, 1, 2, 3])
    b = build(cfg, [10, 11, 11, 12])
    before = {k: a.point_query(k) for k in (1, 2, 3)} | {k: b.point_query(k) for k in (10, 11, 12)}
    m = a | b
    for k, v in before.items():
        assert m.point_query(k) >= v
    assert m.total == a.total + b.total


def test_merge_requires_identical_config():
    with pytest.raises(IncompatibleSketchError):
        CountMinSketch(CmConfig(8, 3, 1)).merge(CountMinSketch(CmConfig(8, 3, 2)))
    with pytest.raises(IncompatibleSketchError):
        CountMinSketch(CmConfig(8, 3)).merge_from(CountMinSketch(CmConfig(9, 3)))


def test_union_of_many():
    cfg = CmConfig(8, 2, 4)
    parts = [build(cfg, [i, i + 1]) for i in range(5)]
    assert union(parts, cfg) == build(cfg, [x for i in range(5) for x in (i, i + 1)])


def test_snapshot_round_trip_and_size():
    cfg = CmConfig(64, 64, 99)
    s = build(cfg, [1, 5, 5, 77])
    blob = s.to_bytes()
    assert len(blob) == s.nbytes == CountMinSketch.HEADER.size + 64 * 64 * 8
    assert blob[:4] == b"CMS1"
    assert CountMinSketch.from_bytes(blob) == s


def test_pending_buffer_is_bounded():
    cfg = CmConfig(32, 2, 1)
    s = build(cfg, range(1000))
    assert len(s._pending) <= s.pending_limit
    assert s == build(cfg, list(range(1000)))


def test_error_bound_monte_carlo():
    """P[overestimate > eps * total] <= delta, up to 3 binomial standard errors."""
    eps, depth = 0.05, 7
    cfg_width = math.ceil(math.e / eps)
    delta = math.exp(-depth)
    failures = trials = 0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        items = rng.integers(0, 100, 10_000)
        s = CountMinSketch(CmConfig(cfg_width, depth, seed))
        s.insert_many(items)
        ids, counts = np.unique(items, return_counts=True)
        est = s.query(ids)
        assert (est >= counts).all()
        failures += int(np.count_nonzero(est - counts > eps * s.total))
        trials += ids.size
    allowance = 3 * math.sqrt(delta * (1 - delta) / trials)
    assert failures / trials <= delta + allowance
