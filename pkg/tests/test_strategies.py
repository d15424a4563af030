import datetime as dt
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from timeds.align import WeightedMention
from timeds.knowledge import RelationInstance
from timeds.strategies import (DEFAULT_THRESHOLDS, ScheduleError, build_curriculum, hard_filter,
                               round_seed)

INST = RelationInstance("Acquisition", "a", "b")


def mentions(weights):
    return [WeightedMention(INST, ("d", i), dt.date(2016, 1, 1), w) for i, w in enumerate(weights)]


def test_hard_filter_examples():
    ds = mentions([0.8, 0.4, 0.1])
    assert [m.weight for m in hard_filter(ds, 0.3)] == [0.8, 0.4]
    assert hard_filter(ds, 0.0) == ds
    assert hard_filter(ds, 5.0) == []
    assert [m.weight for m in hard_filter(mentions([0.3, 0.2]), 0.3)] == [0.3]
    with pytest.raises(ScheduleError):
        hard_filter(ds, -0.1)


def test_curriculum_examples():
    sched = build_curriculum(mentions([0.7, 0.4, 0.1]), [0.6, 0.3, 0.0], seed=0)
    assert [len(r) for r in sched.rounds] == [1, 2, 3]
    assert len(build_curriculum(mentions([0.5]), DEFAULT_THRESHOLDS, 0)) == 7
    one = build_curriculum(mentions([0.7, 0.4, 0.1]), [0.0], 0)
    assert Counter(one.rounds[0]) == Counter(mentions([0.7, 0.4, 0.1]))


@pytest.mark.parametrize("bad", [[], [0.3, 0.3], [0.1, 0.2], [0.5, -0.1]])
def test_curriculum_rejects_bad_thresholds(bad):
    with pytest.raises(ScheduleError):
        build_curriculum(mentions([0.5]), bad, 0)


def test_round_seeds_distinct_and_stable():
    seeds = [round_seed(3, i) for i in range(7)]
    assert len(set(seeds)) == 7 and seeds == [round_seed(3, i) for i in range(7)]
    a = build_curriculum(mentions([i / 50 for i in range(50)]), DEFAULT_THRESHOLDS, 3)
    b = build_curriculum(mentions([i / 50 for i in range(50)]), DEFAULT_THRESHOLDS, 3)
    assert a.rounds == b.rounds


weights = st.lists(st.floats(0, 3, allow_nan=False), max_size=80)
grid = [round(0.1 * i, 1) for i in range(7)]


@settings(max_examples=300, deadline=None)
@given(weights)
def test_filter_monotone_idempotent(ws):
    ds = mentions(ws)
    sizes = [len(hard_filter(ds, t)) for t in grid]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert hard_filter(ds, 0.0) == ds
    for t in grid:
        assert hard_filter(hard_filter(ds, t), t) == hard_filter(ds, t)


@settings(max_examples=200, deadline=None)
@given(weights, st.integers(0, 1000))
def test_curriculum_nested_and_permutation(ws, seed):
    ds = mentions(ws)
    sched = build_curriculum(ds, DEFAULT_THRESHOLDS, seed)
    for a, b in zip(sched.rounds, sched.rounds[1:]):
        assert set(a) <= set(b)
    assert Counter(sched.rounds[-1]) == Counter(ds)
    for t, r in zip(sched.thresholds, sched.rounds):
        assert Counter(r) == Counter(hard_filter(ds, t))
    rebuilt = Counter(sched.rounds[0])
    for a, b in zip(sched.rounds, sched.rounds[1:]):
        rebuilt += Counter(b) - Counter(a)
    assert rebuilt == Counter(ds)
