import datetime as dt
import random

import pytest
from hypothesis import given, settings, strategies as st

from timeds.align import (NEGATIVE, POSITIVE, TAIL_REPLACED, AlignError, WeightedMention,
                          add_negatives, align, build_test_set, generate_negatives, oracle_gold,
                          partition_folds)
from timeds.knowledge import RelationInstance
from timeds.popularity import TimeGrid, WindowSpec, build_series

from conftest import make_gaz, make_sentence

D1 = dt.date(2016, 5, 1)


def day(k):
    return D1 + dt.timedelta(days=k - 1)


GRID = TimeGrid(D1, day(7))
GAZ = make_gaz([("Alpha", "ORG", "A"), ("Beta", "ORG", "B"), ("Gamma", "ORG", "C"),
                ("Delta", "ORG", "D"), ("Lyon", "LOC", "L"), ("Pat", "PER", "P")])
PART = RelationInstance("Partnership", "A", "B", directed=False)
ACQ = RelationInstance("Acquisition", "A", "C")


def series_for(*insts):
    return {i: build_series(i, [day(3), day(3), day(5)], GRID, WindowSpec(3)) for i in insts}


def test_align_weight_from_series():
    s = make_sentence("Alpha has formed a partnership with Beta", GAZ, day=day(4))
    (m,) = align([PART], [s], series_for(PART))
    assert m.weight == 1.0 and m.polarity == POSITIVE and m.sentence_ref == ("d1", 0)


def test_align_requires_pair_and_knowledge():
    head_only = make_sentence("Alpha reported earnings", GAZ, day=day(4))
    unknown = make_sentence("Gamma met Delta", GAZ, day=day(4))
    assert align([PART], [head_only, unknown], series_for(PART)) == []


def test_align_skips_instance_without_series(caplog):
    s = make_sentence("Alpha and Beta", GAZ, day=day(4))
    assert align([PART], [s], {}) == []
    assert "no popularity series" in caplog.text


def test_align_type_compatibility():
    inst = RelationInstance("Acquisition", "A", "L")
    s = make_sentence("Alpha opened an office in Lyon", GAZ, day=day(4))
    series = series_for(inst)
    assert len(align([inst], [s], series)) == 1
    assert align([inst], [s], series, {"Acquisition": ("ORG", "ORG")}) == []


def test_align_sorted_and_order_independent():
    sents = [make_sentence(t, GAZ, doc=f"d{k}", day=day(1 + k % 7)) for k, t in enumerate(
        ["Alpha and Beta", "Beta with Alpha", "Alpha bought Gamma", "Gamma , Alpha , Beta"])]
    ser = series_for(PART, ACQ)
    a = align([PART, ACQ], sents, ser)
    b = align([ACQ, PART], list(reversed(sents)), ser)
    assert a == b
    assert [m.sort_key for m in a] == sorted(m.sort_key for m in a)
    assert len(a) == 5


def test_negative_sampling_example():
    s = make_sentence("Alpha has formed a partnership with Beta , which is located in Lyon", GAZ)
    (pos,) = align([PART], [s], series_for(PART))
    (neg,) = generate_negatives(pos, s, seed=0)
    assert neg.instance.key == ("Partnership", "A", "L")
    assert (neg.polarity, neg.provenance, neg.weight) == (NEGATIVE, TAIL_REPLACED, pos.weight)


def test_negative_none_without_candidates():
    s = make_sentence("Alpha and Beta", GAZ)
    (pos,) = align([PART], [s], series_for(PART))
    assert generate_negatives(pos, s, seed=0) == []


def test_negative_skips_knowledge_pairs():
    s = make_sentence("Alpha , Beta , Gamma and Delta", GAZ)
    (pos,) = align([PART], [s], series_for(PART))
    for seed in range(20):
        (neg,) = generate_negatives(pos, s, seed, knowledge={("Partnership", "A", "C")})
        assert neg.instance.key == ("Partnership", "A", "D")


def test_negative_strict_types():
    s = make_sentence("Alpha with Beta in Lyon", GAZ)
    (pos,) = align([PART], [s], series_for(PART))
    assert generate_negatives(pos, s, 0, strict_types=True) == []


def test_negative_requires_positive():
    s = make_sentence("Alpha with Beta in Lyon", GAZ)
    (pos,) = align([PART], [s], series_for(PART))
    (neg,) = generate_negatives(pos, s, 0)
    with pytest.raises(AlignError):
        generate_negatives(neg, s, 0)


def test_add_negatives_dedupes_and_never_hits_knowledge():
    s = make_sentence("Alpha bought Gamma and partnered with Beta in Lyon", GAZ)
    pos = align([PART, ACQ], [s], series_for(PART, ACQ))
    knowledge = {PART.key, ACQ.key}
    ds = add_negatives(pos, {s.ref: s}, 0, knowledge, ratio=3)
    keys = [m.key for m in ds]
    assert len(keys) == len(set(keys))
    assert all(m.instance.key not in knowledge for m in ds if m.polarity == NEGATIVE)
    assert add_negatives(pos, {s.ref: s}, 0, knowledge, ratio=0) == pos


def _test_world():
    insts = [PART, ACQ]
    sents = []
    for k in range(40):
        text = ["Alpha with Beta", "Alpha bought Gamma"][k % 2]
        sents.append(make_sentence(text, GAZ, doc=f"d{k:02d}", day=day(1 + k % 7)))
    return insts, sents, series_for(PART, ACQ)


def test_test_set_threshold_and_reserve():
    insts, sents, ser = _test_world()
    labels = {m.key: (m.weight >= 0.5) for m in align(insts, sents, ser)}
    ts = build_test_set(insts, sents, ser, {"Partnership": 0.9, "default": 0.5}, 0.0,
                        oracle_gold(labels), seed=0)
    for lm in ts.mentions:
        th = 0.9 if lm.mention.instance.relation_type == "Partnership" else 0.5
        assert lm.mention.weight >= th
    full = build_test_set(insts, sents, ser, {"default": 0.5}, 1.0, oracle_gold(labels), 0)
    assert len(full) == 40
    # per relation 20 sentences; day indices 1, 2, 3 (weight >= 0.5) occur 3 times each
    assert full.counts() == {"Acquisition": (9, 11), "Partnership": (9, 11)}


def test_test_set_oracle_flips_and_unlabeled(caplog):
    insts, sents, ser = _test_world()
    aligned = align(insts, sents, ser)
    labels = {m.key: bool(i % 3) for i, m in enumerate(aligned) if i % 5}
    ts = build_test_set(insts, sents, ser, {"default": 0.0}, 0.0, oracle_gold(labels), 0)
    assert len(ts) == len(labels)
    assert any(not lm.gold and lm.mention.weight > 0.5 for lm in ts.mentions)
    assert "no gold label" in caplog.text


def test_test_set_empty():
    assert len(build_test_set([], [], {}, {"default": 0.7}, 0.5, lambda m: True)) == 0


def test_missing_threshold_is_error():
    insts, sents, ser = _test_world()
    with pytest.raises(AlignError):
        build_test_set(insts, sents, ser, {"Partnership": 0.1}, 0.5, lambda m: True)


def test_fold_examples():
    sizes = partition_folds(2839, 10, seed=0).sizes()
    assert sorted(sizes) == [283] + [284] * 9
    assert partition_folds(4, 2, seed=0).sizes() == [2, 2]
    assert partition_folds(50, 10, 7) == partition_folds(50, 10, 7)
    with pytest.raises(AlignError):
        partition_folds(3, 4, 0)
    with pytest.raises(AlignError):
        partition_folds(10, 1, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 30), st.integers(0, 300), st.integers(0, 10_000))
def test_fold_sizes_balanced(k, extra, seed):
    n = k + extra
    fa = partition_folds(n, k, seed)
    assert len(fa.folds) == n and set(fa.folds) <= set(range(k))
    assert max(fa.sizes()) - min(fa.sizes()) <= 1
    assert sorted(i for f in range(k) for i in fa.members(f)) == list(range(n))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["Alpha", "Beta", "Gamma", "Delta", "Lyon", "and", "with"]),
                min_size=2, max_size=12), st.integers(1, 7), st.integers(0, 100))
def test_negatives_keep_weight_and_sentence(words, d, seed):
    s = make_sentence(" ".join(words), GAZ, day=day(d))
    pos = align([PART, ACQ], [s], series_for(PART, ACQ))
    ds = add_negatives(pos, {s.ref: s}, seed, {PART.key, ACQ.key}, ratio=2)
    by_sent = {m.instance.head_id: m.weight for m in pos}
    ids = {m.canonical_id for m in s.mentions}
    for m in ds:
        assert m.weight == by_sent[m.instance.head_id] or m.weight == by_sent.get(m.instance.tail_id)
        assert {m.instance.head_id, m.instance.tail_id} <= ids
