import datetime as dt
import math

import pytest
from hypothesis import given, settings, strategies as st

from timeds.corpus import EntityMention
from timeds.knowledge import (InstanceEvidence, KnowledgeError, RelationInstance,
                              aggregate_evidence, build_and_split, confidence, merge_evidence,
                              normalizers)
from timeds.rules import RuleMatch

D0 = dt.date(2016, 5, 1)


def match(rel, h, t, rule, doc="d", idx=0, day=D0, directed=True):
    head = EntityMention(h, "ORG", 0, 1, h)
    tail = EntityMention(t, "ORG", 3, 4, t)
    return RuleMatch(rule, rel, (doc, idx), head, tail, day, directed)


def evidence(n_rules, n_mentions, name="x"):
    inst = RelationInstance("Acquisition", name + "h", name + "t")
    ev = InstanceEvidence(inst)
    for k in range(n_mentions):
        ev.add(match("Acquisition", inst.head_id, inst.tail_id, f"r{k % n_rules}",
                     doc=f"{name}{k}"))
    return inst, ev


def test_grouping_example():
    ms = [match("Partnership", "msft", "fb", r, doc=f"d{i}", directed=False)
          for i, r in enumerate(["r1", "r1", "r2"])]
    ev = aggregate_evidence(ms)
    (only,) = ev.values()
    assert only.matched_rule_ids == {"r1", "r2"}
    assert len(only.matched_mentions) == 3 and only.n_sentences == 3


def test_grouping_empty_and_separate():
    assert aggregate_evidence([]) == {}
    ev = aggregate_evidence([match("Acquisition", "a", "b", "r"), match("Acquisition", "b", "a", "r"),
                             match("Lawsuit", "a", "b", "r")])
    assert len(ev) == 3
    assert all(len(e.matched_mentions) == 1 for e in ev.values())


def test_undirected_canonicalized():
    ev = aggregate_evidence([match("Partnership", "z", "a", "r", directed=False),
                             match("Partnership", "a", "z", "r", doc="e", directed=False)])
    (inst,) = ev
    assert (inst.head_id, inst.tail_id) == ("a", "z")


def test_relation_instance_invariants():
    with pytest.raises(KnowledgeError):
        RelationInstance("Acquisition", "a", "a")
    with pytest.raises(KnowledgeError):
        RelationInstance("Partnership", "z", "a", directed=False)


@pytest.mark.parametrize("rules, mentions, expected", [(5, 100, 2.0), (3, 40, 1.0), (1, 1, 0.21)])
def test_confidence_examples(rules, mentions, expected):
    _, ev = evidence(rules, mentions)
    assert confidence(ev, 5, 100) == pytest.approx(expected, abs=1e-12)


def test_confidence_counts_distinct_sentences():
    inst = RelationInstance("Acquisition", "a", "b")
    ev = InstanceEvidence(inst)
    ev.add(match("Acquisition", "a", "b", "r1", doc="same"))
    ev.add(match("Acquisition", "a", "b", "r2", doc="same"))
    assert confidence(ev, 2, 1) == pytest.approx(2.0)


def test_confidence_errors():
    _, ev = evidence(2, 3)
    with pytest.raises(KnowledgeError):
        confidence(ev, 0, 5)
    with pytest.raises(KnowledgeError):
        confidence(ev, 1, 5)


def _ten():
    out = {}
    for k in range(10):
        inst, ev = evidence(1 + k % 3, 1 + k, name=f"i{k}")
        out[inst] = ev
    return out


def test_split_counts():
    train, test, kn = build_and_split(_ten(), 0.0, 0.2, seed=1)
    assert (len(train), len(test)) == (8, 2)
    assert set(train) | set(test) == {i for i, _ in kn.instances}
    assert not set(train) & set(test)


def test_split_deterministic_and_seeded():
    a = build_and_split(_ten(), 0.0, 0.2, seed=3)
    b = build_and_split(_ten(), 0.0, 0.2, seed=3)
    assert a[:2] == b[:2]
    tests = {tuple(build_and_split(_ten(), 0.0, 0.2, seed=s)[1]) for s in range(10)}
    assert len(tests) > 1


def test_split_over_threshold_is_empty(caplog):
    train, test, kn = build_and_split(_ten(), 5.0, 0.2, seed=0)
    assert train == test == [] and kn.instances == []
    assert "removes every instance" in caplog.text


def test_split_small_relation_all_train(caplog):
    inst, ev = evidence(1, 1)
    train, test, _ = build_and_split({inst: ev}, 0.0, 0.5, seed=0)
    assert train == [inst] and test == []
    assert "all assigned to train" in caplog.text


def test_split_thirty_tenth():
    ev = {}
    for k in range(30):
        inst, e = evidence(1, 1, name=f"n{k}")
        ev[inst] = e
    _, test, _ = build_and_split(ev, 0.0, 0.1, seed=0)
    assert len(test) == 3  # exact ceil despite 0.1 * 30 = 3.0000000000000004


def test_normalizers_are_maxima():
    ev = _ten()
    assert normalizers(ev) == (3, 10)
    with pytest.raises(KnowledgeError):
        normalizers({})


def test_merge_matches_single_pass():
    ms = [match("Acquisition", "a", f"b{i % 3}", f"r{i % 2}", doc=f"d{i}") for i in range(12)]
    whole = aggregate_evidence(ms)
    merged = merge_evidence([aggregate_evidence(ms[:5]), aggregate_evidence(ms[5:])])
    assert set(whole) == set(merged)
    for inst in whole:
        assert whole[inst].matched_rule_ids == merged[inst].matched_rule_ids
        assert sorted(whole[inst].matched_mentions) == sorted(merged[inst].matched_mentions)


counts = st.tuples(st.integers(1, 6), st.integers(1, 40))


@settings(max_examples=200, deadline=None)
@given(counts, st.integers(0, 3), st.integers(0, 10))
def test_confidence_monotone(base, dr, dm):
    r, m = base
    z_r, z_m = 10, 60
    _, lo = evidence(r, max(m, r))
    _, hi = evidence(r + dr, max(m + dm, r + dr))
    assert confidence(hi, z_r, z_m) >= confidence(lo, z_r, z_m)


@settings(max_examples=100, deadline=None)
@given(st.lists(counts, min_size=2, max_size=6), st.integers(2, 4))
def test_ranking_scale_invariant(pairs, c):
    pairs = [(r, max(r, m)) for r, m in pairs]

    def scores(scale):
        ev = dict(evidence(r * scale, m * scale, name=f"s{k}") for k, (r, m) in enumerate(pairs))
        z_r, z_m = normalizers(ev)
        return [confidence(e, z_r, z_m) for e in ev.values()]

    a, b = scores(1), scores(c)
    for x, y in zip(a, b):
        assert math.isclose(x, y, rel_tol=1e-12)
    assert sorted(range(len(a)), key=lambda i: (a[i], i)) == sorted(range(len(b)), key=lambda i: (b[i], i))


@settings(max_examples=50, deadline=None)
@given(st.lists(counts, min_size=1, max_size=8))
def test_maximal_instance_scores_two(pairs):
    ev = {}
    for k, (r, m) in enumerate(pairs):
        inst, e = evidence(r, max(r, m), name=f"p{k}")
        ev[inst] = e
    z_r, z_m = normalizers(ev)
    scores = [confidence(e, z_r, z_m) for e in ev.values()]
    assert all(0 < s <= 2 for s in scores)
    for e, s in zip(ev.values(), scores):
        if len(e.matched_rule_ids) == z_r and e.n_sentences == z_m:
            assert s == 2.0
