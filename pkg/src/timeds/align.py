"""Distant-supervision alignment with popularity weights, negatives and test sets."""

from __future__ import annotations

import datetime as dt
import logging
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .corpus import Sentence
from .knowledge import RelationInstance
from .popularity import PopularitySeries, inspo_at

logger = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"
ALIGNED = "aligned"
TAIL_REPLACED = "tail-replaced"


class AlignError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedMention:
    instance: RelationInstance
    sentence_ref: tuple[str, int]
    date: dt.date
    weight: float
    polarity: str = POSITIVE
    provenance: str = ALIGNED

    @property
    def key(self) -> tuple:
        return (*self.instance.key, *self.sentence_ref)

    @property
    def key_str(self) -> str:
        return "|".join(str(x) for x in self.key)

    @property
    def sort_key(self) -> tuple:
        return (self.instance.relation_type, self.instance.head_id, self.instance.tail_id,
                self.sentence_ref[0], self.sentence_ref[1], self.polarity != POSITIVE)


@dataclass(frozen=True)
class LabeledMention:
    mention: WeightedMention
    gold: bool  # True: the sentence expresses the instance's relation

    @property
    def key(self) -> tuple:
        return self.mention.key


@dataclass
class TestSet:
    __test__ = False  # not a pytest class

    mentions: list[LabeledMention]

    def __len__(self) -> int:
        return len(self.mentions)

    def counts(self) -> dict[str, tuple[int, int]]:
        out: dict[str, list[int]] = {}
        for lm in self.mentions:
            c = out.setdefault(lm.mention.instance.relation_type, [0, 0])
            c[0 if lm.gold else 1] += 1
        return {r: (p, n) for r, (p, n) in sorted(out.items())}


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    folds: tuple[int, ...]  # fold index per test-set position

    def members(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.folds) if f == fold]

    def sizes(self) -> list[int]:
        return [self.folds.count(f) for f in range(self.k)]


def _pair_index(instances: Iterable[RelationInstance]) -> dict[tuple[str, str], list[RelationInstance]]:
    index: dict[tuple[str, str], list[RelationInstance]] = {}
    for inst in instances:
        index.setdefault((inst.head_id, inst.tail_id), []).append(inst)
        if not inst.directed:
            index.setdefault((inst.tail_id, inst.head_id), []).append(inst)
    return index


def _types_ok(inst, types_by_id, slot_types) -> bool:
    if not slot_types or inst.relation_type not in slot_types:
        return True
    want_h, want_t = slot_types[inst.relation_type]
    got_h, got_t = types_by_id[inst.head_id], types_by_id[inst.tail_id]
    if inst.directed:
        return (got_h, got_t) == (want_h, want_t)
    return {got_h, got_t} == {want_h, want_t} or (got_h, got_t) == (want_h, want_t)


def align(instances: Iterable[RelationInstance], sentences: Iterable[Sentence],
          series: Mapping[RelationInstance, PopularitySeries],
          slot_types: Mapping[str, tuple[str, str]] | None = None) -> list[WeightedMention]:
    """One positive mention per (instance, sentence) holding both entities.

    ``slot_types`` maps relation -> (head_type, tail_type); when given, the
    sentence's entity types must be compatible with the relation.
    """
    usable = []
    for inst in instances:
        if inst in series:
            usable.append(inst)
        else:
            logger.warning("no popularity series for %s; skipped", inst)
    index = _pair_index(usable)
    out = []
    for s in sentences:
        if len(s.mentions) < 2:
            continue
        types_by_id = {m.canonical_id: m.entity_type for m in s.mentions}
        if len(types_by_id) < 2:
            continue
        found = set()
        for a in types_by_id:
            for b in types_by_id:
                if a == b:
                    continue
                for inst in index.get((a, b), ()):
                    if inst not in found and _types_ok(inst, types_by_id, slot_types):
                        found.add(inst)
        for inst in found:
            out.append(WeightedMention(inst, s.ref, s.date, inspo_at(series[inst], s.date)))
    out.sort(key=lambda m: m.sort_key)
    return out


def _negative_candidates(m: WeightedMention, s: Sentence, seed: int,
                         strict_types: bool) -> list[str]:
    inst = m.instance
    cands = sorted({x.canonical_id for x in s.mentions} - {inst.head_id, inst.tail_id})
    if strict_types:
        tail_type = next(x.entity_type for x in s.mentions if x.canonical_id == inst.tail_id)
        cands = [c for c in cands
                 if next(x.entity_type for x in s.mentions if x.canonical_id == c) == tail_type]
    random.Random(f"neg|{seed}|{m.key_str}").shuffle(cands)
    return cands


def generate_negatives(m: WeightedMention, s: Sentence, seed: int,
                       knowledge: set[tuple[str, str, str]] = frozenset(),
                       limit: int = 1, strict_types: bool = False) -> list[WeightedMention]:
    """Tail-replacement negatives drawn from other entities of the same sentence.

    Candidates are tried in a seeded order derived from the mention key; a
    replacement whose pair is itself a knowledge instance of the relation is
    skipped.  At most ``limit`` negatives are returned.
    """
    if m.polarity != POSITIVE:
        raise AlignError("negatives are generated from positive mentions only")
    inst = m.instance
    out = []
    for cand in _negative_candidates(m, s, seed, strict_types):
        neg = RelationInstance.make(inst.relation_type, inst.head_id, cand, inst.directed)
        if neg.key in knowledge:
            continue
        out.append(WeightedMention(neg, m.sentence_ref, m.date, m.weight, NEGATIVE, TAIL_REPLACED))
        if len(out) >= limit:
            break
    return out


def add_negatives(positives: list[WeightedMention], sentences: Mapping[tuple[str, int], Sentence],
                  seed: int, knowledge: set[tuple[str, str, str]], ratio: int = 1,
                  strict_types: bool = False) -> list[WeightedMention]:
    """Positives plus up to ``ratio`` negatives each, in canonical order."""
    out = list(positives)
    seen = {m.key for m in positives}
    if ratio > 0:
        for m in positives:
            for neg in generate_negatives(m, sentences[m.sentence_ref], seed, knowledge,
                                          ratio, strict_types):
                # two positives sharing a head in one sentence can yield the same negative
                if neg.key not in seen:
                    seen.add(neg.key)
                    out.append(neg)
    out.sort(key=lambda m: m.sort_key)
    return out


def _threshold(tau_pos: Mapping[str, float], relation: str) -> float:
    if relation in tau_pos:
        return tau_pos[relation]
    if "default" in tau_pos:
        return tau_pos["default"]
    raise AlignError(f"no test threshold for relation {relation!r}")


def build_test_set(test_instances: Iterable[RelationInstance], sentences: Iterable[Sentence],
                   series: Mapping[RelationInstance, PopularitySeries],
                   tau_pos: Mapping[str, float], negative_reserve_fraction: float,
                   gold: Callable[[WeightedMention], bool | None], seed: int = 0,
                   slot_types: Mapping[str, tuple[str, str]] | None = None) -> TestSet:
    """Candidate positives above the per-relation threshold plus a reserved sample below it.

    ``gold`` returns the adjudicated polarity of a candidate, or ``None`` when
    it has no label (the candidate is then dropped).
    """
    test_instances = list(test_instances)
    aligned = align(test_instances, sentences, series, slot_types)
    labelled = []
    unlabeled = 0
    for m in aligned:
        rel = m.instance.relation_type
        if m.weight >= _threshold(tau_pos, rel):
            pass
        elif random.Random(f"reserve|{seed}|{m.key_str}").random() >= negative_reserve_fraction:
            continue
        g = gold(m)
        if g is None:
            unlabeled += 1
            continue
        labelled.append(LabeledMention(m, bool(g)))
    if unlabeled:
        logger.warning("%d test candidates had no gold label and were excluded", unlabeled)
    ts = TestSet(labelled)
    present = set(ts.counts())
    for rel in sorted({i.relation_type for i in test_instances} - present):
        logger.warning("relation %s has no test candidates", rel)
    return ts


def partition_folds(ts, k: int, seed: int) -> FoldAssignment:
    """Seeded uniform partition of a test set (or a count) into ``k`` folds.

    Fold sizes differ by at most one.
    """
    n = ts if isinstance(ts, int) else len(ts)
    if k < 2:
        raise AlignError("fold count must be at least 2")
    if n < k:
        raise AlignError(f"cannot split {n} test mentions into {k} folds")
    order = list(range(n))
    random.Random(f"folds|{seed}").shuffle(order)
    folds = [0] * n
    for pos, item in enumerate(order):
        folds[item] = pos % k
    return FoldAssignment(k, tuple(folds))


def oracle_gold(labels: Mapping[tuple, bool]) -> Callable[[WeightedMention], bool | None]:
    """Gold lookup keyed by (relation, head_id, tail_id, doc_id, index)."""
    return lambda m: labels.get(m.key)
