"""Supervision knowledge: rule-match aggregation, confidence scoring, held-out split."""

from __future__ import annotations

import datetime as dt
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Iterable

from .rules import RuleMatch

logger = logging.getLogger(__name__)


class KnowledgeError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class RelationInstance:
    relation_type: str
    head_id: str
    tail_id: str
    directed: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.head_id == self.tail_id:
            raise KnowledgeError(f"self-relation on {self.head_id!r}")
        if not self.directed and self.tail_id < self.head_id:
            raise KnowledgeError("undirected instance ids must be in canonical order")

    @classmethod
    def make(cls, relation_type: str, head_id: str, tail_id: str,
             directed: bool = True) -> "RelationInstance":
        if not directed and tail_id < head_id:
            head_id, tail_id = tail_id, head_id
        return cls(relation_type, head_id, tail_id, directed)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.relation_type, self.head_id, self.tail_id)


@dataclass
class InstanceEvidence:
    instance: RelationInstance
    matched_rule_ids: set[str] = field(default_factory=set)
    # (sentence_ref, date, rule_id)
    matched_mentions: list[tuple[tuple[str, int], dt.date, str]] = field(default_factory=list)

    def add(self, m: RuleMatch) -> None:
        self.matched_rule_ids.add(m.rule_id)
        self.matched_mentions.append((m.sentence_ref, m.date, m.rule_id))

    def merge(self, other: "InstanceEvidence") -> None:
        self.matched_rule_ids |= other.matched_rule_ids
        self.matched_mentions.extend(other.matched_mentions)

    @property
    def dates(self) -> list[dt.date]:
        """One date per distinct matched sentence."""
        seen = {}
        for ref, d, _ in self.matched_mentions:
            seen.setdefault(ref, d)
        return list(seen.values())

    @property
    def n_sentences(self) -> int:
        return len({ref for ref, _, _ in self.matched_mentions})


@dataclass
class SupervisionKnowledge:
    instances: list[tuple[RelationInstance, float]]
    z_rule: int
    z_m: int

    def __contains__(self, inst: RelationInstance) -> bool:
        return any(i == inst for i, _ in self.instances)

    def keys(self) -> set[tuple[str, str, str]]:
        return {i.key for i, _ in self.instances}


def aggregate_evidence(matches: Iterable[RuleMatch]) -> dict[RelationInstance, InstanceEvidence]:
    out: dict[RelationInstance, InstanceEvidence] = {}
    for m in matches:
        inst = RelationInstance.make(m.relation_type, m.head.canonical_id,
                                     m.tail.canonical_id, m.directed)
        ev = out.get(inst)
        if ev is None:
            ev = out[inst] = InstanceEvidence(inst)
        ev.add(m)
    return out


def merge_evidence(parts: Iterable[dict]) -> dict[RelationInstance, InstanceEvidence]:
    out: dict[RelationInstance, InstanceEvidence] = {}
    for part in parts:
        for inst, ev in part.items():
            if inst in out:
                out[inst].merge(ev)
            else:
                out[inst] = InstanceEvidence(inst, set(ev.matched_rule_ids),
                                             list(ev.matched_mentions))
    for ev in out.values():
        ev.matched_mentions.sort(key=lambda x: (x[1], x[0], x[2]))
    return out


def confidence(ev: InstanceEvidence, z_rule: int, z_m: int) -> float:
    """Rule-diversity share plus mention share, each normalized by the corpus maximum."""
    if z_rule <= 0 or z_m <= 0:
        raise KnowledgeError("normalizers must be positive")
    n_rules = len(ev.matched_rule_ids)
    n_mentions = ev.n_sentences
    if n_rules > z_rule or n_mentions > z_m:
        raise KnowledgeError("normalizer smaller than the instance's own counts")
    return n_rules / z_rule + n_mentions / z_m


def normalizers(evidence: dict[RelationInstance, InstanceEvidence]) -> tuple[int, int]:
    if not evidence:
        raise KnowledgeError("no evidence")
    z_rule = max(len(ev.matched_rule_ids) for ev in evidence.values())
    z_m = max(ev.n_sentences for ev in evidence.values())
    return z_rule, z_m


def _split_rng(seed: int, relation: str) -> random.Random:
    return random.Random(f"holdout|{seed}|{relation}")


def build_and_split(evidence: dict[RelationInstance, InstanceEvidence], tau_c: float,
                    holdout_fraction: float, seed: int):
    """Threshold by confidence and split per relation into train/test instances.

    Returns ``(train, test, knowledge)``; ``train`` and ``test`` are sorted
    lists of instances.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise KnowledgeError("holdout_fraction must be in (0, 1)")
    if not evidence:
        logger.error("no rule-matched instances; supervision knowledge is empty")
        return [], [], SupervisionKnowledge([], 1, 1)
    z_rule, z_m = normalizers(evidence)
    kept = sorted((inst, confidence(ev, z_rule, z_m)) for inst, ev in evidence.items())
    kept = [(inst, c) for inst, c in kept if c >= tau_c]
    knowledge = SupervisionKnowledge(kept, z_rule, z_m)
    if not kept:
        logger.error("confidence threshold %.3f removes every instance; knowledge is empty", tau_c)
        return [], [], knowledge

    by_rel: dict[str, list[RelationInstance]] = {}
    for inst, _ in kept:
        by_rel.setdefault(inst.relation_type, []).append(inst)
    train, test = [], []
    for rel in sorted(by_rel):
        group = by_rel[rel]
        if len(group) < 2:
            logger.warning("relation %s has %d instance(s); all assigned to train", rel, len(group))
            train.extend(group)
            continue
        n_test = min(math.ceil(holdout_fraction * len(group) - 1e-9), len(group) - 1)
        shuffled = list(group)
        _split_rng(seed, rel).shuffle(shuffled)
        test.extend(shuffled[:n_test])
        train.extend(shuffled[n_test:])
    return sorted(train), sorted(test), knowledge
