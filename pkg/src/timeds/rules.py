"""<Pattern, Constraint> rule templates and sentence matching."""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import DEFAULT_TYPES, EntityMention, Sentence, tokenize

# Partnership is symmetric; the others are directed.
DEFAULT_RELATIONS = {
    "Acquisition": True,
    "Investing": True,
    "JobChange": True,
    "Lawsuit": True,
    "Partnership": False,
}

_SLOT_RE = re.compile(r"\[(entity[12])(?::([^\]]*))?\]")
_LINE_RE = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*:\s*(.+?)\s*$")


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class RuleTemplate:
    rule_id: str
    relation_type: str
    connector: tuple[str, ...]
    head_type: str
    tail_type: str
    directed: bool = True
    # True when the template reads "[entity2] ... [entity1]" (passive voice).
    tail_first: bool = False

    def __post_init__(self):
        if not self.connector:
            raise RuleError(f"rule {self.rule_id}: empty connector")

    @property
    def slot_constraints(self) -> tuple[str, str]:
        return (self.head_type, self.tail_type)


@dataclass(frozen=True)
class RuleMatch:
    rule_id: str
    relation_type: str
    sentence_ref: tuple[str, int]
    head: EntityMention
    tail: EntityMention
    date: dt.date
    directed: bool = True


def compile_rule(template_text: str, relation_set, types: Iterable[str] = DEFAULT_TYPES,
                 rule_id: str | None = None) -> RuleTemplate:
    """Compile ``"REL: [entity1:T] connector words [entity2:T]"``.

    ``relation_set`` may be a set of names (all treated as directed) or a
    mapping name -> directed flag.
    """
    types = set(types)
    m = _LINE_RE.match(template_text)
    if not m:
        raise RuleError(f"missing relation prefix in {template_text!r}")
    relation, pattern = m.group(1), m.group(2)
    if relation not in relation_set:
        raise RuleError(f"unknown relation {relation!r}")
    directed = relation_set[relation] if isinstance(relation_set, dict) else True

    slots = list(_SLOT_RE.finditer(pattern))
    names = [s.group(1) for s in slots]
    for needed in ("entity1", "entity2"):
        if needed not in names:
            raise RuleError(f"missing slot [{needed}] in {template_text!r}")
    if len(slots) != 2:
        raise RuleError(f"expected exactly two slots in {template_text!r}")
    first, second = slots
    if first.group(1) == second.group(1):
        raise RuleError(f"duplicate slot [{first.group(1)}] in {template_text!r}")
    if pattern[:first.start()].strip() or pattern[second.end():].strip():
        raise RuleError(f"text outside the slots in {template_text!r}")

    slot_types = {}
    for s in slots:
        etype = (s.group(2) or "").strip()
        if not etype:
            raise RuleError(f"missing type constraint on [{s.group(1)}]")
        if etype not in types:
            raise RuleError(f"unknown entity type {etype!r} in constraint on [{s.group(1)}]")
        slot_types[s.group(1)] = etype

    connector = tuple(tokenize(pattern[first.end():second.start()]))
    if not connector:
        raise RuleError(f"empty connector in {template_text!r}")
    return RuleTemplate(
        rule_id=rule_id or f"{relation}:{' '.join(connector)}",
        relation_type=relation,
        connector=connector,
        head_type=slot_types["entity1"],
        tail_type=slot_types["entity2"],
        directed=directed,
        tail_first=first.group(1) == "entity2",
    )


def load_rules(path, relation_set=None, types: Iterable[str] = DEFAULT_TYPES) -> list[RuleTemplate]:
    relation_set = DEFAULT_RELATIONS if relation_set is None else relation_set
    rules = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                rule = compile_rule(line, relation_set, types)
            except RuleError as exc:
                raise RuleError(f"{path}:{lineno}: {exc}") from None
            if rule.rule_id in seen:
                continue
            seen.add(rule.rule_id)
            rules.append(rule)
    return rules


def match_sentence(rule: RuleTemplate, s: Sentence) -> list[RuleMatch]:
    conn = rule.connector
    k = len(conn)
    out = []
    for left in s.mentions:
        if s.tokens[left.end:left.end + k] != conn:
            continue
        gap_end = left.end + k
        for right in s.mentions:
            if right.start != gap_end:
                continue
            head, tail = (right, left) if rule.tail_first else (left, right)
            if head.entity_type != rule.head_type or tail.entity_type != rule.tail_type:
                continue
            if head.canonical_id == tail.canonical_id:
                continue
            if not rule.directed and tail.canonical_id < head.canonical_id:
                head, tail = tail, head
            out.append(RuleMatch(rule.rule_id, rule.relation_type, s.ref, head, tail,
                                 s.date, rule.directed))
    return out


class RuleSet:
    """Immutable rule collection indexed by the connector's first token."""

    def __init__(self, rules: Sequence[RuleTemplate]):
        self.rules = tuple(rules)
        self._by_first: dict[str, list[RuleTemplate]] = {}
        for r in self.rules:
            self._by_first.setdefault(r.connector[0], []).append(r)
        self.relations = {r.relation_type: r.directed for r in self.rules}
        self.slot_types = {r.relation_type: (r.head_type, r.tail_type) for r in self.rules}

    def match(self, s: Sentence) -> list[RuleMatch]:
        if len(s.mentions) < 2:
            return []
        candidates = []
        for m in s.mentions:
            if m.end < len(s.tokens):
                candidates.extend(self._by_first.get(s.tokens[m.end], ()))
        out = []
        for rule in dict.fromkeys(candidates):
            out.extend(match_sentence(rule, s))
        out.sort(key=lambda x: (x.rule_id, x.head.start, x.tail.start))
        return out
