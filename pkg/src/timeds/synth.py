"""Synthetic timestamped news corpora with planted, bursty relation instances.

Every planted instance gets a number of true mentions spread around its
establishment day (optional early leak, peak, geometric decay).  Each
true mention is realized by rule connector k with probability p_k,
independently of the day, or by an unmatched paraphrase with the
remaining mass.  Distractor sentences put the same entity pair into a
non-expressing template, uniformly over the span.  Oracle labels record,
for every co-occurrence sentence, whether it expresses the relation.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .align import POSITIVE, WeightedMention
from .knowledge import RelationInstance

NONE_REL = "NO_RELATION"


class SynthError(ValueError):
    pass


# relation -> (head type, tail type, directed)
RELATION_TYPES = {
    "Acquisition": ("ORG", "ORG", True),
    "Investing": ("ORG", "ORG", True),
    "JobChange": ("PER", "ORG", True),
    "Lawsuit": ("ORG", "ORG", True),
    "Partnership": ("ORG", "ORG", False),
}

CONNECTORS = {
    "Acquisition": ["has completed the acquisition of", "agreed to acquire", "has acquired",
                    "announced plans to buy", "completed its purchase of"],
    "Investing": ["boosted its position in shares of", "raised its stake in",
                  "has invested in", "bought a new stake in", "increased its holdings in"],
    "JobChange": ["has left", "has joined", "was appointed manager of", "signed a contract with",
                  "was named chief executive of"],
    "Lawsuit": ["sues", "filed a lawsuit against", "has taken legal action against",
                "filed a patent complaint against", "is suing"],
    "Partnership": ["has formed a partnership with", "announced a partnership with",
                    "teamed up with", "signed an alliance deal with", "is collaborating with"],
}

PARAPHRASES = {
    "Acquisition": ["{h} bought {t} in an all-cash deal", "{h} takes over rival {t}",
                    "{h} closes the takeover of {t}"],
    "Investing": ["{h} now holds more {t} stock", "{h} put fresh money into {t}",
                  "{h} added {t} shares to its portfolio"],
    "JobChange": ["{h} takes the top job at {t}", "{h} confirmed as the new boss of {t}",
                  "{h} moves to {t} on a free transfer"],
    "Lawsuit": ["{h} takes {t} to court over patents", "{h} accuses {t} of infringement in court",
                "{h} seeks damages from {t} in court"],
    "Partnership": ["{h} will work jointly with {t} on new products",
                    "{h} joins forces with {t}", "{h} and {t} agree to cooperate on research"],
}

# Off-peak paraphrases: early reports before establishment, retrospective
# mentions well after it.  Only the paraphrase mass depends on time;
# rule-connector probabilities do not.
EARLY_PARAPHRASES = {
    "Acquisition": ["{h} is reportedly set to buy {t}", "{h} is said to be in talks to take over {t}"],
    "Investing": ["{h} is reportedly weighing a stake in {t}", "{h} may soon put money into {t}"],
    "JobChange": ["{h} is reportedly set to be confirmed at {t}", "{h} is expected to take charge of {t}"],
    "Lawsuit": ["{h} is reportedly preparing legal papers for {t}", "{h} could soon take {t} to court"],
    "Partnership": ["{h} is reportedly close to a tie-up with {t}", "{h} may soon work with {t}"],
}
RETRO_PARAPHRASES = {
    "Acquisition": ["{h} , which bought {t} last month , is hiring", "{h} is integrating {t} after the deal",
                    "the {h} purchase of {t} appears to be bearing fruit"],
    "Investing": ["{h} still holds a large position in {t}", "{h} remains a major shareholder of {t}",
                  "{h} kept its {t} shares through the quarter"],
    "JobChange": ["{h} is settling in at {t}", "{h} made his first signing for {t}",
                  "{h} is now in charge at {t}"],
    "Lawsuit": ["the {h} case against {t} drags on", "{h} is still in court with {t}",
                "a judge delayed the {h} claim against {t}"],
    "Partnership": ["{h} and {t} showed the first fruits of their alliance",
                    "{h} is still working with {t}", "{h} deepened its ties with {t}"],
}

# Non-expressing co-occurrence templates, keyed by the (head, tail) type pair.
DISTRACTORS = {
    ("ORG", "ORG"): ["{a} and {b} shares moved higher", "analysts compared {a} with {b} in a note",
                     "{a} competes with {b} in several markets",
                     "both {a} and {b} reported results this week",
                     "{a} shares rose while {b} shares fell", "{a} hired a former {b} engineer"],
    ("PER", "ORG"): ["{a} was seen at a {b} event", "{a} praised the {b} fans",
                     "{a} spoke about {b} in an interview", "fans of {b} cheered for {a}",
                     "{a} criticized {b} on television"],
}

PREFIXES = ["", "", "", "on monday , ", "reports say ", "in a statement , ", "meanwhile , "]

# Third-entity clauses, trailing or leading the pair; these feed tail-replacement negatives.
BYSTANDER_CLAUSES = {
    "LOC": [", which is based in {x}", " in {x}"],
    "ORG": [", according to {x}", ", a {x} analyst said"],
    "PER": [", said {x}", ", {x} told reporters"],
}
BYSTANDER_LEADS = {
    "LOC": ["in {x} , "],
    "ORG": ["according to {x} , ", "{x} analysts said "],
    "PER": ["{x} said ", "{x} reports that "],
}

SINGLE_TEMPLATES = ["{e} reported quarterly earnings", "{e} announced a new product",
                    "{e} shares were flat", "{e} opened an office in {loc}",
                    "{e} is expanding in {loc}"]
EMPTY_TEMPLATES = ["markets were mixed on the day", "weather delayed several flights",
                   "oil prices edged lower", "the central bank left rates unchanged",
                   "tech stocks led the gains"]

_SYLLABLES = ["ka", "lo", "mer", "vin", "ta", "ro", "sel", "dor", "qui", "nex", "bra", "tul",
              "fen", "mar", "zo", "pel", "gri", "ost", "cal", "vey", "lum", "dra", "kin", "sor"]
_ORG_SUFFIX = ["Systems", "Group", "Holdings", "Labs", "Motors", "Capital", "Media", "Energy",
               "Foods", "Networks", "Pharma", "Airways"]
_LOC_FORM = ["Port {}", "{} City", "{}ville", "North {}", "{} Bay"]


@dataclass
class SynthConfig:
    n_instances: int = 20
    relations: Mapping[str, tuple[str, str, bool]] = field(default_factory=lambda: dict(RELATION_TYPES))
    entity_pool: Mapping[str, int] = field(default_factory=lambda: {"ORG": 150, "PER": 60, "LOC": 40})
    start: dt.date = dt.date(2016, 1, 1)
    end: dt.date = dt.date(2016, 8, 31)
    peak_height: float = 60.0
    decay: float = 0.5
    leak: float = 0.1
    pattern_probs: Sequence[float] = (0.12, 0.12, 0.12, 0.12, 0.12)
    distractor_rate: float = 0.3
    offpeak_rate: float = 0.7  # share of off-peak paraphrases using early/retrospective wording
    chatter_clause_rate: float = 0.5  # share of third-entity clauses that are head/bystander chatter
    bystander_rate: float = 0.5
    n_sentences: int = 50_000
    spurious_matches: int = 40
    chatter_rate: float = 0.05
    max_doc_sentences: int = 4
    margin_days: int = 20
    seed: int = 0

    def validate(self) -> None:
        if self.n_instances < 1:
            raise SynthError("at least one planted instance is required")
        if sum(self.pattern_probs) > 1 + 1e-12 or any(p < 0 for p in self.pattern_probs):
            raise SynthError("pattern probabilities must be non-negative and sum to <= 1")
        for name in ("distractor_rate", "leak", "bystander_rate", "chatter_rate", "offpeak_rate",
                     "chatter_clause_rate"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise SynthError(f"{name} must lie in [0, 1]")
        if not 0 <= self.decay < 1:
            raise SynthError("decay must lie in [0, 1)")
        if self.distractor_rate >= 1:
            raise SynthError("distractor_rate must be < 1")
        for rel in self.relations:
            if rel not in CONNECTORS:
                raise SynthError(f"no templates for relation {rel!r}")
            if len(self.pattern_probs) > len(CONNECTORS[rel]):
                raise SynthError(f"more pattern probabilities than connectors for {rel}")
        if self.end < self.start:
            raise SynthError("corpus end precedes start")
        if (self.end - self.start).days < 2 * self.margin_days:
            raise SynthError("corpus span too short for the establishment margin")


@dataclass(frozen=True)
class OracleLabel:
    sentence_ref: tuple[str, int]
    relation: str
    head_id: str
    tail_id: str
    expresses: bool

    @property
    def key(self) -> tuple:
        return (self.relation, self.head_id, self.tail_id, *self.sentence_ref)


@dataclass
class PlantedInstance:
    instance: RelationInstance
    establishment: dt.date
    # one entry per true mention: (date, pattern index or -1 for a paraphrase)
    true_mentions: list[tuple[dt.date, int]] = field(default_factory=list)


@dataclass
class SynthCorpus:
    config: SynthConfig
    records: list[dict]
    gazetteer: list[tuple[str, str, str]]  # (surface, type, canonical id)
    rules: list[str]
    labels: list[OracleLabel]
    planted: list[PlantedInstance]

    def rule_matched_dates(self, p: PlantedInstance) -> list[dt.date]:
        return [d for d, k in p.true_mentions if k >= 0]

    def true_dates(self, p: PlantedInstance) -> list[dt.date]:
        return [d for d, _ in p.true_mentions]

    def write(self, out_dir) -> dict[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        paths = {k: os.path.join(out_dir, v) for k, v in
                 (("corpus", "corpus.jsonl"), ("gazetteer", "gazetteer.tsv"),
                  ("rules", "rules.txt"), ("oracle", "oracle.tsv"))}
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
        with open(paths["gazetteer"], "w", encoding="utf-8") as fh:
            fh.write("# surface\ttype\tcanonical_id\n")
            for surface, etype, cid in self.gazetteer:
                fh.write(f"{surface}\t{etype}\t{cid}\n")
        with open(paths["rules"], "w", encoding="utf-8") as fh:
            fh.write("# RELATION: [entity1:TYPE] connector [entity2:TYPE]\n")
            fh.writelines(line + "\n" for line in self.rules)
        write_oracle(paths["oracle"], self.labels)
        return paths


def write_oracle(path, labels: Sequence[OracleLabel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# doc_id\tindex\trelation\thead_id\ttail_id\texpresses\n")
        for lab in labels:
            fh.write(f"{lab.sentence_ref[0]}\t{lab.sentence_ref[1]}\t{lab.relation}\t"
                     f"{lab.head_id}\t{lab.tail_id}\t{int(lab.expresses)}\n")


def read_oracle(path) -> dict[tuple, bool]:
    """Oracle labels keyed by (relation, head_id, tail_id, doc_id, index)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            doc, idx, rel, h, t, flag = line.rstrip("\n").split("\t")
            out[(rel, h, t, doc, int(idx))] = flag == "1"
    return out


def _names(rng: np.random.Generator, n: int, fmt, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        k = int(rng.integers(2, 4))
        stem = "".join(_SYLLABLES[i] for i in rng.integers(0, len(_SYLLABLES), size=k)).capitalize()
        name = fmt(stem, rng)
        if name in taken:
            continue
        taken.add(name)
        out.append(name)
    return out


def _make_entities(cfg: SynthConfig, rng) -> dict[str, list[tuple[str, str]]]:
    taken: set[str] = set()
    pools = {}
    fmts = {
        "ORG": lambda s, r: f"{s} {_ORG_SUFFIX[int(r.integers(len(_ORG_SUFFIX)))]}",
        "PER": lambda s, r: f"{s} {_names_last(r)}",
        "LOC": lambda s, r: _LOC_FORM[int(r.integers(len(_LOC_FORM)))].format(s),
    }
    for etype in sorted(cfg.entity_pool):
        names = _names(rng, cfg.entity_pool[etype], fmts[etype], taken)
        pools[etype] = [(f"{etype}{i:04d}", name) for i, name in enumerate(names)]
    return pools


def _names_last(rng) -> str:
    k = int(rng.integers(2, 4))
    return "".join(_SYLLABLES[i] for i in rng.integers(0, len(_SYLLABLES), size=k)).capitalize()


def _burst_offsets(cfg: SynthConfig, rng, est: dt.date, n: int) -> list[dt.date]:
    """Days of n true mentions: leak before establishment, else geometric decay after it."""
    days = []
    pre = (est - cfg.start).days
    post = (cfg.end - est).days
    for _ in range(n):
        if pre > 0 and rng.random() < cfg.leak:
            days.append(cfg.start + dt.timedelta(days=int(rng.integers(0, pre))))
            continue
        k = 0 if cfg.decay == 0 else int(rng.geometric(1 - cfg.decay)) - 1
        days.append(est + dt.timedelta(days=min(k, post)))
    return days


def generate_corpus(cfg: SynthConfig) -> SynthCorpus:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    pools = _make_entities(cfg, rng)
    names = {cid: name for pool in pools.values() for cid, name in pool}
    types = {cid: etype for etype, pool in pools.items() for cid, _ in pool}
    span = (cfg.end - cfg.start).days + 1
    rels = list(cfg.relations)

    # planted instances, one relation per slot in round-robin order
    planted: list[PlantedInstance] = []
    used_pairs: set[frozenset] = set()
    partners: dict[str, set[str]] = {}
    for i in range(cfg.n_instances):
        rel = rels[i % len(rels)]
        ht, tt, directed = cfg.relations[rel]
        while True:
            h = pools[ht][int(rng.integers(len(pools[ht])))][0]
            t = pools[tt][int(rng.integers(len(pools[tt])))][0]
            if h != t and frozenset((h, t)) not in used_pairs:
                break
        used_pairs.add(frozenset((h, t)))
        partners.setdefault(h, set()).add(t)
        partners.setdefault(t, set()).add(h)
        est = cfg.start + dt.timedelta(
            days=int(rng.integers(cfg.margin_days, span - cfg.margin_days)))
        planted.append(PlantedInstance(RelationInstance.make(rel, h, t, directed), est))

    sentences: list[tuple[dt.date, str, list[tuple]]] = []  # (day, text, label specs)
    probs = np.asarray(cfg.pattern_probs, dtype=float)
    cum = np.cumsum(probs)

    def pick(etype: str, avoid: set[str]) -> str:
        while True:
            cid = pools[etype][int(rng.integers(len(pools[etype])))][0]
            if cid not in avoid and not (partners.get(cid, set()) & avoid):
                return cid

    def frame(body: str, head: str, avoid: set[str]) -> str:
        """Optionally add a third entity before or after the pair."""
        lead = PREFIXES[int(rng.integers(len(PREFIXES)))]
        if rng.random() >= cfg.bystander_rate:
            return lead + body
        if rng.random() < cfg.chatter_clause_rate:
            # non-expressing clause linking the head to the third entity
            forms = DISTRACTORS[(types[head], "ORG")]
            clause = forms[int(rng.integers(len(forms)))].format(a=names[head],
                                                                 b=names[pick("ORG", avoid)])
            return lead + body + " , and " + clause
        etype = ["LOC", "ORG", "PER"][int(rng.integers(3))]
        cid = pick(etype, avoid)
        if rng.random() < 0.5:
            forms = BYSTANDER_LEADS[etype]
            return forms[int(rng.integers(len(forms)))].format(x=names[cid]) + body
        forms = BYSTANDER_CLAUSES[etype]
        return lead + body + forms[int(rng.integers(len(forms)))].format(x=names[cid])

    for p in planted:
        inst = p.instance
        rel = inst.relation_type
        ht, tt, directed = cfg.relations[rel]
        # surface head/tail follow the relation's slot order
        h, t = inst.head_id, inst.tail_id
        if types[h] != ht:
            h, t = t, h
        n_true = int(rng.poisson(cfg.peak_height / (1 - cfg.leak) / (1 - cfg.decay))
                     * float(rng.uniform(0.6, 1.4)))
        n_true = max(n_true, 1)
        for day in _burst_offsets(cfg, rng, p.establishment, n_true):
            u = rng.random()
            k = int(np.searchsorted(cum, u, side="right"))
            avoid = {h, t}
            if k < len(probs):
                body = f"{names[h]} {CONNECTORS[rel][k]} {names[t]}"
            else:
                k = -1
                offset = (day - p.establishment).days
                forms = PARAPHRASES[rel]
                if abs(offset) > 1 and rng.random() < cfg.offpeak_rate:
                    forms = EARLY_PARAPHRASES[rel] if offset < 0 else RETRO_PARAPHRASES[rel]
                body = forms[int(rng.integers(len(forms)))].format(h=names[h], t=names[t])
            text = frame(body, h, avoid)
            p.true_mentions.append((day, k))
            sentences.append((day, text, [(rel, inst.head_id, inst.tail_id, True)]))
        n_dis = int(rng.binomial(max(1, round(n_true / (1 - cfg.distractor_rate))),
                                 cfg.distractor_rate))
        forms = DISTRACTORS[(ht, tt)]
        for _ in range(n_dis):
            day = cfg.start + dt.timedelta(days=int(rng.integers(span)))
            a, b = (h, t)
            if ht == tt and rng.random() < 0.5:
                a, b = t, h
            body = forms[int(rng.integers(len(forms)))].format(a=names[a], b=names[b])
            text = frame(body, h, {h, t})
            sentences.append((day, text, [(rel, inst.head_id, inst.tail_id, False)]))
        p.true_mentions.sort()

    # spurious single rule hits between unrelated pairs (low confidence)
    for _ in range(cfg.spurious_matches):
        rel = rels[int(rng.integers(len(rels)))]
        ht, tt, directed = cfg.relations[rel]
        while True:
            h = pools[ht][int(rng.integers(len(pools[ht])))][0]
            t = pools[tt][int(rng.integers(len(pools[tt])))][0]
            if h != t and frozenset((h, t)) not in used_pairs:
                break
        conn = CONNECTORS[rel][int(rng.integers(len(probs)))]
        day = cfg.start + dt.timedelta(days=int(rng.integers(span)))
        ri = RelationInstance.make(rel, h, t, directed)
        sentences.append((day, f"{names[h]} {conn} {names[t]}",
                          [(rel, ri.head_id, ri.tail_id, True)]))

    # filler: chatter between unrelated pairs, single-entity news, entity-free news
    n_fill = max(0, cfg.n_sentences - len(sentences))
    orgs = pools["ORG"]
    locs = pools["LOC"]
    for _ in range(n_fill):
        day = cfg.start + dt.timedelta(days=int(rng.integers(span)))
        u = rng.random()
        if u < cfg.chatter_rate:
            while True:
                a = orgs[int(rng.integers(len(orgs)))][0]
                b = orgs[int(rng.integers(len(orgs)))][0]
                if a != b and frozenset((a, b)) not in used_pairs:
                    break
            forms = DISTRACTORS[("ORG", "ORG")]
            text = forms[int(rng.integers(len(forms)))].format(a=names[a], b=names[b])
            a2, b2 = sorted((a, b))
            sentences.append((day, text, [(NONE_REL, a2, b2, False)]))
        elif u < 0.7:
            e = orgs[int(rng.integers(len(orgs)))][0]
            loc = locs[int(rng.integers(len(locs)))][0]
            form = SINGLE_TEMPLATES[int(rng.integers(len(SINGLE_TEMPLATES)))]
            sentences.append((day, form.format(e=names[e], loc=names[loc]), []))
        else:
            sentences.append((day, EMPTY_TEMPLATES[int(rng.integers(len(EMPTY_TEMPLATES)))], []))

    # pack into documents, day by day
    by_day: dict[dt.date, list[int]] = {}
    for i, (day, _, _) in enumerate(sentences):
        by_day.setdefault(day, []).append(i)
    records, labels = [], []
    sources = ["wire", "daily", "post", "herald", "times", "journal"]
    for day in sorted(by_day):
        idx = by_day[day]
        rng.shuffle(idx)
        pos, k = 0, 0
        while pos < len(idx):
            size = int(rng.integers(1, cfg.max_doc_sentences + 1))
            chunk = idx[pos:pos + size]
            pos += size
            doc_id = f"d{day.strftime('%Y%m%d')}-{k:04d}"
            k += 1
            texts = [_finish(sentences[j][1]) for j in chunk]
            records.append({
                "id": doc_id,
                "source": sources[int(rng.integers(len(sources)))],
                "title": texts[0],
                "body": " ".join(texts[1:]),
                "timestamp": day.isoformat() + "T08:00:00",
            })
            for si, j in enumerate(chunk):
                for rel, h, t, flag in sentences[j][2]:
                    labels.append(OracleLabel((doc_id, si), rel, h, t, flag))

    gaz = [(name, types[cid], cid) for cid, name in sorted(names.items())]
    rules = []
    for rel in rels:
        ht, tt, _ = cfg.relations[rel]
        for conn in CONNECTORS[rel][:len(probs)]:
            rules.append(f"{rel}: [entity1:{ht}] {conn} [entity2:{tt}]")
    return SynthCorpus(cfg, records, gaz, rules, labels, planted)


def _finish(text: str) -> str:
    text = text[0].upper() + text[1:]
    return text + " ."


def relation_flags(cfg: SynthConfig) -> dict[str, bool]:
    return {rel: directed for rel, (_, _, directed) in cfg.relations.items()}


def noise_ratio(manifest: Sequence[WeightedMention], labels: Mapping[tuple, bool]) -> float:
    """Share of positive mentions whose sentence does not express the relation."""
    pos = [m for m in manifest if m.polarity == POSITIVE]
    if not pos:
        return 0.0
    false = 0
    for m in pos:
        if m.key not in labels:
            raise SynthError(f"no oracle label for mention {m.key}")
        false += not labels[m.key]
    return false / len(pos)
