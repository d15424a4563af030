"""Corpus ingestion: timestamped records -> sentences with gazetteer mentions."""

from __future__ import annotations

import datetime as dt
import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

DEFAULT_TYPES = ("ORG", "PER", "LOC")

ABBREVIATIONS = frozenset({
    "inc.", "corp.", "co.", "ltd.", "mr.", "mrs.", "ms.", "dr.", "st.",
    "jr.", "sr.", "u.s.", "u.k.", "e.g.", "i.e.", "vs.", "v.", "no.",
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.",
    "sept.", "oct.", "nov.", "dec.",
})

_TOKEN_RE = re.compile(r"\w+(?:[-'.&]\w+)*\.?|[^\w\s]", re.UNICODE)
_REQUIRED = ("id", "source", "title", "body", "timestamp")


@dataclass(frozen=True)
class Document:
    id: str
    source: str
    title: str
    body: str
    date: dt.date


@dataclass(frozen=True)
class EntityMention:
    surface: str
    entity_type: str
    start: int  # token offset, inclusive
    end: int  # token offset, exclusive
    canonical_id: str

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    text: str
    tokens: tuple[str, ...]
    mentions: tuple[EntityMention, ...]
    date: dt.date

    @property
    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.index)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "index": self.index,
            "date": self.date.isoformat(),
            "text": self.text,
            "tokens": list(self.tokens),
            "mentions": [
                [m.surface, m.entity_type, m.start, m.end, m.canonical_id]
                for m in self.mentions
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Sentence":
        return cls(
            doc_id=obj["doc_id"],
            index=int(obj["index"]),
            text=obj["text"],
            tokens=tuple(obj["tokens"]),
            mentions=tuple(EntityMention(s, t, int(a), int(b), c)
                           for s, t, a, b, c in obj["mentions"]),
            date=dt.date.fromisoformat(obj["date"]),
        )


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class GazetteerError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Split on whitespace and punctuation; keeps abbreviation periods attached."""
    tokens = []
    for tok in _TOKEN_RE.findall(text):
        if tok.endswith(".") and len(tok) > 1 and tok.lower() not in ABBREVIATIONS:
            tokens.append(tok[:-1])
            tokens.append(".")
        else:
            tokens.append(tok)
    return tokens


def split_sentences(text: str) -> list[str]:
    """Split on terminal punctuation (. ! ?) that does not end an abbreviation."""
    text = text.strip()
    if not text:
        return []
    out = []
    start = 0
    for m in re.finditer(r"[.!?]+(?=\s|$)", text):
        end = m.end()
        if text[m.start()] == ".":
            word = text[start:end].split()[-1].lower()
            if word in ABBREVIATIONS:
                continue
        chunk = text[start:end].strip()
        if chunk:
            out.append(chunk)
        start = end
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


class Gazetteer:
    """Surface form -> (canonical_id, entity_type) table with longest-match lookup."""

    def __init__(self, case_sensitive: bool = True, types: Iterable[str] = DEFAULT_TYPES):
        self.case_sensitive = case_sensitive
        self.types = frozenset(types)
        self.entries: dict[tuple[str, ...], tuple[str, str]] = {}
        self.id_types: dict[str, str] = {}
        self._max_len = 0

    def _key(self, tokens: Iterable[str]) -> tuple[str, ...]:
        if self.case_sensitive:
            return tuple(tokens)
        return tuple(t.casefold() for t in tokens)

    def add(self, surface: str, entity_type: str, canonical_id: str) -> None:
        key = self._key(tokenize(surface))
        if not key:
            raise GazetteerError("empty surface form")
        if entity_type not in self.types:
            raise GazetteerError(f"unknown entity type {entity_type!r} for {surface!r}")
        known = self.id_types.get(canonical_id)
        if known is not None and known != entity_type:
            raise GazetteerError(
                f"canonical id {canonical_id!r} has types {known} and {entity_type}")
        self.id_types[canonical_id] = entity_type
        self.entries[key] = (canonical_id, entity_type)
        self._max_len = max(self._max_len, len(key))

    def __len__(self) -> int:
        return len(self.entries)

    def type_of(self, canonical_id: str) -> str | None:
        return self.id_types.get(canonical_id)

    def find(self, tokens: list[str] | tuple[str, ...]) -> list[EntityMention]:
        """Longest-match, left-to-right, non-overlapping scan."""
        keys = self._key(tokens)
        found = []
        i, n = 0, len(keys)
        while i < n:
            hit = None
            for size in range(min(self._max_len, n - i), 0, -1):
                entry = self.entries.get(keys[i:i + size])
                if entry is not None:
                    hit = (size, entry)
                    break
            if hit is None:
                i += 1
                continue
            size, (cid, etype) = hit
            found.append(EntityMention(" ".join(tokens[i:i + size]), etype, i, i + size, cid))
            i += size
        return found

    @classmethod
    def load(cls, path, case_sensitive: bool = True,
             types: Iterable[str] = DEFAULT_TYPES) -> "Gazetteer":
        gaz = cls(case_sensitive=case_sensitive, types=types)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise GazetteerError(f"{path}:{lineno}: expected 3 tab-separated fields")
                surface, etype, cid = (p.strip() for p in parts)
                try:
                    gaz.add(surface, etype, cid)
                except GazetteerError as exc:
                    raise GazetteerError(f"{path}:{lineno}: {exc}") from None
        return gaz


def parse_day(value) -> dt.date:
    """Parse the ISO-8601 date prefix of a timestamp."""
    if not isinstance(value, str) or len(value) < 10:
        raise ValueError(f"unparseable timestamp {value!r}")
    return dt.date.fromisoformat(value[:10])


def ingest_documents(lines: Iterable[str],
                     diagnostics: list[Diagnostic] | None = None) -> list[Document]:
    """Parse JSON-lines records into documents.

    Malformed records are skipped; each rejection is appended to
    ``diagnostics`` (and logged) with its 1-based line number. The first
    occurrence of a duplicated id wins.
    """
    if diagnostics is None:
        diagnostics = []
    docs: list[Document] = []
    seen: set[str] = set()

    def reject(lineno, msg):
        diag = Diagnostic(lineno, msg)
        diagnostics.append(diag)
        logger.warning("rejected record at %s", diag)

    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            reject(lineno, f"invalid JSON ({exc.msg})")
            continue
        if not isinstance(rec, dict):
            reject(lineno, "record is not an object")
            continue
        missing = [k for k in _REQUIRED if k not in rec]
        if missing:
            reject(lineno, f"missing field(s) {', '.join(missing)}")
            continue
        doc_id = str(rec["id"])
        if not doc_id:
            reject(lineno, "empty id")
            continue
        try:
            day = parse_day(rec["timestamp"])
        except ValueError:
            reject(lineno, f"invalid timestamp {rec['timestamp']!r}")
            continue
        if doc_id in seen:
            reject(lineno, f"duplicate id {doc_id!r}")
            continue
        seen.add(doc_id)
        docs.append(Document(doc_id, str(rec["source"]), str(rec["title"] or ""),
                             str(rec["body"] or ""), day))
    return docs


def annotate_sentences(doc: Document, gaz: Gazetteer) -> list[Sentence]:
    if not len(gaz):
        raise GazetteerError("gazetteer is empty")
    out = []
    for part in (doc.title, doc.body):
        for text in split_sentences(part):
            tokens = tokenize(text)
            if not tokens:
                continue
            out.append(Sentence(doc.id, len(out), text, tuple(tokens),
                                tuple(gaz.find(tokens)), doc.date))
    return out


def _annotate_chunk(args):
    docs, gaz = args
    return [s for d in docs for s in annotate_sentences(d, gaz)]


def annotate_corpus(docs: list[Document], gaz: Gazetteer, threads: int = 1) -> list[Sentence]:
    """Annotate every document; output order follows the document order."""
    if threads <= 1 or len(docs) < 1000:
        return [s for d in docs for s in annotate_sentences(d, gaz)]
    from concurrent.futures import ProcessPoolExecutor

    size = -(-len(docs) // threads)
    chunks = [(docs[i:i + size], gaz) for i in range(0, len(docs), size)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_annotate_chunk, chunks))
    return [s for part in parts for s in part]


def iter_sentences(path) -> Iterator[Sentence]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            yield Sentence.from_json(json.loads(line))
