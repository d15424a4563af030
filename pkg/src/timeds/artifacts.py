"""Reading and writing the pipeline's tab-separated artifacts.

Every artifact starts with a provenance line::

    # timeds <kind> config_hash=<hash> seed=<seed> [key=value ...]

followed by a ``#``-prefixed column header and the data rows.
"""

from __future__ import annotations

import datetime as dt
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .align import FoldAssignment, LabeledMention, TestSet, WeightedMention
from .knowledge import RelationInstance

MAGIC = "# timeds"


class ArtifactError(ValueError):
    pass


class MissingArtifact(ArtifactError):
    def __init__(self, path, stage: str):
        super().__init__(f"missing artifact {path}; run `timeds {stage}` first")
        self.path = path
        self.stage = stage


@dataclass
class Provenance:
    kind: str
    config_hash: str
    seed: int
    extra: dict[str, str] = field(default_factory=dict)

    def line(self) -> str:
        parts = [MAGIC, self.kind, f"config_hash={self.config_hash}", f"seed={self.seed}"]
        parts += [f"{k}={v}" for k, v in self.extra.items()]
        return " ".join(parts)

    @classmethod
    def parse(cls, line: str, path="") -> "Provenance":
        if not line.startswith(MAGIC + " "):
            raise ArtifactError(f"{path}: missing provenance header")
        tokens = line[len(MAGIC):].split()
        kind, pairs = tokens[0], dict(t.split("=", 1) for t in tokens[1:] if "=" in t)
        try:
            h, seed = pairs.pop("config_hash"), int(pairs.pop("seed"))
        except (KeyError, ValueError):
            raise ArtifactError(f"{path}: malformed provenance header") from None
        return cls(kind, h, seed, pairs)


def atomic_write(path, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path, prov: Provenance, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [prov.line(), "# " + "\t".join(columns)]
    lines += ["\t".join(str(x) for x in r) for r in rows]
    atomic_write(path, "\n".join(lines) + "\n")


def read_provenance(path, stage: str = "") -> Provenance:
    if not os.path.exists(path):
        raise MissingArtifact(path, stage or "pipeline")
    with open(path, encoding="utf-8") as fh:
        return Provenance.parse(fh.readline().rstrip("\n"), path)


def read_table(path, stage: str, kind: str | None = None) -> tuple[Provenance, list[list[str]]]:
    """Provenance and data rows of a table; a missing file names ``stage``."""
    prov = read_provenance(path, stage)
    if kind is not None and prov.kind != kind:
        raise ArtifactError(f"{path}: expected a {kind} artifact, found {prov.kind}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            rows.append(line.rstrip("\n").split("\t"))
    return prov, rows


# -- manifests -----------------------------------------------------------------

MANIFEST_COLUMNS = ("relation", "head_id", "tail_id", "doc_id", "index", "date", "weight",
                    "polarity", "provenance", "directed")


def _mention_row(m: WeightedMention) -> list:
    i = m.instance
    return [i.relation_type, i.head_id, i.tail_id, m.sentence_ref[0], m.sentence_ref[1],
            m.date.isoformat(), f"{m.weight:.6f}", m.polarity, m.provenance, int(i.directed)]


def _mention_from(row: Sequence[str]) -> WeightedMention:
    rel, h, t, doc, idx, day, w, pol, prov, directed = row[:10]
    inst = RelationInstance(rel, h, t, directed == "1")
    return WeightedMention(inst, (doc, int(idx)), dt.date.fromisoformat(day), float(w), pol, prov)


def write_manifest(path, prov: Provenance, ds: Sequence[WeightedMention]) -> None:
    write_table(path, prov, MANIFEST_COLUMNS, (_mention_row(m) for m in ds))


def read_manifest(path, stage: str) -> tuple[Provenance, list[WeightedMention]]:
    prov, rows = read_table(path, stage)
    try:
        return prov, [_mention_from(r) for r in rows]
    except (ValueError, IndexError) as exc:
        raise ArtifactError(f"{path}: malformed manifest row ({exc})") from None


def write_test_set(path, prov: Provenance, ts: TestSet, folds: FoldAssignment) -> None:
    rows = (_mention_row(lm.mention) + [int(lm.gold), f]
            for lm, f in zip(ts.mentions, folds.folds))
    write_table(path, prov, MANIFEST_COLUMNS + ("gold", "fold"), rows)


def read_test_set(path, stage: str) -> tuple[Provenance, TestSet, FoldAssignment]:
    prov, rows = read_table(path, stage, "testset")
    try:
        mentions = [LabeledMention(_mention_from(r), r[10] == "1") for r in rows]
        folds = tuple(int(r[11]) for r in rows)
        k = int(prov.extra["folds"])
    except (ValueError, IndexError, KeyError) as exc:
        raise ArtifactError(f"{path}: malformed test set ({exc})") from None
    return prov, TestSet(mentions), FoldAssignment(k, folds)
