"""Flat key = value pipeline configuration."""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import os
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _strs(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _thresholds(text: str) -> dict[str, float]:
    out = {}
    for part in _strs(text):
        name, _, value = part.partition(":")
        if not value:
            raise ValueError(f"expected relation:value, got {part!r}")
        out[name.strip()] = float(value)
    return out


@dataclass
class PipelineConfig:
    # paths; an empty corpus means "use the synthetic corpus of this run"
    corpus: str = ""
    gazetteer: str = ""
    rules: str = ""
    labels: str = ""
    oracle: str = ""
    out: str = "timeds-out"

    seed: int = 0
    threads: int = 1

    # corpus / rules
    case_sensitive: bool = True
    entity_types: tuple[str, ...] = ("ORG", "PER", "LOC")
    relations: tuple[str, ...] = ("Acquisition", "Investing", "JobChange", "Lawsuit", "Partnership")
    undirected: tuple[str, ...] = ("Partnership",)

    # knowledge / popularity / alignment
    tau_c: float = 0.25
    window: int = 3
    holdout_fraction: float = 0.2
    test_thresholds: dict = field(default_factory=lambda: {"Investing": 0.2, "default": 0.7})
    negative_reserve_fraction: float = 0.5
    negative_ratio: int = 1
    strict_types: bool = False
    folds: int = 10

    # strategies
    filter_thresholds: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    curriculum: tuple[float, ...] = (0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0)

    # classifier
    train_mode: str = "both"
    epochs: int = 3
    lr: float = 0.2
    lr_decay: float = 0.2
    l2: float = 1e-4
    batch_size: int = 16

    # synthetic corpus
    synth_instances: int = 20
    synth_sentences: int = 50_000
    synth_peak: float = 60.0
    synth_decay: float = 0.5
    synth_leak: float = 0.1
    synth_distractor_rate: float = 0.3
    synth_pattern_probs: tuple[float, ...] = (0.12, 0.12, 0.12, 0.12, 0.12)
    synth_start: str = "2016-01-01"
    synth_end: str = "2016-08-31"

    # keys that do not change any artifact
    NON_SEMANTIC = ("out", "threads")

    def validate(self) -> None:
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(key, msg)

        need(0 <= self.tau_c, "tau_c", "must be >= 0")
        need(self.window >= 1 and self.window % 2 == 1, "window", "must be an odd positive integer")
        need(0 < self.holdout_fraction < 1, "holdout_fraction", "must lie in (0, 1)")
        need(0 <= self.negative_reserve_fraction <= 1, "negative_reserve_fraction",
             "must lie in [0, 1]")
        need(self.negative_ratio >= 0, "negative_ratio", "must be >= 0")
        need(self.folds >= 2, "folds", "must be >= 2")
        need(self.threads >= 1, "threads", "must be >= 1")
        need(all(t >= 0 for t in self.filter_thresholds), "filter_thresholds", "must be >= 0")
        need(len(self.curriculum) > 0, "curriculum", "must not be empty")
        need(all(b < a for a, b in zip(self.curriculum, self.curriculum[1:])), "curriculum",
             "thresholds must be strictly decreasing")
        need(all(t >= 0 for t in self.curriculum), "curriculum", "must be >= 0")
        need(self.train_mode in ("oneshot", "curriculum", "both"), "train_mode",
             "must be oneshot, curriculum or both")
        need(self.epochs >= 0, "epochs", "must be >= 0")
        need(self.lr > 0, "lr", "must be > 0")
        need(self.batch_size >= 1, "batch_size", "must be >= 1")
        need(set(self.undirected) <= set(self.relations), "undirected",
             "names a relation missing from 'relations'")
        need(0 <= self.synth_distractor_rate < 1, "synth_distractor_rate", "must lie in [0, 1)")
        need(0 <= self.synth_decay < 1, "synth_decay", "must lie in [0, 1)")
        need(0 <= self.synth_leak <= 1, "synth_leak", "must lie in [0, 1]")
        need(sum(self.synth_pattern_probs) <= 1 + 1e-12, "synth_pattern_probs", "must sum to <= 1")
        for key in ("synth_start", "synth_end"):
            try:
                dt.date.fromisoformat(getattr(self, key))
            except ValueError:
                raise ConfigError(key, "must be a YYYY-MM-DD date") from None
        need(self.synth_instances >= 1, "synth_instances", "must be >= 1")

    @property
    def relation_flags(self) -> dict[str, bool]:
        return {r: r not in self.undirected for r in self.relations}

    @property
    def synthetic(self) -> bool:
        return not self.corpus

    def set(self, key: str, raw: str) -> None:
        names = {f.name: f for f in fields(self)}
        if key not in names:
            raise ConfigError(key, "unknown key")
        current = getattr(self, key)
        try:
            if isinstance(current, bool):
                value = _bool(raw)
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            elif isinstance(current, dict):
                value = _thresholds(raw)
            elif isinstance(current, tuple):
                value = _floats(raw) if current and isinstance(current[0], float) else _strs(raw)
            else:
                value = raw.strip()
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
        setattr(self, key, value)

    def items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                text = ",".join(f"{k}:{v[k]!r}" for k in sorted(v))
            elif isinstance(v, tuple):
                text = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            else:
                text = repr(v) if isinstance(v, float) else str(v)
            out.append((f.name, text))
        return out

    def digest(self) -> str:
        """Hash of every semantic parameter plus the content of each input file."""
        h = hashlib.sha256()
        for key, text in self.items():
            if key in self.NON_SEMANTIC:
                continue
            h.update(f"{key}={text}\n".encode())
            if key in ("corpus", "gazetteer", "rules", "labels", "oracle") and text:
                h.update(_file_digest(text).encode())
        return h.hexdigest()[:16]

    def dump(self, semantic_only: bool = False) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items()
                       if not (semantic_only and k in self.NON_SEMANTIC))


def _file_digest(path: str) -> str:
    if not os.path.exists(path):
        return "missing"
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_lines(lines) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(line, f"line {lineno}: expected key = value")
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(path: str | None = None, overrides=()) -> PipelineConfig:
    cfg = PipelineConfig()
    base = ""
    if path:
        base = os.path.dirname(os.path.abspath(path))
        with open(path, encoding="utf-8") as fh:
            for key, value in parse_lines(fh):
                cfg.set(key, value)
    for key, value in overrides:
        cfg.set(key, value)
    # relative data paths resolve against the config file's directory
    for key in ("corpus", "gazetteer", "rules", "labels", "oracle"):
        v = getattr(cfg, key)
        if v and base and not os.path.isabs(v) and (key, v) not in dict.fromkeys(overrides):
            setattr(cfg, key, os.path.join(base, v))
    cfg.validate()
    return cfg


def copy(cfg: PipelineConfig, **changes) -> PipelineConfig:
    return dataclasses.replace(cfg, **changes)
