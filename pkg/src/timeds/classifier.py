"""Sparse multinomial logistic regression for relation classification.

Trained with seeded mini-batch SGD.  Mention weights never enter the loss;
they only decide which mentions are in a training set.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .align import POSITIVE, WeightedMention
from .corpus import EntityMention, Sentence

logger = logging.getLogger(__name__)

NO_RELATION = "NO_RELATION"
CHECKPOINT_FORMAT = "timeds-checkpoint"
CHECKPOINT_VERSION = 1
CONTEXT = 2


class FeatureError(ValueError):
    pass


class TrainError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 3
    lr: float = 0.2
    lr_decay: float = 0.2
    l2: float = 1e-4
    batch_size: int = 16
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise TrainError("epochs must be >= 0")
        if self.lr <= 0:
            raise TrainError("learning rate must be > 0")
        if self.batch_size < 1:
            raise TrainError("batch_size must be >= 1")


@dataclass
class ModelParams:
    classes: tuple[str, ...]
    vocab: dict[str, int]
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)
    meta: dict = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return ModelParams(self.classes, dict(self.vocab), self.weights.copy(),
                           self.bias.copy(), dict(self.meta))

    def equals(self, other: "ModelParams") -> bool:
        return (self.classes == other.classes and self.vocab == other.vocab
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.bias, other.bias))

    @classmethod
    def zeros(cls, classes: Sequence[str], vocab: Mapping[str, int] | None = None) -> "ModelParams":
        vocab = dict(vocab or {})
        return cls(tuple(classes), vocab, np.zeros((len(classes), len(vocab))),
                   np.zeros(len(classes)))

    def save(self, path, header: Mapping | None = None) -> None:
        inv = sorted(self.vocab, key=self.vocab.get)
        doc = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            **dict(header or {}),
            "classes": list(self.classes),
            "vocab": inv,
            "bias": self.bias.tolist(),
            "weights": self.weights.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ModelParams":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
            raise TrainError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
        classes = tuple(doc["classes"])
        vocab = {f: i for i, f in enumerate(doc["vocab"])}
        weights = np.array(doc["weights"], dtype=np.float64).reshape(len(classes), len(vocab))
        meta = {k: v for k, v in doc.items()
                if k not in ("classes", "vocab", "bias", "weights")}
        return cls(classes, vocab, weights, np.array(doc["bias"], dtype=np.float64), meta)


# -- features -----------------------------------------------------------------

def _distance_bucket(n: int) -> str:
    if n == 0:
        return "0"
    if n <= 2:
        return "1-2"
    if n <= 5:
        return "3-5"
    if n <= 10:
        return "6-10"
    return "11+"


def _locate(s: Sentence, head_id: str, tail_id: str) -> tuple[EntityMention, EntityMention]:
    heads = [m for m in s.mentions if m.canonical_id == head_id]
    tails = [m for m in s.mentions if m.canonical_id == tail_id]
    if not heads or not tails:
        raise FeatureError(f"sentence {s.ref} lacks mentions of {head_id!r} and {tail_id!r}")
    # closest pair; ties resolved leftmost
    return min(((h, t) for h in heads for t in tails),
               key=lambda p: (abs(p[0].start - p[1].start), min(p[0].start, p[1].start)))


def featurize(m: WeightedMention, s: Sentence) -> dict[str, float]:
    """Sparse lexical features for the (head, tail) pair of ``m`` in ``s``.

    Between-entity words (other entities collapsed to a type placeholder)
    and their bigrams, up to two words of outer context on each side, the
    entity types, the argument order and a distance bucket.
    """
    head, tail = _locate(s, m.instance.head_id, m.instance.tail_id)
    first, second = (head, tail) if head.start <= tail.start else (tail, head)
    toks = [t.lower() for t in s.tokens]

    between = []
    i = first.end
    inner = sorted((x for x in s.mentions if first.end <= x.start and x.end <= second.start),
                   key=lambda x: x.start)
    for x in inner:
        between.extend(toks[i:x.start])
        between.append(f"<{x.entity_type}>")
        i = x.end
    between.extend(toks[i:second.start])

    f: dict[str, float] = {}

    def add(name):
        f[name] = f.get(name, 0.0) + 1.0

    for w in between:
        add("b:" + w)
    for a, b in zip(between, between[1:]):
        add(f"bb:{a}_{b}")
    for k in range(1, CONTEXT + 1):
        if first.start - k >= 0:
            add(f"l{k}:{toks[first.start - k]}")
        if second.end + k - 1 < len(toks):
            add(f"r{k}:{toks[second.end + k - 1]}")
    add("ht:" + head.entity_type)
    add("tt:" + tail.entity_type)
    add(f"tp:{head.entity_type}_{tail.entity_type}")
    add("ord:" + ("head_first" if head is first else "tail_first"))
    add("dist:" + _distance_bucket(len(between)))
    return f


def label_of(m: WeightedMention) -> str:
    return m.instance.relation_type if m.polarity == POSITIVE else NO_RELATION


def vectorize(feats: Sequence[Mapping[str, float]], vocab: Mapping[str, int]) -> sp.csr_matrix:
    """CSR matrix over ``vocab``; unknown features are dropped."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for f in feats:
        cols = sorted((vocab[k], v) for k, v in f.items() if k in vocab)
        indices.extend(c for c, _ in cols)
        data.extend(v for _, v in cols)
        indptr.append(len(indices))
    return sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64),
                          np.array(indptr, dtype=np.int64)), shape=(len(feats), len(vocab)))


def extend_vocab(vocab: Mapping[str, int], feats: Sequence[Mapping[str, float]]) -> dict[str, int]:
    """Existing ids kept; unseen features appended in sorted order."""
    out = dict(vocab)
    new = sorted({k for f in feats for k in f if k not in out})
    for k in new:
        out[k] = len(out)
    return out


# -- objective ----------------------------------------------------------------

def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def objective(W: np.ndarray, b: np.ndarray, X, y: np.ndarray, l2: float) -> float:
    """Mean cross-entropy plus (l2/2)·||W||²; the bias is not regularized."""
    z = np.asarray(X @ W.T) + b
    zmax = z.max(axis=1, keepdims=True)
    logz = (zmax + np.log(np.exp(z - zmax).sum(axis=1, keepdims=True))).ravel()
    nll = logz - z[np.arange(len(y)), y]
    return float(nll.mean() + 0.5 * l2 * np.sum(W * W))


def gradient(W: np.ndarray, b: np.ndarray, X, y: np.ndarray, l2: float):
    n = X.shape[0]
    P = softmax(np.asarray(X @ W.T) + b)
    P[np.arange(n), y] -= 1.0
    P /= n
    gW = np.asarray((X.T @ P).T) + l2 * W
    return gW, P.sum(axis=0)


# -- training -----------------------------------------------------------------

def _prepare(ds, sentences, classes, vocab):
    feats = [featurize(m, sentences[m.sentence_ref]) for m in ds]
    index = {c: i for i, c in enumerate(classes)}
    try:
        y = np.array([index[label_of(m)] for m in ds], dtype=np.int64)
    except KeyError as exc:
        raise TrainError(f"label {exc.args[0]!r} not among classes {classes}") from None
    vocab = extend_vocab(vocab, feats)
    return feats, y, vocab


def default_classes(ds: Sequence[WeightedMention]) -> tuple[str, ...]:
    return (NO_RELATION, *sorted({m.instance.relation_type for m in ds}))


def train_round(ds: Sequence[WeightedMention], sentences: Mapping[tuple[str, int], Sentence],
                cfg: TrainConfig, init: ModelParams | None = None,
                classes: Sequence[str] | None = None) -> ModelParams:
    """Minimize the regularized logistic loss by seeded mini-batch SGD.

    With ``cfg.warm_start`` optimization starts from ``init`` (its vocabulary
    is extended with any new features); otherwise from zeros.
    """
    if not ds:
        raise TrainError("empty training manifest")
    if cfg.warm_start:
        if init is None:
            raise TrainError("warm_start requires initial parameters")
        if cfg.epochs == 0:
            return init.copy()
        classes = init.classes
        base_vocab = init.vocab
    else:
        classes = tuple(classes) if classes is not None else default_classes(ds)
        base_vocab = {}

    feats, y, vocab = _prepare(ds, sentences, classes, base_vocab)
    X = vectorize(feats, vocab)
    W = np.zeros((len(classes), len(vocab)))
    b = np.zeros(len(classes))
    if cfg.warm_start:
        W[:, :init.weights.shape[1]] = init.weights
        b[:] = init.bias

    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    for epoch in range(cfg.epochs):
        lr = cfg.lr / (1.0 + cfg.lr_decay * epoch)
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            gW, gb = gradient(W, b, X[batch], y[batch], cfg.l2)
            W -= lr * gW
            b -= lr * gb
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise TrainError("training diverged (non-finite weights); lower the learning rate")
    return ModelParams(tuple(classes), vocab, W, b)


def run_curriculum(sched, sentences: Mapping[tuple[str, int], Sentence],
                   cfg: TrainConfig) -> list[ModelParams]:
    """Round 1 from scratch, each later round warm-started from the previous one.

    The learning-rate schedule restarts every round.
    """
    classes = default_classes([m for r in sched.rounds for m in r])
    out: list[ModelParams] = []
    for i, manifest in enumerate(sched.rounds):
        if i == 0:
            p = train_round(manifest, sentences, replace(cfg, warm_start=False), classes=classes)
        else:
            p = train_round(manifest, sentences, replace(cfg, warm_start=True), init=out[-1])
        out.append(p)
    return out


# -- inference ----------------------------------------------------------------

def predict_proba(p: ModelParams, X) -> np.ndarray:
    return softmax(np.asarray(X @ p.weights.T) + p.bias)


def predict(p: ModelParams, f: Mapping[str, float]) -> tuple[str, float]:
    """Arg-max class and its softmax probability; ties go to the earliest class."""
    probs = predict_proba(p, vectorize([f], p.vocab))[0]
    k = int(np.argmax(probs))
    return p.classes[k], float(probs[k])


def predict_mentions(p: ModelParams, mentions: Sequence[WeightedMention],
                     sentences: Mapping[tuple[str, int], Sentence]) -> tuple[list[str], np.ndarray]:
    if not mentions:
        return [], np.zeros(0)
    X = vectorize([featurize(m, sentences[m.sentence_ref]) for m in mentions], p.vocab)
    probs = predict_proba(p, X)
    k = probs.argmax(axis=1)
    return [p.classes[i] for i in k], probs[np.arange(len(k)), k]
