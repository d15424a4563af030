"""Per-class and macro/micro scores, aggregate PR curves and fold evaluation."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .align import FoldAssignment, TestSet
from .classifier import NO_RELATION, ModelParams, predict_mentions

logger = logging.getLogger(__name__)


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


def harmonic(p: float, r: float) -> float:
    return _div(2 * p * r, p + r)


@dataclass
class ClassScore:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class EvalReport:
    per_class: dict[str, ClassScore]
    macro_p: float
    macro_r: float
    macro_f1: float
    micro_p: float = 0.0
    micro_r: float = 0.0
    micro_f1: float = 0.0
    pr_curve: list[tuple[float, float]] = field(default_factory=list)
    n: int = 0

    def row(self) -> dict[str, float]:
        return {"macro_p": self.macro_p, "macro_r": self.macro_r, "macro_f1": self.macro_f1}


def classification_report(gold: Sequence[str], pred: Sequence[str], scores: Sequence[float],
                          classes: Sequence[str], none_label: str = NO_RELATION) -> EvalReport:
    """Scores over relation classes; ``none_label`` only counts as an error source.

    Macro-F1 is the harmonic mean of macro precision and macro recall.
    """
    if len(gold) != len(pred) or len(pred) != len(scores):
        raise ValueError("gold, pred and scores must have equal length")
    relations = [c for c in classes if c != none_label]
    per = {}
    tps = fps = fns = 0
    for c in relations:
        tp = sum(1 for g, p in zip(gold, pred) if p == c and g == c)
        fp = sum(1 for g, p in zip(gold, pred) if p == c and g != c)
        fn = sum(1 for g, p in zip(gold, pred) if g == c and p != c)
        if tp + fn == 0:
            logger.warning("class %s absent from gold labels; P and R set to 0", c)
            pr, rc = 0.0, 0.0
        else:
            pr, rc = _div(tp, tp + fp), _div(tp, tp + fn)
        per[c] = ClassScore(pr, rc, harmonic(pr, rc), tp, fp, fn)
        tps, fps, fns = tps + tp, fps + fp, fns + fn
    macro_p = float(np.mean([s.precision for s in per.values()])) if per else 0.0
    macro_r = float(np.mean([s.recall for s in per.values()])) if per else 0.0
    micro_p, micro_r = _div(tps, tps + fps), _div(tps, tps + fns)
    return EvalReport(per, macro_p, macro_r, harmonic(macro_p, macro_r),
                      micro_p, micro_r, harmonic(micro_p, micro_r),
                      pr_curve(gold, pred, scores, none_label), len(gold))


def pr_curve(gold: Sequence[str], pred: Sequence[str], scores: Sequence[float],
             none_label: str = NO_RELATION) -> list[tuple[float, float]]:
    """(precision, recall) after each positive prediction, highest score first."""
    n_pos = sum(1 for g in gold if g != none_label)
    ranked = sorted((i for i, p in enumerate(pred) if p != none_label),
                    key=lambda i: (-scores[i], i))
    points = []
    correct = 0
    for k, i in enumerate(ranked, 1):
        correct += pred[i] == gold[i]
        points.append((correct / k, _div(correct, n_pos)))
    return points


def gold_labels(ts: TestSet) -> list[str]:
    return [lm.mention.instance.relation_type if lm.gold else NO_RELATION for lm in ts.mentions]


@dataclass
class FoldEvaluation:
    validation: list[EvalReport]
    test: list[EvalReport]
    overall: EvalReport  # whole test set, no fold split

    @property
    def mean_validation_f1(self) -> float:
        return mean_report(self.validation).macro_f1

    @property
    def mean_test(self) -> EvalReport:
        return mean_report(self.test)


def mean_report(reports: Sequence[EvalReport]) -> EvalReport:
    """Average per-class and macro P/R over folds; F1 re-derived from the averages."""
    if not reports:
        raise ValueError("no reports to average")
    classes = list(reports[0].per_class)
    per = {}
    for c in classes:
        p = float(np.mean([r.per_class[c].precision for r in reports]))
        rc = float(np.mean([r.per_class[c].recall for r in reports]))
        per[c] = ClassScore(p, rc, harmonic(p, rc))
    mp = float(np.mean([r.macro_p for r in reports]))
    mr = float(np.mean([r.macro_r for r in reports]))
    up = float(np.mean([r.micro_p for r in reports]))
    ur = float(np.mean([r.micro_r for r in reports]))
    return EvalReport(per, mp, mr, harmonic(mp, mr), up, ur, harmonic(up, ur), [],
                      sum(r.n for r in reports))


def evaluate(p: ModelParams, ts: TestSet, folds: FoldAssignment,
             sentences: Mapping) -> FoldEvaluation:
    """Each fold in turn is the validation set; the remaining folds are the test data."""
    gold = gold_labels(ts)
    pred, scores = predict_mentions(p, [lm.mention for lm in ts.mentions], sentences)
    scores = list(map(float, scores))
    val, test = [], []
    for f in range(folds.k):
        in_f = [i for i, x in enumerate(folds.folds) if x == f]
        out_f = [i for i, x in enumerate(folds.folds) if x != f]
        for idx, sink in ((in_f, val), (out_f, test)):
            sink.append(classification_report([gold[i] for i in idx], [pred[i] for i in idx],
                                              [scores[i] for i in idx], p.classes))
    overall = classification_report(gold, pred, scores, p.classes)
    return FoldEvaluation(val, test, overall)


def select_best(evals: Mapping[str, FoldEvaluation]) -> str:
    """Name of the model with the best mean validation macro-F1 (first wins ties)."""
    best = None
    for name, ev in evals.items():
        if best is None or ev.mean_validation_f1 > evals[best].mean_validation_f1:
            best = name
    if best is None:
        raise ValueError("no models to select from")
    return best


def write_report(path, ev: FoldEvaluation, header: str = "") -> None:
    """CSV: per-class and macro rows (mean over test folds), then the PR curve."""
    mean = ev.mean_test
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["section", "name", "precision", "recall", "f1"])
        for c, s in mean.per_class.items():
            w.writerow(["class", c, f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}"])
        w.writerow(["macro", "test_mean", f"{mean.macro_p:.6f}", f"{mean.macro_r:.6f}",
                    f"{mean.macro_f1:.6f}"])
        w.writerow(["micro", "test_mean", f"{mean.micro_p:.6f}", f"{mean.micro_r:.6f}",
                    f"{mean.micro_f1:.6f}"])
        vm = mean_report(ev.validation)
        w.writerow(["macro", "validation_mean", f"{vm.macro_p:.6f}", f"{vm.macro_r:.6f}",
                    f"{vm.macro_f1:.6f}"])
        for k, (pr, rc) in enumerate(ev.overall.pr_curve, 1):
            w.writerow(["pr", k, f"{pr:.6f}", f"{rc:.6f}", ""])
