"""Pipeline stages: each reads the artifacts of earlier stages from the run
directory and writes its own.

A run directory is ``<out>/run-<config hash>``; two configs that differ in
any semantic parameter never share one.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from . import synth as synth_mod
from .align import add_negatives, align as align_mentions, build_test_set, oracle_gold, partition_folds
from .artifacts import (ArtifactError, MissingArtifact, Provenance, atomic_write, read_manifest,
                        read_provenance, read_table, read_test_set, write_manifest, write_table,
                        write_test_set)
from .classifier import ModelParams, TrainConfig, default_classes, run_curriculum, train_round
from .config import PipelineConfig
from .corpus import Diagnostic, Gazetteer, Sentence, annotate_corpus, ingest_documents
from .knowledge import InstanceEvidence, RelationInstance, build_and_split
from .metrics import FoldEvaluation, evaluate, select_best, write_report
from .popularity import PopularitySeries, TimeGrid, WindowSpec, compute_all, inspo_series
from .rules import RuleSet, load_rules
from .strategies import build_curriculum, hard_filter

logger = logging.getLogger(__name__)

STAGES = ("synth", "ingest", "knowledge", "popularity", "align", "filter", "curriculum",
          "train", "eval", "noise", "report")


class StageError(ValueError):
    pass


@dataclass
class Run:
    cfg: PipelineConfig

    def __post_init__(self):
        self.hash = self.cfg.digest()
        self.root = os.path.join(self.cfg.out, f"run-{self.hash}")

    def path(self, *parts: str) -> str:
        return os.path.join(self.root, *parts)

    def prov(self, kind: str, **extra) -> Provenance:
        return Provenance(kind, self.hash, self.cfg.seed, {k: str(v) for k, v in extra.items()})

    def check(self, prov: Provenance, path: str) -> Provenance:
        if prov.config_hash != self.hash:
            raise ArtifactError(f"{path} was produced by config {prov.config_hash}, "
                                f"not the current config {self.hash}")
        return prov

    def write_config(self) -> None:
        text = self.prov("config").line() + "\n" + self.cfg.dump(semantic_only=True)
        atomic_write(self.path("config.txt"), text)


def _theta_name(theta: float) -> str:
    return f"{theta:.2f}"


# -- inputs --------------------------------------------------------------------

def _inputs(run: Run) -> dict[str, str]:
    cfg = run.cfg
    if cfg.synthetic:
        paths = {k: run.path("synth", v) for k, v in
                 (("corpus", "corpus.jsonl"), ("gazetteer", "gazetteer.tsv"),
                  ("rules", "rules.txt"), ("oracle", "oracle.tsv"))}
        for p in paths.values():
            if not os.path.exists(p):
                raise MissingArtifact(p, "synth")
        paths["labels"] = paths["oracle"]
        return paths
    paths = {}
    for key in ("corpus", "gazetteer", "rules", "labels", "oracle"):
        value = getattr(cfg, key)
        if value and not os.path.exists(value):
            raise StageError(f"config key {key!r}: file {value} does not exist")
        paths[key] = value
    for key in ("gazetteer", "rules"):
        if not paths[key]:
            raise StageError(f"config key {key!r}: required when 'corpus' is set")
    if not paths["labels"]:
        paths["labels"] = paths["oracle"]
    return paths


def _rules(run: Run) -> RuleSet:
    return RuleSet(load_rules(_inputs(run)["rules"], run.cfg.relation_flags, run.cfg.entity_types))


def _read_oracle(path) -> dict[tuple, bool]:
    return synth_mod.read_oracle(path)


# -- synth ---------------------------------------------------------------------

def synth_config(cfg: PipelineConfig) -> synth_mod.SynthConfig:
    relations = {}
    for rel in cfg.relations:
        if rel not in synth_mod.RELATION_TYPES:
            raise StageError(f"config key 'relations': no synthetic templates for {rel!r}")
        ht, tt, _ = synth_mod.RELATION_TYPES[rel]
        relations[rel] = (ht, tt, rel not in cfg.undirected)
    return synth_mod.SynthConfig(
        n_instances=cfg.synth_instances, relations=relations,
        start=dt.date.fromisoformat(cfg.synth_start), end=dt.date.fromisoformat(cfg.synth_end),
        peak_height=cfg.synth_peak, decay=cfg.synth_decay, leak=cfg.synth_leak,
        pattern_probs=tuple(cfg.synth_pattern_probs), distractor_rate=cfg.synth_distractor_rate,
        n_sentences=cfg.synth_sentences, seed=cfg.seed)


def _stamp(path: str, prov: Provenance) -> None:
    with open(path, encoding="utf-8") as fh:
        body = fh.read()
    atomic_write(path, prov.line() + "\n" + body)


def run_synth(run: Run) -> dict[str, str]:
    if not run.cfg.synthetic:
        raise StageError("config key 'corpus': synth only runs when no corpus is configured")
    try:
        corpus = synth_mod.generate_corpus(synth_config(run.cfg))
    except synth_mod.SynthError as exc:
        raise StageError(f"synth: {exc}") from None
    paths = corpus.write(run.path("synth"))
    for kind, p in paths.items():
        _stamp(p, run.prov(f"synth-{kind}"))
    logger.info("synth: %d documents, %d oracle labels", len(corpus.records), len(corpus.labels))
    return paths


# -- ingest --------------------------------------------------------------------

def run_ingest(run: Run) -> list[Sentence]:
    cfg = run.cfg
    paths = _inputs(run)
    gaz = Gazetteer.load(paths["gazetteer"], cfg.case_sensitive, cfg.entity_types)
    diags: list[Diagnostic] = []
    with open(paths["corpus"], encoding="utf-8") as fh:
        docs = ingest_documents(fh, diags)
    if not docs:
        raise StageError(f"ingest: no valid documents in {paths['corpus']}")
    sents = annotate_corpus(docs, gaz, cfg.threads)
    days = [d.date for d in docs]
    prov = run.prov("sentences", grid_start=min(days).isoformat(), grid_end=max(days).isoformat(),
                    documents=len(docs))
    lines = [prov.line()] + [json.dumps(s.to_json(), sort_keys=True) for s in sents]
    atomic_write(run.path("sentences.jsonl"), "\n".join(lines) + "\n")
    write_table(run.path("ingest_diagnostics.tsv"), run.prov("diagnostics"),
                ("line", "message"), ((d.line, d.message) for d in diags))
    logger.info("ingest: %d documents, %d sentences, %d rejected records",
                len(docs), len(sents), len(diags))
    return sents


def load_sentences(run: Run) -> tuple[Provenance, list[Sentence]]:
    path = run.path("sentences.jsonl")
    prov = run.check(read_provenance(path, "ingest"), path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            out.append(Sentence.from_json(json.loads(line)))
    return prov, out


def _grid(prov: Provenance) -> TimeGrid:
    return TimeGrid(dt.date.fromisoformat(prov.extra["grid_start"]),
                    dt.date.fromisoformat(prov.extra["grid_end"]))


# -- knowledge -----------------------------------------------------------------

def run_knowledge(run: Run):
    cfg = run.cfg
    _, sents = load_sentences(run)
    rs = _rules(run)
    matches = [m for s in sents for m in rs.match(s)]
    evidence: dict[RelationInstance, InstanceEvidence] = {}
    rows = []
    for m in matches:
        inst = RelationInstance.make(m.relation_type, m.head.canonical_id, m.tail.canonical_id,
                                     m.directed)
        evidence.setdefault(inst, InstanceEvidence(inst)).add(m)
        rows.append((inst.relation_type, inst.head_id, inst.tail_id, int(inst.directed),
                     m.sentence_ref[0], m.sentence_ref[1], m.date.isoformat(), m.rule_id))
    write_table(run.path("matches.tsv"), run.prov("matches"),
                ("relation", "head_id", "tail_id", "directed", "doc_id", "index", "date", "rule_id"),
                rows)
    train, test, kn = build_and_split(evidence, cfg.tau_c, cfg.holdout_fraction, cfg.seed)
    split = {i: "train" for i in train} | {i: "test" for i in test}
    krows = []
    for inst, conf in kn.instances:
        ev = evidence[inst]
        krows.append((inst.relation_type, inst.head_id, inst.tail_id, f"{conf:.6f}",
                      len(ev.matched_rule_ids), ev.n_sentences, split[inst], int(inst.directed)))
    write_table(run.path("knowledge.tsv"), run.prov("knowledge", z_rule=kn.z_rule, z_m=kn.z_m),
                ("relation", "head_id", "tail_id", "confidence", "rules", "mentions", "split",
                 "directed"), krows)
    logger.info("knowledge: %d rule matches, %d candidate instances, %d kept (%d train / %d test)",
                len(matches), len(evidence), len(kn.instances), len(train), len(test))
    return train, test, kn


def load_knowledge(run: Run) -> dict[str, list[RelationInstance]]:
    path = run.path("knowledge.tsv")
    prov, rows = read_table(path, "knowledge", "knowledge")
    run.check(prov, path)
    out: dict[str, list[RelationInstance]] = {"train": [], "test": []}
    for r in rows:
        out[r[6]].append(RelationInstance(r[0], r[1], r[2], r[7] == "1"))
    return out


def load_match_dates(run: Run) -> dict[RelationInstance, list[dt.date]]:
    """Dates of rule-matched mentions, one per distinct sentence."""
    path = run.path("matches.tsv")
    prov, rows = read_table(path, "knowledge", "matches")
    run.check(prov, path)
    seen: dict[RelationInstance, dict[tuple, dt.date]] = {}
    for r in rows:
        inst = RelationInstance(r[0], r[1], r[2], r[3] == "1")
        seen.setdefault(inst, {})[(r[4], int(r[5]))] = dt.date.fromisoformat(r[6])
    return {i: list(refs.values()) for i, refs in seen.items()}


# -- popularity ----------------------------------------------------------------

class _Dates:
    """Adapter giving compute_all the ``dates``/``matched_mentions`` it reads."""

    def __init__(self, dates):
        self.dates = dates
        self.matched_mentions = dates


def run_popularity(run: Run) -> dict[RelationInstance, PopularitySeries]:
    sprov = run.check(read_provenance(run.path("sentences.jsonl"), "ingest"), "sentences.jsonl")
    grid = _grid(sprov)
    w = WindowSpec(run.cfg.window)
    kn = load_knowledge(run)
    dates = load_match_dates(run)
    series = compute_all({i: _Dates(d) for i, d in dates.items()}, grid, w,
                         kn["train"] + kn["test"])
    rows = []
    for inst, s in series.items():
        for day, c, v in zip(grid.days(), s.counts, s.inspo):
            rows.append((inst.relation_type, inst.head_id, inst.tail_id, day.isoformat(),
                         int(c), f"{v:.6f}", int(inst.directed)))
    write_table(run.path("series.tsv"),
                run.prov("series", window=w.length, grid_start=grid.start, grid_end=grid.end),
                ("relation", "head_id", "tail_id", "date", "windowed_count", "inspo", "directed"),
                rows)
    logger.info("popularity: %d series over %d days", len(series), grid.n)
    return series


def load_series(run: Run) -> dict[RelationInstance, PopularitySeries]:
    """Series rebuilt from the stored integer counts, so weights are exact."""
    path = run.path("series.tsv")
    prov, rows = read_table(path, "popularity", "series")
    run.check(prov, path)
    grid = TimeGrid(dt.date.fromisoformat(prov.extra["grid_start"]),
                    dt.date.fromisoformat(prov.extra["grid_end"]))
    w = WindowSpec(int(prov.extra["window"]))
    counts: dict[RelationInstance, list[int]] = {}
    for r in rows:
        counts.setdefault(RelationInstance(r[0], r[1], r[2], r[6] == "1"), []).append(int(r[4]))
    out = {}
    for inst, c in counts.items():
        arr = np.asarray(c, dtype=np.int64)
        if len(arr) != grid.n:
            raise ArtifactError(f"{path}: series for {inst.key} has {len(arr)} days, "
                                f"grid has {grid.n}")
        omega, values = inspo_series(arr, w)
        out[inst] = PopularitySeries(inst, grid, w, arr, omega, values)
    return out


# -- align ---------------------------------------------------------------------

def run_align(run: Run):
    cfg = run.cfg
    paths = _inputs(run)
    if not paths.get("labels"):
        raise StageError("config key 'labels': align needs gold labels for the test set")
    _, sents = load_sentences(run)
    series = load_series(run)
    kn = load_knowledge(run)
    rs = _rules(run)
    knowledge_keys = {i.key for i in kn["train"] + kn["test"]}
    smap = {s.ref: s for s in sents}
    pos = align_mentions(kn["train"], sents, series, rs.slot_types)
    ds = add_negatives(pos, smap, cfg.seed, knowledge_keys, cfg.negative_ratio, cfg.strict_types)
    write_manifest(run.path("manifest.tsv"), run.prov("manifest"), ds)
    gold = _read_oracle(paths["labels"])
    ts = build_test_set(kn["test"], sents, series, cfg.test_thresholds,
                        cfg.negative_reserve_fraction, oracle_gold(gold), cfg.seed, rs.slot_types)
    folds = partition_folds(ts, cfg.folds, cfg.seed)
    write_test_set(run.path("testset.tsv"), run.prov("testset", folds=cfg.folds), ts, folds)
    logger.info("align: %d positives, %d training mentions, %d test mentions",
                len(pos), len(ds), len(ts))
    return ds, ts, folds


def load_training_manifest(run: Run):
    path = run.path("manifest.tsv")
    prov, ds = read_manifest(path, "align")
    run.check(prov, path)
    return ds


# -- strategies ----------------------------------------------------------------

def run_filter(run: Run, thetas=None) -> dict[float, list]:
    ds = load_training_manifest(run)
    out = {}
    for theta in (run.cfg.filter_thresholds if thetas is None else thetas):
        subset = hard_filter(ds, theta)
        write_manifest(run.path("filter", f"theta-{_theta_name(theta)}.tsv"),
                       run.prov("manifest", theta=_theta_name(theta)), subset)
        out[theta] = subset
        logger.info("filter: theta=%s keeps %d of %d mentions", _theta_name(theta),
                    len(subset), len(ds))
    return out


def filter_sets(run: Run) -> list[tuple[float, str]]:
    """(theta, path) of every filtered manifest written so far, by theta."""
    d = run.path("filter")
    names = sorted(f for f in os.listdir(d) if f.startswith("theta-") and f.endswith(".tsv")) \
        if os.path.isdir(d) else []
    if not names:
        raise MissingArtifact(os.path.join(d, "theta-*.tsv"), "filter")
    return sorted((float(n[6:-4]), os.path.join(d, n)) for n in names)


def run_curriculum_stage(run: Run):
    ds = load_training_manifest(run)
    sched = build_curriculum(ds, run.cfg.curriculum, run.cfg.seed)
    rows = []
    for i, (theta, seed, rnd) in enumerate(zip(sched.thresholds, sched.seeds, sched.rounds), 1):
        name = f"round-{i:02d}.tsv"
        write_manifest(run.path("curriculum", name),
                       run.prov("manifest", round=i, theta=_theta_name(theta)), rnd)
        rows.append((i, _theta_name(theta), seed, len(rnd), name))
    write_table(run.path("curriculum", "schedule.tsv"),
                run.prov("schedule", thresholds=",".join(_theta_name(t) for t in sched.thresholds)),
                ("round", "theta", "seed", "size", "manifest"), rows)
    logger.info("curriculum: %d rounds, sizes %s", len(sched), [len(r) for r in sched.rounds])
    return sched


def load_schedule(run: Run):
    from .strategies import CurriculumSchedule

    path = run.path("curriculum", "schedule.tsv")
    prov, rows = read_table(path, "curriculum", "schedule")
    run.check(prov, path)
    rounds = []
    for r in rows:
        mpath = run.path("curriculum", r[4])
        mprov, ds = read_manifest(mpath, "curriculum")
        run.check(mprov, mpath)
        rounds.append(ds)
    return CurriculumSchedule(tuple(float(r[1]) for r in rows), rounds,
                              tuple(int(r[2]) for r in rows))


# -- train ---------------------------------------------------------------------

def train_config(cfg: PipelineConfig) -> TrainConfig:
    return TrainConfig(epochs=cfg.epochs, lr=cfg.lr, lr_decay=cfg.lr_decay, l2=cfg.l2,
                       batch_size=cfg.batch_size, seed=cfg.seed)


def _model_header(run: Run, name: str) -> dict:
    os.makedirs(run.path("models"), exist_ok=True)
    return {"config_hash": run.hash, "seed": run.cfg.seed, "model": name}


def run_train(run: Run, mode: str | None = None) -> dict[str, ModelParams]:
    cfg = run.cfg
    mode = mode or cfg.train_mode
    tcfg = train_config(cfg)
    _, sents = load_sentences(run)
    smap = {s.ref: s for s in sents}
    classes = default_classes(load_training_manifest(run))
    models = {}
    if mode in ("oneshot", "both"):
        for theta, path in filter_sets(run):
            prov, ds = read_manifest(path, "filter")
            run.check(prov, path)
            name = f"hf-{_theta_name(theta)}"
            p = train_round(ds, smap, tcfg, classes=classes)
            p.save(run.path("models", name + ".json"), _model_header(run, name))
            models[name] = p
    if mode in ("curriculum", "both"):
        sched = load_schedule(run)
        for i, p in enumerate(run_curriculum(sched, smap, tcfg), 1):
            name = f"cl-round-{i:02d}"
            p.save(run.path("models", name + ".json"), _model_header(run, name))
            models[name] = p
    logger.info("train: %d checkpoints (%s)", len(models), mode)
    return models


def _list_models(run: Run) -> list[str]:
    d = run.path("models")
    names = sorted(f[:-5] for f in os.listdir(d) if f.endswith(".json")) if os.path.isdir(d) else []
    if not names:
        raise MissingArtifact(d, "train")
    return names


# -- eval ----------------------------------------------------------------------

SUMMARY_COLUMNS = ("model", "family", "setting", "val_macro_f1", "test_macro_p", "test_macro_r",
                   "test_macro_f1", "train_size")


def run_eval(run: Run) -> dict[str, FoldEvaluation]:
    path = run.path("testset.tsv")
    prov, ts, folds = read_test_set(path, "align")
    run.check(prov, path)
    _, sents = load_sentences(run)
    smap = {s.ref: s for s in sents}
    evals: dict[str, FoldEvaluation] = {}
    os.makedirs(run.path("reports"), exist_ok=True)
    for name in _list_models(run):
        p = ModelParams.load(run.path("models", name + ".json"))
        if p.meta.get("config_hash") != run.hash:
            raise ArtifactError(f"checkpoint {name} was produced by config "
                                f"{p.meta.get('config_hash')}, not {run.hash}")
        ev = evaluate(p, ts, folds, smap)
        write_report(run.path("reports", name + ".csv"), ev, run.prov("report", model=name).line())
        evals[name] = ev
    rows = [_summary_row(run, name, ev) for name, ev in evals.items()]
    extra = {}
    for family in ("hf", "cl"):
        members = {n: e for n, e in evals.items() if n.startswith(family + "-")}
        if members:
            extra[f"best_{family}"] = select_best(members)
    _write_csv(run.path("reports", "summary.csv"), run.prov("summary", **extra),
               SUMMARY_COLUMNS, rows)
    for k, v in extra.items():
        logger.info("eval: %s = %s (test macro-F1 %.4f)", k, v, evals[v].mean_test.macro_f1)
    return evals


def _summary_row(run: Run, name: str, ev: FoldEvaluation) -> list:
    family, _, setting = name.partition("-")
    if family == "hf":
        size_path = run.path("filter", f"theta-{setting}.tsv")
    else:
        size_path = run.path("curriculum", f"round-{setting.split('-')[-1]}.tsv")
    size = len(read_manifest(size_path, "filter")[1]) if os.path.exists(size_path) else ""
    m = ev.mean_test
    return [name, family, setting, f"{ev.mean_validation_f1:.6f}", f"{m.macro_p:.6f}",
            f"{m.macro_r:.6f}", f"{m.macro_f1:.6f}", size]


def _write_csv(path, prov: Provenance, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(prov.line() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    atomic_write(path, buf.getvalue())


def read_csv(path, stage: str) -> tuple[Provenance, list[dict]]:
    prov = read_provenance(path, stage)
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        return prov, list(csv.DictReader(fh))


# -- noise ---------------------------------------------------------------------

def run_noise(run: Run) -> dict[float, float]:
    paths = _inputs(run)
    if not paths.get("oracle"):
        raise StageError("config key 'oracle': noise ratios need oracle labels")
    labels = _read_oracle(paths["oracle"])
    out, rows = {}, []
    for theta, path in filter_sets(run):
        prov, ds = read_manifest(path, "filter")
        run.check(prov, path)
        try:
            ratio = synth_mod.noise_ratio(ds, labels)
        except synth_mod.SynthError as exc:
            raise StageError(f"noise: {exc}") from None
        n_pos = sum(1 for m in ds if m.polarity == "positive")
        out[theta] = ratio
        rows.append([_theta_name(theta), len(ds), n_pos, f"{ratio:.6f}"])
    _write_csv(run.path("noise.csv"), run.prov("noise"),
               ("theta", "size", "positives", "noise_ratio"), rows)
    return out


# -- report --------------------------------------------------------------------

def run_report(run: Run) -> dict[str, str]:
    """Consolidated tables; refuses to combine artifacts from different configs."""
    cfg = run.cfg
    sources: dict[str, Provenance] = {}
    kprov, krows = read_table(run.path("knowledge.tsv"), "knowledge", "knowledge")
    sources["knowledge.tsv"] = kprov
    tprov, ts, _ = read_test_set(run.path("testset.tsv"), "align")
    sources["testset.tsv"] = tprov
    filters = {}
    for theta, path in filter_sets(run):
        fprov, ds = read_manifest(path, "filter")
        sources["filter/" + os.path.basename(path)] = fprov
        filters[theta] = ds
    thetas = sorted(filters)
    sprov, summary = read_csv(run.path("reports", "summary.csv"), "eval")
    sources["reports/summary.csv"] = sprov
    noise = None
    if os.path.exists(run.path("noise.csv")):
        nprov, noise = read_csv(run.path("noise.csv"), "noise")
        sources["noise.csv"] = nprov
    hashes = {p.config_hash for p in sources.values()}
    if len(hashes) > 1 or hashes != {run.hash}:
        detail = ", ".join(f"{k}={p.config_hash}" for k, p in sorted(sources.items()))
        raise ArtifactError(f"report: artifacts come from different configs ({detail})")

    relations = sorted({r[0] for r in krows})
    split_counts = {(r, s): sum(1 for k in krows if k[0] == r and k[6] == s)
                    for r in relations for s in ("train", "test")}
    test_counts = ts.counts()
    ds_cols = ["relation", "train_instances", "test_instances"]
    ds_cols += [f"positives_theta_{_theta_name(t)}" for t in thetas]
    ds_cols += ["test_positive", "test_negative"]
    ds_rows = []
    for rel in relations + ["ALL"]:
        row = [rel]
        if rel == "ALL":
            row += [sum(split_counts[(r, "train")] for r in relations),
                    sum(split_counts[(r, "test")] for r in relations)]
        else:
            row += [split_counts[(rel, "train")], split_counts[(rel, "test")]]
        for theta in thetas:
            row.append(sum(1 for m in filters[theta] if m.polarity == "positive"
                           and (rel == "ALL" or m.instance.relation_type == rel)))
        tp = [c for r, c in test_counts.items() if rel in ("ALL", r)]
        row += [sum(p for p, _ in tp), sum(n for _, n in tp)]
        ds_rows.append(row)

    out = {}
    base = Provenance("table", run.hash, cfg.seed)
    out["dataset"] = run.path("tables", "dataset.csv")
    _write_csv(out["dataset"], _kind(base, "dataset"), ds_cols, ds_rows)

    cols = ["setting", "model", "val_macro_f1", "test_macro_p", "test_macro_r", "test_macro_f1"]

    def score_row(r):
        return [_setting_label(r)] + [r[c] for c in cols[1:]]

    hf_rows = [score_row(r) for r in summary if r["family"] == "hf"]
    out["hard_filter"] = run.path("tables", "hard_filter.csv")
    _write_csv(out["hard_filter"], _kind(base, "hard_filter", best=sprov.extra.get("best_hf", "")),
               cols, hf_rows)

    baseline = [r for r in summary if r["model"] == "hf-0.00"]
    cl_rows = [score_row(r) for r in baseline + [r for r in summary if r["family"] == "cl"]]
    out["curriculum"] = run.path("tables", "curriculum.csv")
    _write_csv(out["curriculum"], _kind(base, "curriculum", best=sprov.extra.get("best_cl", "")),
               cols, cl_rows)

    if noise is not None:
        out["noise"] = run.path("tables", "noise.csv")
        _write_csv(out["noise"], _kind(base, "noise_table"),
                   ["setting", "size", "noise_ratio"],
                   [["Original Set" if float(r["theta"]) == 0 else f"InsPo>={r['theta']}",
                     r["size"], r["noise_ratio"]] for r in noise])
    logger.info("report: wrote %s", ", ".join(sorted(out)))
    return out


def _kind(base: Provenance, kind: str, **extra) -> Provenance:
    return Provenance(kind, base.config_hash, base.seed, {k: v for k, v in extra.items() if v})


def _setting_label(row: dict) -> str:
    if row["family"] == "hf":
        return "Original Set" if float(row["setting"]) == 0 else f"InsPo>={row['setting']}"
    return f"Curriculum {row['setting']}"


# -- orchestration -------------------------------------------------------------

def run_pipeline(run: Run) -> dict[str, str]:
    run.write_config()
    if run.cfg.synthetic:
        run_synth(run)
    run_ingest(run)
    run_knowledge(run)
    run_popularity(run)
    run_align(run)
    run_filter(run)
    run_curriculum_stage(run)
    run_train(run)
    run_eval(run)
    if _inputs(run).get("oracle"):
        run_noise(run)
    else:
        logger.info("no oracle labels configured; noise ratios skipped")
    return run_report(run)


def checksums(root: str) -> dict[str, str]:
    """sha256 of every file under ``root``, keyed by relative path."""
    import hashlib

    out = {}
    for d, _, files in os.walk(root):
        for f in files:
            p = os.path.join(d, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = hashlib.sha256(fh.read()).hexdigest()
    return dict(sorted(out.items()))


def summary_scores(run: Run) -> dict[str, dict]:
    """Summary rows keyed by model name (for scripting and tests)."""
    _, rows = read_csv(run.path("reports", "summary.csv"), "eval")
    return {r["model"]: r for r in rows}
