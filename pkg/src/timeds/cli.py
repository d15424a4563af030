"""Command-line entry point: ``timeds [options] <subcommand> [args]``.

Every config key can be overridden with ``--key=value`` (dashes and
underscores are interchangeable in the key).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline as pl
from .artifacts import ArtifactError
from .classifier import FeatureError, TrainError
from .config import ConfigError, PipelineConfig, load_config
from .corpus import GazetteerError
from .knowledge import KnowledgeError
from .popularity import PopularityError
from .rules import RuleError
from .strategies import ScheduleError
from .synth import SynthError

logger = logging.getLogger("timeds")

_ERRORS = (ConfigError, ArtifactError, pl.StageError, RuleError, GazetteerError, KnowledgeError,
           PopularityError, ScheduleError, SynthError, TrainError, FeatureError, OSError)

HELP = {
    "synth": "generate a synthetic corpus, gazetteer, rules and oracle labels",
    "ingest": "parse the corpus and annotate entity mentions",
    "knowledge": "match rules, score instance confidence and split train/test",
    "popularity": "write per-instance popularity series",
    "align": "write the weighted training manifest and the labelled test set",
    "filter": "hard-filter the manifest at one or more thresholds",
    "curriculum": "write the nested curriculum rounds",
    "train": "train one-shot and/or curriculum classifiers",
    "eval": "evaluate every checkpoint over the test folds",
    "noise": "oracle noise ratio of each filtered set",
    "report": "consolidated CSV tables",
    "pipeline": "run every stage in order",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", "-c", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int, help="worker processes for ingestion")
    common.add_argument("--out", help="output directory")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="timeds", parents=[common],
                                     argument_default=argparse.SUPPRESS,
                                     description="Time-aware distant supervision pipeline.",
                                     epilog="Any config key may be given as --key=value.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name, text in HELP.items():
        p = sub.add_parser(name, help=text, parents=[common])
        if name == "filter":
            p.add_argument("theta", nargs="*", type=float, default=[],
                           help="thresholds (default: the config's filter_thresholds)")
        if name == "train":
            p.add_argument("--mode", choices=["oneshot", "curriculum", "both"], default=None)
    return parser


def _split_overrides(extra: list[str]) -> list[tuple[str, str]]:
    out = []
    for arg in extra:
        if not arg.startswith("--") or "=" not in arg:
            raise ConfigError(arg, "expected --key=value")
        key, value = arg[2:].split("=", 1)
        out.append((key.replace("-", "_"), value))
    return out


def make_config(args, extra: list[str]) -> PipelineConfig:
    overrides = _split_overrides(extra)
    for key in ("seed", "threads", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides.append((key, str(value)))
    return load_config(getattr(args, "config", None), overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=getattr(logging, getattr(args, "log_level", "INFO")),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = make_config(args, extra)
        run = pl.Run(cfg)
        run.write_config()
        cmd = args.command
        if cmd == "pipeline":
            pl.run_pipeline(run)
        elif cmd == "synth":
            pl.run_synth(run)
        elif cmd == "ingest":
            pl.run_ingest(run)
        elif cmd == "knowledge":
            pl.run_knowledge(run)
        elif cmd == "popularity":
            pl.run_popularity(run)
        elif cmd == "align":
            pl.run_align(run)
        elif cmd == "filter":
            pl.run_filter(run, args.theta or None)
        elif cmd == "curriculum":
            pl.run_curriculum_stage(run)
        elif cmd == "train":
            pl.run_train(run, args.mode)
        elif cmd == "eval":
            pl.run_eval(run)
        elif cmd == "noise":
            pl.run_noise(run)
        elif cmd == "report":
            pl.run_report(run)
    except _ERRORS as exc:
        print(f"timeds: error: {exc}", file=sys.stderr)
        return 1
    print(run.root)
    return 0


if __name__ == "__main__":
    sys.exit(main())
