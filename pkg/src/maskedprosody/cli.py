"""Command-line entry point.

Subcommands: synth | features | train | probe | sweep | report. All but
``report`` take a YAML experiment config; common overrides are exposed
as flags. Exit codes: 0 success, 2 partial failure, 1 fatal error.
"""

from __future__ import annotations

import argparse
import sys

from . import experiment
from .errors import MaskedProsodyError


def _add_config_flags(parser):
    parser.add_argument("--config", required=True, help="YAML experiment config")
    parser.add_argument("--out", help="override output_dir")
    parser.add_argument("--seed", type=int, help="override the seed list with one seed")
    parser.add_argument(
        "--deterministic",
        choices=["on", "off"],
        help="override the config's deterministic flag",
    )


def _load(args) -> experiment.ExperimentConfig:
    cfg = experiment.load_config(args.config)
    if args.out:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seeds = [args.seed]
        cfg.corpus.synthetic.seed = args.seed
    if args.deterministic:
        cfg.deterministic = args.deterministic == "on"
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskedprosody",
        description="Masked prosody reconstruction pipeline and probe evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("synth", "generate the synthetic corpus into the feature cache"),
        ("features", "extract prosody contours into the feature cache"),
        ("probe", "evaluate the representation/task/probe grid"),
        ("sweep", "train every strategy and evaluate the merged grid"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)

    p_train = sub.add_parser("train", help="train models for one corruption strategy")
    _add_config_flags(p_train)
    p_train.add_argument("--strategy", required=True, help="mask length or 'random'")

    p_report = sub.add_parser("report", help="render tables and plots from a report")
    p_report.add_argument("report", help="path to report.tsv")
    p_report.add_argument("--out", help="output directory (defaults next to the report)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return experiment.cmd_report(args.report, args.out)
        cfg = _load(args)
        if args.command == "synth":
            return experiment.cmd_synth(cfg)
        if args.command == "features":
            return experiment.cmd_features(cfg)
        if args.command == "train":
            return experiment.cmd_train(cfg, args.strategy)
        if args.command == "probe":
            return experiment.cmd_probe(cfg)
        if args.command == "sweep":
            return experiment.cmd_sweep(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except MaskedProsodyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
