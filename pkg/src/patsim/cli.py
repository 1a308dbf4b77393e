"""Command-line entry point.

Subcommands mirror the pipeline stages; a flat key=value config file provides
defaults and flags override it. Exit codes: 0 success, 2 validation failure,
1 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import traceback

from .errors import PatsimError, ValidationError
from .pipeline import PipelineConfig, run_stage


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patsim",
        description="Patent citation similarity scoring and GAM trend decomposition.",
    )
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--workdir", help="artifact directory (default: workdir)")
    parser.add_argument("--seed", type=int, help="seed for synthetic stages")
    parser.add_argument("--strict", action="store_true",
                        help="abort ingestion on the first invalid row")
    parser.add_argument("--keep-negative-lags", action="store_true",
                        help="keep rows whose receiver postdates the sender")
    parser.add_argument("--verbose-errors", action="store_true",
                        help="print tracebacks for internal errors")

    sub = parser.add_subparsers(dest="stage", required=True)
    sub.add_parser("synth", help="generate a synthetic corpus, mock embeddings, "
                                 "and ground-truth scores")
    ingest = sub.add_parser("ingest", help="validate and normalize patents/citations")
    ingest.add_argument("--patents", help="patents.csv path")
    ingest.add_argument("--citations", help="citations.csv path")
    score = sub.add_parser("score", help="score citation edges against an "
                                         "embedding matrix")
    score.add_argument("--psim", help="embedding matrix (PSIM) path")
    score.add_argument("--workers", type=int, help="parallel scoring workers")
    features = sub.add_parser("features", help="assemble the regression table")
    features.add_argument("--scores", help="scores.csv override "
                                           "(e.g. synthetic truth scores)")
    fit = sub.add_parser("fit", help="fit one of the nested models")
    fit.add_argument("--model", type=int, required=True, choices=[0, 1, 2, 3])
    sub.add_parser("report", help="tabulate the four fitted models side by side")
    sub.add_parser("figs", help="emit figure-ready CSV tables and SVG charts")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    field_names = {f.name for f in dataclasses.fields(PipelineConfig)}
    for key in ("workdir", "seed", "patents", "citations", "psim", "scores", "workers"):
        value = getattr(args, key, None)
        if value is not None and key in field_names:
            setattr(cfg, key, value)
    if args.strict:
        cfg.strict = True
    if args.keep_negative_lags:
        cfg.keep_negative_lags = True
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        manifest = run_stage(args.stage, cfg, model_level=getattr(args, "model", None))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PatsimError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        if getattr(args, "verbose_errors", False):
            traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    counts = ", ".join(f"{k}={v}" for k, v in manifest["counts"].items())
    print(f"{manifest['stage']}: ok ({counts})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
