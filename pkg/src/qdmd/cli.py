"""Command-line entry point.

Subcommands: simulate, extrapolate, sweep-m, bound-report, verify.
Exit codes: 0 success, 1 configuration or validation error, 2 property
failure. Thread control must happen before numpy loads, so the heavy
modules are imported only after arguments are parsed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _add_common(sub: argparse.ArgumentParser, needs_config: bool) -> None:
    sub.add_argument(
        "--config",
        required=needs_config,
        help="experiment description in TOML form",
    )
    sub.add_argument(
        "--out", default="qdmd_out", help="output directory (created if missing)"
    )
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap the BLAS/OpenMP thread count for this process",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdmd",
        description=(
            "simulate quench dynamics of small quantum chains, fit "
            "delay-embedded DMD models, and extrapolate observables"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the Trotter trajectory and store it")
    _add_common(p, needs_config=True)

    p = sub.add_parser(
        "extrapolate", help="fit on the window and predict over the full grid"
    )
    _add_common(p, needs_config=True)
    p.add_argument("--trajectory", default=None, help="reuse a stored trajectory.csv")

    p = sub.add_parser("sweep-m", help="final-time error for each window size")
    _add_common(p, needs_config=True)
    p.add_argument("--trajectory", default=None, help="reuse a stored trajectory.csv")

    p = sub.add_parser(
        "bound-report", help="evaluate the analytic error bound against measurements"
    )
    _add_common(p, needs_config=True)
    p.add_argument("--trajectory", default=None, help="reuse a stored trajectory.csv")

    p = sub.add_parser("verify", help="run the property suite")
    _add_common(p, needs_config=False)
    p.add_argument(
        "--negative-control",
        action="store_true",
        help="inject a sign error into the fermion encoding; succeed only "
        "if the oracle catches it",
    )
    return parser


def _apply_thread_cap(threads: int) -> None:
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        os.environ[var] = str(threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 1
        _apply_thread_cap(args.threads)

    from qdmd.config import ConfigError, load_config

    try:
        if args.command == "verify":
            return _run_verify(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace

            cfg = replace(
                cfg, observables=replace(cfg.observables, seed=args.seed)
            )
        from qdmd import runner

        if args.command == "simulate":
            summary = runner.run_simulate(cfg, args.out)
        elif args.command == "extrapolate":
            summary = runner.run_extrapolate(cfg, args.out, args.trajectory)
        elif args.command == "sweep-m":
            summary = runner.run_sweep(cfg, args.out, args.trajectory)
        else:
            summary = runner.run_bound_report(cfg, args.out, args.trajectory)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _run_verify(args) -> int:
    from pathlib import Path

    from qdmd import verify

    if args.negative_control:
        result = verify.run_negative_control()
        report = verify.report_to_dict([result], mode="negative_control")
    else:
        report = verify.report_to_dict(verify.run_all(), mode="standard")
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out != "qdmd_out" or os.path.isdir(args.out):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.json").write_text(text + "\n")
    return 0 if report["all_passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
