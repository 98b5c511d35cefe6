"""Command line entry point: ``params``, ``bounds``, ``simulate`` and ``sweep``.

Exit codes: 0 on success, 2 for an invalid specification, 3 when a requested
computation is refused for its size.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

from .errors import ResourceRefusal, SpecError
from .harness import (
    ExperimentSpec,
    SweepSpec,
    estimate_error_rates,
    print_bounds,
    print_params,
    rows_to_csv,
    sweep_phase_transition,
)


def _json_default(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(payload: dict, out):
    out.write(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    out.write("\n")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from None


def _spec_args(p: argparse.ArgumentParser):
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--d", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distcorr",
                                     description="One-way distributed correlation testing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="protocol parameters for a test spec")
    _spec_args(p)
    p = sub.add_parser("bounds", help="lower bounds next to the protocol's cost")
    _spec_args(p)

    p = sub.add_parser("simulate", help="Monte Carlo error rates for an experiment config")
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--timing", action="store_true", help="include wall_time in the output")

    p = sub.add_parser("sweep", help="phase-transition sweep, CSV on stdout")
    p.add_argument("--config", required=True, help="sweep JSON file")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    return parser


def run(args, out=None) -> int:
    out = sys.stdout if out is None else out
    if args.command == "params":
        _emit(print_params(args.tau, args.delta, args.epsilon, args.d), out)
    elif args.command == "bounds":
        _emit(print_bounds(args.tau, args.delta, args.epsilon, args.d), out)
    elif args.command == "simulate":
        spec = ExperimentSpec.from_dict(_load_json(args.config))
        report = estimate_error_rates(spec, workers=args.workers)
        _emit(report.to_dict(timing=args.timing), out)
    elif args.command == "sweep":
        sweep = SweepSpec.from_dict(_load_json(args.config))
        text = rows_to_csv(sweep_phase_transition(sweep, workers=args.workers))
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            out.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return run(args)
    except ResourceRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except (SpecError, ValueError) as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
