"""Command-line entry point: ``curvlab <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 unconverged rows in a scaling run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .curvature import RiemannTensor, symmetry_violation, validate_symmetries
from .geometry import expmap_energy_coefficient
from .norm import DEFAULT_DEGREE, minimize_IR
from .scaling import (
    ExperimentConfig,
    ScalingReport,
    fit_scaling_exponent,
    lower_bound_check,
    run_ball_scaling,
    run_rod_scaling,
)

EXIT_OK, EXIT_INVALID, EXIT_UNCONVERGED = 0, 1, 2


class InvalidInput(Exception):
    pass


def _load_tensor(path) -> RiemannTensor:
    try:
        return RiemannTensor.from_dict(json.loads(Path(path).read_text()))
    except (OSError, KeyError, ValueError) as exc:
        raise InvalidInput(f"cannot read tensor from {path}: {exc}") from exc


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text + "\n")
    if not args.quiet:
        print(text)


def cmd_validate(args) -> int:
    t = _load_tensor(args.tensor)
    ok = validate_symmetries(t, args.tol)
    _emit(args, json.dumps({"valid": ok, "max_violation": symmetry_violation(t)}, sort_keys=True))
    return EXIT_OK if ok else EXIT_INVALID


def cmd_norm(args) -> int:
    t = _load_tensor(args.tensor)
    if not validate_symmetries(t):
        raise InvalidInput("tensor violates curvature symmetries")
    _emit(args, minimize_IR(t, args.degree).to_json())
    return EXIT_OK


def cmd_expmap(args) -> int:
    t = _load_tensor(args.tensor)
    if not validate_symmetries(t):
        raise InvalidInput("tensor violates curvature symmetries")
    _emit(args, json.dumps({"coefficient": expmap_energy_coefficient(t)}))
    return EXIT_OK


def _scaling(args, runner) -> int:
    try:
        cfg = ExperimentConfig.load(args.config)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"bad config {args.config}: {exc}") from exc
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is None and cfg.output:
        args.out = cfg.output
    report = runner(cfg)
    _emit(args, report.to_json())
    if args.csv:
        target = Path(args.out).with_suffix(".csv") if args.out else None
        if target is None:
            print(report.to_csv(), end="")
        else:
            target.write_text(report.to_csv())
    if not lower_bound_check(report, cfg.lower_bound_fraction):
        logging.getLogger(__name__).warning("lower-bound check failed")
    return EXIT_UNCONVERGED if report.unconverged else EXIT_OK


def cmd_fit(args) -> int:
    try:
        report = ScalingReport.from_dict(json.loads(Path(args.report).read_text()))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"cannot read report {args.report}: {exc}") from exc
    rows = report.rows[-args.points :] if args.points else report.rows
    beta = fit_scaling_exponent([(r.h, r.energy) for r in rows])
    _emit(args, json.dumps({"fitted_exponent": beta, "rows_used": len(rows)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="also write the JSON result to this path")
    common.add_argument("--csv", action="store_true", help="write a CSV mirror of scaling rows")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="curvlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check curvature symmetries")
    s.add_argument("tensor")
    s.add_argument("--tol", type=float, default=1e-12)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("norm", parents=[common], help="compute |R| = sqrt(min I_R)")
    s.add_argument("tensor")
    s.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("expmap", parents=[common], help="h^4 coefficient of the identity-map energy")
    s.add_argument("tensor")
    s.set_defaults(func=cmd_expmap)

    s = sub.add_parser("ball-scaling", parents=[common], help="minimized energies on shrinking balls")
    s.add_argument("config")
    s.set_defaults(func=lambda a: _scaling(a, run_ball_scaling))

    s = sub.add_parser("rod-scaling", parents=[common], help="minimized energies on thin tubes")
    s.add_argument("config")
    s.set_defaults(func=lambda a: _scaling(a, run_rod_scaling))

    s = sub.add_parser("fit", parents=[common], help="refit the scaling exponent of a report")
    s.add_argument("report")
    s.add_argument("--points", type=int, default=3, help="fit the last N rows (0 = all)")
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
