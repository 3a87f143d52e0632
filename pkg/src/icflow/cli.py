"""Command-line interface.

Three subcommands: ``run`` executes a configured experiment, ``verify-profile``
scans the comparison-profile certificates on a grid, and ``tbar`` prints the
admissible offset for a shape.  Exit codes: 0 pass, 1 check failure, 2
usage/config error, 3 runtime flow error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .comparison import (
    admissible_offset,
    numerator_grid_min,
    profile_dt,
    profile_dx,
    profile_dxx,
    profile_residual,
    profile_value,
    residual_certificate_scan,
)
from .curves import resample_uniform
from .errors import (
    DegenerateCurveError,
    FlowError,
    NoAdmissibleOffsetError,
    ParameterError,
)
from .experiment import (
    RUN_MODES,
    SHAPES,
    build_initial_curve,
    load_config,
    run_experiment,
)
from .flow import renormalize

CERTIFICATE_TOL = 1e-8  # permitted dip of any certified minimum below zero
LIMIT_TOL = 1e-5  # |residual| cap at the left edge of its domain
DERIVATIVE_TOL = 1e-5  # closed-form vs finite-difference agreement for f


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icflow",
        description="Numerical laboratory for inverse curvature flow of "
                    "convex plane curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser(
        "run", help="run a flow experiment and grade its checks")
    run_p.add_argument(
        "config", nargs="?", default=None, help="JSON config file (optional)")
    run_p.add_argument("--shape", choices=SHAPES)
    run_p.add_argument("--radius", type=float)
    run_p.add_argument("--a", type=float)
    run_p.add_argument("--b", type=float)
    run_p.add_argument("--n", type=int)
    run_p.add_argument("--dt", type=float)
    run_p.add_argument("--t-end", type=float)
    run_p.add_argument("--mode", choices=RUN_MODES)
    run_p.add_argument("--snapshot-interval", type=float)
    run_p.add_argument("--out")
    run_p.add_argument("--summary-out")
    run_p.add_argument("--svg-dir")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--amplitudes", help="comma-separated floats")
    run_p.add_argument("--modes", help="comma-separated integers")
    run_p.add_argument("--checks", help="comma-separated check names")
    run_p.add_argument("--resample-every", type=int)
    run_p.add_argument("--safety", type=float)
    run_p.set_defaults(handler=_handle_run)

    verify_p = sub.add_parser(
        "verify-profile",
        help="scan the comparison-profile positivity certificates")
    verify_p.add_argument("--x-min", type=float, default=1e-3)
    verify_p.add_argument("--x-max", type=float, default=math.pi)
    verify_p.add_argument("--x-step", type=float, default=1e-3)
    verify_p.add_argument("--t-min", type=float, default=-5.0)
    verify_p.add_argument("--t-max", type=float, default=5.0)
    verify_p.add_argument("--t-step", type=float, default=0.01)
    verify_p.set_defaults(handler=_handle_verify_profile)

    tbar_p = sub.add_parser(
        "tbar", help="print the admissible comparison offset for a shape")
    tbar_p.add_argument("--shape", choices=SHAPES, default="circle")
    tbar_p.add_argument("--radius", type=float)
    tbar_p.add_argument("--a", type=float)
    tbar_p.add_argument("--b", type=float)
    tbar_p.add_argument("--n", type=int)
    tbar_p.add_argument("--seed", type=int)
    tbar_p.add_argument("--amplitudes", help="comma-separated floats")
    tbar_p.add_argument("--modes", help="comma-separated integers")
    tbar_p.set_defaults(handler=_handle_tbar)
    return parser


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ParameterError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ParameterError(f"expected comma-separated integers, got {text!r}") from None


def _collect_overrides(args: argparse.Namespace, keys: tuple[str, ...]) -> dict:
    overrides = {}
    for key in keys:
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if getattr(args, "amplitudes", None) is not None:
        overrides["amplitudes"] = _parse_float_list(args.amplitudes)
    if getattr(args, "modes", None) is not None:
        overrides["modes"] = _parse_int_list(args.modes)
    if getattr(args, "checks", None) is not None:
        overrides["checks"] = tuple(
            part.strip() for part in args.checks.split(",") if part.strip())
    return overrides


def _handle_run(args: argparse.Namespace) -> int:
    overrides = _collect_overrides(args, (
        "shape", "radius", "a", "b", "n", "dt", "t_end", "mode",
        "snapshot_interval", "out", "summary_out", "svg_dir", "seed",
        "resample_every", "safety",
    ))
    config = load_config(args.config, overrides)
    result = run_experiment(config)
    summary = result.summary

    if summary["tbar"] is not None:
        print("tbar = %.17g" % summary["tbar"])
    for name, entry in summary["checks"].items():
        worst = "n/a" if entry["worst"] is None else "%.6g" % entry["worst"]
        line = f"{name}: {entry['status']} (worst {worst}, tolerance " \
               f"{entry['tolerance']:.6g})"
        if "detail" in entry:
            line += f" [{entry['detail']}]"
        print(line)
    if summary["failure"] is not None:
        info = summary["failure"]
        when = "?" if info["time"] is None else "%.6g" % info["time"]
        print(f"flow aborted at t = {when}: {info['message']}", file=sys.stderr)
    print(f"wrote {result.csv_path} and {result.summary_path}")
    return result.exit_code


def _inclusive_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = lo + step * np.arange(count)
    if grid[-1] < hi - 1e-12 * max(1.0, abs(hi)):
        grid = np.append(grid, hi)
    return grid


def _derivative_cross_check(step: float = 1e-4):
    """Worst disagreement between closed-form and central-difference
    derivatives of the profile, over a grid away from the domain edges."""
    x = np.linspace(0.05, 2.0 * math.pi - 0.05, 61)
    worst = 0.0
    where = ("dx", 0.0, 0.0)
    for t in np.linspace(-2.0, 2.0, 17):
        plus = profile_value(x + step, t)
        minus = profile_value(x - step, t)
        mid = profile_value(x, t)
        candidates = (
            ("dx", (plus - minus) / (2.0 * step), profile_dx(x, t)),
            ("dxx", (plus - 2.0 * mid + minus) / step ** 2, profile_dxx(x, t)),
            ("dt", (profile_value(x, t + step) - profile_value(x, t - step))
                   / (2.0 * step), profile_dt(x, t)),
        )
        for name, approx, exact in candidates:
            gaps = np.abs(approx - exact)
            k = int(np.argmax(gaps))
            if gaps[k] > worst:
                worst = float(gaps[k])
                where = (name, float(x[k]), float(t))
    return worst, where


def _handle_verify_profile(args: argparse.Namespace) -> int:
    if args.x_step <= 0.0 or args.t_step <= 0.0:
        raise ParameterError("grid steps must be positive")
    if args.x_min <= 0.0:
        raise ParameterError("--x-min must be positive; the residual domain is (0, pi]")
    if args.x_max > math.pi + 1e-12:
        raise ParameterError("--x-max beyond pi leaves the residual domain (0, pi]")
    if args.x_max < args.x_min or args.t_max < args.t_min:
        raise ParameterError("empty grid")

    x_grid = _inclusive_grid(args.x_min, min(args.x_max, math.pi), args.x_step)
    t_grid = _inclusive_grid(args.t_min, args.t_max, args.t_step)
    certificate = residual_certificate_scan(x_grid, t_grid)

    z_grid = np.linspace(0.0, 1.0, 1001)
    alphas = 10.0 ** _inclusive_grid(-3.0, 3.0, 0.01)
    numerator_min, numerator_at = numerator_grid_min(z_grid, alphas)

    limit_worst = max(
        abs(float(profile_residual(1e-6, s))) for s in (-3.0, 0.0, 3.0))
    mismatch, mismatch_at = _derivative_cross_check()

    print("residual min            = %.17g at (x, t) = (%.17g, %.17g)"
          % (certificate.min_residual, *certificate.min_residual_at))
    print("residual slope min (fd) = %.17g at (x, t) = (%.17g, %.17g)"
          % (certificate.min_slope_fd, *certificate.min_slope_fd_at))
    print("residual slope min      = %.17g at (x, t) = (%.17g, %.17g)"
          % (certificate.min_slope_closed, *certificate.min_slope_closed_at))
    print("slope fd mismatch       = %.17g" % certificate.max_slope_mismatch)
    print("A-polynomial min        = %.17g at (z, alpha) = (%.17g, %.17g)"
          % (numerator_min, *numerator_at))
    print("limit residual max      = %.17g over t in {-3, 0, 3} at x = 1e-06"
          % limit_worst)
    print("derivative mismatch     = %.17g (%s at x = %.17g, t = %.17g)"
          % (mismatch, *mismatch_at))

    violations = []
    if certificate.min_residual < -CERTIFICATE_TOL:
        violations.append(
            "residual %.6g at (x, t) = (%.17g, %.17g)"
            % (certificate.min_residual, *certificate.min_residual_at))
    if certificate.min_slope_fd < -CERTIFICATE_TOL:
        violations.append(
            "fd slope %.6g at (x, t) = (%.17g, %.17g)"
            % (certificate.min_slope_fd, *certificate.min_slope_fd_at))
    if certificate.min_slope_closed < -CERTIFICATE_TOL:
        violations.append(
            "closed-form slope %.6g at (x, t) = (%.17g, %.17g)"
            % (certificate.min_slope_closed, *certificate.min_slope_closed_at))
    if numerator_min < -CERTIFICATE_TOL:
        violations.append(
            "A-polynomial %.6g at (z, alpha) = (%.17g, %.17g)"
            % (numerator_min, *numerator_at))
    if limit_worst > LIMIT_TOL:
        violations.append("limit residual %.6g at x = 1e-06" % limit_worst)
    if mismatch > DERIVATIVE_TOL:
        violations.append(
            "derivative mismatch %.6g (%s at x = %.17g, t = %.17g)"
            % (mismatch, *mismatch_at))

    if violations:
        for item in violations:
            print("violation:", item)
        return 1
    print("all profile certificates hold")
    return 0


def _handle_tbar(args: argparse.Namespace) -> int:
    overrides = _collect_overrides(
        args, ("shape", "radius", "a", "b", "n", "seed"))
    config = load_config(None, overrides)
    curve = resample_uniform(build_initial_curve(config), config.n)
    offset = admissible_offset(renormalize(curve))
    print("%.17g" % offset)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    try:
        return args.handler(args)
    except (ParameterError, DegenerateCurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FlowError, NoAdmissibleOffsetError) as exc:
        print(f"flow error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
