"""Experiment configuration, orchestration, and result serialization.

An experiment builds an initial curve, computes its admissible comparison
offset, runs the requested flow formulation(s) with snapshot observers, and
grades every enabled check against its tolerance.  Results go to a
time-series CSV (fixed column order, 17-significant-digit floats, so runs
diff cleanly), a summary JSON that always lists every enabled check — even
when the run aborts mid-flow — and optional per-snapshot SVGs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields

import numpy as np

from . import bounds
from .comparison import admissible_offset, two_point_gap_scan
from .curves import (
    compute_metrics,
    convexity_check,
    make_circle,
    make_ellipse,
    make_perturbed_circle,
    resample_uniform,
)
from .errors import FlowError, NoAdmissibleOffsetError, ParameterError
from .flow import (
    StepControl,
    evolve,
    initial_state,
    length_law_residual,
    polyline_hausdorff,
    renormalize,
)

CSV_HEADER = (
    "t,length,kappa_min,kappa_max,min_Z,tbar,thm12_residual,l2_deficit,"
    "dkappa_max,d2kappa_max,gn_ratio,bonnesen_gap,hausdorff,center_norm"
)
_COLUMNS = CSV_HEADER.split(",")

SHAPES = ("circle", "ellipse", "perturbed_circle")
RUN_MODES = ("normalized", "unnormalized", "both")

# Checks computable from the (rescaled) shape statistics of any run.
_SHAPE_CHECKS = (
    "min_Z",
    "sup_bound",
    "extrema_drift",
    "l2_decay",
    "derivative_ladder",
    "gn_bound",
    "bonnesen_decay",
    "convergence",
)

DEFAULT_TOLERANCES = {
    "min_Z": 5e-3,  # permitted dip of the two-point gap below zero
    "sup_bound": 1e-2,  # squared-curvature envelope violation
    "extrema_drift": 1e-3,  # escape of the curvature range past its start
    "l2_decay": 1e-3,  # additive allowance on the L2-deficit envelope
    "derivative_ladder": 1.5,  # late/calibration envelope ratio cap
    "gn_bound": 10.0,  # interpolation ratio in multiples of its baseline
    "bonnesen_decay": -0.8,  # fitted log-slope cap of the Bonnesen gap
    "convergence": 2e-2,  # final radial deviation from the unit circle
    "length_law": 1e-2,  # relative deviation from exponential growth
    "cross_check": 5e-3,  # Hausdorff gap between the two formulations
}

L2_SLOPE_BOUND = -1.8
L2_FIT_WINDOW = (1.0, 5.0)
LADDER_LATE_SLOPE_BOUND = -0.3
BONNESEN_FIT_WINDOW = (1.0, 4.0)
GN_BASELINE_TIME = 0.5


def checks_for_mode(mode: str) -> tuple[str, ...]:
    """All check names applicable to a run mode, in canonical order."""
    if mode == "normalized":
        return _SHAPE_CHECKS
    if mode == "unnormalized":
        return _SHAPE_CHECKS + ("length_law",)
    return _SHAPE_CHECKS + ("length_law", "cross_check")


@dataclass(frozen=True)
class ExperimentConfig:
    shape: str = "circle"
    radius: float = 1.0
    a: float = 2.0
    b: float = 1.0
    amplitudes: tuple[float, ...] = (0.05,)
    modes: tuple[int, ...] = (3,)
    seed: int = 0
    n: int = 512
    dt: float = 1e-4
    t_end: float = 5.0
    mode: str = "normalized"
    snapshot_interval: float = 0.1
    checks: tuple[str, ...] | None = None  # None = every check the mode supports
    tolerances: tuple[tuple[str, float], ...] = ()
    out: str = "run.csv"
    summary_out: str | None = None
    svg_dir: str | None = None
    resample_every: int = 10
    safety: float = 0.2

    def resolved_checks(self) -> tuple[str, ...]:
        allowed = checks_for_mode(self.mode)
        if self.checks is None:
            return allowed
        return tuple(name for name in allowed if name in self.checks)

    def resolved_tolerances(self) -> dict[str, float]:
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(dict(self.tolerances))
        return merged

    def summary_path(self) -> str:
        if self.summary_out is not None:
            return self.summary_out
        root, _ = os.path.splitext(self.out)
        return root + "_summary.json"


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build and validate a config from plain JSON-style values."""
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    merged = {f.name: getattr(ExperimentConfig, f.name) for f in fields(ExperimentConfig)}
    merged.update(data)

    if merged["shape"] not in SHAPES:
        raise ParameterError(f"shape must be one of {SHAPES}, got {merged['shape']!r}")
    if merged["mode"] not in RUN_MODES:
        raise ParameterError(f"mode must be one of {RUN_MODES}, got {merged['mode']!r}")
    for key in ("radius", "a", "b", "dt", "t_end", "snapshot_interval", "safety"):
        value = merged[key]
        if not isinstance(value, (int, float)) or not value > 0.0:
            raise ParameterError(f"{key} must be a positive number, got {value!r}")
        merged[key] = float(value)
    for key in ("n", "seed", "resample_every"):
        value = merged[key]
        if not isinstance(value, int) or isinstance(value, bool):
            raise ParameterError(f"{key} must be an integer, got {value!r}")
    try:
        merged["amplitudes"] = tuple(float(x) for x in merged["amplitudes"])
        merged["modes"] = tuple(int(k) for k in merged["modes"])
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"bad perturbation lists: {exc}") from None

    if merged["checks"] is not None:
        requested = tuple(merged["checks"])
        allowed = checks_for_mode(merged["mode"])
        known = checks_for_mode("both")
        for name in requested:
            if name not in known:
                raise ParameterError(f"unknown check {name!r} (known: {known})")
            if name not in allowed:
                raise ParameterError(
                    f"check {name!r} is not defined for mode {merged['mode']!r}")
        merged["checks"] = requested
    tols = merged["tolerances"]
    if isinstance(tols, dict):
        tols = tuple(sorted(tols.items()))
    else:
        tols = tuple((str(k), float(v)) for k, v in tols)
    for name, value in tols:
        if name not in DEFAULT_TOLERANCES:
            raise ParameterError(f"tolerance for unknown check {name!r}")
        if not isinstance(value, (int, float)):
            raise ParameterError(f"tolerance for {name!r} must be a number")
    merged["tolerances"] = tuple((name, float(value)) for name, value in tols)

    for key in ("out",):
        if not isinstance(merged[key], str) or not merged[key]:
            raise ParameterError(f"{key} must be a non-empty path")
    for key in ("summary_out", "svg_dir"):
        if merged[key] is not None and not isinstance(merged[key], str):
            raise ParameterError(f"{key} must be a path or null")

    config = ExperimentConfig(**merged)
    # Let StepControl vet the stepping parameters up front (exit code 2
    # territory, not a mid-run surprise).
    StepControl(dt=config.dt, resample_every=config.resample_every, safety=config.safety)
    if config.n < 16:
        raise ParameterError(f"need at least 16 vertices, got {config.n}")
    return config


def load_config(path: str | None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config file (optional) and apply flag overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ParameterError(f"cannot read config {path!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config {path!r} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ParameterError("config file must hold a JSON object")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


def build_initial_curve(config: ExperimentConfig) -> np.ndarray:
    if config.shape == "circle":
        return make_circle(config.radius, config.n)
    if config.shape == "ellipse":
        return make_ellipse(config.a, config.b, config.n)
    return make_perturbed_circle(
        config.radius, config.n, config.amplitudes, config.modes, config.seed)


@dataclass(frozen=True)
class ExperimentResult:
    exit_code: int
    summary: dict
    rows: list
    csv_path: str
    summary_path: str


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute a configured experiment and write its result files.

    Exit code semantics: 0 all enabled checks pass, 1 a check failed,
    3 the flow itself failed (the failing time is recorded in the summary).
    Configuration problems raise ParameterError before anything runs.
    """
    enabled = config.resolved_checks()
    tolerances = config.resolved_tolerances()
    control = StepControl(
        dt=config.dt, resample_every=config.resample_every, safety=config.safety)

    rows: list[dict] = []
    raw_lengths: list[tuple[float, float]] = []
    stats_snaps: list[np.ndarray] = []
    raw_snaps: list[np.ndarray] = []
    offset: float | None = None
    failure: dict | None = None

    initial = resample_uniform(build_initial_curve(config), config.n)
    if not convexity_check(initial):
        failure = {
            "error": "ConvexityLossError",
            "message": "initial curve is not strictly convex",
            "time": 0.0,
        }
    else:
        try:
            offset = admissible_offset(renormalize(initial))
        except NoAdmissibleOffsetError as exc:
            failure = {"error": type(exc).__name__, "message": str(exc), "time": 0.0}

    def stats_observer(time, vertices, metrics):
        if config.mode == "unnormalized":
            view = renormalize(vertices)
            view_metrics = compute_metrics(view)
            length = metrics.total_length
        else:
            view = vertices
            view_metrics = metrics
            length = metrics.total_length
        scan = two_point_gap_scan(view, time, offset)
        report = bounds.snapshot_report(time, view, view_metrics, offset)
        rows.append({
            "t": time,
            "length": length,
            "kappa_min": report.kappa_min,
            "kappa_max": report.kappa_max,
            "min_Z": scan.min_gap,
            "tbar": offset,
            "thm12_residual": report.sup_bound_residual,
            "l2_deficit": report.l2_deficit,
            "dkappa_max": report.dkappa_max,
            "d2kappa_max": report.d2kappa_max,
            "gn_ratio": report.gn,
            "bonnesen_gap": report.bonnesen,
            "hausdorff": report.radial_deviation,
            "center_norm": report.center_norm,
        })
        if config.mode == "both":
            stats_snaps.append(view.copy())
        if config.svg_dir is not None:
            write_svg(
                os.path.join(config.svg_dir, f"snapshot_{len(rows) - 1:04d}.svg"),
                view, time)

    def raw_observer(time, vertices, metrics):
        raw_lengths.append((time, metrics.total_length))
        if config.mode == "both":
            raw_snaps.append(renormalize(vertices))

    if failure is None:
        if config.svg_dir is not None:
            os.makedirs(config.svg_dir, exist_ok=True)
        try:
            if config.mode in ("normalized", "both"):
                evolve(
                    initial_state(initial, "normalized", offset=offset),
                    control,
                    config.t_end,
                    observers=[stats_observer],
                    snapshot_interval=config.snapshot_interval,
                )
            if config.mode in ("unnormalized", "both"):
                observers = [raw_observer]
                if config.mode == "unnormalized":
                    observers.append(stats_observer)
                evolve(
                    initial_state(initial, "unnormalized", offset=offset),
                    control,
                    config.t_end,
                    observers=observers,
                    snapshot_interval=config.snapshot_interval,
                )
        except FlowError as exc:
            failure = {
                "error": type(exc).__name__,
                "message": str(exc),
                "time": exc.time,
            }

    cross_distances = [
        polyline_hausdorff(u, w) for u, w in zip(raw_snaps, stats_snaps)
    ]
    checks = _evaluate_checks(
        enabled, tolerances, rows, raw_lengths, cross_distances, config)

    if failure is not None:
        exit_code = 3
    elif all(c["status"] == "pass" for c in checks.values()):
        exit_code = 0
    else:
        exit_code = 1

    summary = {
        "config": _config_echo(config),
        "tbar": offset,
        "snapshots": len(rows),
        "status": "completed" if failure is None else "aborted",
        "failure": failure,
        "checks": checks,
        "exit_code": exit_code,
    }
    write_csv(config.out, rows)
    write_summary(config.summary_path(), summary)
    return ExperimentResult(
        exit_code=exit_code,
        summary=summary,
        rows=rows,
        csv_path=config.out,
        summary_path=config.summary_path(),
    )


def _config_echo(config: ExperimentConfig) -> dict:
    echo = {}
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if f.name == "tolerances":
            value = {k: v for k, v in sorted(value)}
        elif f.name == "checks":
            value = list(config.resolved_checks())
        elif isinstance(value, tuple):
            value = list(value)
        echo[f.name] = value
    return echo


def _column(rows: list[dict], key: str) -> np.ndarray:
    return np.asarray([r[key] for r in rows], dtype=float)


def _evaluate_checks(enabled, tolerances, rows, raw_lengths, cross_distances, config):
    checks: dict[str, dict] = {}

    def record(name, passed, worst, detail=None):
        entry = {
            "status": "pass" if passed else "fail",
            "worst": worst,
            "tolerance": tolerances[name],
        }
        if detail:
            entry["detail"] = detail
        checks[name] = entry

    if not rows:
        for name in enabled:
            checks[name] = {
                "status": "fail",
                "worst": None,
                "tolerance": tolerances[name],
                "detail": "no snapshots collected",
            }
        return checks

    t = _column(rows, "t")
    for name in enabled:
        tol = tolerances[name]
        if name == "min_Z":
            worst = float(np.min(_column(rows, "min_Z")))
            record(name, worst >= -tol, worst)
        elif name == "sup_bound":
            worst = float(np.max(_column(rows, "thm12_residual")))
            record(name, worst <= tol, worst)
        elif name == "extrema_drift":
            kmin = _column(rows, "kappa_min")
            kmax = _column(rows, "kappa_max")
            worst = max(float(np.max(kmin[0] - kmin)), float(np.max(kmax - kmax[0])), 0.0)
            record(name, worst <= tol, worst)
        elif name == "l2_decay":
            deficit = _column(rows, "l2_deficit")
            offset = rows[0]["tbar"]
            envelope = 2.0 * np.exp(-2.0 * (t - offset)) + tol
            excess = float(np.max(deficit - envelope))
            slope = bounds.decay_slope(
                t, deficit, *L2_FIT_WINDOW, floor=3.0 * bounds.l2_deficit_floor(config.n))
            slope_ok = math.isnan(slope) or slope <= L2_SLOPE_BOUND
            record(
                name, excess <= 0.0 and slope_ok, excess,
                detail=f"fitted slope {slope:.6g} (bound {L2_SLOPE_BOUND})")
        elif name == "derivative_ladder":
            dk_floor, d2k_floor = bounds.derivative_noise_floors(config.n)
            report = bounds.derivative_ladder_check(
                t, _column(rows, "dkappa_max"), _column(rows, "d2kappa_max"),
                floor=dk_floor, floor2=d2k_floor)
            ratios = [r for r in (report.excess_dkappa, report.excess_d2kappa)
                      if not math.isnan(r)]
            worst = max(ratios) if ratios else None
            slope_ok = math.isnan(report.late_slope) or (
                report.late_slope <= LADDER_LATE_SLOPE_BOUND)
            passed = all(r <= tol for r in ratios) and slope_ok
            record(
                name, passed, worst,
                detail=f"late slope {report.late_slope:.6g} "
                       f"(bound {LADDER_LATE_SLOPE_BOUND})")
        elif name == "gn_bound":
            ratios = _column(rows, "gn_ratio")
            valid = np.isfinite(ratios) & (t >= GN_BASELINE_TIME - 1e-9)
            if not np.any(valid):
                record(name, True, None, detail="no snapshots above noise floor")
            else:
                series = ratios[valid]
                worst = float(np.max(series) / series[0])
                record(name, worst <= tol, worst)
        elif name == "bonnesen_decay":
            slope = bounds.decay_slope(
                t, _column(rows, "bonnesen_gap"), *BONNESEN_FIT_WINDOW,
                floor=bounds.bonnesen_floor(config.n))
            if math.isnan(slope):
                record(name, True, None, detail="gap at polygonization floor")
            else:
                record(name, slope <= tol, slope)
        elif name == "convergence":
            worst = rows[-1]["hausdorff"]
            record(name, worst <= tol, worst)
        elif name == "length_law":
            if not raw_lengths:
                record(name, False, None, detail="no unnormalized snapshots")
            else:
                worst = length_law_residual(raw_lengths)
                record(name, worst <= tol, worst)
        elif name == "cross_check":
            if not cross_distances:
                record(name, False, None, detail="no paired snapshots")
            else:
                worst = max(cross_distances)
                record(name, worst <= tol, worst)
    return checks


def _format_float(value: float) -> str:
    return "%.17g" % value


def write_csv(path: str, rows: list[dict]) -> None:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join(_format_float(row[col]) for col in _COLUMNS))
    _write_text(path, "\n".join(lines) + "\n")


def write_summary(path: str, summary: dict) -> None:
    _write_text(path, serialize_json(summary) + "\n")


def serialize_json(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits.

    The stdlib encoder serializes floats via repr (shortest round-trip),
    which is stable but not the fixed-width contract promised for result
    files; this tiny serializer keeps full control.  Non-finite floats map
    to null.
    """

    def emit(value, indent: int) -> str:
        pad = "  " * indent
        if value is None:
            return "null"
        if isinstance(value, bool) or isinstance(value, np.bool_):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            v = float(value)
            return _format_float(v) if math.isfinite(v) else "null"
        if isinstance(value, str):
            return json.dumps(value)
        if isinstance(value, dict):
            if not value:
                return "{}"
            inner = ",\n".join(
                f"{pad}  {json.dumps(str(k))}: {emit(v, indent + 1)}"
                for k, v in value.items())
            return "{\n" + inner + "\n" + pad + "}"
        if isinstance(value, (list, tuple)):
            if not len(value):
                return "[]"
            inner = ",\n".join(f"{pad}  {emit(v, indent + 1)}" for v in value)
            return "[\n" + inner + "\n" + pad + "]"
        raise TypeError(f"cannot serialize {type(value).__name__}")

    return emit(obj, 0)


def write_svg(path: str, vertices: np.ndarray, time: float) -> None:
    """One snapshot as a closed path in a fixed [-2, 2]^2 viewbox.

    The y axis is flipped into mathematical orientation and a dashed unit
    circle is overlaid for reference.
    """
    points = " L ".join(
        f"{_format_float(x)} {_format_float(y)}" for x, y in np.asarray(vertices))
    content = (
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-2 -2 4 4">\n'
        f"  <!-- t = {_format_float(float(time))} -->\n"
        '  <g transform="scale(1,-1)">\n'
        '    <circle cx="0" cy="0" r="1" fill="none" stroke="#999999" '
        'stroke-width="0.01" stroke-dasharray="0.05 0.05"/>\n'
        f'    <path d="M {points} Z" fill="none" stroke="#1f6fb2" '
        'stroke-width="0.02"/>\n'
        "  </g>\n"
        "</svg>\n"
    )
    _write_text(path, content)


def _write_text(path: str, content: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
