"""Closed convex polygons and their discrete differential geometry.

Curves are plain (n, 2) float arrays of vertices, ordered counterclockwise
and implicitly closed (vertex n-1 connects back to vertex 0).  Everything
downstream (flow steppers, comparison scans, bound monitors) consumes the
per-vertex quantities computed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurveError, ParameterError

MIN_VERTICES = 16

# 5-point Gauss-Legendre rule on [-1, 1], used to refine arc-length values
# between table nodes when placing ellipse vertices.
_GAUSS5_NODES = np.array(
    [-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640]
)
_GAUSS5_WEIGHTS = np.array(
    [0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891]
)


def validate_vertices(vertices: np.ndarray) -> np.ndarray:
    """Coerce to a float (n, 2) array and check basic polygon sanity."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise ParameterError(f"expected an (n, 2) vertex array, got shape {v.shape}")
    if v.shape[0] < MIN_VERTICES:
        raise ParameterError(f"need at least {MIN_VERTICES} vertices, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise DegenerateCurveError("vertex coordinates contain NaN or Inf")
    edges = np.roll(v, -1, axis=0) - v
    if np.min(np.hypot(edges[:, 0], edges[:, 1])) <= 0.0:
        raise DegenerateCurveError("curve has a zero-length edge (repeated vertices)")
    return v


def make_circle(radius: float, n: int, center: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Regular n-gon inscribed in the circle of given radius.

    Vertices are ordered counterclockwise starting at angle 0.
    """
    if not radius > 0.0:
        raise ParameterError(f"radius must be positive, got {radius}")
    if n < MIN_VERTICES:
        raise ParameterError(f"need at least {MIN_VERTICES} vertices, got {n}")
    theta = 2.0 * np.pi * np.arange(n) / n
    v = np.empty((n, 2))
    v[:, 0] = center[0] + radius * np.cos(theta)
    v[:, 1] = center[1] + radius * np.sin(theta)
    return v


def _ellipse_speed(u: np.ndarray, a: float, b: float) -> np.ndarray:
    return np.sqrt((a * np.sin(u)) ** 2 + (b * np.cos(u)) ** 2)


def make_ellipse(a: float, b: float, n: int) -> np.ndarray:
    """n points on the ellipse (a cos u, b sin u) at uniform arc-length spacing.

    The parameter values are found by inverting the cumulative arc-length
    integral: a composite-Simpson table on a fine grid gives bracketing
    values, a short Gauss segment plus Newton iterations polish each target
    to roundoff.  The returned points therefore sit exactly on the ellipse
    (no polygonal corner-cutting), and for a == b the construction reduces
    to make_circle up to roundoff.
    """
    if not (a > 0.0 and b > 0.0):
        raise ParameterError(f"semi-axes must be positive, got a={a}, b={b}")
    if n < MIN_VERTICES:
        raise ParameterError(f"need at least {MIN_VERTICES} vertices, got {n}")

    m = max(4096, 8 * n)  # even number of Simpson intervals over [0, 2pi]
    u_grid = np.linspace(0.0, 2.0 * np.pi, m + 1)
    h = u_grid[1] - u_grid[0]
    f = _ellipse_speed(u_grid, a, b)

    # Cumulative Simpson: exact composite rule at even nodes, a one-sided
    # quadratic rule h/12 * (5 f_k + 8 f_{k+1} - f_{k+2}) filling odd nodes.
    s = np.zeros(m + 1)
    pair = (h / 3.0) * (f[:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    s[2::2] = np.cumsum(pair)
    s[1::2] = s[0:-1:2] + (h / 12.0) * (5.0 * f[0:-1:2] + 8.0 * f[1::2] - f[2::2])

    perimeter = s[-1]
    targets = perimeter * np.arange(n) / n
    u = np.interp(targets, s, u_grid)

    for _ in range(3):
        # arc length at u = table value at the node below + Gauss tail
        idx = np.clip(np.searchsorted(u_grid, u, side="right") - 1, 0, m)
        lo = u_grid[idx]
        half = 0.5 * (u - lo)
        mid = 0.5 * (u + lo)
        tail = half * (_GAUSS5_WEIGHTS @ _ellipse_speed(
            mid[None, :] + half[None, :] * _GAUSS5_NODES[:, None], a, b))
        u = u - (s[idx] + tail - targets) / _ellipse_speed(u, a, b)

    v = np.empty((n, 2))
    v[:, 0] = a * np.cos(u)
    v[:, 1] = b * np.sin(u)
    return v


def make_perturbed_circle(
    radius: float,
    n: int,
    amplitudes: tuple[float, ...] | list[float] | np.ndarray,
    modes: tuple[int, ...] | list[int] | np.ndarray,
    seed: int | None = None,
) -> np.ndarray:
    """Circle with radial cosine perturbations: r(theta) = R (1 + sum a_j cos(k_j theta + phi_j)).

    Phases phi_j are drawn from the seeded generator so repeated calls with
    the same seed reproduce the same curve; seed None gives zero phases.
    Large amplitudes are allowed and may produce non-convex curves, which is
    intentional (they exercise the convexity gate downstream).
    """
    if not radius > 0.0:
        raise ParameterError(f"radius must be positive, got {radius}")
    if n < MIN_VERTICES:
        raise ParameterError(f"need at least {MIN_VERTICES} vertices, got {n}")
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    ks = np.atleast_1d(np.asarray(modes, dtype=float))
    if amps.shape != ks.shape:
        raise ParameterError(
            f"amplitudes and modes must pair up, got {amps.shape} vs {ks.shape}")
    if seed is None:
        phases = np.zeros_like(amps)
    else:
        phases = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, size=amps.shape)
    theta = 2.0 * np.pi * np.arange(n) / n
    r = radius * (1.0 + np.sum(
        amps[:, None] * np.cos(ks[:, None] * theta[None, :] + phases[:, None]), axis=0))
    if np.min(r) <= 0.0:
        raise ParameterError("perturbation amplitudes drive the radius non-positive")
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass(frozen=True)
class CurveMetrics:
    """Per-vertex geometry derived from a closed polygon.

    edge_lengths[i] is |v_{i+1} - v_i| (index mod n), cumulative_arclength
    starts at 0, tangent_angles are unwrapped so they increase monotonically
    on convex curves, turning_angles are the exterior angles at each vertex,
    curvature is the inverse circumradius of each vertex triple (signed), and
    outward_normal is the unit tangent rotated by -pi/2.
    """

    edge_lengths: np.ndarray
    cumulative_arclength: np.ndarray
    total_length: float
    tangent_angles: np.ndarray
    turning_angles: np.ndarray
    curvature: np.ndarray
    outward_normal: np.ndarray


def compute_metrics(vertices: np.ndarray) -> CurveMetrics:
    """Compute arc lengths, tangents, curvature, and normals for a polygon.

    The curvature at vertex i is taken from the circumcircle through
    v_{i-1}, v_i, v_{i+1}:

        kappa_i = 2 cross(e_prev, e_next) / (|e_prev| |e_next| |v_{i+1} - v_{i-1}|)

    which equals 2 sin(turning angle) / chord and is exact (to roundoff) on
    polygons inscribed in circles — the property the flow's circle invariants
    rely on.  Signs follow orientation: positive on counterclockwise convex
    curves.
    """
    v = validate_vertices(vertices)
    edges = np.roll(v, -1, axis=0) - v
    edge_len = np.hypot(edges[:, 0], edges[:, 1])
    total = float(np.sum(edge_len))
    cum = np.concatenate([[0.0], np.cumsum(edge_len[:-1])])

    e_prev = np.roll(edges, 1, axis=0)
    len_prev = np.roll(edge_len, 1)
    chord = v_next_minus_prev = np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)
    chord_len = np.hypot(chord[:, 0], chord[:, 1])
    if np.min(chord_len) <= 0.0:
        raise DegenerateCurveError("vertices i-1 and i+1 coincide; curvature undefined")
    cross = e_prev[:, 0] * edges[:, 1] - e_prev[:, 1] * edges[:, 0]
    curvature = 2.0 * cross / (len_prev * edge_len * chord_len)

    tangent = v_next_minus_prev / chord_len[:, None]
    raw_angles = np.arctan2(tangent[:, 1], tangent[:, 0])
    tangent_angles = np.unwrap(raw_angles)
    turning = np.arctan2(cross, np.einsum("ij,ij->i", e_prev, edges))
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])

    return CurveMetrics(
        edge_lengths=edge_len,
        cumulative_arclength=cum,
        total_length=total,
        tangent_angles=tangent_angles,
        turning_angles=turning,
        curvature=curvature,
        outward_normal=normal,
    )


def dual_cell_weights(vertices: np.ndarray) -> np.ndarray:
    """Arc-length weight of each vertex: half the two adjacent edge lengths.

    These sum to the total length and turn per-vertex samples into
    trapezoidal integrals over the curve.
    """
    v = validate_vertices(vertices)
    edges = np.roll(v, -1, axis=0) - v
    edge_len = np.hypot(edges[:, 0], edges[:, 1])
    return 0.5 * (edge_len + np.roll(edge_len, 1))


def resample_uniform(vertices: np.ndarray, n: int) -> np.ndarray:
    """Redistribute n vertices at equal arc-length spacing along the polygon.

    Linear interpolation along the existing edges; the first output vertex
    coincides with the first input vertex.  Points move onto chords of the
    old polygon, so on curved input the total length contracts by
    O((kappa ds)^2) per resampling — callers tracking length to higher
    accuracy must account for that, it is not a bug in the resampler.
    """
    v = validate_vertices(vertices)
    if n < MIN_VERTICES:
        raise ParameterError(f"need at least {MIN_VERTICES} vertices, got {n}")
    edges = np.roll(v, -1, axis=0) - v
    edge_len = np.hypot(edges[:, 0], edges[:, 1])
    s = np.concatenate([[0.0], np.cumsum(edge_len)])
    closed = np.vstack([v, v[:1]])
    targets = s[-1] * np.arange(n) / n
    out = np.empty((n, 2))
    out[:, 0] = np.interp(targets, s, closed[:, 0])
    out[:, 1] = np.interp(targets, s, closed[:, 1])
    out[0] = v[0]
    return out


def chord_distance(vertices: np.ndarray, i: int, j: int) -> float:
    """Straight-line distance between vertices i and j."""
    v = np.asarray(vertices, dtype=float)
    return float(np.hypot(*(v[j % len(v)] - v[i % len(v)])))


def arc_distance(vertices: np.ndarray, i: int, j: int) -> float:
    """Length of the SHORTER arc between vertices i and j, in [0, L/2].

    The comparison profile is symmetric under arc -> L - arc, so restricting
    to the shorter arc loses nothing and keeps the argument in the profile's
    monotone range.
    """
    v = validate_vertices(vertices)
    edges = np.roll(v, -1, axis=0) - v
    edge_len = np.hypot(edges[:, 0], edges[:, 1])
    s = np.concatenate([[0.0], np.cumsum(edge_len)])
    total = s[-1]
    forward = (s[j % len(v)] - s[i % len(v)]) % total
    return float(min(forward, total - forward))


def convexity_check(vertices: np.ndarray) -> bool:
    """True iff every pair of consecutive edges turns strictly left."""
    v = validate_vertices(vertices)
    edges = np.roll(v, -1, axis=0) - v
    e_next = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * e_next[:, 1] - edges[:, 1] * e_next[:, 0]
    return bool(np.all(cross > 0.0))


def centroid(vertices: np.ndarray) -> np.ndarray:
    """Arc-length-weighted vertex average (the curve's center of mass)."""
    v = validate_vertices(vertices)
    w = dual_cell_weights(v)
    return w @ v / np.sum(w)
