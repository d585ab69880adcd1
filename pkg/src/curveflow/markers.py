"""Independent Lagrangian marker solver used to cross-validate the field solver.

Curve points are evolved directly by the normal speed

    dX/dt = (lambda - kappa^(-n)) * N_in,

with the discrete curvature from the three-point circumcircle, the nonlocal
term from polygon sums (edge-length perimeter, shoelace area, midpoint-rule
curvature integrals), forward Euler in time, and a tangential velocity that
keeps the markers uniformly spaced in arc length (tangential motion only
reparametrizes the curve, so it does not change the traced shape).

Deliberately shares no quadrature, no spectral machinery and no stepper code
with the field solver; its single job is to agree with it on short horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateTriangleError, NonconvexDetectedError
from .flow import FlowConfig, FlowVariant
from .geometry import CurvePoints, FloatArray

#: Redistribution guard: adjacent spacing must stay within these multiples
#: of the mean spacing, else the markers are respaced through a periodic
#: spline (rare; the tangential velocity keeps spacing uniform to O(dt)).
SPACING_RATIO_BOUNDS = (0.2, 5.0)

MIN_MARKERS = 64


@dataclass(frozen=True)
class MarkerCurve:
    """Positively oriented marker points tracing a simple polygon."""

    points: FloatArray  # shape (M, 2)
    t: float = 0.0

    @property
    def size(self) -> int:
        return self.points.shape[0]


def make_marker_curve(points: np.ndarray, t: float = 0.0) -> MarkerCurve:
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < MIN_MARKERS:
        raise ValueError(f"need at least {MIN_MARKERS} planar points, got {points.shape}")
    if _signed_area(points) <= 0.0:
        raise ValueError("marker polygon must be positively oriented")
    points.setflags(write=False)
    return MarkerCurve(points=points, t=t)


def _signed_area(points: FloatArray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _edges(points: FloatArray) -> tuple[FloatArray, FloatArray]:
    e = np.roll(points, -1, axis=0) - points
    return e, np.hypot(e[:, 0], e[:, 1])


def marker_curvature_normal(curve: MarkerCurve) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Per-point (kappa, inward normal, unit tangent).

    kappa is the inverse circumcircle radius of each point and its two
    neighbours, signed by orientation: positive on convex stretches.  Raises
    DegenerateTriangleError when a triple is collinear within tolerance.
    """
    pts = curve.points
    prev_pts = np.roll(pts, 1, axis=0)
    next_pts = np.roll(pts, -1, axis=0)
    e0 = pts - prev_pts
    e1 = next_pts - pts
    chord = next_pts - prev_pts
    a = np.hypot(e0[:, 0], e0[:, 1])
    b = np.hypot(e1[:, 0], e1[:, 1])
    c = np.hypot(chord[:, 0], chord[:, 1])
    if np.min(a) <= 0.0 or np.min(b) <= 0.0:
        raise DegenerateTriangleError("coincident marker points")
    cross = e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0]
    degenerate = np.abs(cross) <= 1e-14 * a * b
    if np.any(degenerate):
        idx = int(np.argmax(degenerate))
        raise DegenerateTriangleError(
            f"collinear marker triple around index {idx}; curvature undefined"
        )
    kappa = 2.0 * cross / (a * b * c)
    tangent = chord / c[:, None]
    normal_in = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    return kappa, normal_in, tangent


def _polygon_scalars(points: FloatArray, kappa: FloatArray, n: float, variant: FlowVariant):
    """(lambda, L, A, edge lengths) from polygon sums only."""
    _, el = _edges(points)
    length = float(np.sum(el))
    area = _signed_area(points)
    ds = 0.5 * (el + np.roll(el, 1))  # arc element centered on each marker
    if variant is FlowVariant.FLOW1:
        integral = float(np.sum(kappa ** (-n) * ds))
        lam = length / (2.0 * length * length - 4.0 * np.pi * area) * integral
    else:
        integral = float(np.sum(kappa ** (1.0 - n) * ds))
        lam = (length * length - 2.0 * np.pi * area) / (np.pi * length * length) * integral
    return lam, length, area, el, ds


def stable_marker_dt(curve: MarkerCurve, config: FlowConfig) -> float:
    """Euler diffusion bound: cfl_safety * ds^2 / (2 n max kappa^(-n-1))."""
    kappa, _, _ = marker_curvature_normal(curve)
    _, el = _edges(curve.points)
    ds = float(np.mean(el))
    diffusivity = config.n * float(np.max(kappa ** (-config.n - 1.0)))
    return config.cfl_safety * ds * ds / (2.0 * diffusivity)


def marker_step(curve: MarkerCurve, config: FlowConfig, dt: float) -> MarkerCurve:
    """One forward-Euler step with tangential equidistribution.

    The tangential velocity w solves the discrete condition that every edge
    length changes at the common relative rate dL/dt / L, so uniform spacing
    is preserved to O(dt * spacing^2) without resampling.  Raises
    NonconvexDetectedError when any discrete curvature is nonpositive.
    """
    kappa, normal_in, tangent = marker_curvature_normal(curve)
    if np.min(kappa) <= 0.0:
        raise NonconvexDetectedError(
            f"nonpositive curvature {float(np.min(kappa)):.3e} at t={curve.t:.6g}"
        )
    n = config.n
    lam, length, area, el, ds = _polygon_scalars(curve.points, kappa, n, config.variant)
    speed = lam - kappa ** (-n)
    velocity = speed[:, None] * normal_in

    # Tangential redistribution: d|e_i|/dt under the normal motion is
    # e_hat_i . (V_{i+1} - V_i); ask every edge to follow L_t/L instead.
    edges, _ = _edges(curve.points)
    e_hat = edges / el[:, None]
    dv = np.roll(velocity, -1, axis=0) - velocity
    normal_rate = np.einsum("ij,ij->i", e_hat, dv)
    length_rate = -float(np.sum(speed * kappa * ds))
    gap = el * (length_rate / length) - normal_rate
    w = np.concatenate([[0.0], np.cumsum(gap[:-1])])
    w -= w.mean()

    new_points = curve.points + dt * (velocity + w[:, None] * tangent)
    if not np.all(np.isfinite(new_points)):
        raise FloatingPointError("marker step produced non-finite coordinates")
    new_points = _respace_if_needed(new_points)
    new_points.setflags(write=False)
    return MarkerCurve(points=new_points, t=curve.t + dt)


def _respace_if_needed(points: FloatArray) -> FloatArray:
    _, el = _edges(points)
    mean = float(np.mean(el))
    lo, hi = SPACING_RATIO_BOUNDS
    if np.min(el) >= lo * mean and np.max(el) <= hi * mean:
        return np.ascontiguousarray(points)
    return resample_uniform(points, points.shape[0])


def resample_uniform(points: np.ndarray, m: int) -> FloatArray:
    """Resample a closed polygon to m points uniform in arc length.

    Periodic cubic spline through the vertices, so resampling preserves a
    smooth underlying curve to O(spacing^4) rather than cutting corners.
    """
    closed = np.vstack([points, points[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicSpline(s, closed, bc_type="periodic")
    targets = np.linspace(0.0, s[-1], m, endpoint=False)
    return np.ascontiguousarray(spline(targets))


def run_markers(curve: MarkerCurve, config: FlowConfig, t_end: float) -> MarkerCurve:
    """Euler-step the markers to t_end (short horizons only by design)."""
    while curve.t < t_end * (1.0 - 1e-15):
        dt = min(stable_marker_dt(curve, config), t_end - curve.t)
        curve = marker_step(curve, config, dt)
    return curve


def ellipse_markers(a: float, b: float, m: int, dense: int = 4096) -> MarkerCurve:
    """Markers on the ellipse (a cos u, b sin u), uniform in arc length.

    Built from the parametric form directly -- independent of the normal-angle
    machinery the field solver uses.
    """
    u = np.linspace(0.0, 2.0 * np.pi, dense, endpoint=False)
    pts = np.column_stack([a * np.cos(u), b * np.sin(u)])
    return make_marker_curve(resample_uniform(pts, m))


def circle_markers(r: float, m: int, center: tuple[float, float] = (0.0, 0.0)) -> MarkerCurve:
    u = 2.0 * np.pi * np.arange(m) / m
    pts = np.column_stack([center[0] + r * np.cos(u), center[1] + r * np.sin(u)])
    return make_marker_curve(pts)


def _area_centroid(points: FloatArray) -> FloatArray:
    x, y = points[:, 0], points[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return np.array([cx, cy])


def _one_sided_hausdorff(pts: FloatArray, poly: FloatArray, block: int = 64) -> float:
    starts = poly
    ends = np.roll(poly, -1, axis=0)
    seg = ends - starts
    seg_len_sq = np.einsum("ij,ij->i", seg, seg)
    worst = 0.0
    for i in range(0, pts.shape[0], block):
        chunk = pts[i:i + block]
        rel = chunk[:, None, :] - starts[None, :, :]
        tpar = np.einsum("pqi,qi->pq", rel, seg) / seg_len_sq[None, :]
        np.clip(tpar, 0.0, 1.0, out=tpar)
        foot = starts[None, :, :] + tpar[:, :, None] * seg[None, :, :]
        dist = np.min(np.linalg.norm(chunk[:, None, :] - foot, axis=2), axis=1)
        worst = max(worst, float(np.max(dist)))
    return worst


def compare(theta_curve: CurvePoints, marker_curve: MarkerCurve) -> float:
    """Symmetric max point-to-polygon distance after centroid alignment.

    The field solver fixes position only up to the reconstruction base
    point, so both curves are recentered on their area centroids first.
    """
    p = theta_curve.points - _area_centroid(theta_curve.points)
    q = marker_curve.points - _area_centroid(marker_curve.points)
    return max(_one_sided_hausdorff(p, q), _one_sided_hausdorff(q, p))
