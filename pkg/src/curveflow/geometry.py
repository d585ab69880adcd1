"""Convex closed plane curves represented by radius-of-curvature profiles.

A convex closed curve is parametrized globally by the outward normal angle
theta in [0, 2pi); the scalar profile rho(theta) = 1/kappa > 0 determines the
curve up to translation, provided the closure condition

    integral rho(theta) * (cos theta, sin theta) dtheta = 0

holds (the first Fourier modes of rho vanish).  Everything here lives on a
uniform periodic grid, where the trapezoid rule is spectrally accurate for
smooth integrands, and Fourier identities give the enclosed area

    A = pi * sum_{k != +-1} |rho_hat_k|^2 / (1 - k^2)

which is exact for band-limited profiles.  Points are recovered from
dX/dtheta = rho * (-sin theta, cos theta) by the FFT antiderivative.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .errors import (
    ClosureViolationError,
    DegenerateGeometryError,
    GridSizeError,
    NonconvexInputError,
)

FloatArray = NDArray[np.float64]

#: Relative tolerance on the closure defect for a profile to count as a
#: closed curve.  Closure is analytically conserved by the flow, so any
#: drift beyond this is a numerics bug, not physics.
CLOSURE_RTOL = 1e-8

MIN_GRID_SIZE = 16


def _frozen(a: np.ndarray) -> FloatArray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AngularGrid:
    """Uniform periodic grid of outward-normal angles theta_i = 2*pi*i/N."""

    size: int
    nodes: FloatArray
    spacing: float

    @property
    def cos_nodes(self) -> FloatArray:
        return _grid_trig(self.size)[0]

    @property
    def sin_nodes(self) -> FloatArray:
        return _grid_trig(self.size)[1]


@lru_cache(maxsize=32)
def _grid_trig(size: int) -> tuple[FloatArray, FloatArray]:
    nodes = 2.0 * np.pi * np.arange(size) / size
    return _frozen(np.cos(nodes)), _frozen(np.sin(nodes))


@dataclass(frozen=True)
class RadiusProfile:
    """Samples rho_i = rho(theta_i) > 0 of the radius of curvature."""

    grid: AngularGrid
    rho: FloatArray


@dataclass(frozen=True)
class CurvePoints:
    """Planar points X_i tracing the curve once, positively oriented."""

    grid: AngularGrid
    points: FloatArray  # shape (N, 2)


@dataclass(frozen=True)
class GeometricSummary:
    """Scalar functionals of one profile."""

    length: float
    area: float
    iso_difference: float  # L^2 - 4*pi*A
    iso_ratio: float       # L^2 / (4*pi*A)
    kappa_min: float
    kappa_max: float


def build_grid(size: int) -> AngularGrid:
    """Build the uniform periodic angle grid with N = `size` nodes.

    Requires N >= 16 and N even (even size keeps the Nyquist bookkeeping of
    the spectral area formula exact).
    """
    if size < MIN_GRID_SIZE or size % 2 != 0:
        raise GridSizeError(
            f"grid size must be an even integer >= {MIN_GRID_SIZE}, got {size}"
        )
    nodes = 2.0 * np.pi * np.arange(size) / size
    return AngularGrid(size=size, nodes=_frozen(nodes), spacing=2.0 * np.pi / size)


def make_profile(grid: AngularGrid, rho: np.ndarray, check_closure: bool = True) -> RadiusProfile:
    """Validate samples and wrap them as a RadiusProfile.

    Positivity is required always (convexity); the closure defect is checked
    against CLOSURE_RTOL relative to the length unless `check_closure` is off.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} samples, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise NonconvexInputError("profile contains non-finite values")
    if np.min(rho) <= 0.0:
        raise NonconvexInputError(
            f"radius of curvature must be positive everywhere, min is {np.min(rho):.6g}"
        )
    profile = RadiusProfile(grid=grid, rho=_frozen(rho))
    if check_closure:
        defect = float(np.hypot(*closure_defect(profile)))
        length = moment(profile, 1.0)
        if defect > CLOSURE_RTOL * length:
            raise ClosureViolationError(
                f"closure defect {defect:.3e} exceeds {CLOSURE_RTOL:g} * L = "
                f"{CLOSURE_RTOL * length:.3e}; profile has first-mode content"
            )
    return profile


def moment(profile: RadiusProfile, m: float) -> float:
    """Periodic trapezoid value of the integral of rho^m over the circle.

    moment(p, 1) is the curve length L; moment(p, n+1) appears in the
    nonlocal terms and in the Lin-Tsai inequality.
    """
    rho = profile.rho
    vals = rho if m == 1.0 else rho**m
    return float(profile.grid.spacing * np.sum(vals))


def closure_defect(profile: RadiusProfile) -> FloatArray:
    """First Fourier mode integrals (closure defect vector).

    Returns (integral rho cos, integral rho sin); both vanish exactly for the
    radius function of a closed convex curve.
    """
    g = profile.grid
    rho = profile.rho
    return np.array(
        [g.spacing * float(np.dot(rho, g.cos_nodes)),
         g.spacing * float(np.dot(rho, g.sin_nodes))]
    )


@lru_cache(maxsize=32)
def _area_weights(size: int) -> FloatArray:
    # Combined multiplicity and 1/(1-k^2) weights for the rfft half-spectrum;
    # modes +-1 carry weight zero (their content is the closure defect).
    k = np.arange(size // 2 + 1)
    w = np.zeros(k.size)
    w[0] = 1.0
    w[2:] = 2.0 / (1.0 - k[2:].astype(np.float64) ** 2)
    if size % 2 == 0:
        w[-1] *= 0.5  # Nyquist bin is not doubled
    return _frozen(w)


def length_and_area(rho: np.ndarray, size: int) -> tuple[float, float]:
    """Length and enclosed area from one real FFT of the rho samples.

    L = 2*pi*mean(rho); A = pi * sum_k |rho_hat_k|^2 / (1 - k^2) over
    k != +-1.  Exact for trigonometric-polynomial profiles, spectrally
    accurate for smooth ones, and exact on circles, which keeps constant
    profiles exact equilibria of the discrete flow.
    """
    c = np.fft.rfft(rho)
    length = 2.0 * np.pi * c[0].real / size
    re, im = c.real, c.imag
    weights = _area_weights(size)
    area = np.pi / size**2 * (float(np.dot(weights, re * re)) + float(np.dot(weights, im * im)))
    return float(length), float(area)


def enclosed_area(profile: RadiusProfile) -> float:
    """Enclosed area of the convex curve defined by the profile."""
    return length_and_area(profile.rho, profile.grid.size)[1]


def summarize(profile: RadiusProfile) -> GeometricSummary:
    """All scalar functionals of a profile in one pass."""
    length, area = length_and_area(profile.rho, profile.grid.size)
    if length <= 0.0 or area <= 0.0:
        raise DegenerateGeometryError(f"degenerate curve: L={length:.6g}, A={area:.6g}")
    q = length * length - 4.0 * np.pi * area
    rho_min = float(np.min(profile.rho))
    rho_max = float(np.max(profile.rho))
    return GeometricSummary(
        length=length,
        area=area,
        iso_difference=q,
        iso_ratio=length * length / (4.0 * np.pi * area),
        kappa_min=1.0 / rho_max,
        kappa_max=1.0 / rho_min,
    )


def periodic_antiderivative(values: np.ndarray, grid: AngularGrid) -> FloatArray:
    """Antiderivative of grid samples with G(theta_0) = 0, via FFT.

    The mean of the samples contributes a linear (non-periodic) term; for
    closure-defect-free integrands that term is zero to roundoff.
    """
    n = grid.size
    c = np.fft.fft(values)
    k = np.fft.fftfreq(n, d=1.0 / n)
    ci = np.zeros_like(c)
    ci[1:] = c[1:] / (1j * k[1:])
    periodic = np.real(np.fft.ifft(ci))
    linear = (c[0].real / n) * grid.nodes
    out = periodic + linear
    return out - out[0]


def reconstruct_curve(
    profile: RadiusProfile, base: tuple[float, float] = (0.0, 0.0)
) -> CurvePoints:
    """Trace the curve from its profile, starting at X(theta_0) = `base`.

    Integrates dX/dtheta = rho(theta) * (-sin theta, cos theta) spectrally.
    Raises ClosureViolationError when the profile's closure defect exceeds
    tolerance (the trace would not close).
    """
    g = profile.grid
    defect = float(np.hypot(*closure_defect(profile)))
    length = moment(profile, 1.0)
    if defect > CLOSURE_RTOL * length:
        raise ClosureViolationError(
            f"cannot reconstruct: closure defect {defect:.3e} > {CLOSURE_RTOL:g} * L"
        )
    x = periodic_antiderivative(-profile.rho * g.sin_nodes, g) + base[0]
    y = periodic_antiderivative(profile.rho * g.cos_nodes, g) + base[1]
    return CurvePoints(grid=g, points=_frozen(np.column_stack([x, y])))


def area(curve: CurvePoints) -> float:
    """Enclosed area of the traced curve.

    Shoelace sum of the polygon plus the circular-arc correction
    (spacing/12) * sum |chord|^2 for the area cut off by each chord; the
    correction removes the O(spacing^2) inscription deficit, leaving
    O(spacing^4).
    """
    pts = curve.points
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    poly = 0.5 * float(np.sum(x * yn - xn * y))
    chord_sq = float(np.sum((xn - x) ** 2 + (yn - y) ** 2))
    value = poly + curve.grid.spacing / 12.0 * chord_sq
    if value <= 0.0:
        raise DegenerateGeometryError(
            f"non-positive polygon area {value:.6g}; orientation bug"
        )
    return value


def support_function(curve: CurvePoints) -> FloatArray:
    """Support values s(theta_i) = <X_i, (cos theta_i, sin theta_i)>.

    Measured relative to the coordinate origin, so they encode the curve's
    position as well as its shape.
    """
    g = curve.grid
    return curve.points[:, 0] * g.cos_nodes + curve.points[:, 1] * g.sin_nodes


def initial_profile(family: str, params: dict[str, float], grid: AngularGrid) -> RadiusProfile:
    """Build a named initial profile.

    Families:
      circle  {r}          rho = r
      ellipse {a, b}       rho = a^2 b^2 / (a^2 cos^2 + b^2 sin^2)^(3/2)
      cosine  {r0, eps, m} rho = r0 + eps*cos(m*theta), integer m >= 2
      fourier {a0, cos<m>/sin<m>...}  modes 0 and >= 2 only

    Mode-1 content is rejected (ClosureViolationError) rather than projected
    out, so ill-posed inputs fail loudly; profiles that dip to rho <= 0
    raise NonconvexInputError.
    """
    theta = grid.nodes
    extra = set(params)

    def take(name: str) -> float:
        if name not in params:
            raise ValueError(f"family {family!r} requires parameter {name!r}")
        extra.discard(name)
        return float(params[name])

    if family == "circle":
        rho = np.full(grid.size, take("r"))
    elif family == "ellipse":
        a, b = take("a"), take("b")
        if a <= 0 or b <= 0:
            raise NonconvexInputError(f"ellipse axes must be positive: a={a}, b={b}")
        rho = a * a * b * b / (a * a * np.cos(theta) ** 2 + b * b * np.sin(theta) ** 2) ** 1.5
    elif family == "cosine":
        r0, eps, m_f = take("r0"), take("eps"), take("m")
        m = int(m_f)
        if m != m_f or m < 1:
            raise ValueError(f"cosine mode must be a positive integer, got {m_f}")
        if m == 1:
            raise ClosureViolationError("cosine mode 1 breaks the closure condition")
        rho = r0 + eps * np.cos(m * theta)
    elif family == "fourier":
        rho = np.full(grid.size, take("a0"))
        for key in sorted(extra):
            kind, mode = parse_fourier_key(key)
            if mode > grid.size // 2 - 1:
                raise ValueError(f"mode {mode} unresolvable on a {grid.size}-node grid")
            coef = float(params[key])
            rho = rho + coef * (np.cos if kind == "cos" else np.sin)(mode * theta)
        extra.clear()
    else:
        raise ValueError(f"unknown profile family {family!r}")

    if extra:
        raise ValueError(f"unexpected parameter(s) for family {family!r}: {sorted(extra)}")
    return make_profile(grid, rho)


def parse_fourier_key(key: str) -> tuple[str, int]:
    """Split a `fourier` family key like "cos3"/"sin5" into (kind, mode).

    Mode 1 is rejected (closure), anything else malformed is a ValueError.
    """
    for kind in ("cos", "sin"):
        if key.startswith(kind):
            tail = key[len(kind):]
            if tail.isdigit():
                mode = int(tail)
                if mode == 1:
                    raise ClosureViolationError(
                        f"{key}: mode 1 breaks the closure condition"
                    )
                if mode >= 2:
                    return kind, mode
    raise ValueError(
        f"bad fourier coefficient key {key!r}; expected a0, cos<m> or sin<m> with m >= 2"
    )


def random_convex_profile(
    grid: AngularGrid,
    rng: np.random.Generator,
    modes: tuple[int, int] = (2, 8),
    amplitude: float = 0.3,
    base_radius: float = 1.0,
) -> tuple[RadiusProfile, dict[str, float]]:
    """Rejection-sample a random convex profile on modes 0 and [modes[0], modes[1]].

    Coefficients are uniform in +-amplitude*base_radius/m^2; draws are
    rejected until min rho >= 0.1*base_radius, so every returned profile is
    uniformly convex.  Returns the profile plus its `fourier` family params
    for serialization/replay.  Deterministic given the generator state.
    """
    lo, hi = modes
    theta = grid.nodes
    while True:
        params: dict[str, float] = {"a0": base_radius}
        rho = np.full(grid.size, base_radius)
        for m in range(lo, hi + 1):
            scale = amplitude * base_radius / (m * m)
            for kind, basis in (("cos", np.cos), ("sin", np.sin)):
                coef = float(rng.uniform(-scale, scale))
                params[f"{kind}{m}"] = coef
                rho = rho + coef * basis(m * theta)
        if np.min(rho) >= 0.1 * base_radius:
            return make_profile(grid, rho), params
