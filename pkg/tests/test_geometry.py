"""Geometry layer: grids, moments, reconstruction, areas, support values.

Derived expected values are computed by independent oracles (adaptive
quadrature for arc length, the support-function solve in closed form) and
frozen below next to the oracle that produced them.
"""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ellipe

from curveflow import (
    area,
    build_grid,
    closure_defect,
    enclosed_area,
    initial_profile,
    moment,
    reconstruct_curve,
    summarize,
    support_function,
)
from curveflow.errors import ClosureViolationError, GridSizeError, NonconvexInputError
from curveflow.geometry import make_profile, random_convex_profile

# Oracle: adaptive arc-length quadrature for the a=2, b=1 ellipse perimeter,
# cross-checked against the complete elliptic integral.  Frozen value below.
ELLIPSE_21_PERIMETER = 9.688448220547675


def ellipse_perimeter_oracle(a: float, b: float) -> float:
    val, err = quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0.0, 2.0 * np.pi,
                    limit=200)
    assert err < 1e-8
    return val


def test_ellipse_perimeter_oracle_agrees_with_frozen_value():
    assert ellipse_perimeter_oracle(2.0, 1.0) == pytest.approx(ELLIPSE_21_PERIMETER, abs=1e-9)
    assert 4 * 2.0 * ellipe(1 - 0.25) == pytest.approx(ELLIPSE_21_PERIMETER, abs=1e-12)


# Oracle: support-function solve for rho = r0 + eps*cos(m theta):
# h = r0 - eps/(m^2-1) cos(m theta),  A = 1/2 ∮ h rho dtheta
#   = pi r0^2 - pi eps^2 / (2 (m^2 - 1)).
def cosine_area_oracle(r0: float, eps: float, m: int) -> float:
    return np.pi * r0 * r0 - np.pi * eps * eps / (2.0 * (m * m - 1.0))


COSINE_03_AREA = 3.094468763785946  # r0=1, eps=0.3, m=2


def test_cosine_area_oracle_agrees_with_frozen_value():
    assert cosine_area_oracle(1.0, 0.3, 2) == pytest.approx(COSINE_03_AREA, abs=1e-15)


class TestBuildGrid:
    def test_basic_spacing_and_nodes(self):
        g = build_grid(16)
        assert g.spacing == pytest.approx(np.pi / 8, abs=0)
        assert g.nodes[4] == pytest.approx(np.pi / 2, abs=1e-15)
        assert g.nodes[0] == 0.0
        assert g.nodes[-1] == pytest.approx(2 * np.pi - g.spacing, abs=1e-12)

    def test_large_grid(self):
        g = build_grid(512)
        assert g.spacing == pytest.approx(0.0122718, abs=1e-7)
        assert np.all(np.diff(g.nodes) > 0)

    @pytest.mark.parametrize("bad", [15, 14, 0, -4, 17, 250 + 1])
    def test_invalid_sizes_rejected(self, bad):
        with pytest.raises(GridSizeError):
            build_grid(bad)


class TestMoment:
    def test_constant_profiles(self, grid256):
        one = initial_profile("circle", {"r": 1.0}, grid256)
        two = initial_profile("circle", {"r": 2.0}, grid256)
        assert moment(one, 3.0) == pytest.approx(2 * np.pi, rel=1e-15)
        assert moment(two, 2.0) == pytest.approx(8 * np.pi, rel=1e-15)

    def test_pure_mode_integrates_to_mean(self, grid256):
        p = initial_profile("cosine", {"r0": 1.0, "eps": 0.3, "m": 2}, grid256)
        assert moment(p, 1.0) == pytest.approx(2 * np.pi, rel=1e-14)

    def test_ellipse_perimeter(self):
        g = build_grid(1024)
        p = initial_profile("ellipse", {"a": 2.0, "b": 1.0}, g)
        assert moment(p, 1.0) == pytest.approx(ELLIPSE_21_PERIMETER, abs=1e-6)

    def test_quadrature_exact_for_resolved_trig_polynomials(self, grid256):
        # trapezoid on a uniform periodic grid integrates e^{ik theta}
        # exactly for 0 < |k| < N; degree < N/2 is well inside that
        theta = grid256.nodes
        rho = 1.5 + 0.2 * np.cos(7 * theta) - 0.1 * np.sin(100 * theta)
        p = make_profile(grid256, rho)
        assert moment(p, 1.0) == pytest.approx(2 * np.pi * 1.5, rel=1e-14)


class TestClosureDefect:
    def test_circle_zero(self, grid256):
        p = initial_profile("circle", {"r": 1.0}, grid256)
        assert np.hypot(*closure_defect(p)) < 1e-14

    def test_mode2_zero(self, grid256):
        p = initial_profile("cosine", {"r0": 1.0, "eps": 0.3, "m": 2}, grid256)
        assert np.hypot(*closure_defect(p)) < 1e-14

    def test_mode1_detected_and_rejected(self, grid256):
        rho = 1.0 + 0.3 * np.cos(grid256.nodes)
        with pytest.raises(ClosureViolationError):
            make_profile(grid256, rho)
        p = make_profile(grid256, rho, check_closure=False)
        defect = closure_defect(p)
        assert defect[0] == pytest.approx(0.3 * np.pi, rel=1e-12)
        assert abs(defect[1]) < 1e-14


class TestReconstruct:
    def test_unit_circle_through_base(self, grid512):
        p = initial_profile("circle", {"r": 1.0}, grid512)
        curve = reconstruct_curve(p, base=(1.0, 0.0))
        np.testing.assert_allclose(curve.points[0], [1.0, 0.0], atol=1e-14)
        idx = grid512.size // 2  # theta = pi
        np.testing.assert_allclose(curve.points[idx], [-1.0, 0.0], atol=1e-6)

    @pytest.mark.parametrize("r,base", [(1.0, (0.0, 0.0)), (2.5, (3.0, -1.0))])
    def test_circle_radius_everywhere(self, grid512, r, base):
        p = initial_profile("circle", {"r": r}, grid512)
        curve = reconstruct_curve(p, base=base)
        center = np.array([base[0] - r, base[1]])
        radii = np.hypot(*(curve.points - center).T)
        assert np.max(np.abs(radii - r)) <= 1e-6

    def test_closure_violation_raises(self, grid256):
        p = make_profile(grid256, 1.0 + 0.3 * np.cos(grid256.nodes), check_closure=False)
        with pytest.raises(ClosureViolationError):
            reconstruct_curve(p)

    def test_positively_oriented_and_closed(self, ellipse21_512):
        curve = reconstruct_curve(ellipse21_512)
        x, y = curve.points[:, 0], curve.points[:, 1]
        shoelace = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert shoelace > 0
        # true closure: the trace returns to X_0 after one period, so the
        # wrap gap is the (rotated) closure defect
        g = curve.grid
        wrap_gap = np.hypot(
            g.spacing * np.sum(-ellipse21_512.rho * np.sin(g.nodes)),
            g.spacing * np.sum(ellipse21_512.rho * np.cos(g.nodes)),
        )
        assert wrap_gap <= 1e-8 * ELLIPSE_21_PERIMETER
        # one-step rectangle extrapolation from the last node back to the
        # first is consistent at O(spacing^2)
        tangent_last = np.array([-np.sin(g.nodes[-1]), np.cos(g.nodes[-1])])
        step_gap = np.hypot(
            *(curve.points[-1] + ellipse21_512.rho[-1] * tangent_last * g.spacing
              - curve.points[0])
        )
        assert step_gap <= 10.0 * g.spacing**2


class TestArea:
    def test_unit_circle(self, grid512):
        p = initial_profile("circle", {"r": 1.0}, grid512)
        assert area(reconstruct_curve(p)) == pytest.approx(np.pi, abs=1e-5)

    def test_ellipse(self, ellipse21_512):
        assert area(reconstruct_curve(ellipse21_512)) == pytest.approx(2 * np.pi, abs=1e-5)

    def test_cosine_profile_against_support_oracle(self, grid512):
        p = initial_profile("cosine", {"r0": 1.0, "eps": 0.3, "m": 2}, grid512)
        assert area(reconstruct_curve(p)) == pytest.approx(COSINE_03_AREA, abs=1e-5)

    def test_spectral_area_matches_oracles(self, grid256):
        circle = initial_profile("circle", {"r": 1.0}, grid256)
        assert enclosed_area(circle) == pytest.approx(np.pi, rel=1e-15)
        cos = initial_profile("cosine", {"r0": 1.0, "eps": 0.3, "m": 2}, grid256)
        assert enclosed_area(cos) == pytest.approx(COSINE_03_AREA, rel=1e-14)
        ell = initial_profile("ellipse", {"a": 2.0, "b": 1.0}, grid256)
        assert enclosed_area(ell) == pytest.approx(2 * np.pi, rel=1e-13)

    def test_second_order_or_better_in_spacing(self):
        errs = []
        for size in (64, 128):
            g = build_grid(size)
            p = initial_profile("ellipse", {"a": 2.0, "b": 1.0}, g)
            errs.append(abs(area(reconstruct_curve(p)) - 2 * np.pi))
        assert errs[1] < errs[0] / 4.0


class TestSupportFunction:
    def test_unit_circle_origin(self, grid256):
        p = initial_profile("circle", {"r": 1.0}, grid256)
        s = support_function(reconstruct_curve(p, base=(1.0, 0.0)))
        np.testing.assert_allclose(s, 1.0, atol=1e-13)

    def test_translated_circle(self, grid256):
        # center (1, 2): s(theta) = 1 + cos(theta) + 2 sin(theta)
        p = initial_profile("circle", {"r": 1.0}, grid256)
        s = support_function(reconstruct_curve(p, base=(2.0, 2.0)))
        expected = 1.0 + np.cos(grid256.nodes) + 2.0 * np.sin(grid256.nodes)
        np.testing.assert_allclose(s, expected, atol=1e-12)
        assert np.max(s) == pytest.approx(1.0 + np.sqrt(5.0), abs=1e-3)

    def test_ellipse_axis_values(self, ellipse21_512):
        # base (b^2/a at theta=0... the theta=0 point of the ellipse is (a, 0)
        curve = reconstruct_curve(ellipse21_512, base=(2.0, 0.0))
        s = support_function(curve)
        assert s[0] == pytest.approx(2.0, abs=1e-10)
        assert s[curve.grid.size // 4] == pytest.approx(1.0, abs=1e-10)


class TestInitialProfile:
    def test_circle(self, grid256):
        p = initial_profile("circle", {"r": 1.0}, grid256)
        np.testing.assert_array_equal(p.rho, 1.0)

    def test_cosine_nonconvex_rejected(self, grid256):
        with pytest.raises(NonconvexInputError):
            initial_profile("cosine", {"r0": 1.0, "eps": 1.2, "m": 2}, grid256)

    def test_cosine_mode1_rejected(self, grid256):
        with pytest.raises(ClosureViolationError):
            initial_profile("cosine", {"r0": 1.0, "eps": 0.1, "m": 1}, grid256)

    def test_ellipse_axis_radii(self, grid256):
        p = initial_profile("ellipse", {"a": 2.0, "b": 1.0}, grid256)
        assert p.rho[0] == pytest.approx(0.5, rel=1e-14)     # b^2/a
        assert p.rho[grid256.size // 4] == pytest.approx(4.0, rel=1e-14)  # a^2/b

    def test_fourier_family(self, grid256):
        p = initial_profile("fourier", {"a0": 1.0, "cos2": 0.1, "sin3": -0.05}, grid256)
        expected = 1.0 + 0.1 * np.cos(2 * grid256.nodes) - 0.05 * np.sin(3 * grid256.nodes)
        np.testing.assert_allclose(p.rho, expected, atol=1e-15)

    def test_fourier_mode1_rejected(self, grid256):
        with pytest.raises(ClosureViolationError):
            initial_profile("fourier", {"a0": 1.0, "cos1": 0.1}, grid256)

    def test_fourier_bad_key_rejected(self, grid256):
        with pytest.raises(ValueError):
            initial_profile("fourier", {"a0": 1.0, "wiggle3": 0.1}, grid256)

    def test_unknown_family(self, grid256):
        with pytest.raises(ValueError):
            initial_profile("superellipse", {"a": 1.0}, grid256)

    def test_missing_and_extra_params(self, grid256):
        with pytest.raises(ValueError):
            initial_profile("circle", {}, grid256)
        with pytest.raises(ValueError):
            initial_profile("circle", {"r": 1.0, "tilt": 0.2}, grid256)


class TestInvariants:
    def test_isoperimetric_inequality_random_profiles(self, grid256, rng):
        for _ in range(200):
            profile, _ = random_convex_profile(grid256, rng)
            s = summarize(profile)
            assert s.iso_difference >= -1e-9 * s.length**2
            assert s.iso_ratio >= 1.0 - 1e-9

    def test_translation_invariance(self, ellipse21_512, rng):
        base = tuple(rng.uniform(-5, 5, size=2))
        c0 = reconstruct_curve(ellipse21_512)
        c1 = reconstruct_curve(ellipse21_512, base=base)
        assert area(c1) == pytest.approx(area(c0), rel=1e-12)
        np.testing.assert_allclose(
            c1.points - c1.points[0], c0.points - c0.points[0], atol=1e-12
        )

    def test_closure_defect_zero_for_admissible_fourier_modes(self, grid256, rng):
        for _ in range(50):
            profile, _ = random_convex_profile(grid256, rng)
            defect = np.hypot(*closure_defect(profile))
            assert defect < 1e-13

    def test_reconstruction_consistency_second_order(self):
        # curvature recomputed from points by circumcircle vs 1/rho
        from curveflow.markers import make_marker_curve, marker_curvature_normal

        errs = []
        for size in (128, 256):
            g = build_grid(size)
            p = initial_profile("ellipse", {"a": 2.0, "b": 1.0}, g)
            curve = reconstruct_curve(p)
            kappa, _, _ = marker_curvature_normal(make_marker_curve(curve.points))
            errs.append(np.max(np.abs(kappa - 1.0 / p.rho)))
        assert errs[0] < 2e-2
        assert 2.5 < errs[0] / errs[1] < 6.0

    def test_summary_fields_consistent(self, ellipse21_512):
        s = summarize(ellipse21_512)
        assert s.length == pytest.approx(ELLIPSE_21_PERIMETER, abs=1e-10)
        assert s.area == pytest.approx(2 * np.pi, rel=1e-12)
        assert s.kappa_min == pytest.approx(0.25, rel=1e-12)
        assert s.kappa_max == pytest.approx(2.0, rel=1e-12)
        assert s.iso_difference == pytest.approx(s.length**2 - 4 * np.pi * s.area, rel=1e-12)
