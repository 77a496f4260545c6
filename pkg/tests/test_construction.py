import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from ratio_lab.construction import (
    ConstructionParams,
    DomainError,
    ResourceProfile,
    ball_volume,
    diffusion_rate,
    gamma_half_integer,
    in_parameter_triangle,
    interior_triangle_point,
    make_resource_profile,
    ratio_lower_bound,
    sphere_area,
    sub_solution_derivatives,
    sub_solution_l1_norm,
    sub_solution_laplacian,
    sub_solution_value,
    super_solution_value,
    triangle_slacks,
    triangle_vertices,
)

E = math.e
NS = (2, 3, 4)
EPSS = (0.5, 0.1, 0.01)


def quad_sub_l1(n, eps, c2):
    """Piecewise adaptive quadrature of A_n int v r^(n-1) dr, split at eps."""
    p = ConstructionParams(n, eps, 1e-3, c2)
    f = lambda r: float(sub_solution_value(p, r)) * r ** (n - 1)
    inner, _ = quad(f, 0.0, eps, epsabs=0, epsrel=1e-13, limit=200)
    outer, _ = quad(f, eps, 1.0, epsabs=0, epsrel=1e-13, limit=200, points=[min(1.0, 10 * eps)])
    return sphere_area(n) * (inner + outer)


# -- resource profile and diffusion -----------------------------------------


@pytest.mark.parametrize("n, eps, level", [(2, 0.5, 4.0), (1, 0.5, 2.0), (3, 0.1, 1000.0)])
def test_profile_levels(n, eps, level):
    m = make_resource_profile(n, eps)
    assert m.breakpoints == (0.0, eps, 1.0)
    assert m.values[0] == pytest.approx(level, rel=1e-14)
    assert m.values[1] == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("eps", EPSS)
def test_profile_mass_is_ball_volume(n, eps):
    m = make_resource_profile(n, eps)
    assert m.l1_norm(n) == pytest.approx(ball_volume(n), rel=1e-13)


def test_profile_inner_value_wins_at_breakpoint():
    m = make_resource_profile(2, 0.1)
    assert m(0.1) == pytest.approx(100.0)
    assert m(0.1 + 1e-12) == 0.0


def test_profile_rejects_bad_input():
    with pytest.raises(DomainError, match=r"eps must be in \(0,1\)"):
        make_resource_profile(2, 1.5)
    with pytest.raises(DomainError):
        make_resource_profile(0, 0.5)


def test_shell_integral_matches_quad():
    m = ResourceProfile((0.0, 0.3, 0.7, 1.0), (2.0, 5.0, 0.5))
    for n in (1, 2, 3):
        exact, _ = quad(lambda r: m(r) * r ** (n - 1), 0.1, 0.9, points=[0.3, 0.7])
        assert m.shell_integral(n, 0.1, 0.9) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("n, eps, c1, d", [(1, 0.04, None, 0.2), (2, 0.01, 0.05, 0.05), (3, 0.1, 0.05, 0.5)])
def test_diffusion_rate(n, eps, c1, d):
    assert diffusion_rate(n, eps, c1) == pytest.approx(d, rel=1e-14)


# -- super and sub solutions ------------------------------------------------


@pytest.mark.parametrize("n, eps, value", [(2, 0.1, 100.0), (4, 0.5, 16.0), (2, 1 - 1e-12, 1.0)])
def test_super_value(n, eps, value):
    p = ConstructionParams(n, eps, 0.01, 0.1)
    assert super_solution_value(p) == pytest.approx(value, rel=1e-10)


@pytest.mark.parametrize("r, value", [(0.0, 50.0), (0.1, 0.5 / (E * 0.01)), (1.0, 0.5 / E)])
def test_sub_values(r, value):
    p = ConstructionParams(2, 0.1, 0.05, 0.5)
    assert sub_solution_value(p, r) == pytest.approx(value, rel=1e-14)


def test_sub_value_decimals():
    p = ConstructionParams(2, 0.1, 0.05, 0.5)
    assert sub_solution_value(p, 0.1) == pytest.approx(18.394, abs=5e-4)
    assert sub_solution_value(p, 1.0) == pytest.approx(0.18394, abs=5e-6)


@pytest.mark.parametrize("n", NS)
@pytest.mark.parametrize("eps", EPSS)
def test_sub_continuous_at_eps(n, eps):
    p = ConstructionParams(n, eps, 0.01, 0.3)
    inner = 0.3 / eps**n * math.exp(-1.0)
    assert sub_solution_value(p, eps) == pytest.approx(inner, rel=1e-14)
    assert sub_solution_value(p, eps * (1 + 1e-10)) == pytest.approx(inner, rel=1e-8)


def test_sub_derivatives_examples():
    p = ConstructionParams(2, 0.1, 0.05, 0.5)
    _, d1, _ = sub_solution_derivatives(p, 0.0)
    assert d1 == 0.0
    _, d1, _ = sub_solution_derivatives(p, 0.5)
    assert d1 == pytest.approx(-0.5 * 2 / (E * 0.125), rel=1e-14)
    assert d1 == pytest.approx(-2.943, abs=5e-4)


def test_sub_derivatives_refuse_breakpoint_without_side():
    p = ConstructionParams(2, 0.1, 0.05, 0.5)
    with pytest.raises(DomainError):
        sub_solution_derivatives(p, 0.1)
    _, left, _ = sub_solution_derivatives(p, 0.1, side="inner")
    _, right, _ = sub_solution_derivatives(p, 0.1, side="outer")
    # the kink: inner slope is -n c2 / (e eps^(n+1)), outer is the same value
    assert left == pytest.approx(right, rel=1e-12)


@pytest.mark.parametrize("n", NS)
def test_sub_second_derivative_sign_flip(n):
    eps = 0.2
    p = ConstructionParams(n, eps, 0.01, 0.3)
    root = ((n - 1) / n) ** (1.0 / n) * eps
    _, _, below = sub_solution_derivatives(p, root * 0.99)
    _, _, above = sub_solution_derivatives(p, root * 1.01)
    assert below < 0 < above


@pytest.mark.parametrize("n", NS)
@pytest.mark.parametrize("r", [0.03, 0.07, 0.3, 0.8])
def test_sub_derivatives_match_finite_differences(n, r):
    p = ConstructionParams(n, 0.1, 0.01, 0.4)
    h = 1e-6 * r
    v = lambda x: float(sub_solution_value(p, x))
    _, d1, d2 = sub_solution_derivatives(p, r)
    assert d1 == pytest.approx((v(r + h) - v(r - h)) / (2 * h), rel=1e-6)
    h = 1e-4 * r
    assert d2 == pytest.approx((v(r + h) - 2 * v(r) + v(r - h)) / h**2, rel=1e-3)


@pytest.mark.parametrize("n", NS)
def test_laplacian_matches_radial_form(n):
    p = ConstructionParams(n, 0.2, 0.01, 0.4)
    r = np.array([0.05, 0.15, 0.5, 0.9])
    _, d1, d2 = sub_solution_derivatives(p, r)
    assert np.allclose(sub_solution_laplacian(p, r), d2 + (n - 1) * d1 / r, rtol=1e-12)


# -- triangle ---------------------------------------------------------------


def test_triangle_vertex_examples():
    a, b, c = triangle_vertices(2)
    assert (a.c1, a.c2) == (0.0, 0.0)
    assert b.c1 == pytest.approx(1 / (4 * (E + 1)))
    assert b.c2 == pytest.approx(E / (E + 1))
    assert b.c2 == pytest.approx(0.73106, abs=5e-6)
    assert (c.c1, c.c2) == (pytest.approx(0.25), 0.0)
    assert triangle_vertices(3)[2].c1 == pytest.approx(1 / 12)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_vertices_make_both_constraints_tight(n):
    _, apex, base = triangle_vertices(n)
    s1, s2 = triangle_slacks(n, apex.c1, apex.c2)
    assert abs(s1) < 1e-14 and abs(s2) < 1e-14
    assert abs(triangle_slacks(n, base.c1, base.c2)[0]) < 1e-14


@pytest.mark.parametrize("c1, c2, inside", [(1 / (4 * (E + 1)), E / (E + 1), True), (0.3, 0.5, False), (0.05, 0.25, True)])
def test_membership_examples(c1, c2, inside):
    assert in_parameter_triangle(2, c1, c2) is inside


def test_centroid():
    c = interior_triangle_point(2, 1.0)
    assert c.c1 == pytest.approx((1 / (4 * (E + 1)) + 0.25) / 3)
    assert c.c2 == pytest.approx(E / (E + 1) / 3)


def test_half_shrink_has_strict_slack():
    c = interior_triangle_point(3, 0.5)
    assert min(triangle_slacks(3, c.c1, c.c2)) > 0


@given(n=st.integers(2, 8), shrink=st.floats(0.01, 1.0))
def test_interior_point_always_inside(n, shrink):
    c = interior_triangle_point(n, shrink)
    assert in_parameter_triangle(n, c.c1, c.c2)
    assert min(triangle_slacks(n, c.c1, c.c2)) > 0


def test_interior_point_rejects_bad_shrink():
    with pytest.raises(DomainError):
        interior_triangle_point(2, 0.0)
    with pytest.raises(DomainError):
        interior_triangle_point(1)


# -- closed forms -----------------------------------------------------------


def test_l1_norm_example():
    val = sub_solution_l1_norm(2, 0.01, 0.5)
    assert val == pytest.approx(0.5 * 2 * math.pi * (0.5 * (1 - 1 / E) + math.log(100) / E), rel=1e-14)
    assert val == pytest.approx(6.3151, abs=5e-4)


def test_l1_norm_limit_at_unit_radius():
    val = sub_solution_l1_norm(2, 1 - 1e-12, 0.4)
    assert val == pytest.approx(0.4 * 2 * math.pi * 0.5 * (1 - 1 / E), rel=1e-9)


def test_lower_bound_example():
    assert ratio_lower_bound(2, 0.01, E / (E + 1)) == pytest.approx(2.9393, abs=5e-4)


@pytest.mark.parametrize("n", NS)
@pytest.mark.parametrize("eps", EPSS)
def test_l1_norm_matches_quadrature(n, eps):
    c2 = 0.3
    assert sub_solution_l1_norm(n, eps, c2) == pytest.approx(quad_sub_l1(n, eps, c2), rel=1e-8)


@pytest.mark.parametrize("n", NS)
@pytest.mark.parametrize("eps", EPSS)
def test_lower_bound_matches_quadrature(n, eps):
    c2 = 0.3
    # mass of m_eps is |B_1^n|, so the bound is the sub-solution mass over that
    assert ratio_lower_bound(n, eps, c2) == pytest.approx(quad_sub_l1(n, eps, c2) / ball_volume(n), rel=1e-8)


@given(
    n=st.integers(2, 6),
    eps=st.floats(1e-6, 0.99),
    c2=st.floats(1e-3, 1.0),
)
@settings(max_examples=60)
def test_lower_bound_affine_in_log(n, eps, c2):
    expected = c2 * (1 - 1 / E + n / E * abs(math.log(eps)))
    assert ratio_lower_bound(n, eps, c2) == pytest.approx(expected, rel=1e-12)


# -- measures ---------------------------------------------------------------


def test_measure_examples():
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert sphere_area(1) == ball_volume(1) == 1.0


@pytest.mark.parametrize("n", range(2, 12))
def test_measures_match_gamma(n):
    assert sphere_area(n) == pytest.approx(2 * math.pi ** (n / 2) / gamma(n / 2), rel=1e-13)
    assert ball_volume(n) == pytest.approx(sphere_area(n) / n, rel=1e-14)


@pytest.mark.parametrize("k2", range(1, 15))
def test_gamma_half_integer(k2):
    assert gamma_half_integer(k2) == pytest.approx(gamma(k2 / 2), rel=1e-14)


def test_params_validation():
    with pytest.raises(DomainError):
        ConstructionParams(2, 0.1, 0.0, 0.3)
    p = ConstructionParams(1, 0.01)
    assert p.d == pytest.approx(0.1)
    assert p.with_eps(0.04).d == pytest.approx(0.2)
