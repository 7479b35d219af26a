import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from excursion.bounds import (
    BoundTable,
    bound_table,
    direct_area_integrand,
    direct_area_integrand_c_form,
    optimize_direction,
    p_direct_2d,
    p_ec_2d,
    p_record_2d,
    p_record_3d,
    quartic_variance,
    record_ec_gap,
    sharpness_exponent,
    swiss_cheese_bound,
)
from excursion.gauss import barPhi, phi
from excursion.geom2d import GeometrySummary2D, sierpinski_radii
from excursion.geom3d import GeometrySummary3D, Polyhedron3D, polyhedron_summary
from excursion.quadform import FieldModel, hessian_negdef_bound

mp.mp.dps = 60
SQUARE = GeometrySummary2D.square(1.0)
SQRT2 = FieldModel.from_c(math.sqrt(2))
C_VALUES = (math.sqrt(2), math.sqrt(5), math.sqrt(11))


# high-precision re-evaluation of the displayed formulas, sharing no code with the package
def mp_terms(u, c):
    u, c = mp.mpf(u), mp.mpf(c)
    ph = mp.npdf(u)
    bracket = c * mp.npdf(u / c) + u * mp.ncdf(u / c)
    return u, c, ph, bracket


def mp_pe(u, area, perim, comps=1):
    u, _, ph, _ = mp_terms(u, 1)
    return comps * mp.ncdf(-u) + perim / (2 * mp.sqrt(2 * mp.pi)) * ph + area / (2 * mp.pi) * u * ph


def mp_pr(u, area, perim, c, comps=1):
    u, c, ph, bracket = mp_terms(u, c)
    return comps * mp.ncdf(-u) + perim / (2 * mp.sqrt(2 * mp.pi)) * ph + area / (2 * mp.pi) * bracket * ph


def mp_pm(u, area, perim, c):
    c = mp.mpf(c)
    rho = (c * c + 1) / 12
    edge = mp.quad(lambda x: (c * mp.npdf(x / c) + x * mp.ncdf(x / c)) * mp.npdf(x), [u, u + 10, mp.inf])
    area_int = mp.quad(
        lambda x: (x * x - 1 + (8 * rho) ** 1.5 * mp.exp(-x * x / (24 * rho - 2)) / mp.sqrt(24 * rho - 2))
        * mp.npdf(x), [u, u + 10, mp.inf])
    return mp.ncdf(-u) + perim / (2 * mp.sqrt(2 * mp.pi)) * edge + area / (2 * mp.pi) * area_int


def test_ec_at_zero_on_unit_square():
    assert p_ec_2d(0.0, SQUARE) == pytest.approx(0.818310, abs=1e-6)
    assert p_ec_2d(0.0, SQUARE) == pytest.approx(float(mp_pe(0, 1, 4)), rel=1e-14)


def test_record_at_zero_on_unit_square():
    # 0.5 + 0.318310 + (1/2pi) sqrt(2) phi(0)^2
    expected = 0.5 + 4 / (2 * math.sqrt(2 * math.pi)) * phi(0.0) + math.sqrt(2) * phi(0.0) ** 2 / (2 * math.pi)
    assert p_record_2d(0.0, SQUARE, SQRT2) == pytest.approx(expected, rel=1e-14)
    assert p_record_2d(0.0, SQUARE, SQRT2) == pytest.approx(0.854132, abs=1e-6)


@pytest.mark.parametrize("u", [0.0, 1.0, 3.0, 5.0, 8.0, 12.0])
@pytest.mark.parametrize("c", C_VALUES)
def test_record_and_ec_against_high_precision(u, c):
    g = GeometrySummary2D(2.5, 7.0, 1)
    m = FieldModel.from_c(c)
    assert p_ec_2d(u, g) == pytest.approx(float(mp_pe(u, 2.5, 7.0)), rel=1e-13)
    assert p_record_2d(u, g, m) == pytest.approx(float(mp_pr(u, 2.5, 7.0, c)), rel=1e-13)


@pytest.mark.parametrize("u", [0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 15.0])
def test_gap_matches_high_precision_difference(u):
    exact = mp_pr(u, 1, 4, math.sqrt(2)) - mp_pe(u, 1, 4)
    assert record_ec_gap(u, SQUARE, SQRT2) == pytest.approx(float(exact), rel=1e-12)
    assert record_ec_gap(u, SQUARE, SQRT2) > 0


@pytest.mark.parametrize("u", [0.0, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0])
@pytest.mark.parametrize("c", C_VALUES)
def test_direct_against_high_precision(u, c):
    m = FieldModel.from_c(c)
    assert p_direct_2d(u, SQUARE, m) == pytest.approx(float(mp_pm(u, 1, 4, c)), rel=1e-9)


def test_degenerate_geometry_reduces_to_tail():
    g = GeometrySummary2D(0.0, 0.0, 1)
    for u in (0.0, 1.5, 4.0):
        assert p_ec_2d(u, g) == barPhi(u)
        assert p_record_2d(u, g, SQRT2) == barPhi(u)
        assert p_direct_2d(u, g, SQRT2) == barPhi(u)
        assert p_record_3d(u, GeometrySummary3D(0.0, 0.0, 0.0), SQRT2) == barPhi(u)


def test_component_count_multiplies_only_the_tail_term():
    g1, g3 = GeometrySummary2D(1.0, 4.0, 1), GeometrySummary2D(1.0, 4.0, 3)
    for u in (0.0, 2.0, 5.0):
        assert p_record_2d(u, g3, SQRT2) - p_record_2d(u, g1, SQRT2) == pytest.approx(2 * barPhi(u), rel=1e-12)
        assert p_ec_2d(u, g3) - p_ec_2d(u, g1) == pytest.approx(2 * barPhi(u), rel=1e-12)


@pytest.mark.parametrize("x", [1.0, 2.5, 6.0])
@pytest.mark.parametrize("rho2", [0.25, 0.5, 1.0, 2.0])
def test_direct_integrand_forms_agree(x, rho2):
    m = FieldModel(rho2)
    assert abs(direct_area_integrand(x, m) - direct_area_integrand_c_form(x, m)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 10))
def test_direct_integrand_forms_agree_everywhere(x, c):
    m = FieldModel.from_c(c)
    a, b = direct_area_integrand(x, m), direct_area_integrand_c_form(x, m)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_direct_tolerance_range():
    for tol in (1e-13, 1e-3):
        with pytest.raises(ValueError):
            p_direct_2d(1.0, SQUARE, SQRT2, tol)


@pytest.mark.parametrize("c", C_VALUES)
def test_ec_below_record_on_200_points(c):
    m = FieldModel.from_c(c)
    u = np.linspace(0, 6, 200)
    for g in (SQUARE, GeometrySummary2D(16.0, 16.0), GeometrySummary2D(0.0625, 1.0), GeometrySummary2D(3.0, 20.0, 2)):
        assert np.all(p_ec_2d(u, g) <= p_record_2d(u, g, m))


@pytest.mark.parametrize("c", C_VALUES)
def test_record_below_direct_from_two(c):
    m = FieldModel.from_c(c)
    u = np.linspace(0, 6, 200)
    pr, pm = p_record_2d(u, SQUARE, m), p_direct_2d(u, SQUARE, m)
    assert np.all(pr[u >= 2] <= pm[u >= 2])


def test_dimension_one_term_gap_is_nonnegative():
    # int_u^inf [c phi(x/c) - x barPhi(x/c)] phi(x) dx >= 0 on [0, 10]
    c = math.sqrt(2)
    f = lambda x: (c * phi(x / c) - x * barPhi(x / c)) * phi(x)
    for u in np.linspace(0, 10, 41):
        val = sum(integrate.quad(f, a, a + 1, epsabs=0, epsrel=1e-12)[0] for a in np.arange(u, u + 12))
        assert val >= 0


def test_direct_area_correction_grows_like_u():
    # corrections over the EC area term, both written without cancellation
    c = SQRT2.c
    k = (2 * (c * c + 1) / 3) ** 1.5 * math.sqrt(math.pi) / c
    ratios = []
    for u in range(5, 11):
        a_d = integrate.quad(lambda x: k * phi(x / c) * phi(x), u, u + 20, epsabs=0, epsrel=1e-12)[0]
        a_r = c * phi(u) * float(mp.npdf(u / c) - (mp.mpf(u) / c) * mp.ncdf(-mp.mpf(u) / c))
        assert a_d > a_r > 0
        ratios.append(a_d / a_r)
    assert np.all(np.diff(ratios) > 0)
    assert ratios[-1] / ratios[0] == pytest.approx(10 / 5, rel=0.25)


@pytest.mark.parametrize("f", ["ec", "record", "direct", "record3d"])
def test_curves_are_continuous(f):
    u = np.linspace(0, 8, 81)
    h = 1e-6
    cube = polyhedron_summary(Polyhedron3D.cube())
    fn = {
        "ec": lambda x: p_ec_2d(x, SQUARE),
        "record": lambda x: p_record_2d(x, SQUARE, SQRT2),
        "direct": lambda x: p_direct_2d(x, SQUARE, SQRT2),
        "record3d": lambda x: p_record_3d(x, cube, SQRT2),
    }[f]
    jump = np.abs(fn(u + h) - fn(u))
    assert np.all(jump <= 5.0 * h)


def test_record_3d_on_unit_cube_against_high_precision():
    g = polyhedron_summary(Polyhedron3D.cube())
    for u in (0.0, 1.0, 3.0, 6.0):
        uu, c, ph, bracket = mp_terms(u, math.sqrt(2))
        rho = mp.mpf(1) / 4
        vol = uu * uu - 1 + (8 * rho) ** 1.5 * mp.exp(-uu * uu / (24 * rho - 2)) / mp.sqrt(24 * rho - 2)
        exact = (mp.ncdf(-uu) + 2 * mp.mpf(1.5) / mp.sqrt(2 * mp.pi) * ph + 6 * ph / (4 * mp.pi) * bracket
                 + ph / (2 * mp.pi) ** 1.5 * vol)
        assert p_record_3d(u, g, SQRT2) == pytest.approx(float(exact), rel=1e-13)


def test_record_3d_volume_term_is_the_shared_negdef_bound():
    g = GeometrySummary3D(1.0, 0.0, 0.0)
    for u in (0.0, 0.7, 2.0, 5.0):
        for r in (0.25, 0.5, 2.0):
            m = FieldModel(r)
            term = p_record_3d(u, g, m) - barPhi(u)
            assert term == pytest.approx(phi(u) / (2 * math.pi) ** 1.5 * hessian_negdef_bound(u, m), rel=1e-13)


def test_record_3d_decreasing_on_cube():
    g = polyhedron_summary(Polyhedron3D.cube())
    u = np.linspace(1, 10, 300)
    assert np.all(np.diff(p_record_3d(u, g, SQRT2)) < 0)


def swiss_cheese_oracle(u, c, levels):
    """Brute-force scan over every truncation n with exact running sums."""
    r = sorted(sierpinski_radii(levels), reverse=True)
    best, best_n = None, None
    s1 = s2 = 0.0
    bracket = c * phi(u / c) + u * (1 - barPhi(u / c))
    for n in range(len(r) + 1):
        if n:
            s1 += r[n - 1]
            s2 += r[n - 1] ** 2
        val = phi(u) / (2 * math.sqrt(2 * math.pi)) * (4 + 2 * math.pi * s1) \
            + (1 - math.pi * s2) * bracket * phi(u) / (2 * math.pi)
        if best is None or val < best:
            best, best_n = val, n
    return barPhi(u) + best, best_n


@pytest.mark.parametrize("u", [0, 2, 4, 5, 10, 15, 16, 20, 25])
def test_swiss_cheese_against_scan_oracle(u):
    res = swiss_cheese_bound(float(u), SQRT2, levels=3)
    value, n = swiss_cheese_oracle(float(u), SQRT2.c, 3)
    assert res.n_disks == n
    assert res.bound == pytest.approx(value, rel=1e-12)


def test_swiss_cheese_truncation_choices():
    assert swiss_cheese_bound(0.0, SQRT2).n_disks == 0
    # removing disks only pays off once the area term beats the added boundary
    assert swiss_cheese_bound(5.0, SQRT2).n_disks == 0
    assert swiss_cheese_bound(20.0, SQRT2).n_disks > 0


def test_swiss_cheese_truncation_is_monotone_in_u():
    ns = [swiss_cheese_bound(float(u), SQRT2, levels=4).n_disks for u in range(0, 31)]
    assert ns == sorted(ns)


def test_swiss_cheese_never_worse_than_the_full_square():
    for u in np.linspace(0, 10, 21):
        assert swiss_cheese_bound(u, SQRT2).bound <= p_record_2d(u, SQUARE, SQRT2) * (1 + 1e-14)


def test_optimize_direction_isotropic_returns_zero():
    rho = 0.5
    choice = optimize_direction((3 * rho, 0, rho, 0, 3 * rho))
    assert choice.angle == 0.0
    assert choice.variance == pytest.approx(1.5, rel=1e-14)


def test_optimize_direction_prefers_the_flat_axis():
    choice = optimize_direction((4.0, 0.0, 1.0, 0.0, 2.0))
    assert choice.angle == pytest.approx(math.pi / 2, abs=1e-9)
    assert choice.variance == pytest.approx(2.0, rel=1e-12)
    assert choice.c == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 5), st.floats(-0.3, 0.3), st.floats(0.5, 1.5), st.floats(-0.3, 0.3), st.floats(1.5, 5))
def test_optimize_direction_against_fine_scan(m40, m31, m22, m13, m04):
    m = (m40, m31, m22, m13, m04)
    grid = np.linspace(0, np.pi, 200_001)
    ref = quartic_variance(grid, m).min()
    if ref <= 1 + 1e-9:
        return
    choice = optimize_direction(m)
    assert choice.variance == pytest.approx(ref, rel=1e-9, abs=1e-12) or choice.variance <= ref
    assert quartic_variance(choice.angle, m) == pytest.approx(choice.variance, rel=1e-14)


def test_optimize_direction_rejects_unit_minimum():
    with pytest.raises(ValueError, match="<= 1"):
        optimize_direction((1.0, 0.0, 1 / 3, 0.0, 1.0))
    with pytest.raises(ValueError):
        optimize_direction((1.0, 2.0))


def test_sharpness_inverse_of_definition():
    c = math.sqrt(2)
    for u in (1.0, 4.0, 10.0):
        delta = math.exp(-u * u * (1 + 1 / c ** 2) / 2)
        assert sharpness_exponent(u, delta) == pytest.approx(1 + 1 / c ** 2, rel=1e-14)


def test_sharpness_rejects_crossed_bounds():
    with pytest.raises(ArithmeticError):
        sharpness_exponent(2.0, 0.0)
    with pytest.raises(ArithmeticError):
        sharpness_exponent(2.0, -1e-20)
    with pytest.raises(ValueError):
        sharpness_exponent(0.0, 0.1)


def test_sharpness_on_unit_square_tends_to_limit():
    # r(u) decreases toward 1 + 1/c^2 from above; u = 10 is closer than u = 8
    r = [sharpness_exponent(u, record_ec_gap(u, SQUARE, SQRT2)) for u in (6, 8, 10, 20, 30)]
    assert all(x >= 1.4 for x in r)
    assert abs(r[2] - 1.5) < abs(r[1] - 1.5)
    assert np.all(np.diff(r) < 0)
    assert r[-1] == pytest.approx(1.5, abs=0.025)


def test_bound_table_invariants():
    t = bound_table(np.linspace(0, 6, 61), SQUARE, SQRT2)
    assert isinstance(t, BoundTable)
    assert np.all(t.pe >= 0) and np.all(t.pe <= t.pr)
    for curve in (t.pe, t.pr, t.pm):
        start = np.argmax(curve < 1)
        assert np.all(np.diff(curve[start:]) < 0)
    assert t.pm[0] > 1 and t.clamped().pm[0] == 1
    assert t.metadata["c"] == pytest.approx(math.sqrt(2))
    assert len(list(t.rows())) == 61
