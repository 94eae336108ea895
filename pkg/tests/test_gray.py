import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import geoball as gb
from geoball.errors import DomainError, QuadratureError
from geoball.gray import (
    fit_series,
    lead_factor,
    legacy_tau_coefficient,
    loglog_slope,
    model_coefficients,
    tau_coefficient,
    volume_balance,
)
from geoball.curvature import CurvatureFrame

from conftest import PRODUCT_GENERIC, SPHERE_GENERIC, TORUS_GENERIC, HYPERBOLIC_GENERIC
from oracles import space_form_ball_series

RADII = np.geomspace(0.05, 0.5, 10)


def test_lead_factor():
    assert lead_factor(4, 1.0) == pytest.approx(math.pi**2 / 2, rel=1e-15)
    assert lead_factor(3, 1.0) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert lead_factor(2, 2.0) == pytest.approx(4 * math.pi, rel=1e-15)


def test_tau_coefficients():
    assert tau_coefficient(4) == pytest.approx(6.5, rel=1e-15)
    assert legacy_tau_coefficient(4) == pytest.approx(1 / 6, rel=1e-15)


def test_sphere_coefficients(sphere):
    c = gb.gray_coefficients(gb.curvature_frame(sphere, SPHERE_GENERIC), legacy=True)
    assert c.a2 == pytest.approx(-1 / 3, rel=1e-12)
    assert c.a4_original == pytest.approx(13 / 240, rel=1e-10)
    assert c.a4_rewritten == pytest.approx(13 / 240, rel=1e-10)
    assert c.a4_legacy == pytest.approx(1 / 720, rel=1e-10)


def test_hyperbolic_coefficients(hyperbolic):
    c = gb.gray_coefficients(gb.curvature_frame(hyperbolic, HYPERBOLIC_GENERIC))
    assert c.a2 == pytest.approx(1 / 3, rel=1e-12)
    assert c.a4_original == pytest.approx(13 / 240, rel=1e-10)
    assert c.a4_legacy is None


def test_flat_coefficients(torus):
    c = gb.gray_coefficients(gb.curvature_frame(torus, TORUS_GENERIC))
    assert c.a2 == 0 and c.a4_original == 0 and c.a4_rewritten == 0


@pytest.mark.parametrize("c", [1, -1])
def test_model_coefficients_match_sympy_series(c):
    ser = space_form_ball_series(c)
    mc = model_coefficients(c)
    assert mc.a2 == pytest.approx(float(ser[2]), rel=1e-14)
    assert mc.a4_original == pytest.approx(float(ser[4]), rel=1e-14)


def test_two_dimensional_frame_has_no_rewrite():
    f = CurvatureFrame.from_invariants(2, 2.0, 4.0, 2.0, float("nan"), 0.0)
    c = gb.gray_coefficients(f)
    assert c.a4_rewritten is None
    assert c.a2 == pytest.approx(-2 / 24)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(3, 6),
    tau=st.floats(-50, 50),
    rt2=st.floats(0, 100),
    w2=st.floats(0, 100),
    lap=st.floats(-10, 10),
)
def test_original_equals_rewritten(n, tau, rt2, w2, lap):
    # Build a consistent tuple from (tau, |W|^2, |rho~|^2) through the norm decompositions.
    rho2 = rt2 + tau**2 / n
    R2 = w2 + 4 / (n - 2) * rho2 - 2 / ((n - 1) * (n - 2)) * tau**2
    c = gb.gray_coefficients(CurvatureFrame.from_invariants(n, tau, R2, rho2, w2, rt2, lap))
    scale = (abs(R2) + 8 * rho2 + 5 * tau**2 + 18 * abs(lap) + 1) / (360 * (n + 2) * (n + 4))
    assert abs(c.a4_original - c.a4_rewritten) <= 1e-12 * scale


def test_eval_series_examples(sphere, torus):
    assert gb.eval_series(gb.gray_coefficients(gb.curvature_frame(torus, TORUS_GENERIC)), 1.0) == pytest.approx(math.pi**2 / 2, rel=1e-15)
    s = gb.BallVolumeSeries(gb.gray_coefficients(gb.curvature_frame(sphere, SPHERE_GENERIC)))
    expected = math.pi**2 * 0.0625 / 2 * (1 - 1 / 12 + 13 / 3840)
    assert s(0.5) == pytest.approx(expected, rel=1e-10)
    tiny = np.array([1e-3, 1e-5])
    assert np.allclose(s.eval(tiny) / lead_factor(4, tiny), 1.0, rtol=1e-6)
    with pytest.raises(DomainError):
        s(0.0)


@pytest.mark.parametrize(
    "c,r,expected",
    [
        (0, 1.0, 4.934802200544679),
        (1, 1.0, 2 * math.pi**2 * (2 / 3 - math.cos(1) + math.cos(1) ** 3 / 3)),
        (-1, 1.0, 2 * math.pi**2 * (math.cosh(1) ** 3 / 3 - math.cosh(1) + 2 / 3)),
    ],
)
def test_model_volume_closed_forms(c, r, expected):
    assert gb.model_ball_volume_exact(c, r) == pytest.approx(expected, rel=1e-14)


def test_model_volume_reference_values():
    # Recomputed from 2 pi^2 times the integral of sin^3 / sinh^3; the rounded figures
    # 3.53223 and 6.87586 that circulate for these radii are off in the fifth digit.
    assert gb.model_ball_volume_exact(1, 1.0) == pytest.approx(3.5321451273312, rel=1e-13)
    assert gb.model_ball_volume_exact(-1, 1.0) == pytest.approx(6.8757195882414, rel=1e-13)
    assert gb.model_ball_volume_exact(1, 1.0) == pytest.approx(3.53223, rel=3e-5)
    assert gb.model_ball_volume_exact(-1, 1.0) == pytest.approx(6.87586, rel=3e-5)


@pytest.mark.parametrize("c", [0.25, 1.0, 4.0, -0.5, -1.0, -3.0])
@pytest.mark.parametrize("r", [0.01, 0.3, 0.7])
def test_model_volume_against_quadrature(c, r):
    k = math.sqrt(abs(c))
    if c > 0:
        dens = lambda t: (math.sin(k * t) / k) ** 3
    else:
        dens = lambda t: (math.sinh(k * t) / k) ** 3
    val, _ = quad(dens, 0, r, epsabs=0, epsrel=1e-13)
    assert gb.model_ball_volume_exact(c, r) == pytest.approx(2 * math.pi**2 * val, rel=1e-11)


def test_model_volume_scaling():
    r = 0.4
    for c in (0.3, 2.0, -0.7):
        sign = 1.0 if c > 0 else -1.0
        scaled = gb.model_ball_volume_exact(sign, math.sqrt(abs(c)) * r) / c**2
        assert gb.model_ball_volume_exact(c, r) == pytest.approx(scaled, rel=1e-13)


def test_model_volume_errors():
    with pytest.raises(DomainError):
        gb.model_ball_volume_exact(1.0, math.pi)
    with pytest.raises(DomainError):
        gb.model_ball_volume_exact(4.0, 1.6)
    with pytest.raises(DomainError):
        gb.model_ball_volume_exact(1.0, 0.5, n=3)
    with pytest.raises(DomainError):
        gb.model_ball_volume_exact(0.0, -1.0)


@pytest.mark.parametrize("c", [1.0, -1.0, 0.5])
def test_exact_volumes_residual_is_order_six(c):
    V = gb.model_ball_volume_exact(c, RADII)
    s = gb.BallVolumeSeries(model_coefficients(c))
    resid = (V - s(RADII)) / lead_factor(4, RADII)
    assert loglog_slope(RADII, resid) == pytest.approx(6.0, abs=0.3)


@pytest.mark.parametrize("c", [1.0, -1.0])
def test_fit_recovers_exact_coefficients(c):
    V = gb.model_ball_volume_exact(c, RADII)
    fit = fit_series(RADII, V, 4, nuisance_orders=(6, 8))
    assert fit.a2 == pytest.approx(-c / 3, abs=1e-8)
    assert fit.a4 == pytest.approx(13 / 240, abs=1e-6)
    assert abs(fit.a4 - 1 / 720) > 1000 * fit.stderr[1]


def test_fit_errors():
    with pytest.raises(QuadratureError):
        fit_series(RADII[:3], RADII[:3])
    with pytest.raises(QuadratureError):
        fit_series(np.full(10, 0.1) + np.arange(10) * 1e-9, np.ones(10))


def test_volumes_match_examples(sphere, product, torus, hyperbolic):
    fs = gb.curvature_frame(sphere, SPHERE_GENERIC)
    fp = gb.curvature_frame(product, PRODUCT_GENERIC)
    assert gb.volumes_match_to_r4(fs, 1.0)
    assert not gb.volumes_match_to_r4(fs, -1.0)
    for c in (-1.0, 0.0, 1.0, 1 / 3):
        assert not gb.volumes_match_to_r4(fp, c)
    assert gb.volumes_match_to_r4(gb.curvature_frame(torus, TORUS_GENERIC), 0.0)
    assert gb.volumes_match_to_r4(gb.curvature_frame(hyperbolic, HYPERBOLIC_GENERIC), -1.0)
    with pytest.raises(DomainError):
        gb.volumes_match_to_r4(CurvatureFrame.from_invariants(3, 6.0, 12.0, 12.0, 0.0, 0.0), 1.0)


@settings(max_examples=300, deadline=None)
@given(
    c=st.sampled_from([-1.0, 0.0, 1.0]),
    w2=st.one_of(st.floats(0, 1e-6), st.floats(0, 10)),
    rt_ratio=st.one_of(st.just(1.5), st.floats(0, 5)),
    tol=st.sampled_from([1e-8, 1e-6, 1e-3]),
)
def test_volume_match_equivalent_to_balance(c, w2, rt_ratio, tol):
    # With tau equal to the model value, matching at r^4 is the balance -3|W|^2 + 2|rho~|^2 = 0.
    n = 4
    tau = 12.0 * c
    rt2 = rt_ratio * w2
    rho2 = rt2 + tau**2 / n
    R2 = w2 + 2 * rho2 - tau**2 / 3
    f = CurvatureFrame.from_invariants(n, tau, R2, rho2, w2, rt2)
    expected = abs(volume_balance(f)) < tol * f.scale
    got = gb.volumes_match_to_r4(f, c, tol)
    margin = abs(abs(volume_balance(f)) - tol * f.scale)
    if margin > 1e-12 * f.scale:
        assert got == expected
