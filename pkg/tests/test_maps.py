import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpfsna.maps import (
    GOLDEN_MEAN,
    DomainError,
    GopyParams,
    HermanParams,
    LambdaParams,
    a_coeff,
    b_map,
    circle_distance,
    factor_map,
    gopy_partials,
    gopy_step,
    herman_matrix,
    herman_projective_step,
    lambda_step,
    lambda_tilde_step,
    parse_omega,
    PolarState,
    projective_angle,
    unfactor,
)

G3 = GopyParams(B=3.0)
LP = LambdaParams()
angles = st.floats(0, 1, exclude_max=True)
nonzero = st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)).filter(lambda t: t != (0.0, 0.0))


def test_gopy_step_pinched_fiber():
    assert gopy_step(0.25, 5.0, G3)[1] == 0.0


def test_gopy_step_zero_line():
    th, xi = gopy_step(0.1, 0.0, G3)
    assert xi == 0.0
    assert th == pytest.approx((0.1 + GOLDEN_MEAN) % 1, abs=1e-15)


def test_gopy_step_value_against_mpmath():
    mp.mp.dps = 40
    want = 3 * mp.tanh(1)
    assert abs(gopy_step(0.0, 1.0, G3)[1] - float(want)) < 1e-15
    assert abs(want - mp.mpf("2.2847824679")) < 5e-11


def test_gopy_partials_examples():
    assert gopy_partials(0.25, 1.0, G3)[0] == 0.0
    assert gopy_partials(0.0, 0.0, G3) == (3.0, 0.0)


def _fd(theta, xi, h=1e-6):
    f = lambda t, x: 3.0 * math.cos(2 * math.pi * t) * math.tanh(x)  # noqa: E731
    return ((f(theta, xi + h) - f(theta, xi - h)) / (2 * h),
            (f(theta + h, xi) - f(theta - h, xi)) / (2 * h))


def test_gopy_partials_finite_difference_example():
    dx, dt = gopy_partials(0.1, 0.5, G3)
    fx, ft = _fd(0.1, 0.5)
    assert abs(dx - fx) < 1e-6 and abs(dt - ft) < 1e-6


def test_gopy_partials_finite_difference_random(rng):
    for _ in range(1000):
        th, xi = rng.random(), rng.uniform(-3, 3)
        dx, dt = gopy_partials(th, xi, G3)
        fx, ft = _fd(th, xi)
        assert abs(dx - fx) < 1e-6 and abs(dt - ft) < 1e-6


@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_gopy_pinching_exact(xi, B):
    for th in (0.25, 0.75):
        assert gopy_step(th, xi, GopyParams(B=B))[1] == 0.0


def test_gopy_image_bound(rng):
    for _ in range(1000):
        assert abs(gopy_step(rng.random(), rng.normal(0, 10), G3)[1]) <= 3.0


def test_herman_matrix_examples():
    assert np.allclose(herman_matrix(0.0, HermanParams(gamma=1.0)).as_array(), np.eye(2), atol=0)
    assert np.allclose(herman_matrix(0.0, HermanParams(gamma=0.25)).as_array(), np.diag([2.0, 0.5]), atol=1e-15)


def test_herman_det_random(rng):
    for _ in range(1000):
        m = herman_matrix(rng.random(), HermanParams(gamma=rng.uniform(0.1, 10)))
        assert abs(m.det() - 1) < 1e-12


def test_herman_gamma_must_be_positive():
    with pytest.raises(DomainError):
        HermanParams(gamma=0.0)


def test_projective_angle_examples():
    assert projective_angle(1, 1) == pytest.approx(0.25, abs=1e-15)
    assert projective_angle(0, 1) == pytest.approx(0.5, abs=1e-15)
    assert projective_angle(1, 0) == 0.0
    assert projective_angle(-1, 0) == 0.0
    with pytest.raises(DomainError):
        projective_angle(0.0, 0.0)


@given(nonzero)
def test_projective_angle_antipodal_exact(uv):
    u, v = uv
    a = projective_angle(u, v)
    assert 0 <= a < 1
    assert projective_angle(-u, -v) == a


@given(nonzero)
def test_projective_angle_cot_relation(uv):
    u, v = uv
    a = projective_angle(u, v)
    # (u, v) is parallel to (cos pi a, sin pi a)
    r = math.hypot(u, v)
    assert abs(u * math.sin(math.pi * a) - v * math.cos(math.pi * a)) <= 1e-12 * r


def test_unfactor_examples():
    p, q = unfactor(0.0, 0.25, math.sqrt(2))
    assert np.allclose(p, (1, 1), atol=1e-15) and np.allclose(q, (-1, -1), atol=1e-15)
    p, q = unfactor(0.0, 0.5, 1.0)
    assert np.allclose(p, (0, 1), atol=1e-15) and np.allclose(q, (0, -1), atol=1e-15)
    with pytest.raises(DomainError):
        unfactor(0.0, 0.3, 0.0)


@given(angles, angles, st.floats(1e-6, 1.0))
def test_unfactor_round_trip(theta, alpha, r):
    for pt in unfactor(theta, alpha, r):
        t, s = factor_map(theta, pt)
        assert t == theta
        assert circle_distance(s.alpha, alpha) < 1e-12
        assert abs(s.r - r) < 1e-15


def test_lambda_step_examples():
    assert lambda_step(0.3, (0.0, 0.0), LP)[1] == (0.0, 0.0)
    assert np.allclose(lambda_step(0.0, (1.0, 0.0), LP)[1], (1.0, 0.0), atol=1e-15)
    assert np.allclose(lambda_step(0.25, (0.0, 1.0), LP)[1], (1.0, 0.0), atol=1e-15)


@given(angles, st.floats(0, 1), angles, st.floats(1.01, 2), st.floats(0.5, 0.99))
def test_lambda_step_norm_bound(theta, r, ang, beta, gamma):
    p = LambdaParams(beta=beta, gamma=min(0.999, max(gamma, (1 + 1e-12) / beta)))
    xi = (r * math.cos(2 * math.pi * ang), r * math.sin(2 * math.pi * ang))
    _, out = lambda_step(theta, xi, p)
    assert math.hypot(*out) <= beta / 2 * (1 + 1e-15)


def test_herman_projective_examples(rng):
    p1 = HermanParams(gamma=1.0)
    for _ in range(100):
        th, al = rng.random(), rng.random()
        assert circle_distance(herman_projective_step(th, al, p1), (al - 2 * th) % 1) < 1e-12
    assert herman_projective_step(0.0, 0.0, HermanParams(gamma=0.25)) == 0.0
    assert herman_projective_step(0.0, 0.25, p1) == pytest.approx(0.25, abs=1e-15)


def test_herman_projective_matches_matrix(rng):
    p = HermanParams(gamma=0.5)
    for _ in range(100):
        th, al = rng.random(), rng.random()
        u, v = herman_matrix(th, p).apply(math.cos(math.pi * al), math.sin(math.pi * al))
        assert circle_distance(herman_projective_step(th, al, p), projective_angle(u, v)) < 1e-14


def test_lambda_tilde_examples():
    assert lambda_tilde_step(0.3, PolarState(0.2, 0.0), LP)[1].r == 0.0
    assert lambda_tilde_step(0.0, PolarState(0.0, 1.0), LP)[1].r == pytest.approx(1.0, abs=1e-15)
    assert lambda_tilde_step(0.0, PolarState(0.5, 1.0), LP)[1].r == pytest.approx(0.5, abs=1e-15)


def test_factor_map_examples():
    t, s = factor_map(0.3, (1.0, 1.0))
    assert t == 0.3 and s.alpha == pytest.approx(0.25) and s.r == pytest.approx(math.sqrt(2))
    assert factor_map(0.3, (-1.0, -1.0)) == factor_map(0.3, (1.0, 1.0))
    with pytest.raises(DomainError):
        factor_map(0.3, (0.0, 0.0))


def test_semiconjugacy_example():
    t1, s1 = factor_map(*lambda_step(0.1, (0.3, 0.4), LP))
    t2, s2 = lambda_tilde_step(*factor_map(0.1, (0.3, 0.4)), LP)
    assert circle_distance(t1, t2) < 1e-12
    assert circle_distance(s1.alpha, s2.alpha) < 1e-12
    assert abs(s1.r - s2.r) < 1e-12


def test_semiconjugacy_random(rng):
    for _ in range(10**4):
        th, r, ang = rng.random(), rng.uniform(1e-3, 1), rng.uniform(0, 2 * math.pi)
        xi = (r * math.cos(ang), r * math.sin(ang))
        t1, s1 = factor_map(*lambda_step(th, xi, LP))
        t2, s2 = lambda_tilde_step(*factor_map(th, xi), LP)
        assert max(circle_distance(t1, t2), circle_distance(s1.alpha, s2.alpha), abs(s1.r - s2.r)) < 1e-12


def test_lambda_parameter_ranges():
    for kw in ({"beta": 1.0}, {"beta": 2.5}, {"gamma": 1.0}, {"gamma": 0.0}, {"beta": 1.5, "gamma": 0.5}, {"C": 2.0}):
        with pytest.raises(DomainError):
            LambdaParams(**kw)


def test_rational_omega_rejected():
    for om in (0.5, 309 / 500, 1 / 3, 0.0):
        with pytest.raises(DomainError):
            GopyParams(omega=om)
    GopyParams(omega=math.sqrt(2) - 1)
    assert parse_omega("golden") == GOLDEN_MEAN


def test_a_coeff_examples_and_range(rng):
    assert a_coeff(0.0, 0.0, LP) == pytest.approx(2.0, abs=1e-15)
    assert a_coeff(0.0, 0.5, LP) == pytest.approx(1.0, abs=1e-15)
    vals = [a_coeff(rng.random(), rng.random(), LP) for _ in range(2000)]
    assert min(vals) >= 1.0 - 1e-15 and max(vals) <= 2.0 + 1e-15


def test_a_coeff_attains_endpoints_on_grid():
    th = np.arange(4096) / 4096
    vals = np.array([a_coeff(t, 0.0, LP) for t in th])
    assert abs(vals.max() - 2.0) < 1e-6 and abs(vals.min() - 1.0) < 1e-6


def test_a_coeff_matches_matrix_norm(rng):
    mp.mp.dps = 30
    for _ in range(20):
        th, al = rng.random(), rng.random()
        c, s = mp.cos(2 * mp.pi * th), mp.sin(2 * mp.pi * th)
        x, y = mp.cos(mp.pi * al), mp.sin(mp.pi * al)
        want = 2 * mp.sqrt((c * x + s * y) ** 2 + (mp.mpf(0.5) * (-s * x + c * y)) ** 2)
        assert abs(a_coeff(th, al, LP) - float(want)) < 1e-14


def test_b_map_examples():
    assert b_map(1.0) == (0.5, 0.0)
    assert b_map(0.0) == (0.0, 1.0)
    v, d = b_map(2.0)
    assert v == pytest.approx(0.4) and d == pytest.approx(-0.12)


@given(st.floats(0, 100))
def test_b_map_bounds(r):
    v, d = b_map(r)
    assert v <= 0.5 and d <= 1.0
