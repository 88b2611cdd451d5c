import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpfsna.maps import (
    GOLDEN_MEAN,
    GopyParams,
    HermanParams,
    LambdaParams,
    RadialMap,
    RigidRotation,
    circle_distance,
    gopy_step,
    herman_matrix,
    theta_at,
)
from qpfsna.orbit import (
    DivergenceError,
    iterate,
    iterate_tangent,
    matrix_cocycle_product,
    pullback,
)

G3 = GopyParams(B=3.0)


def test_iterate_rigid_rotation():
    tr = iterate(RigidRotation(c=0.25), (0.0, 0.0), 4)
    assert list(tr.fibers) == [0.0, 0.25, 0.5, 0.75]
    assert tr.length == 4 and tr.transient_discarded == 0


def test_iterate_gopy_pinched_then_absorbed():
    tr = iterate(G3, (0.25, 1.0), 50)
    assert tr.fibers[1] == 0.0
    assert np.all(tr.fibers[1:] == 0.0)


def test_iterate_matches_composition():
    tr = iterate(G3, (0.0, 1.0), 3)
    th, xi = 0.0, 1.0
    for k in range(3):
        assert tr.thetas[k] == pytest.approx(th, abs=1e-15)
        assert tr.fibers[k] == pytest.approx(xi, abs=1e-15)
        th, xi = gopy_step(th, xi, G3)


def test_iterate_transient_offsets_theta():
    tr = iterate(G3, (0.1, 0.5), 5, transient=7)
    full = iterate(G3, (0.1, 0.5), 12)
    assert np.array_equal(tr.thetas, full.thetas[7:])
    assert np.array_equal(tr.fibers, full.fibers[7:])
    assert tr.transient_discarded == 7


def test_iterate_rejects_bad_counts():
    with pytest.raises(ValueError):
        iterate(G3, (0.1, 0.5), 0)
    with pytest.raises(ValueError):
        iterate(G3, (0.1, 0.5), 3, -1)


def test_iterate_divergence_flagged():
    with pytest.raises(DivergenceError):
        iterate(G3, (0.1, float("nan")), 5)
    with pytest.raises(DivergenceError):
        iterate(RadialMap(a=2.0), (0.1, float("inf")), 5)


def test_lambda_orbit_stays_in_disc():
    tr = iterate(LambdaParams(), (0.2, (0.9, -0.3)), 10**4)
    assert np.all(np.hypot(tr.fibers[1:, 0], tr.fibers[1:, 1]) <= 1.0)


@given(st.floats(0, 1, exclude_max=True), st.integers(0, 10**8))
def test_theta_drift_against_exact(theta0, n):
    mp.mp.dps = 50
    exact = (mp.mpf(theta0) + n * mp.mpf(GOLDEN_MEAN)) % 1
    got = theta_at(theta0, GOLDEN_MEAN, n)
    d = abs(got - exact)
    assert min(d, 1 - d) < 1e-12
    assert 0 <= got < 1


def test_orbit_thetas_are_multiplicative():
    tr = iterate(G3, (0.3, 0.2), 10**5)
    k = np.arange(10**5)
    assert np.array_equal(tr.thetas[[0, 99, 99999]], [theta_at(0.3, GOLDEN_MEAN, int(j)) for j in (0, 99, 99999)])
    step = (np.diff(tr.thetas) - GOLDEN_MEAN) % 1.0
    step = np.minimum(step, 1 - step)
    assert step.max() < 1e-14
    assert k[-1] == 99999


def test_tangent_rigid_is_zero():
    tt = iterate_tangent(RigidRotation(c=0.3), (0.1, 0.2), 100)
    assert np.all(tt.p == 0.0)
    assert np.all(tt.log_deriv_sum == 0.0)


def test_tangent_gopy_first_step_zero():
    tt = iterate_tangent(G3, (0.0, 1.0), 5)
    assert tt[0].p == 0.0 and tt[1].p == 0.0


def _fk(theta0, xi0, k):
    return iterate(G3, (theta0, xi0), k + 1).fibers[k]


generic_theta = st.floats(0.01, 0.99).filter(lambda t: min(abs(t - 0.25), abs(t - 0.75)) > 1e-3)


@settings(max_examples=300)
@given(generic_theta, st.floats(-3, 3).filter(lambda x: abs(x) > 0.05))
def test_tangent_matches_finite_differences(theta0, xi0):
    # generic starts, away from the pinched fibers
    h = 1e-7
    tt = iterate_tangent(G3, (theta0, xi0), 20)
    for k in range(1, 21):
        fd = (_fk(theta0 + h, xi0, k) - _fk(theta0 - h, xi0, k)) / (2 * h)
        assert abs(tt.p[k] - fd) <= 1e-4 * abs(fd) + 1e-6


def test_tangent_clamps_pinched_derivative():
    tt = iterate_tangent(G3, (0.25, 1.0), 3)
    assert tt.clamped[1] == 1
    assert tt.log_deriv_sum[1] == pytest.approx(math.log(2.2250738585072014e-308))
    assert not tt.overflowed


def test_cocycle_product_isometry():
    p = HermanParams(gamma=1.0)
    for n in (1, 10, 1000, 10**5):
        assert abs(matrix_cocycle_product(p, 0.123, n).log_norm_sum) < 1e-12


def test_cocycle_product_single_step():
    r = matrix_cocycle_product(HermanParams(gamma=0.25), 0.0, 1)
    assert r.log_norm_sum == pytest.approx(math.log(2.0), abs=1e-15)


def _mp_log_norm(gamma, theta0, n):
    mp.mp.dps = 60
    g = mp.sqrt(mp.mpf(gamma))
    P = mp.eye(2)
    om = mp.mpf(GOLDEN_MEAN)
    for k in range(n):
        th = mp.mpf(theta0) + k * om
        c, s = mp.cos(2 * mp.pi * th), mp.sin(2 * mp.pi * th)
        A = mp.matrix([[c / g, s / g], [-g * s, g * c]])
        P = A * P
    return mp.log(max(mp.svd_r(P, compute_uv=False)))


def test_cocycle_product_against_extended_precision():
    r = matrix_cocycle_product(HermanParams(gamma=0.5), 0.1, 100)
    want = _mp_log_norm(0.5, 0.1, 100)
    assert abs(r.log_norm_sum - float(want)) <= 1e-8 * abs(float(want))


@given(st.floats(0, 1, exclude_max=True), st.floats(0.1, 10), st.integers(1, 1000))
def test_renormalized_vs_direct(theta0, gamma, n):
    p = HermanParams(gamma=gamma)
    r = matrix_cocycle_product(p, theta0, n)
    P = np.eye(2)
    scale = 0.0
    for k in range(n):
        P = herman_matrix(theta_at(theta0, GOLDEN_MEAN, k), p).as_array() @ P
        m = np.abs(P).max()
        P /= m
        scale += math.log(m)
    direct = scale + math.log(np.linalg.norm(P, 2))
    assert abs(r.log_norm_sum - direct) <= 1e-8 * max(1.0, abs(direct))
    assert 0.5 <= r.matrix.norm() <= 2.0
    # det(A_n) = 1, so det(normalized) * exp(2 log||A_n||) = 1; the normalized
    # determinant loses about exp(2 log||A_n||) ulps to cancellation
    if r.log_norm_sum < 5:
        assert abs(r.matrix.det() * math.exp(2 * r.log_norm_sum) - 1) < 1e-6


def test_pullback_rigid():
    m = RigidRotation(c=0.3)
    for d in (1, 7, 100):
        res = pullback(m, 0.4, depth=d, seed=0.0)
        assert circle_distance(res.value, (d * 0.3) % 1) < 1e-12
        assert 0 <= res.value < 1


def test_pullback_gopy_subcritical():
    res = pullback(GopyParams(B=1.0), 0.3, depth=200, seed=1.0)
    assert abs(res.value) < 1e-6


def test_pullback_radial_fixed_point():
    res = pullback(RadialMap(a=2.0), 0.3, depth=100, seed=0.5)
    assert abs(res.value - 1.0) < 1e-8


def test_pullback_adaptive_and_idempotent():
    res = pullback(G3, 0.37, seed=3.0)
    assert res.converged and res.residual < 1e-10
    deeper = pullback(G3, 0.37, depth=2 * res.depth, seed=3.0)
    assert abs(deeper.value - res.value) < 1e-10


def test_pullback_nonconvergence_reported():
    # rigid rotation never converges: each doubling moves the value
    res = pullback(RigidRotation(c=0.2718281828), 0.1, seed=0.0, max_depth=4 * 10**4)
    assert not res.converged and res.depth == 4 * 10**4
