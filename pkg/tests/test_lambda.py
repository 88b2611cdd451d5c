import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpfsna import _kernels as K
from qpfsna.cocycle import unstable_graph
from qpfsna.diagnostics import cocycle_lyapunov
from qpfsna.lambda_attractor import (
    EpsilonValidationError,
    RadialFiberSpec,
    RefusedError,
    invariant_torus,
    occupation_near_fraction,
    projection_consistency,
    radial_graph,
    radial_lyapunov,
    semiconjugacy_residual,
    torus_pointwise_error,
    two_point_attractor,
    validate_epsilon,
)
from qpfsna.maps import DomainError, LambdaParams, a_coeff, b_map

P = LambdaParams()


@pytest.fixture(scope="module")
def pair_set():
    return two_point_attractor(P, 1024, 1000)


@pytest.fixture(scope="module")
def torus():
    return invariant_torus(P, 256, 0.05, 128)


@given(st.floats(0, 10))
def test_b_bounded_and_derivative(r):
    b, db = b_map(r)
    assert 0 <= b <= 0.5
    h = 1e-6
    fd = (b_map(r + h)[0] - b_map(max(r - h, 0))[0]) / (r + h - max(r - h, 0))
    assert abs(fd - db) < 1e-6


@given(st.floats(0, 1), st.floats(0, 1))
def test_b_increasing_and_concave_on_unit_interval(r, s):
    lo, hi = min(r, s), max(r, s)
    assert b_map(lo)[0] <= b_map(hi)[0]
    mid = 0.5 * (lo + hi)
    assert b_map(mid)[0] >= 0.5 * (b_map(lo)[0] + b_map(hi)[0]) - 1e-15


@given(st.floats(0, 1), st.floats(0, 1))
def test_a_matches_matrix_norm(theta, alpha):
    c, s = math.cos(2 * math.pi * theta), math.sin(2 * math.pi * theta)
    e = np.array([math.cos(math.pi * alpha), math.sin(math.pi * alpha)])
    # R_theta turns clockwise: R_{1/4} (0, 1) = (1, 0)
    m = P.beta * np.diag([1.0, P.gamma]) @ np.array([[c, s], [-s, c]])
    assert a_coeff(theta, alpha, P) == pytest.approx(np.linalg.norm(m @ e), rel=1e-13)


def test_semiconjugacy():
    assert semiconjugacy_residual(P, 2000, seed=3) < 1e-12


@pytest.mark.parametrize("a", [1.5, 3.0])
def test_radial_graph_constant_gain(a):
    g = radial_graph(RadialFiberSpec(P, "unstable", a_const=a), 256, 2000, check_n=10**4)
    assert np.max(np.abs(g.values - math.sqrt(a - 1))) < 1e-12
    assert np.median(g.invariance) < 1e-12


def test_radial_exponent_constant_gain():
    spec = RadialFiberSpec(P, "unstable", a_const=1.5)
    assert radial_lyapunov(spec, "zero", 10**4, 2).estimate == pytest.approx(math.log(1.5), abs=1e-12)
    # a b'(rho) = 1.5 (1 - 1/2) / (3/2)^2 = 1/3
    assert radial_lyapunov(spec, "graph", 10**4, 2).estimate == pytest.approx(-math.log(3), abs=1e-9)


def test_radial_exponent_flags_critical_point():
    r = radial_lyapunov(RadialFiberSpec(P, "unstable", a_const=2.0), "graph", 1000, 2)
    assert r.flags["clamped_zero_derivatives"] > 0


def test_radial_graph_refuses_attracting_zero_line():
    with pytest.raises(RefusedError):
        radial_graph(RadialFiberSpec(P, "unstable", a_const=0.9), 256, 100, check_n=10**3)


def test_radial_spec_validation():
    with pytest.raises(ValueError):
        RadialFiberSpec(P, "sideways")
    with pytest.raises(DomainError):
        RadialFiberSpec(P, "unstable", a_const=0.0)


def test_radial_spec_over_graph():
    g = unstable_graph(P.herman, 256, 2000)
    assert RadialFiberSpec.over(g, P).side == "unstable"


def test_zero_line_exponents_from_cocycle():
    # log a = log beta + log sqrt(gamma) + log |A e_alpha| for the Herman cocycle A
    lam = cocycle_lyapunov(P.herman, 10**5, 16).estimate
    base = math.log(P.beta) + 0.5 * math.log(P.gamma)
    zu = radial_lyapunov(RadialFiberSpec(P, "unstable"), "zero", 10**5, 4).estimate
    zs = radial_lyapunov(RadialFiberSpec(P, "stable"), "zero", 10**5, 4).estimate
    assert abs(zu - (base + lam)) < 2e-3
    assert abs(zs - (base - lam)) < 2e-3


def test_radial_graph_real_base():
    g = radial_graph(RadialFiberSpec(P, "unstable"), 256, 4000, check_n=10**4)
    assert g.converged_fraction() >= 0.99
    assert np.all((g.values > 0) & (g.values <= 1))
    assert np.median(g.invariance) < 1e-10


def test_validate_epsilon():
    k, margin = validate_epsilon(P, 0.05)
    assert k >= 1 and margin > 0
    assert validate_epsilon(P, 0.05, steps=k)[0] == k


def test_invariant_torus_epsilon_failure():
    with pytest.raises(EpsilonValidationError) as e:
        invariant_torus(P, 256, 0.05, 16, validation_steps=1, max_halvings=1)
    assert e.value.margin <= 0


def test_torus_table(torus):
    assert torus.validation_steps >= 1 and torus.epsilon == 0.05
    assert np.all((torus.values > 0) & (torus.values <= 1))
    assert torus.invariant_fraction(1e-5) >= 0.99


def test_torus_pointwise_convergence(torus):
    assert torus_pointwise_error(torus, 200, 50, seed=5) < 1e-6


def test_torus_bounds_attractor(torus, pair_set):
    top = torus.exact(pair_set.thetas[::16], pair_set.alphas[::16])
    assert np.all(pair_set.rs[::16] <= top + 1e-12)


def test_two_point_set_geometry(pair_set):
    assert np.allclose(pair_set.u[:, 0], -pair_set.u[:, 1])
    assert np.allclose(pair_set.v[:, 0], -pair_set.v[:, 1])
    np.testing.assert_allclose(np.hypot(pair_set.u[:, 0], pair_set.v[:, 0]), pair_set.rs, rtol=1e-14)
    assert np.all(pair_set.v[:, 0] >= 0)


def test_two_point_set_invariant(pair_set):
    assert np.median(pair_set.invariance) < 1e-10
    assert np.mean(pair_set.invariance < 1e-6) >= 0.99


def test_rows_shapes(pair_set):
    th, al, r = pair_set.polar_rows()
    assert len(th) == len(al) == len(r) == 1024
    th2, u, v = pair_set.cartesian_rows()
    assert len(th2) == len(u) == len(v) == 2048


def test_orbit_near_coarse_set(pair_set):
    frac, tr = occupation_near_fraction(P, pair_set, 10**5, 10**4, 1e-2, seed=1)
    assert 0 < frac <= 1 and len(tr.thetas) == 10**5


def test_near_set_count_oracle():
    su = np.array([[0.5, -0.5], [0.1, -0.1]])
    sv = np.array([[0.2, -0.2], [0.0, -0.0]])
    # set rows sit at bin centers 0.25 and 0.75
    th = np.array([0.25, 0.25, 0.75, 0.74])
    u = np.array([-0.5, 0.52, 0.1, 0.3])
    v = np.array([-0.2, 0.2, 0.005, 0.0])
    assert K.near_set_count(th, u, v, su, sv, 1e-2) == 2


@pytest.mark.slow
def test_projection_consistency_fine_grid():
    g = unstable_graph(P.herman, 2**16, 1000)
    assert projection_consistency(P, g, 10**6, 10**4, 1e-2, seed=2) >= 0.99
