"""Compiled inner loops.

Everything here is a pure function of its arguments and releases the GIL,
so the thread pool in :mod:`qpfsna.parallel` runs these concurrently.
Python-facing wrappers live in the other modules.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
# log of the smallest positive normal double; used when a derivative is exactly 0
LOG_TINY = math.log(2.2250738585072014e-308)

RIGID = 0
FORCED = 1
GOPY = 2
HERMAN = 3
SHEAR = 4
RADIAL = 5

jit = njit(nogil=True)


# --- angle arithmetic -------------------------------------------------------

@jit
def wrap(x):
    y = x - math.floor(x)
    if y >= 1.0:
        y = 0.0
    return y


@jit
def circle_dist(a, b):
    d = abs(a - b)
    d = d - math.floor(d)
    return min(d, 1.0 - d)


@jit
def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


@jit
def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@jit
def theta_at(theta0, omega, n):
    """(theta0 + n*omega) mod 1 with the product formed exactly (|n| < 2**53)."""
    p, e = two_prod(float(n), omega)
    s = theta0 + p
    bp = s - theta0
    e2 = (theta0 - (s - bp)) + (p - bp)
    hi = s - math.floor(s)
    return wrap(hi + (e + e2))


@jit
def proj_angle(u, v):
    if v < 0.0 or (v == 0.0 and u < 0.0):
        u = -u
        v = -v
    a = math.atan2(v, u) / math.pi
    if a >= 1.0 or a <= 0.0:
        a = 0.0
    return a


@jit
def cos2pi(t):
    """cos(2 pi t) with exact values at the quarter turns, so pinched fibers are exactly pinched."""
    t = wrap(t)
    if t == 0.25 or t == 0.75:
        return 0.0
    if t == 0.5:
        return -1.0
    if t == 0.0:
        return 1.0
    return math.cos(TWO_PI * t)


@jit
def sin2pi(t):
    t = wrap(t)
    if t == 0.0 or t == 0.5:
        return 0.0
    if t == 0.25:
        return 1.0
    if t == 0.75:
        return -1.0
    return math.sin(TWO_PI * t)


# --- scalar fiber maps --------------------------------------------------------
# Circle-fiber kinds return the lift displacement F(theta, x) - x so that the
# caller can keep the fractional state and accumulate the integer part apart.

@jit
def herman_shift(gamma, y):
    # angle increment of diag(g^-1/2, g^1/2) acting on direction pi*y, in turns
    psi = math.pi * y
    c = math.cos(psi)
    s = math.sin(psi)
    return math.atan2((gamma - 1.0) * s * c, c * c + gamma * s * s) / math.pi


@jit
def fiber_step(kind, prm, theta, x):
    if kind == GOPY:
        return prm[0] * cos2pi(theta) * math.tanh(x)
    if kind == RADIAL:
        return prm[0] * x / (1.0 + x * x)
    return x + fiber_disp(kind, prm, theta, x)


@jit
def fiber_disp(kind, prm, theta, x):
    if kind == RIGID:
        return prm[0]
    if kind == FORCED:
        return prm[0] + prm[1] * math.sin(TWO_PI * theta)
    if kind == HERMAN:
        y = x - 2.0 * theta
        return -2.0 * theta + herman_shift(prm[0], y)
    if kind == SHEAR:
        return theta
    return fiber_step(kind, prm, theta, x) - x


@jit
def fiber_partials(kind, prm, theta, x):
    """(d/dxi, d/dtheta) of the fiber map at (theta, x)."""
    if kind == GOPY:
        t = math.tanh(x)
        return (prm[0] * cos2pi(theta) * (1.0 - t * t),
                -TWO_PI * prm[0] * sin2pi(theta) * t)
    if kind == RIGID:
        return 1.0, 0.0
    if kind == FORCED:
        return 1.0, TWO_PI * prm[1] * math.cos(TWO_PI * theta)
    if kind == SHEAR:
        return 1.0, 1.0
    if kind == HERMAN:
        g = prm[0]
        psi = math.pi * (x - 2.0 * theta)
        c = math.cos(psi)
        s = math.sin(psi)
        d = g / (c * c + g * g * s * s)
        return d, -2.0 * d
    # RADIAL
    q = 1.0 + x * x
    return prm[0] * (1.0 - x * x) / (q * q), 0.0


# --- orbits -----------------------------------------------------------------

@jit
def orbit(kind, prm, circle, bound, omega, theta0, x0, n, transient):
    """Trace of n states after discarding `transient` steps.

    Returns (thetas, xs, bad) where bad is the first step index whose state
    left the phase space (or -1).  Circle fibers are reported as lifts.
    """
    thetas = np.empty(n)
    xs = np.empty(n)
    x = x0
    frac = wrap(x0) if circle else x0
    lift_s = 0.0
    lift_c = 0.0
    total = n + transient
    k = 0
    for j in range(total):
        th = theta_at(theta0, omega, j)
        if j >= transient:
            thetas[k] = th
            if circle:
                xs[k] = x0 + (lift_s + lift_c)
            else:
                xs[k] = x
            k += 1
            if k == n:
                break
        if circle:
            d = fiber_disp(kind, prm, th, frac)
            frac = wrap(frac + d)
            t = lift_s + d
            if abs(lift_s) >= abs(d):
                lift_c += (lift_s - t) + d
            else:
                lift_c += (d - t) + lift_s
            lift_s = t
        else:
            x = fiber_step(kind, prm, th, x)
            if not (abs(x) <= bound):
                return thetas, xs, j + 1
    return thetas, xs, -1


@jit
def log_deriv_sums(kind, prm, omega, theta0, x0, n, transient, nbatch):
    """Batch sums of log|d/dxi f| along an orbit (Neumaier-compensated).

    Returns (batch_sums, clamp_count, bad_step).
    """
    circle = kind == RIGID or kind == FORCED or kind == HERMAN or kind == SHEAR
    x = wrap(x0) if circle else x0
    for j in range(transient):
        th = theta_at(theta0, omega, j)
        if circle:
            x = wrap(x + fiber_disp(kind, prm, th, x))
        else:
            x = fiber_step(kind, prm, th, x)
    sums = np.zeros(nbatch)
    per = n // nbatch
    clamps = 0
    b = 0
    s = 0.0
    c = 0.0
    for i in range(n):
        th = theta_at(theta0, omega, transient + i)
        dx, dt = fiber_partials(kind, prm, th, x)
        a = abs(dx)
        if a == 0.0:
            v = LOG_TINY
            clamps += 1
        else:
            v = math.log(a)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        if circle:
            x = wrap(x + fiber_disp(kind, prm, th, x))
        else:
            x = fiber_step(kind, prm, th, x)
            if not math.isfinite(x):
                return sums, clamps, transient + i + 1
        if (i + 1) % per == 0 and b < nbatch - 1:
            sums[b] = s + c
            b += 1
            s = 0.0
            c = 0.0
    sums[b] = s + c
    return sums, clamps, -1


@jit
def tangent(kind, prm, omega, theta0, x0, n):
    """p_k = d xi_k / d theta_0 and running sums of log|d/dxi f|, k = 0..n."""
    circle = kind == RIGID or kind == FORCED or kind == HERMAN or kind == SHEAR
    p = np.zeros(n + 1)
    logs = np.zeros(n + 1)
    clamps = np.zeros(n + 1, dtype=np.int64)
    x = wrap(x0) if circle else x0
    s = 0.0
    c = 0.0
    for k in range(n):
        th = theta_at(theta0, omega, k)
        dx, dt = fiber_partials(kind, prm, th, x)
        p[k + 1] = dt + dx * p[k]
        a = abs(dx)
        clamps[k + 1] = clamps[k]
        if a == 0.0:
            v = LOG_TINY
            clamps[k + 1] += 1
        else:
            v = math.log(a)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        logs[k + 1] = s + c
        if circle:
            x = wrap(x + fiber_disp(kind, prm, th, x))
        else:
            x = fiber_step(kind, prm, th, x)
    return p, logs, clamps


@jit
def tangent_running_max(kind, prm, omega, theta0, x0, checkpoints):
    """max_{n<=N} |p_n| at each checkpoint N (checkpoints ascending)."""
    circle = kind == RIGID or kind == FORCED or kind == HERMAN or kind == SHEAR
    out = np.zeros(checkpoints.shape[0])
    x = wrap(x0) if circle else x0
    p = 0.0
    m = 0.0
    ci = 0
    nmax = checkpoints[-1]
    for k in range(nmax):
        th = theta_at(theta0, omega, k)
        dx, dt = fiber_partials(kind, prm, th, x)
        p = dt + dx * p
        if abs(p) > m:
            m = abs(p)
        while ci < checkpoints.shape[0] and checkpoints[ci] == k + 1:
            out[ci] = m
            ci += 1
        if circle:
            x = wrap(x + fiber_disp(kind, prm, th, x))
        else:
            x = fiber_step(kind, prm, th, x)
    return out


@jit
def displacements(kind, prm, omega, theta0, x0, n):
    """Cumulative lift displacement F^k(x0) - x0 for k = 0..n (compensated)."""
    out = np.zeros(n + 1)
    x = wrap(x0)
    s = 0.0
    c = 0.0
    for k in range(n):
        th = theta_at(theta0, omega, k)
        d = fiber_disp(kind, prm, th, x)
        x = wrap(x + d)
        t = s + d
        if abs(s) >= abs(d):
            c += (s - t) + d
        else:
            c += (d - t) + s
        s = t
        out[k + 1] = s + c
    return out


@jit
def pullback(kind, prm, circle, omega, theta, depth, seed):
    x = seed
    for k in range(depth):
        th = theta_at(theta, omega, k - depth)
        if circle:
            x = wrap(x + fiber_disp(kind, prm, th, x))
        else:
            x = fiber_step(kind, prm, th, x)
    return x


@jit
def pullback_grid(kind, prm, circle, omega, thetas, depth, seed):
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        out[i] = pullback(kind, prm, circle, omega, thetas[i], depth, seed)
    return out


@jit
def pullback_seeds(kind, prm, circle, omega, theta, depth, seeds, merge_tol):
    """Pull back many seeds along the same base chain.

    Seeds closer than merge_tol are merged (iterated once) as they converge.
    """
    m = seeds.shape[0]
    x = seeds.copy()
    rep = np.arange(m)
    for k in range(depth):
        th = theta_at(theta, omega, k - depth)
        for i in range(m):
            if rep[i] == i:
                if circle:
                    x[i] = wrap(x[i] + fiber_disp(kind, prm, th, x[i]))
                else:
                    x[i] = fiber_step(kind, prm, th, x[i])
        if k % 32 == 31:
            for i in range(m):
                if rep[i] != i:
                    continue
                for j in range(i):
                    if rep[j] == j:
                        if circle:
                            d = circle_dist(x[i], x[j])
                        else:
                            d = abs(x[i] - x[j])
                        if d < merge_tol:
                            rep[i] = j
                            break
    for i in range(m):
        r = rep[i]
        while rep[r] != r:
            r = rep[r]
        x[i] = x[r]
    return x


# --- SL(2,R) cocycles ---------------------------------------------------------

@jit
def herman_mat(gamma, inverse, omega, theta):
    """Cocycle matrix at theta; the inverse system uses A(theta - omega)^-1."""
    if inverse:
        theta = theta - omega
    c = math.cos(TWO_PI * theta)
    s = math.sin(TWO_PI * theta)
    g = math.sqrt(gamma)
    a11 = c / g
    a12 = s / g
    a21 = -g * s
    a22 = g * c
    if inverse:
        return a22, -a12, -a21, a11
    return a11, a12, a21, a22


@jit
def proj_apply(m11, m12, m21, m22, alpha):
    cu = math.cos(math.pi * alpha)
    sv = math.sin(math.pi * alpha)
    return proj_angle(m11 * cu + m12 * sv, m21 * cu + m22 * sv)


@jit
def proj_fwd(gamma, inverse, omega, theta, alpha):
    m11, m12, m21, m22 = herman_mat(gamma, inverse, omega, theta)
    return proj_apply(m11, m12, m21, m22, alpha)


@jit
def proj_back(gamma, inverse, omega, theta, alpha):
    """Inverse of proj_fwd(theta, .)."""
    m11, m12, m21, m22 = herman_mat(gamma, inverse, omega, theta)
    return proj_apply(m22, -m12, -m21, m11, alpha)


@jit
def proj_log_deriv(gamma, inverse, omega, theta, alpha):
    m11, m12, m21, m22 = herman_mat(gamma, inverse, omega, theta)
    cu = math.cos(math.pi * alpha)
    sv = math.sin(math.pi * alpha)
    x = m11 * cu + m12 * sv
    y = m21 * cu + m22 * sv
    return -math.log(x * x + y * y)


@jit
def cocycle_product(gamma, inverse, omega, theta0, n):
    """Renormalized A_n(theta0); returns (m11, m12, m21, m22, log_scale)."""
    r_omega = -omega if inverse else omega
    p11 = 1.0
    p12 = 0.0
    p21 = 0.0
    p22 = 1.0
    s = 0.0
    c = 0.0
    for k in range(n):
        th = theta_at(theta0, r_omega, k)
        a11, a12, a21, a22 = herman_mat(gamma, inverse, omega, th)
        q11 = a11 * p11 + a12 * p21
        q12 = a11 * p12 + a12 * p22
        q21 = a21 * p11 + a22 * p21
        q22 = a21 * p12 + a22 * p22
        m = max(max(abs(q11), abs(q12)), max(abs(q21), abs(q22)))
        p11 = q11 / m
        p12 = q12 / m
        p21 = q21 / m
        p22 = q22 / m
        v = math.log(m)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return p11, p12, p21, p22, s + c


@jit
def unstable_pullback(gamma, inverse, omega, theta, depth, seed):
    r_omega = -omega if inverse else omega
    a = seed
    for k in range(depth):
        th = theta_at(theta, r_omega, k - depth)
        a = proj_fwd(gamma, inverse, omega, th, a)
    return a


@jit
def stable_pullback(gamma, inverse, omega, theta, depth, seed):
    r_omega = -omega if inverse else omega
    a = seed
    for k in range(depth - 1, -1, -1):
        th = theta_at(theta, r_omega, k)
        a = proj_back(gamma, inverse, omega, th, a)
    return a


@jit
def graph_pullback_grid(gamma, inverse, omega, thetas, depth, seed, stable):
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        if stable:
            out[i] = stable_pullback(gamma, inverse, omega, thetas[i], depth, seed)
        else:
            out[i] = unstable_pullback(gamma, inverse, omega, thetas[i], depth, seed)
    return out


@jit
def graph_along(gamma, inverse, omega, theta0, n, warm, seed, stable):
    """Graph values at theta0 + k*omega_sys for k = 0..n-1 (exact orbit evaluation)."""
    r_omega = -omega if inverse else omega
    out = np.empty(n)
    if stable:
        a = seed
        for k in range(n + warm - 1, -1, -1):
            th = theta_at(theta0, r_omega, k)
            a = proj_back(gamma, inverse, omega, th, a)
            if k < n:
                out[k] = a
    else:
        a = seed
        for k in range(-warm, n):
            if k >= 0:
                out[k] = a
            th = theta_at(theta0, r_omega, k)
            a = proj_fwd(gamma, inverse, omega, th, a)
    return out


@jit
def graph_log_derivs(gamma, inverse, omega, theta0, alphas):
    r_omega = -omega if inverse else omega
    out = np.empty(alphas.shape[0])
    for k in range(alphas.shape[0]):
        th = theta_at(theta0, r_omega, k)
        out[k] = proj_log_deriv(gamma, inverse, omega, th, alphas[k])
    return out


# --- Lambda and Lambda-tilde --------------------------------------------------

@jit
def a_coeff(beta, gamma, theta, alpha):
    c = math.cos(TWO_PI * theta)
    s = math.sin(TWO_PI * theta)
    cu = math.cos(math.pi * alpha)
    sv = math.sin(math.pi * alpha)
    x = c * cu + s * sv
    y = gamma * (-s * cu + c * sv)
    return beta * math.sqrt(x * x + y * y)


@jit
def lambda_step(beta, gamma, theta, u, v):
    c = math.cos(TWO_PI * theta)
    s = math.sin(TWO_PI * theta)
    f = beta / (1.0 + u * u + v * v)
    return f * (c * u + s * v), f * gamma * (-s * u + c * v)


@jit
def lambda_tilde_step(beta, gamma, omega, theta, alpha, r):
    a2 = proj_fwd(gamma, False, omega, theta, alpha)
    r2 = a_coeff(beta, gamma, theta, alpha) * r / (1.0 + r * r)
    return a2, r2


@jit
def lambda_orbit(beta, gamma, omega, theta0, u0, v0, n, transient):
    th = np.empty(n)
    us = np.empty(n)
    vs = np.empty(n)
    u = u0
    v = v0
    k = 0
    for j in range(n + transient):
        t = theta_at(theta0, omega, j)
        if j >= transient:
            th[k] = t
            us[k] = u
            vs[k] = v
            k += 1
            if k == n:
                break
        u, v = lambda_step(beta, gamma, t, u, v)
    return th, us, vs


@jit
def lambda_tilde_orbit(beta, gamma, omega, theta0, alpha0, r0, n, transient):
    th = np.empty(n)
    al = np.empty(n)
    rs = np.empty(n)
    a = alpha0
    r = r0
    k = 0
    for j in range(n + transient):
        t = theta_at(theta0, omega, j)
        if j >= transient:
            th[k] = t
            al[k] = a
            rs[k] = r
            k += 1
            if k == n:
                break
        a, r = lambda_tilde_step(beta, gamma, omega, t, a, r)
    return th, al, rs


@jit
def torus_pullback(beta, gamma, omega, theta, alpha, depth, r0):
    """pi_r of Lambda-tilde^depth applied at f^-depth(theta, alpha) to r0."""
    ths = np.empty(depth)
    als = np.empty(depth)
    a = alpha
    for k in range(depth):
        th = theta_at(theta, omega, -(k + 1))
        a = proj_back(gamma, False, omega, th, a)
        ths[depth - 1 - k] = th
        als[depth - 1 - k] = a
    r = r0
    for k in range(depth):
        r = a_coeff(beta, gamma, ths[k], als[k]) * r / (1.0 + r * r)
    return r


@jit
def torus_grid(beta, gamma, omega, thetas, alphas, depth, r0):
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        out[i] = torus_pullback(beta, gamma, omega, thetas[i], alphas[i], depth, r0)
    return out


@jit
def radial_values_along(beta, gamma, omega, theta0, alphas, r0, a_const):
    """r_k along the base orbit theta0 + k*omega with fiber directions alphas.

    a_const > 0 replaces a(theta, alpha) by a constant.  Returns (r, a).
    """
    n = alphas.shape[0]
    rs = np.empty(n)
    av = np.empty(n)
    r = r0
    for k in range(n):
        th = theta_at(theta0, omega, k)
        if a_const > 0.0:
            a = a_const
        else:
            a = a_coeff(beta, gamma, th, alphas[k])
        rs[k] = r
        av[k] = a
        r = a * r / (1.0 + r * r)
    return rs, av


# --- diagnostics helpers --------------------------------------------------------

@jit
def bin_minmax(thetas, xs, nbins):
    lo = np.full(nbins, np.inf)
    hi = np.full(nbins, -np.inf)
    cnt = np.zeros(nbins, dtype=np.int64)
    for i in range(thetas.shape[0]):
        j = int(thetas[i] * nbins)
        if j >= nbins:
            j = nbins - 1
        if xs[i] < lo[j]:
            lo[j] = xs[i]
        if xs[i] > hi[j]:
            hi[j] = xs[i]
        cnt[j] += 1
    return lo, hi, cnt


@jit
def sdic_pair_fiber(kind, prm, circle, omega, th1, x1, th2, x2, eps, nmax):
    """First n <= nmax with fiber separation > eps; returns (n or -1, sep, max_sep)."""
    dth = circle_dist(th1, th2)
    best = 0.0
    a = wrap(x1) if circle else x1
    b = wrap(x2) if circle else x2
    for k in range(nmax + 1):
        if circle:
            d = circle_dist(a, b)
        else:
            d = abs(a - b)
        d = max(d, dth)
        if d > best:
            best = d
        if d > eps:
            return k, d, best
        if k == nmax:
            break
        t1 = theta_at(th1, omega, k)
        t2 = theta_at(th2, omega, k)
        if circle:
            a = wrap(a + fiber_disp(kind, prm, t1, a))
            b = wrap(b + fiber_disp(kind, prm, t2, b))
        else:
            a = fiber_step(kind, prm, t1, a)
            b = fiber_step(kind, prm, t2, b)
    return -1, best, best


@jit
def sdic_pair_polar(beta, gamma, omega, th1, a1, r1, th2, a2, r2, eps, nmax):
    dth = circle_dist(th1, th2)
    best = 0.0
    for k in range(nmax + 1):
        d = max(dth, max(circle_dist(a1, a2), abs(r1 - r2)))
        if d > best:
            best = d
        if d > eps:
            return k, d, best
        if k == nmax:
            break
        t1 = theta_at(th1, omega, k)
        t2 = theta_at(th2, omega, k)
        a1, r1 = lambda_tilde_step(beta, gamma, omega, t1, a1, r1)
        a2, r2 = lambda_tilde_step(beta, gamma, omega, t2, a2, r2)
    return -1, best, best


@jit
def sdic_pair_lambda(beta, gamma, omega, th1, u1, v1, th2, u2, v2, eps, nmax):
    dth = circle_dist(th1, th2)
    best = 0.0
    for k in range(nmax + 1):
        d = max(dth, math.hypot(u1 - u2, v1 - v2))
        if d > best:
            best = d
        if d > eps:
            return k, d, best
        if k == nmax:
            break
        t1 = theta_at(th1, omega, k)
        t2 = theta_at(th2, omega, k)
        u1, v1 = lambda_step(beta, gamma, t1, u1, v1)
        u2, v2 = lambda_step(beta, gamma, t2, u2, v2)
    return -1, best, best


# --- radial graphs over projective graphs -----------------------------------------

@jit
def radial_pullback(beta, gamma, omega, theta, depth, warm, stable, a_const, r0):
    """(phi(theta), rho(theta)): radial pullback of r0 over the projective graph phi.

    phi is the unstable graph (forward iteration from theta - (depth+warm) omega)
    or, with `stable`, the stable graph (backward sweep from theta + warm omega).
    a_const > 0 replaces a(theta, alpha) by a constant.
    """
    r = r0
    if a_const > 0.0:
        for k in range(depth):
            r = a_const * r / (1.0 + r * r)
        return 0.0, r
    if stable:
        al = np.empty(depth + 1)
        a = 0.25
        for k in range(warm - 1, -depth - 1, -1):
            th = theta_at(theta, omega, k)
            a = proj_back(gamma, False, omega, th, a)
            if k <= 0:
                al[k + depth] = a
        for k in range(depth):
            th = theta_at(theta, omega, k - depth)
            r = a_coeff(beta, gamma, th, al[k]) * r / (1.0 + r * r)
        return al[depth], r
    a = 0.25
    for k in range(-(depth + warm), 0):
        th = theta_at(theta, omega, k)
        if k >= -depth:
            r = a_coeff(beta, gamma, th, a) * r / (1.0 + r * r)
        a = proj_fwd(gamma, False, omega, th, a)
    return a, r


@jit
def radial_pullback_grid(beta, gamma, omega, thetas, depth, warm, stable, a_const, r0):
    al = np.empty(thetas.shape[0])
    rs = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        al[i], rs[i] = radial_pullback(beta, gamma, omega, thetas[i], depth, warm, stable, a_const, r0)
    return al, rs


@jit
def radial_exponent(beta, gamma, omega, theta0, n, warm, stable, a_const, zero_line):
    """Sum over n steps of log a (zero line) or log|a b'(r)| (radial graph).

    The first `warm` steps settle r onto the radial graph and are not summed.
    Returns (sum, clamp_count).
    """
    t0 = theta_at(theta0, omega, -warm)
    total = n + warm
    if a_const > 0.0:
        al = np.zeros(1)
    else:
        al = graph_along(gamma, False, omega, t0, total, warm, 0.25, stable)
    r = 1.0
    s = 0.0
    c = 0.0
    clamps = 0
    for k in range(total):
        if a_const > 0.0:
            a = a_const
        else:
            a = a_coeff(beta, gamma, theta_at(t0, omega, k), al[k])
        if k >= warm:
            if zero_line:
                v = math.log(a)
            else:
                q = 1.0 + r * r
                d = abs(a * (1.0 - r * r) / (q * q))
                if d == 0.0:
                    v = LOG_TINY
                    clamps += 1
                else:
                    v = math.log(d)
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
        r = a * r / (1.0 + r * r)
    return s + c, clamps


@jit
def torus_validate(beta, gamma, omega, thetas, alphas, eps, nsteps):
    """min over the sample of pi_r after k steps from r = eps, for k = 1..nsteps."""
    out = np.full(nsteps, np.inf)
    for i in range(thetas.shape[0]):
        th = thetas[i]
        a = alphas[i]
        r = eps
        for k in range(nsteps):
            t = theta_at(th, omega, k)
            r = a_coeff(beta, gamma, t, a) * r / (1.0 + r * r)
            a = proj_fwd(gamma, False, omega, t, a)
            if r < out[k]:
                out[k] = r
    return out


@jit
def torus_step_grid(beta, gamma, omega, thetas, alphas, rs):
    n = thetas.shape[0]
    th2 = np.empty(n)
    al2 = np.empty(n)
    r2 = np.empty(n)
    for i in range(n):
        th2[i] = wrap(thetas[i] + omega)
        al2[i], r2[i] = lambda_tilde_step(beta, gamma, omega, thetas[i], alphas[i], rs[i])
    return th2, al2, r2


@jit
def near_set_count(thetas, us, vs, set_u, set_v, tol):
    """Points within tol (max of circle theta distance and Euclidean fiber distance)
    of the two-point set sampled at bin centers; set_u/set_v have shape (bins, 2)."""
    bins = set_u.shape[0]
    reach = int(tol * bins) + 1
    count = 0
    for i in range(thetas.shape[0]):
        j0 = int(thetas[i] * bins)
        if j0 >= bins:
            j0 = bins - 1
        found = False
        for step in range(2 * reach + 1):
            off = (step + 1) // 2
            if step % 2 == 1:
                off = -off
            j = (j0 + off) % bins
            tc = (j + 0.5) / bins
            if circle_dist(thetas[i], tc) >= tol:
                continue
            for b in range(2):
                if math.hypot(us[i] - set_u[j, b], vs[i] - set_v[j, b]) < tol:
                    found = True
                    break
            if found:
                break
        if found:
            count += 1
    return count


@jit
def neumaier_sum(xs):
    s = 0.0
    c = 0.0
    for i in range(xs.shape[0]):
        v = xs[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@jit
def fiber_images(kind, prm, thetas, x):
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        out[i] = wrap(x + fiber_disp(kind, prm, thetas[i], x))
    return out
