"""Pure-Python per-pixel kernels.  ``_kernels.pyx`` is a line-by-line port of
this module; both are selected through ``_backend``.

A "jet" is a flat tuple describing z -> z + c2 z^2 + c3 z^3 (c3 = 0 for the
quadratic) together with its Fatou-coordinate data:

    (c2, c3, degree, A, b, R, R_petal, Rb, loglead, shift_att, shift_rep, w0)

where b holds the Abel series coefficients b_1..b_12 at b[1:].
"""
import cmath
import math

import numpy as np

OUTSIDE = 0
MINUS = 100
NONESC = 200
DOUBLE = 201
UNDET = 255
INSIDE = 1

ESCAPE, BASIN, OTHER, BUDGET = 0, 1, 2, 3

ORDER = 12
CYCLE_TOL = 1e-13


def abel_coeffs(kappa):
    A = 1 - kappa
    n = ORDER + 3
    h = [0j] * n
    h[0] = h[1] = 1 + 0j
    for j in range(2, n):
        h[j] = h[j - 1] - kappa * h[j - 2]
    q = [1 + 0j, -1 + 0j, kappa] + [0j] * (n - 3)
    L = [0j] * n
    for j in range(1, n):
        acc = 0j
        for i in range(1, j):
            acc += i * L[i] * q[j - i]
        L[j] = q[j] - acc / j
    qp = [[0j] * n for _ in range(ORDER + 1)]
    qp[0][0] = 1 + 0j
    for p in range(1, ORDER + 1):
        for i in range(n):
            if qp[p - 1][i] == 0:
                continue
            for l in range(3):
                if i + l < n:
                    qp[p][i + l] += qp[p - 1][i] * q[l]
    b = [0j] * (ORDER + 1)
    for k in range(1, ORDER + 1):
        acc = h[k + 2] + A * L[k + 1]
        for i in range(1, k):
            acc += b[i] * qp[i][k + 1 - i]
        b[k] = acc / k
    return b


def tail(b, u):
    t = 1 / u
    acc = 0j
    for k in range(ORDER, 0, -1):
        acc = (acc + b[k]) * t
    return acc


def tail_deriv(b, u):
    t = 1 / u
    acc = 0j
    for k in range(ORDER, 0, -1):
        acc = acc * t + k * b[k]
    return -acc * t * t


def fmap(J, z):
    return z * (1 + z * (J[0] + z * J[1]))


def log_green_tail(J, w):
    c2, c3, d = J[0], J[1], J[2]
    acc = J[8] + math.log(abs(w))
    scale = 1.0
    for _ in range(64):
        if d == 3:
            rho = 1 + (c2 + 1 / w) / (c3 * w)
        else:
            rho = 1 + 1 / (c2 * w)
        scale /= d
        acc += scale * math.log(abs(rho))
        if abs(rho - 1) < 1e-18:
            break
        w = fmap(J, w)
        if not math.isfinite(abs(w)):
            break
    return acc


def _pow(d, n):
    # d^n with the C overflow behaviour (inf instead of OverflowError)
    return float(d) ** n if n * math.log(d) < 709 else math.inf


def phi_raw(J, z, budget):
    """(kind, raw phi, green) for the orbit of z."""
    c2, d, A, b, R, Rb = J[0], J[2], J[3], J[4], J[5], J[7]
    saved, mark = z, 1
    for n in range(budget + 1):
        if abs(z) >= Rb:
            return ESCAPE, 0j, log_green_tail(J, z) / _pow(d, n)
        if z == 0:
            return OTHER, 0j, 0.0
        u = -1 / (c2 * z)
        if u.real > R:
            return BASIN, u - A * cmath.log(u) + tail(b, u) - n, 0.0
        z = fmap(J, z)
        # outside the petal an (almost) repeating orbit has found another attracting cycle
        if abs(z - saved) <= CYCLE_TOL * abs(z):
            return OTHER, 0j, 0.0
        if n + 1 == mark:
            saved, mark = z, 2 * mark
    return BUDGET, 0j, 0.0


def classify(J, z, budget, rem):
    kind, raw, green = phi_raw(J, z, budget)
    if kind == ESCAPE:
        return kind, 0j, green * _pow(J[2], rem)
    if kind == BASIN:
        return kind, raw + J[9] + rem, 0.0
    return kind, 0j, 0.0


def inverse_rep(J, w):
    A, b = J[3], J[4]
    u = w + A * cmath.log(-w)
    for _ in range(60):
        f = u - A * cmath.log(-u) + tail(b, u) - w
        df = 1 - A / u + tail_deriv(b, u)
        step = f / df
        u -= step
        if abs(step) <= 1e-15 * abs(u):
            break
    return u


def psi_point(J, w):
    """(ok, z, remaining) for the pushed-forward repelling chart at w."""
    c2, R, Rb, shift_rep, w0 = J[0], J[5], J[7], J[10], J[11]
    m = max(0, math.ceil((w - shift_rep).real + w0))
    ok = False
    for _ in range(64):
        u = inverse_rep(J, w - m - shift_rep)
        if u.real < -R:
            ok = True
            break
        m += 8
    if not ok:
        return False, 0j, 0
    z = -1 / (c2 * u)
    for k in range(m):
        if abs(z) >= Rb:
            return True, z, m - k
        z = fmap(J, z)
    return True, z, 0


def levels(J, phi, tau, n_max, budget):
    """(code, omega) of the Lavaurs orbit starting from the coordinate phi."""
    for N in range(1, n_max + 1):
        ok, z, rem = psi_point(J, phi + tau)
        if not ok:
            return UNDET, 0.0
        kind, val, green = classify(J, z, budget, rem)
        if kind == ESCAPE:
            return N, green
        if kind == OTHER:
            return NONESC, 0.0
        if kind != BASIN:
            return UNDET, 0.0
        phi = val
    return NONESC, 0.0


def cubic_jet(s):
    """Jet of g_s with the analytic repelling shift (no sampled correction)."""
    s_inv = 1 / s
    bb = (s + s_inv) / 2
    c2, c3 = -bb, 1 / 3 + 0j
    if abs(c2) < 1e-10:
        return None
    kappa = c3 / (c2 * c2)
    A = 1 - kappa
    R_petal = max(10.0, 4 * abs(A) + 4, 4 * math.sqrt(abs(kappa)))
    R = max(30.0, R_petal)
    esc = max(4.0, 3 * (2 + abs(s + s_inv)))
    worst = max(math.sqrt(abs(1 / c3)), abs(c2 / c3))
    Rb = max(esc, 8 * worst, 4.0)
    loglead = 0.5 * math.log(abs(c3))
    return [c2, c3, 3, A, abel_coeffs(kappa), R, R_petal, Rb, loglead, 0j, 0j, R + 10.0]


def with_shifts(J, shift_att, shift_rep):
    J = list(J)
    J[9], J[10] = shift_att, shift_rep
    return J


def esc_pixel(s, tau, n_max, budget):
    """(code, omega) for the parameter s."""
    if s == 0:
        return UNDET, 0.0
    J = cubic_jet(s)
    if J is None:
        return UNDET, 0.0
    s_inv = 1 / s
    k1, raw1, _ = phi_raw(J, s_inv, budget)
    k2, raw2, _ = phi_raw(J, s, budget)
    if k1 == BUDGET or k2 == BUDGET:
        return UNDET, 0.0
    if k1 != BASIN or k2 != BASIN:
        return OUTSIDE, 0.0
    shift = -raw1
    J = with_shifts(J, shift, shift - 1j * math.pi * J[3])
    cp, op = levels(J, raw2 + shift, tau, n_max, budget)
    cm, om = levels(J, 0j, tau, n_max, budget)
    plus = 1 <= cp <= n_max
    minus = 1 <= cm <= n_max
    if plus and minus:
        return DOUBLE, op
    if plus:
        return cp, op
    if minus:
        return MINUS + cm, om
    if cp == UNDET or cm == UNDET:
        return UNDET, 0.0
    return NONESC, 0.0


def dyn_pixel(J, z, tau, n_max, budget):
    kind, raw, _ = phi_raw(J, z, budget)
    if kind == BUDGET:
        return UNDET, 0.0
    if kind != BASIN:
        return OUTSIDE, 0.0
    return levels(J, raw + J[9], tau, n_max, budget)


def central_pixel(p, plane_a, lam, max_iter):
    """INSIDE when both critical orbits converge to 0 (lam = 1) or stay
    bounded (lam != 1) within max_iter; OUTSIDE when one escapes."""
    if plane_a:
        a = p
        c1, c2, c3 = lam, a, 1 + 0j
        disc = cmath.sqrt(a * a - 3 * lam)
        crit = ((-a + disc) / 3, (-a - disc) / 3)
        esc = max(4.0, 2 + abs(a) + abs(lam))
    else:
        if p == 0:
            return UNDET
        s_inv = 1 / p
        bb = (p + s_inv) / 2
        c1, c2, c3 = lam, -lam * bb, lam / 3
        crit = (p, s_inv)
        esc = max(4.0, 3 * (2 + abs(p + s_inv))) * max(1.0, 1 / abs(lam))
    parabolic = lam == 1
    degenerate = abs(c2) < 1e-12
    if parabolic and not degenerate:
        kappa = c3 / (c2 * c2)
        R_petal = max(10.0, 4 * abs(1 - kappa) + 4, 4 * math.sqrt(abs(kappa)))
    result = INSIDE
    for z in crit:
        state = BUDGET
        saved, mark = z, 1
        for n in range(max_iter + 1):
            if abs(z) > esc:
                state = ESCAPE
                break
            if parabolic:
                if z == 0:
                    state = BASIN
                    break
                if degenerate:
                    if (-1 / (2 * c3 * z * z)).real > 10.0:
                        state = BASIN
                        break
                elif (-1 / (c2 * z)).real > R_petal:
                    state = BASIN
                    break
            z = z * (c1 + z * (c2 + z * c3))
            if parabolic:
                if abs(z - saved) <= CYCLE_TOL * abs(z):
                    state = OTHER
                    break
                if n + 1 == mark:
                    saved, mark = z, 2 * mark
        if state == ESCAPE or state == OTHER:
            return OUTSIDE
        if state == BUDGET:
            if parabolic:
                result = UNDET
    return result


# raster drivers: flat arrays in, flat arrays out ----------------------------

CODES = dict(OUTSIDE=OUTSIDE, INSIDE=INSIDE, MINUS=MINUS, NONESC=NONESC, DOUBLE=DOUBLE, UNDET=UNDET)


def esc_raster(ss, tau, n_max, budget):
    ss = np.asarray(ss, dtype=complex)
    codes = np.empty(ss.shape[0], dtype=np.uint8)
    omega = np.empty(ss.shape[0])
    tau = complex(tau)
    for i, s in enumerate(ss.tolist()):
        codes[i], omega[i] = esc_pixel(s, tau, n_max, budget)
    return codes, omega


def dyn_raster(J, zs, tau, n_max, budget):
    zs = np.asarray(zs, dtype=complex)
    codes = np.empty(zs.shape[0], dtype=np.uint8)
    omega = np.empty(zs.shape[0])
    tau = complex(tau)
    for i, z in enumerate(zs.tolist()):
        codes[i], omega[i] = dyn_pixel(J, z, tau, n_max, budget)
    return codes, omega


def central_raster(ps, plane_a, lam, max_iter):
    ps = np.asarray(ps, dtype=complex)
    lam = complex(lam)
    return np.array([central_pixel(p, plane_a, lam, max_iter) for p in ps.tolist()], dtype=np.uint8)
