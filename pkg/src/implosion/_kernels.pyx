# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pixel kernels; a port of ``_kernels_py`` running without the GIL."""
import numpy as np

from libc.math cimport ceil, fabs, log, sqrt, isfinite

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex clog(double complex)
    double complex csqrt(double complex)
    double creal(double complex)
    double cimag(double complex)

DEF ORDER = 12
DEF NQ = ORDER + 3
DEF CYCLE_TOL2 = 1e-26

cdef enum:
    OUTSIDE = 0
    INSIDE = 1
    MINUS = 100
    NONESC = 200
    DOUBLE = 201
    UNDET = 255

cdef enum:
    ESCAPE = 0
    BASIN = 1
    OTHER = 2
    BUDGET = 3

CODES = dict(OUTSIDE=OUTSIDE, INSIDE=INSIDE, MINUS=MINUS, NONESC=NONESC, DOUBLE=DOUBLE, UNDET=UNDET)

cdef double PI = 3.141592653589793

cdef struct Jet:
    double complex c2
    double complex c3
    int d
    double complex A
    double complex b[ORDER + 1]
    double R
    double R_petal
    double Rb
    double loglead
    double complex shift_att
    double complex shift_rep
    double w0


cdef void abel_coeffs(double complex kappa, double complex* b) nogil:
    cdef double complex A = 1 - kappa
    cdef double complex h[NQ]
    cdef double complex q[NQ]
    cdef double complex L[NQ]
    cdef double complex qp[ORDER + 1][NQ]
    cdef double complex acc
    cdef int i, j, k, l, p
    h[0] = 1
    h[1] = 1
    for j in range(2, NQ):
        h[j] = h[j - 1] - kappa * h[j - 2]
    for j in range(NQ):
        q[j] = 0
    q[0] = 1
    q[1] = -1
    q[2] = kappa
    L[0] = 0
    for j in range(1, NQ):
        acc = 0
        for i in range(1, j):
            acc = acc + i * L[i] * q[j - i]
        L[j] = q[j] - acc / j
    for p in range(ORDER + 1):
        for i in range(NQ):
            qp[p][i] = 0
    qp[0][0] = 1
    for p in range(1, ORDER + 1):
        for i in range(NQ):
            if qp[p - 1][i] == 0:
                continue
            for l in range(3):
                if i + l < NQ:
                    qp[p][i + l] = qp[p][i + l] + qp[p - 1][i] * q[l]
    b[0] = 0
    for k in range(1, ORDER + 1):
        acc = h[k + 2] + A * L[k + 1]
        for i in range(1, k):
            acc = acc + b[i] * qp[i][k + 1 - i]
        b[k] = acc / k


cdef inline double complex tail(Jet* J, double complex u) nogil:
    cdef double complex t = 1 / u
    cdef double complex acc = 0
    cdef int k
    for k in range(ORDER, 0, -1):
        acc = (acc + J.b[k]) * t
    return acc


cdef inline double complex tail_deriv(Jet* J, double complex u) nogil:
    cdef double complex t = 1 / u
    cdef double complex acc = 0
    cdef int k
    for k in range(ORDER, 0, -1):
        acc = acc * t + k * J.b[k]
    return -acc * t * t


cdef inline double complex fmap(Jet* J, double complex z) nogil:
    return z * (1 + z * (J.c2 + z * J.c3))


cdef double log_green_tail(Jet* J, double complex w) nogil:
    cdef double acc = J.loglead + log(cabs(w))
    cdef double scale = 1.0
    cdef double complex rho
    cdef int it
    for it in range(64):
        if J.d == 3:
            rho = 1 + (J.c2 + 1 / w) / (J.c3 * w)
        else:
            rho = 1 + 1 / (J.c2 * w)
        scale /= J.d
        acc += scale * log(cabs(rho))
        if cabs(rho - 1) < 1e-18:
            break
        w = fmap(J, w)
        if not isfinite(cabs(w)):
            break
    return acc


cdef inline double norm2(double complex z) nogil:
    return creal(z) * creal(z) + cimag(z) * cimag(z)


cdef int phi_raw(Jet* J, double complex z, int budget, double complex* raw, double* green) nogil:
    cdef int n
    cdef double complex u, w
    cdef double Rb2 = J.Rb * J.Rb
    raw[0] = 0
    green[0] = 0
    cdef double complex saved = z
    cdef long mark = 1
    for n in range(budget + 1):
        if norm2(z) >= Rb2:
            green[0] = log_green_tail(J, z) / (<double> J.d) ** n
            return ESCAPE
        if z == 0:
            return OTHER
        # Re(-1/w) > R without dividing
        w = J.c2 * z
        if -creal(w) > J.R * norm2(w):
            u = -1 / w
            raw[0] = u - J.A * clog(u) + tail(J, u) - n
            return BASIN
        z = fmap(J, z)
        # outside the petal an (almost) repeating orbit has found another attracting cycle
        if norm2(z - saved) <= CYCLE_TOL2 * norm2(z):
            return OTHER
        if n + 1 == mark:
            saved = z
            mark *= 2
    return BUDGET


cdef int classify(Jet* J, double complex z, int budget, int rem, double complex* val, double* green) nogil:
    cdef double complex raw
    cdef int kind = phi_raw(J, z, budget, &raw, green)
    val[0] = 0
    if kind == ESCAPE:
        green[0] = green[0] * (<double> J.d) ** rem
    elif kind == BASIN:
        val[0] = raw + J.shift_att + rem
    return kind


cdef double complex inverse_rep(Jet* J, double complex w) nogil:
    cdef double complex u = w + J.A * clog(-w)
    cdef double complex f, df, step
    cdef int it
    for it in range(60):
        f = u - J.A * clog(-u) + tail(J, u) - w
        df = 1 - J.A / u + tail_deriv(J, u)
        step = f / df
        u = u - step
        if cabs(step) <= 1e-15 * cabs(u):
            break
    return u


cdef bint psi_point(Jet* J, double complex w, double complex* zout, int* rem) nogil:
    cdef double x = ceil(creal(w - J.shift_rep) + J.w0)
    cdef int m = <int> x if x > 0 else 0
    cdef bint ok = False
    cdef double complex u, z
    cdef int tries, k
    for tries in range(64):
        u = inverse_rep(J, w - m - J.shift_rep)
        if creal(u) < -J.R:
            ok = True
            break
        m += 8
    if not ok:
        return False
    z = -1 / (J.c2 * u)
    for k in range(m):
        if cabs(z) >= J.Rb:
            zout[0] = z
            rem[0] = m - k
            return True
        z = fmap(J, z)
    zout[0] = z
    rem[0] = 0
    return True


cdef int levels(Jet* J, double complex phi, double complex tau, int n_max, int budget, double* omega) nogil:
    cdef int N, rem, kind
    cdef double complex z, val
    cdef double green
    omega[0] = 0
    for N in range(1, n_max + 1):
        if not psi_point(J, phi + tau, &z, &rem):
            return UNDET
        kind = classify(J, z, budget, rem, &val, &green)
        if kind == ESCAPE:
            omega[0] = green
            return N
        if kind == OTHER:
            return NONESC
        if kind != BASIN:
            return UNDET
        phi = val
    return NONESC


cdef bint cubic_jet(double complex s, Jet* J) nogil:
    cdef double complex s_inv = 1 / s
    cdef double complex bb = (s + s_inv) / 2
    cdef double complex kappa
    cdef double esc, worst, t
    J.c2 = -bb
    J.c3 = 1.0 / 3.0
    J.d = 3
    if cabs(J.c2) < 1e-10:
        return False
    kappa = J.c3 / (J.c2 * J.c2)
    J.A = 1 - kappa
    J.R_petal = 10.0
    t = 4 * cabs(J.A) + 4
    if t > J.R_petal:
        J.R_petal = t
    t = 4 * sqrt(cabs(kappa))
    if t > J.R_petal:
        J.R_petal = t
    J.R = 30.0 if J.R_petal < 30.0 else J.R_petal
    esc = 3 * (2 + cabs(s + s_inv))
    if esc < 4.0:
        esc = 4.0
    worst = sqrt(cabs(1 / J.c3))
    t = cabs(J.c2 / J.c3)
    if t > worst:
        worst = t
    J.Rb = esc if esc > 8 * worst else 8 * worst
    if J.Rb < 4.0:
        J.Rb = 4.0
    J.loglead = 0.5 * log(cabs(J.c3))
    abel_coeffs(kappa, J.b)
    J.shift_att = 0
    J.shift_rep = 0
    J.w0 = J.R + 10.0
    return True


cdef int esc_pixel(double complex s, double complex tau, int n_max, int budget, double* omega) nogil:
    cdef Jet J
    cdef double complex raw1, raw2, shift
    cdef double g, op, om
    cdef int k1, k2, cp, cm
    cdef bint plus, minus
    omega[0] = 0
    if s == 0:
        return UNDET
    if not cubic_jet(s, &J):
        return UNDET
    k1 = phi_raw(&J, 1 / s, budget, &raw1, &g)
    k2 = phi_raw(&J, s, budget, &raw2, &g)
    if k1 == BUDGET or k2 == BUDGET:
        return UNDET
    if k1 != BASIN or k2 != BASIN:
        return OUTSIDE
    shift = -raw1
    J.shift_att = shift
    J.shift_rep = shift - 1j * PI * J.A
    cp = levels(&J, raw2 + shift, tau, n_max, budget, &op)
    cm = levels(&J, 0, tau, n_max, budget, &om)
    plus = 1 <= cp <= n_max
    minus = 1 <= cm <= n_max
    if plus and minus:
        omega[0] = op
        return DOUBLE
    if plus:
        omega[0] = op
        return cp
    if minus:
        omega[0] = om
        return MINUS + cm
    if cp == UNDET or cm == UNDET:
        return UNDET
    return NONESC


cdef int dyn_pixel(Jet* J, double complex z, double complex tau, int n_max, int budget, double* omega) nogil:
    cdef double complex raw
    cdef double g
    cdef int kind = phi_raw(J, z, budget, &raw, &g)
    omega[0] = 0
    if kind == BUDGET:
        return UNDET
    if kind != BASIN:
        return OUTSIDE
    return levels(J, raw + J.shift_att, tau, n_max, budget, omega)


cdef int central_pixel(double complex p, bint plane_a, double complex lam, int max_iter) nogil:
    cdef double complex c1, c2, c3, disc, z, s_inv, bb, kappa, w
    cdef double esc2
    cdef double complex saved
    cdef long mark
    cdef double complex crit[2]
    cdef double esc, R_petal = 0, t
    cdef bint parabolic, degenerate
    cdef int result = INSIDE
    cdef int state, n, i
    if plane_a:
        c1 = lam
        c2 = p
        c3 = 1
        disc = csqrt(p * p - 3 * lam)
        crit[0] = (-p + disc) / 3
        crit[1] = (-p - disc) / 3
        esc = 2 + cabs(p) + cabs(lam)
        if esc < 4.0:
            esc = 4.0
    else:
        if p == 0:
            return UNDET
        s_inv = 1 / p
        bb = (p + s_inv) / 2
        c1 = lam
        c2 = -lam * bb
        c3 = lam / 3
        crit[0] = p
        crit[1] = s_inv
        esc = 3 * (2 + cabs(p + s_inv))
        if esc < 4.0:
            esc = 4.0
        t = 1 / cabs(lam)
        if t > 1.0:
            esc = esc * t
    parabolic = lam == 1
    degenerate = cabs(c2) < 1e-12
    if parabolic and not degenerate:
        kappa = c3 / (c2 * c2)
        R_petal = 10.0
        t = 4 * cabs(1 - kappa) + 4
        if t > R_petal:
            R_petal = t
        t = 4 * sqrt(cabs(kappa))
        if t > R_petal:
            R_petal = t
    esc2 = esc * esc
    for i in range(2):
        z = crit[i]
        saved = z
        mark = 1
        state = BUDGET
        for n in range(max_iter + 1):
            if norm2(z) > esc2:
                state = ESCAPE
                break
            if parabolic:
                if z == 0:
                    state = BASIN
                    break
                if degenerate:
                    w = 2 * c3 * z * z
                    if -creal(w) > 10.0 * norm2(w):
                        state = BASIN
                        break
                else:
                    w = c2 * z
                    if -creal(w) > R_petal * norm2(w):
                        state = BASIN
                        break
            z = z * (c1 + z * (c2 + z * c3))
            if parabolic:
                if norm2(z - saved) <= CYCLE_TOL2 * norm2(z):
                    state = OTHER
                    break
                if n + 1 == mark:
                    saved = z
                    mark *= 2
        if state == ESCAPE or state == OTHER:
            return OUTSIDE
        if state == BUDGET and parabolic:
            result = UNDET
    return result


# raster drivers ---------------------------------------------------------------

cdef void jet_from_list(list jl, Jet* J):
    cdef int k
    J.c2 = jl[0]
    J.c3 = jl[1]
    J.d = jl[2]
    J.A = jl[3]
    for k in range(ORDER + 1):
        J.b[k] = jl[4][k]
    J.R = jl[5]
    J.R_petal = jl[6]
    J.Rb = jl[7]
    J.loglead = jl[8]
    J.shift_att = jl[9]
    J.shift_rep = jl[10]
    J.w0 = jl[11]


def esc_raster(ss, tau, int n_max, int budget):
    cdef double complex[::1] sv = np.ascontiguousarray(ss, dtype=np.complex128)
    cdef Py_ssize_t n = sv.shape[0], i
    codes = np.empty(n, dtype=np.uint8)
    omega = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] cv = codes
    cdef double[::1] ov = omega
    cdef double complex t = tau
    with nogil:
        for i in range(n):
            cv[i] = <unsigned char> esc_pixel(sv[i], t, n_max, budget, &ov[i])
    return codes, omega


def dyn_raster(list jet, zs, tau, int n_max, int budget):
    cdef Jet J
    jet_from_list(jet, &J)
    cdef double complex[::1] zv = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef Py_ssize_t n = zv.shape[0], i
    codes = np.empty(n, dtype=np.uint8)
    omega = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] cv = codes
    cdef double[::1] ov = omega
    cdef double complex t = tau
    with nogil:
        for i in range(n):
            cv[i] = <unsigned char> dyn_pixel(&J, zv[i], t, n_max, budget, &ov[i])
    return codes, omega


def central_raster(ps, bint plane_a, lam, int max_iter):
    cdef double complex[::1] pv = np.ascontiguousarray(ps, dtype=np.complex128)
    cdef Py_ssize_t n = pv.shape[0], i
    codes = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] cv = codes
    cdef double complex l = lam
    with nogil:
        for i in range(n):
            cv[i] = <unsigned char> central_pixel(pv[i], plane_a, l, max_iter)
    return codes
