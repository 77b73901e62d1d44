"""Polynomial families, escape iteration, Green's function, Böttcher coordinate
and external rays.

Three families share one representation:

* ``CUBIC``      g_{lam,s}(z) = lam * z * (1 - b z + z^2/3),  b = (s + 1/s)/2
* ``QUADRATIC``  p_lam(z) = lam * z + z^2
* ``CUBIC_A``    f_{lam,a}(z) = lam * z + a z^2 + z^3

Every map fixes the origin.  Maps are immutable and all functions here are
pure, so they can be evaluated from many threads at once.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import PullbackObstructed, RayObstructed


class Family(enum.Enum):
    QUADRATIC = "quadratic"
    CUBIC = "cubic"
    CUBIC_A = "cubic_a"


@dataclass(frozen=True)
class PolyMap:
    family: Family
    s: complex = 1.0
    lam: complex = 1.0
    a: complex = 0.0
    # cubic only: the critical point 1/s, stored so that inversion keeps the
    # coefficients bit-identical
    s_inv: complex | None = None
    coeffs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = complex(self.lam)
        if self.family is Family.CUBIC:
            s = complex(self.s)
            if s == 0:
                raise ValueError("cubic marking s must be nonzero")
            s_inv = complex(self.s_inv) if self.s_inv is not None else 1 / s
            object.__setattr__(self, "s_inv", s_inv)
            b = (s + s_inv) / 2
            c = (0j, lam, -lam * b, lam / 3)
        elif self.family is Family.QUADRATIC:
            c = (0j, lam, 1 + 0j)
        else:
            c = (0j, lam, complex(self.a), 1 + 0j)
        object.__setattr__(self, "coeffs", c)

    # constructors -----------------------------------------------------------

    @classmethod
    def cubic(cls, s, lam=1.0) -> "PolyMap":
        return cls(Family.CUBIC, s=complex(s), lam=complex(lam))

    @classmethod
    def quadratic(cls, lam=1.0) -> "PolyMap":
        return cls(Family.QUADRATIC, lam=complex(lam))

    @classmethod
    def cubic_a(cls, a, lam=1.0) -> "PolyMap":
        return cls(Family.CUBIC_A, a=complex(a), lam=complex(lam))

    def inverted(self) -> "PolyMap":
        """Same cubic with the marking s replaced by 1/s (identical coefficients)."""
        if self.family is not Family.CUBIC:
            raise ValueError("only cubic maps carry an invertible marking")
        return PolyMap(Family.CUBIC, s=self.s_inv, lam=self.lam, s_inv=self.s)

    def with_lam(self, lam) -> "PolyMap":
        return PolyMap(self.family, s=self.s, lam=complex(lam), a=self.a, s_inv=self.s_inv)

    # evaluation -------------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def b(self) -> complex:
        """Half the sum of the cubic critical points, (s + 1/s)/2."""
        return (self.s + self.s_inv) / 2

    def __call__(self, z):
        c = self.coeffs
        acc = c[-1]
        for ck in c[-2::-1]:
            acc = acc * z + ck
        return acc

    def deriv(self, z):
        c = self.coeffs
        d = len(c) - 1
        acc = d * c[d]
        for k in range(d - 1, 0, -1):
            acc = acc * z + k * c[k]
        return acc


def eval(map: PolyMap, z: complex) -> complex:  # noqa: A001 - mirrors the operation name
    return map(z)


def critical_points(map: PolyMap) -> list[complex]:
    """Finite critical points, repeated according to multiplicity."""
    if map.family is Family.CUBIC:
        return [map.s, map.s_inv]
    if map.family is Family.QUADRATIC:
        return [-map.lam / 2]
    # 3z^2 + 2az + lam = 0
    a, lam = map.a, map.lam
    disc = cmath.sqrt(a * a - 3 * lam)
    return [(-a + disc) / 3, (-a - disc) / 3]


def distinct_critical_points(map: PolyMap, tol: float = 1e-12) -> list[tuple[complex, int]]:
    out: list[tuple[complex, int]] = []
    for c in critical_points(map):
        for i, (p, m) in enumerate(out):
            if abs(p - c) <= tol:
                out[i] = (p, m + 1)
                break
        else:
            out.append((c, 1))
    return out


@dataclass
class FixedPointInfo:
    location: complex
    multiplier: complex
    multiplicity: int = 1
    index: complex | None = None


def fixed_points(map: PolyMap, cluster_tol: float = 1e-9) -> list[FixedPointInfo]:
    """All finite fixed points, roots of map(z) - z clustered into multiple roots."""
    c = list(map.coeffs)
    c[1] -= 1
    # np.roots returns vanishing low-order coefficients as exact zero roots
    all_roots = [complex(r) for r in np.roots(np.array(c[::-1], dtype=complex))]
    clusters: list[list[complex]] = []
    for r in all_roots:
        for cl in clusters:
            if abs(cl[0] - r) <= cluster_tol:
                cl.append(r)
                break
        else:
            clusters.append([r])
    out = []
    for cl in clusters:
        loc = 0j if any(x == 0 for x in cl) else sum(cl) / len(cl)
        mult = map.deriv(loc)
        out.append(FixedPointInfo(loc, mult, len(cl)))
    return out


# escape machinery -----------------------------------------------------------

def escape_radius(map: PolyMap) -> float:
    """Radius beyond which |map(z)| >= 2|z|, provable from the coefficients."""
    lam = abs(map.lam)
    if map.family is Family.CUBIC:
        return max(4.0, 3 * (2 + abs(map.s + map.s_inv))) * max(1.0, 1 / lam)
    if map.family is Family.QUADRATIC:
        return max(4.0, 2 * (1 + lam))
    return max(4.0, 2 + abs(map.a) + lam)


def bottcher_radius(map: PolyMap) -> float:
    """Radius where the Böttcher product converges on its principal branch."""
    c = map.coeffs
    d = len(c) - 1
    worst = max(abs(c[j] / c[d]) ** (1 / (d - j)) for j in range(1, d))
    return max(escape_radius(map), 4 * (d - 1) * worst, 4.0)


class OrbitResult(NamedTuple):
    escaped: bool
    n: int
    z: complex


def iterate_escape(map: PolyMap, z: complex, max_iter: int = 10_000, R: float | None = None) -> OrbitResult:
    if R is None:
        R = escape_radius(map)
    z = complex(z)
    for n in range(max_iter + 1):
        if abs(z) > R:
            return OrbitResult(True, n, z)
        if n < max_iter:
            z = map(z)
    return OrbitResult(False, max_iter, z)


def _lead(map: PolyMap) -> complex:
    """Böttcher scale c with c^(d-1) = leading coefficient (principal root)."""
    c = map.coeffs
    d = len(c) - 1
    return c[d] ** (1 / (d - 1))


def _rho(map: PolyMap, w: complex) -> complex:
    """map(w) / (c_d w^d): tends to 1 at infinity."""
    return _rho_and_deriv(map, w)[0]


def _rho_and_deriv(map: PolyMap, w: complex) -> tuple[complex, complex]:
    c = map.coeffs
    d = len(c) - 1
    r, dr = 1 + 0j, 0j
    for j in range(1, d):
        e = j - d
        r += c[j] / c[d] * w ** e
        dr += e * c[j] / c[d] * w ** (e - 1)
    return r, dr


def _log_green_tail(map: PolyMap, w: complex) -> float:
    """log|phi(w)| for w inside the Böttcher-safe region."""
    d = map.degree
    acc = math.log(abs(_lead(map))) + math.log(abs(w))
    scale = 1.0
    for _ in range(64):
        rho = _rho(map, w)
        scale /= d
        term = math.log(abs(rho))
        acc += scale * term
        if abs(rho - 1) < 1e-18:
            break
        w = map(w)
        if not math.isfinite(abs(w)):
            break
    return acc


def green(map: PolyMap, z: complex, max_iter: int = 10_000) -> float:
    """Escape-rate potential; exactly 0 for orbits bounded within the budget."""
    Rb = bottcher_radius(map)
    d = map.degree
    z = complex(z)
    for n in range(max_iter + 1):
        if abs(z) >= Rb:
            return _log_green_tail(map, z) / d ** n
        z = map(z)
    return 0.0


def _bottcher_direct(map: PolyMap, w: complex) -> tuple[complex, complex]:
    """(log phi(w), d/dw log phi(w)) for |w| >= bottcher_radius."""
    d = map.degree
    logphi = cmath.log(_lead(map)) + cmath.log(w)
    dlog = 1 / w
    dw = 1 + 0j  # derivative of the k-th iterate
    scale = 1.0
    for _ in range(64):
        rho, drho = _rho_and_deriv(map, w)
        scale /= d
        logphi += scale * cmath.log(rho)
        dlog += scale * drho / rho * dw
        if abs(rho - 1) < 1e-18:
            break
        dw *= map.deriv(w)
        w = map(w)
        if not math.isfinite(abs(w)) or not math.isfinite(abs(dw)):
            break
    return logphi, dlog


def _orbit_to_safe(map: PolyMap, z: complex, Rb: float, max_iter: int = 200):
    """First n with |p^n(z)| >= Rb, with p^n(z) and (p^n)'(z)."""
    dz = 1 + 0j
    for n in range(max_iter + 1):
        if abs(z) >= Rb:
            return n, z, dz
        dz *= map.deriv(z)
        z = map(z)
    return None


def _orbit_to_safe_fixed(map, z, n):
    dz = 1 + 0j
    for _ in range(n):
        dz *= map.deriv(z)
        z = map(z)
        if not math.isfinite(abs(z)):
            return None
    return z, dz


def _angle_mul(t: float, d: int, n: int) -> float:
    for _ in range(n):
        t = (t * d) % 1.0
    return t


class Polyline(NamedTuple):
    points: list
    green: list


def _solve_on_ray(map, y0, r, t, Rb):
    """Point of potential r on the ray of angle t, Newton-corrected from y0."""
    d = map.degree
    y = y0
    for _ in range(4):
        info = _orbit_to_safe(map, y, Rb)
        if info is None:
            raise RayObstructed("ray point fell into the filled Julia set")
        n = info[0]
        target = complex(d ** n * r, 2 * math.pi * _angle_mul(t, d, n))
        out = _newton_log_bottcher(map, y, n, target, Rb)
        if out is not None:
            return out
    raise RayObstructed("could not settle the iterate depth on the ray")


def _newton_log_bottcher(map, x, n, target, Rb, max_newton=30):
    for _ in range(max_newton):
        res = _orbit_to_safe_fixed(map, x, n)
        if res is None:
            raise RayObstructed("iterate overflow during Newton correction")
        w, dw = res
        if abs(w) < Rb:
            return None
        lp, dl = _bottcher_direct(map, w)
        f = lp - target
        f = complex(f.real, (f.imag + math.pi) % (2 * math.pi) - math.pi)
        step = f / (dl * dw)
        x = x - step
        if abs(step) <= 1e-14 * max(1.0, abs(x)):
            break
    else:
        raise RayObstructed("Newton correction did not converge")
    res = _orbit_to_safe_fixed(map, x, n)
    if res is None or abs(res[0]) < Rb:
        return None
    return x


def _inverse_bottcher_far(map, logzeta, Rb):
    """Point w with log phi(w) = logzeta, assuming Re(logzeta) is large."""
    x = cmath.exp(logzeta) / _lead(map)
    out = _newton_log_bottcher(map, x, 0, logzeta, Rb)
    if out is None:
        raise RayObstructed("starting potential too low for the direct inverse")
    return out


def _predict_along_ray(map, y, dr, Rb):
    info = _orbit_to_safe(map, y, Rb)
    if info is None:
        raise RayObstructed("ray point fell into the filled Julia set")
    n, w, dw = info
    _, dl = _bottcher_direct(map, w)
    dlog_y = dl * dw / map.degree ** n
    # step linearly in log y: exact to leading order where phi(y) ~ c y
    q = y * dlog_y
    if abs(y) < 1e-8 or abs(q) < 1e-12:
        return y + dr / dlog_y
    return y * cmath.exp(dr / q)


def external_ray(map: PolyMap, t: float, green_range: tuple[float, float], steps: int = 50) -> Polyline:
    """Trace the external ray of angle t from potential g_hi down to g_lo.

    Potentials are sampled geometrically; between samples the potential drops
    by at most a factor 0.75 and every point is Newton-corrected against the
    Böttcher coordinate of a deep enough iterate.
    """
    g_lo, g_hi = green_range
    if not (0 < g_lo < g_hi):
        raise ValueError("need 0 < g_lo < g_hi")
    Rb = bottcher_radius(map)
    d = map.degree
    r_start = max(g_hi, math.log(Rb) + 3.0)
    y = _inverse_bottcher_far(map, complex(r_start, 2 * math.pi * (t % 1.0)), Rb)
    r = r_start
    samples = [g_hi * (g_lo / g_hi) ** (j / (steps - 1)) for j in range(steps)] if steps > 1 else [g_hi]
    pts, gs = [], []
    for r_next in samples:
        while r > r_next * (1 + 1e-15):
            r_new = max(r * 0.75, r_next)
            pred = _predict_along_ray(map, y, r_new - r, Rb)
            y_new = _solve_on_ray(map, pred, r_new, t, Rb)
            spacing = abs(pred - y)
            if abs(y_new - pred) > 0.5 * spacing + 1e-12:
                raise RayObstructed(f"Newton jumped off the ray near potential {r_new:.3g}")
            y, r = y_new, r_new
        pts.append(y)
        gs.append(r)
    return Polyline(pts, gs)


def boettcher(map: PolyMap, z: complex, max_iter: int = 10_000) -> complex:
    """Böttcher coordinate conjugating the map to w -> w^d near infinity.

    Scaled so that phi(z) ~ c z with c^(d-1) the leading coefficient, which
    makes log|phi| the Green function.  Points close to the filled Julia set
    are handled by following their external ray up to the safe region.
    """
    z = complex(z)
    Rb = bottcher_radius(map)
    if abs(z) >= Rb:
        return cmath.exp(_bottcher_direct(map, z)[0])
    g0 = green(map, z, max_iter)
    if g0 <= 0:
        raise PullbackObstructed("point has bounded orbit; Böttcher coordinate undefined")
    _check_critical_potential(map, g0, max_iter)
    d = map.degree
    y, r = z, g0
    n_cur, _, _ = _orbit_to_safe(map, y, Rb, max_iter)
    logphi_n = 0j
    try:
        while True:
            # climb to the shallowest iterate that is still in the safe region
            while n_cur > 0:
                w, _ = _orbit_to_safe_fixed(map, y, n_cur - 1)
                if abs(w) < Rb:
                    break
                logphi_n = _bottcher_direct(map, w)[0]
                n_cur -= 1
            if n_cur == 0:
                break
            if logphi_n == 0j:
                w, _ = _orbit_to_safe_fixed(map, y, n_cur)
                logphi_n = _bottcher_direct(map, w)[0]
            r_new = r / 0.75
            pred = _predict_along_ray(map, y, r_new - r, Rb)
            target = complex(d ** n_cur * r_new, logphi_n.imag)
            y_new = _newton_log_bottcher(map, pred, n_cur, target, Rb)
            if y_new is None or abs(y_new - pred) > 0.5 * abs(pred - y) + 1e-12:
                raise PullbackObstructed("ray continuation stalled")
            y, r = y_new, r_new
            logphi_n = target
    except RayObstructed as exc:
        raise PullbackObstructed(str(exc)) from exc
    arg = _bottcher_direct(map, y)[0].imag
    return cmath.exp(complex(g0, arg))


def _check_critical_potential(map, g0, max_iter):
    for c in critical_points(map):
        gc = green(map, c, max_iter)
        if gc > 0 and g0 <= gc * (1 + 1e-12):
            raise PullbackObstructed("point lies below an escaping critical equipotential")
