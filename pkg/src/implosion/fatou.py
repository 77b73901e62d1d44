"""Attracting and repelling Fatou coordinates at a parabolic fixed point 0.

For a map z + c2 z^2 + c3 z^3 (c2 != 0) put u = -1/(c2 z).  In this chart the
map is exactly

    F(u) = u^3 / (u^2 - u + kappa),   kappa = c3 / c2^2,

and F(u) = u + 1 + A/u + O(u^-2) with A = 1 - kappa.  The Abel equation
Phi(F(u)) = Phi(u) + 1 has the asymptotic solution

    Phi(u) = u - A log u + sum_{k=1}^{K} b_k u^{-k},

which is accurate to rounding once |u| is a few dozen.  The attracting
coordinate of z is Phi(u_n) - n for the first iterate that is deep in the
petal, which replaces the slowly converging limit of u_n - n - A log u_n by an
expansion with error O(|u|^{-K-1}).  The repelling side uses the same series
with log(-u); its inverse is found by Newton and pushed forward by the map.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CriticalNotInBasin, DegenerateParabolic, NewtonDiverged, NormalizationDivergence, NotInBasin
from .poly import Family, PolyMap, bottcher_radius

SERIES_ORDER = 12
MAX_ITER = 100_000


def abel_series(kappa: complex, order: int = SERIES_ORDER) -> list[complex]:
    """Coefficients b_1..b_order (index 0 unused) of the asymptotic Abel solution.

    With t = 1/u: F(u) = u / q(t), q = 1 - t + kappa t^2, and 1/q = sum h_j t^j
    where h_j = h_{j-1} - kappa h_{j-2}.  Matching powers of t in
    Phi(F(u)) - Phi(u) - 1 = 0 gives b_k recursively.
    """
    kappa = complex(kappa)
    A = 1 - kappa
    n = order + 3
    h = [0j] * n
    h[0] = h[1] = 1 + 0j
    for j in range(2, n):
        h[j] = h[j - 1] - kappa * h[j - 2]
    q = [1 + 0j, -1 + 0j, kappa] + [0j] * (n - 3)
    # L = log q as a power series in t
    L = [0j] * n
    for j in range(1, n):
        L[j] = q[j] - sum(i * L[i] * q[j - i] for i in range(1, j)) / j
    # powers of q, truncated
    qp = [[1 + 0j] + [0j] * (n - 1)]
    for _ in range(order):
        prev = qp[-1]
        new = [0j] * n
        for i in range(n):
            if prev[i] == 0:
                continue
            for l in range(3):
                if i + l < n:
                    new[i + l] += prev[i] * q[l]
        qp.append(new)
    b = [0j] * (order + 1)
    for k in range(1, order + 1):
        acc = h[k + 2] + A * L[k + 1] + sum(b[i] * qp[i][k + 1 - i] for i in range(1, k))
        b[k] = acc / k
    return b


def _series_tail(b, u):
    t = 1 / u
    acc = 0j
    for bk in reversed(b[1:]):
        acc = (acc + bk) * t
    return acc


def _series_tail_deriv(b, u):
    t = 1 / u
    acc = 0j
    for k in range(len(b) - 1, 0, -1):
        acc = acc * t + k * b[k]
    return -acc * t * t


class ParabolicJet(NamedTuple):
    c2: complex
    c3: complex
    kappa: complex
    A: complex
    b: list
    R: float  # Re u beyond which the series is used
    R_petal: float  # Re u beyond which F(u) has Re >= Re u + 1/2, so phi is injective


def parabolic_jet(map: PolyMap) -> ParabolicJet:
    c = map.coeffs
    if abs(c[1] - 1) > 1e-12:
        raise ValueError("the Fatou coordinates need multiplier 1 at the origin")
    c2 = c[2]
    c3 = c[3] if len(c) > 3 else 0j
    if abs(c2) < 1e-10:
        raise DegenerateParabolic("vanishing quadratic term: the origin is a degenerate parabolic point")
    kappa = c3 / (c2 * c2)
    A = 1 - kappa
    R_petal = max(10.0, 4 * abs(A) + 4, 4 * math.sqrt(abs(kappa)))
    return ParabolicJet(c2, c3, kappa, A, abel_series(kappa), max(30.0, R_petal), R_petal)


def default_anchor(map: PolyMap) -> complex:
    """Normalization point: 1/s for the cubic, the critical point otherwise."""
    if map.family is Family.CUBIC:
        return map.s_inv
    if map.family is Family.QUADRATIC:
        return -map.lam / 2
    from .poly import critical_points
    return critical_points(map)[0]


def _phi_unshifted(map: PolyMap, jet: ParabolicJet, z: complex, max_iter: int, Resc: float) -> complex:
    c2, R = jet.c2, jet.R
    z = complex(z)
    for n in range(max_iter + 1):
        if z != 0:
            u = -1 / (c2 * z)
            if u.real > R:
                return u - jet.A * cmath.log(u) + _series_tail(jet.b, u) - n
        elif n == 0:
            raise NotInBasin("the parabolic point itself has no Fatou coordinate")
        if abs(z) > Resc:
            raise NotInBasin("orbit escapes")
        z = map(z)
    raise NotInBasin(f"orbit did not reach the attracting petal within {max_iter} iterations")


@dataclass(frozen=True)
class AttractingCoord:
    owner: PolyMap
    jet: ParabolicJet
    anchor: complex
    shift: complex
    gauge: complex = 0j
    max_iter: int = MAX_ITER
    validation: tuple = field(default=(), repr=False)
    residuals: tuple = field(default=(), repr=False)

    @property
    def c2(self) -> complex:
        return self.jet.c2

    @property
    def c3(self) -> complex:
        return self.jet.c3

    @property
    def A(self) -> complex:
        return self.jet.A

    @property
    def petal_entry_radius(self) -> float:
        """|z| below which points on the attracting axis are inside the petal."""
        return 1 / (abs(self.jet.c2) * self.jet.R)

    @property
    def normalization_shift(self) -> complex:
        return self.shift + self.gauge

    def __call__(self, z: complex) -> complex:
        return eval_phi(self, z)


def _as_map(s_or_map) -> PolyMap:
    if isinstance(s_or_map, PolyMap):
        return s_or_map
    s = complex(s_or_map)
    if s == 0:
        raise ValueError("s must be nonzero")
    return PolyMap.cubic(s)


def _check_marking(map: PolyMap):
    if map.family is Family.CUBIC and (abs(map.s - 1j) < 1e-10 or abs(map.s + 1j) < 1e-10):
        raise DegenerateParabolic("s = +-i: the origin is degenerate parabolic")


def _petal_probe(jet: ParabolicJet, k: int) -> list[complex]:
    """k points of the attracting petal, spread along Re u = R + 5."""
    R = jet.R
    out = []
    for j in range(k):
        u = complex(R + 5, (j - (k - 1) / 2) * 1.5)
        out.append(-1 / (jet.c2 * u))
    return out


def build_attracting(s_or_map, tol: float = 1e-6, gauge: complex = 0j, anchor: complex | None = None,
                     max_iter: int = MAX_ITER) -> AttractingCoord:
    """Attracting Fatou coordinate normalized to vanish at the anchor (1/s by default).

    ``gauge`` adds a constant to the coordinate; the Lavaurs maps built from
    it do not depend on this constant.
    """
    map = _as_map(s_or_map)
    _check_marking(map)
    jet = parabolic_jet(map)
    if anchor is None:
        anchor = default_anchor(map)
    Resc = bottcher_radius(map)
    try:
        raw = _phi_unshifted(map, jet, anchor, max_iter, Resc)
    except NotInBasin as exc:
        raise CriticalNotInBasin(f"orbit of the normalization point {anchor} is not attracted to 0: {exc}") from exc
    coord = AttractingCoord(map, jet, complex(anchor), -raw, complex(gauge), max_iter)
    pts = tuple(_petal_probe(jet, 64))
    res = tuple(abs(eval_phi(coord, map(z)) - eval_phi(coord, z) - 1) for z in pts)
    if max(res) >= tol:
        raise NormalizationDivergence(f"Abel residual {max(res):.2e} exceeds tolerance {tol:.1e}")
    return AttractingCoord(map, jet, complex(anchor), -raw, complex(gauge), max_iter, pts, res)


def eval_phi(coord: AttractingCoord, z: complex) -> complex:
    """phi(z), with phi(map(z)) = phi(z) + 1 and phi(anchor) = gauge."""
    Resc = bottcher_radius(coord.owner)
    return _phi_unshifted(coord.owner, coord.jet, z, coord.max_iter, Resc) + coord.shift + coord.gauge


def phi_orbit_entry(coord: AttractingCoord, z: complex) -> tuple[int, complex]:
    """(n, u_n): first iterate that lies deep in the attracting petal, in the u chart."""
    jet = coord.jet
    Resc = bottcher_radius(coord.owner)
    z = complex(z)
    for n in range(coord.max_iter + 1):
        if z != 0:
            u = -1 / (jet.c2 * z)
            if u.real > jet.R:
                return n, u
        if abs(z) > Resc:
            raise NotInBasin("orbit escapes")
        z = coord.owner(z)
    raise NotInBasin("orbit did not reach the attracting petal")


# repelling side ---------------------------------------------------------------

def _phi_rep_series(jet: ParabolicJet, u: complex) -> complex:
    return u - jet.A * cmath.log(-u) + _series_tail(jet.b, u)


def _phi_rep_deriv(jet: ParabolicJet, u: complex) -> complex:
    return 1 - jet.A / u + _series_tail_deriv(jet.b, u)


def _inverse_rep(jet: ParabolicJet, w: complex) -> complex:
    """u with Phi_rep(u) = w, for Re w far to the left."""
    u = w + jet.A * cmath.log(-w)
    for _ in range(60):
        step = (_phi_rep_series(jet, u) - w) / _phi_rep_deriv(jet, u)
        u -= step
        if abs(step) <= 1e-15 * abs(u):
            break
    return u


class PsiPoint(NamedTuple):
    """Result of the pushed-forward repelling chart.

    If the orbit left the Böttcher-safe disk after k of the m forward steps,
    ``z`` is that iterate and ``remaining`` = m - k; otherwise remaining = 0
    and ``z`` is psi(w).
    """
    z: complex
    remaining: int


@dataclass(frozen=True)
class RepellingChart:
    owner: PolyMap
    jet: ParabolicJet
    phi: AttractingCoord
    shift: complex
    w0: float
    samples: tuple = field(default=(), repr=False)

    @property
    def normalization_shift(self) -> complex:
        return self.shift

    @property
    def petal_radius(self) -> float:
        return 1 / (abs(self.jet.c2) * self.jet.R)

    def __call__(self, w: complex) -> complex:
        return eval_psi(self, w)


class _OutsideChart(ValueError):
    pass


def psi0(chart: RepellingChart, w: complex) -> complex:
    """Inverse repelling coordinate on the far-left half plane Re w < -w0."""
    u = _inverse_rep(chart.jet, complex(w) - chart.shift)
    if not u.real < -chart.jet.R:
        raise _OutsideChart("point outside the repelling petal chart")
    return -1 / (chart.jet.c2 * u)


def _push_count(chart: RepellingChart, w: complex, extra: int) -> int:
    return max(0, math.ceil((w - chart.shift).real + chart.w0)) + extra


def _psi_base(chart: RepellingChart, w: complex, extra: int) -> tuple[complex, int]:
    """(psi0(w - m), m) with m the push count, enlarged until the chart applies."""
    m = _push_count(chart, w, extra)
    for _ in range(64):
        try:
            return psi0(chart, w - m), m
        except _OutsideChart:
            m += 8
    raise NewtonDiverged("inverse repelling coordinate did not settle")


def eval_psi_point(chart: RepellingChart, w: complex, extra: int = 0) -> PsiPoint:
    w = complex(w)
    z, m = _psi_base(chart, w, extra)
    Rb = bottcher_radius(chart.owner)
    g = chart.owner
    for k in range(m):
        if abs(z) >= Rb:
            return PsiPoint(z, m - k)
        z = g(z)
    return PsiPoint(z, 0)


def eval_psi(chart: RepellingChart, w: complex, extra: int = 0) -> complex:
    """psi(w) = map^m(psi0(w - m)), m = ceil(Re(w - shift) + w0) (+ extra)."""
    w = complex(w)
    z, m = _psi_base(chart, w, extra)
    g = chart.owner
    for _ in range(m):
        z = g(z)
        if not math.isfinite(abs(z)):
            return complex(math.inf, math.inf)
    return z


def horn_tilde(chart: RepellingChart, w: complex) -> complex:
    """phi(psi(w)); equals w + o(1) as Im w -> +inf."""
    return eval_phi(chart.phi, eval_psi(chart, w))


NORMALIZATION_HEIGHTS = (20.0, 30.0, 40.0)


def build_repelling(s_or_map, tol: float = 1e-6, phi: AttractingCoord | None = None,
                    gauge: complex = 0j) -> RepellingChart:
    """Extended inverse repelling coordinate, normalized against ``phi``.

    The shift is first set from the asymptotics of the two series
    (Phi_att - Phi_rep = -i pi A in the upper half plane), then corrected by
    the mean of phi(psi(w)) - w sampled on Re w in [0, 1) at the heights
    20, 30, 40.  The three samples must agree to 10 tol.
    """
    if phi is None:
        phi = build_attracting(s_or_map, tol=tol, gauge=gauge)
    map = phi.owner
    jet = phi.jet
    w0 = jet.R + 10.0
    shift = phi.shift + phi.gauge - 1j * math.pi * jet.A
    chart = RepellingChart(map, jet, phi, shift, w0)
    means = []
    for h in NORMALIZATION_HEIGHTS:
        diffs = [horn_tilde(chart, complex(x, h)) - complex(x, h) for x in np.linspace(0, 1, 8, endpoint=False)]
        means.append(complex(np.mean(diffs)))
    spread = max(abs(a - b) for a in means for b in means)
    if spread > 10 * tol:
        raise NormalizationDivergence(f"horn-map offsets at heights {NORMALIZATION_HEIGHTS} disagree by {spread:.2e}")
    # the offset decays like exp(-2 pi Im w); the highest sample is the limit
    shift = shift + means[-1]
    chart = RepellingChart(map, jet, phi, shift, w0, tuple(means))
    return chart
