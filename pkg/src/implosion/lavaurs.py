"""Lavaurs maps L = psi o T_tau o phi, perturbation sequences, horn maps,
escape levels and the Böttcher-Lavaurs coordinate."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ComponentNotReached, NotInBasin, OrbitEscaped, Undetermined
from .fatou import (
    AttractingCoord,
    PsiPoint,
    RepellingChart,
    _as_map,
    _series_tail,
    build_attracting,
    build_repelling,
    eval_phi,
    eval_psi,
    eval_psi_point,
)
from .poly import PolyMap, _bottcher_direct, _log_green_tail, boettcher, bottcher_radius, escape_radius

BASIN_BUDGET = 10_000


@dataclass(frozen=True)
class Phase:
    tau: complex

    def __post_init__(self):
        t = complex(self.tau)
        object.__setattr__(self, "tau", t)
        if t.imag < 0:
            raise ValueError("the phase needs Im tau >= 0")


@dataclass(frozen=True)
class PerturbationSeq:
    """n -> (N_n, alpha_n, lambda_n) with N_n = n and alpha_n = 1/(n - tau)."""
    tau: Phase

    def step(self, n: int) -> tuple[int, complex, complex]:
        return perturb_step(self, n)


def perturb_step(seq: PerturbationSeq, n: int) -> tuple[int, complex, complex]:
    tau = seq.tau.tau
    if n <= abs(tau) + 1:
        raise ValueError("need n > |tau| + 1")
    alpha = 1 / (n - tau)
    return n, alpha, cmath.exp(2j * math.pi * alpha)


@dataclass(frozen=True)
class LavaursMap:
    tau: Phase
    phi: AttractingCoord
    psi: RepellingChart

    @property
    def map(self) -> PolyMap:
        return self.phi.owner

    @property
    def s(self) -> complex:
        return self.phi.owner.s

    def __call__(self, z: complex) -> complex:
        return lavaurs_eval(self, z)


def build_lavaurs(s_or_map, tau=0j, tol: float = 1e-6, gauge: complex = 0j) -> LavaursMap:
    if not isinstance(tau, Phase):
        tau = Phase(tau)
    phi = build_attracting(s_or_map, tol=tol, gauge=gauge)
    psi = build_repelling(None, tol=tol, phi=phi)
    return LavaursMap(tau, phi, psi)


def lavaurs_eval(L: LavaursMap, z: complex) -> complex:
    """psi(phi(z) + tau); raises NotInBasin off the parabolic basin."""
    return eval_psi(L.psi, eval_phi(L.phi, z) + L.tau.tau)


def lavaurs_point(L: LavaursMap, z: complex) -> PsiPoint:
    """Like lavaurs_eval but stops pushing forward once the image is far out."""
    return eval_psi_point(L.psi, eval_phi(L.phi, z) + L.tau.tau)


def lavaurs_by_iteration(s_or_map, seq: PerturbationSeq, z: complex, n: int) -> complex:
    """g_{lambda_n}^{N_n}(z) for the n-th member of the perturbation sequence."""
    N, _, lam = perturb_step(seq, n)
    g = _as_map(s_or_map).with_lam(lam)
    R = escape_radius(g)
    z = complex(z)
    for k in range(N):
        z = g(z)
        if abs(z) > R:
            raise OrbitEscaped(f"orbit left the escape radius after {k + 1} steps")
    return z


def horn_lift(L: LavaursMap, w: complex) -> complex:
    """Lifted horn map phi(psi(w + tau)); w + tau + o(1) as Im w -> +inf."""
    return eval_phi(L.phi, eval_psi(L.psi, complex(w) + L.tau.tau))


def horn_derivative_at_zero(L: LavaursMap, height: float = 6.0, samples: int = 4) -> complex:
    """Difference quotient H(zeta)/zeta of the projected horn map at zeta ~ 0.

    H(e^{2 pi i w}) = e^{2 pi i H~(w)} and H(0) = 0, so with zeta = e^{2 pi i w}
    at |zeta| = e^{-2 pi height} the quotient is e^{2 pi i (H~(w) - w)}.
    The average over a few points on the circle removes the first-order term.
    """
    acc = 0j
    for k in range(samples):
        w = complex(k / samples, height)
        acc += cmath.exp(2j * math.pi * (horn_lift(L, w) - w))
    return acc / samples


# classification of single points --------------------------------------------

class PointClass(NamedTuple):
    kind: str  # "escape", "basin" or "other"
    green: float
    phi: complex | None
    steps: int = 0  # iterations until the point enters the petal where phi is injective


def classify_point(coord: AttractingCoord, z: complex, budget: int = BASIN_BUDGET, remaining: int = 0) -> PointClass:
    """Escape (with Green value), parabolic basin (with phi) or neither.

    ``remaining`` counts forward steps of the map still owed to z (from an
    interrupted psi push-forward); they scale the Green value and shift phi.
    """
    g = coord.owner
    jet = coord.jet
    Rb = bottcher_radius(g)
    d = g.degree
    z = complex(z)
    entry = None
    for n in range(budget + 1):
        if abs(z) >= Rb:
            return PointClass("escape", d ** remaining * _log_green_tail(g, z) / d ** n, None)
        if z != 0:
            u = -1 / (jet.c2 * z)
            if entry is None and u.real > jet.R_petal:
                entry = n
            if u.real > jet.R:
                val = u - jet.A * cmath.log(u) + _series_tail(jet.b, u) - n
                return PointClass("basin", 0.0, val + coord.shift + coord.gauge + remaining,
                                  max(0, entry - remaining))
        else:
            return PointClass("other", 0.0, None)
        z = g(z)
    return PointClass("other", 0.0, None)


def _lavaurs_class(L: LavaursMap, phi_val: complex) -> tuple[PointClass, PsiPoint]:
    p = eval_psi_point(L.psi, phi_val + L.tau.tau)
    return classify_point(L.phi, p.z, remaining=p.remaining), p


@dataclass(frozen=True)
class EscapeRecord:
    level: int
    omega: float
    escaped_point: complex
    remaining: int = 0  # forward steps still owed to escaped_point


def escape_level(L: LavaursMap, z: complex, N_max: int) -> EscapeRecord | None:
    """Smallest N <= N_max with L^N(z) outside the filled Julia set."""
    first = classify_point(L.phi, z)
    if first.kind != "basin":
        raise NotInBasin("point is not in the parabolic basin")
    phi_val = first.phi
    for N in range(1, N_max + 1):
        cls, p = _lavaurs_class(L, phi_val)
        if cls.kind == "escape":
            return EscapeRecord(N, cls.green, p.z, p.remaining)
        if cls.kind != "basin":
            return None
        phi_val = cls.phi
    return None


def nonescaping_class(L: LavaursMap, N_max: int, c: complex | None = None) -> tuple[int, float]:
    """(N, omega) nonescaping class of the Lavaurs orbit of the critical point c (s by default).

    (0, G(c)) if c escapes under the map; (N, omega) when L^N(c) escapes with
    Green value omega; (N' + 1, 0) when L^{N'}(c) lies in the filled Julia set
    but outside the parabolic basin.
    """
    if c is None:
        c = L.map.s
    first = classify_point(L.phi, c)
    if first.kind == "escape":
        return 0, first.green
    if first.kind != "basin":
        raise Undetermined("critical point is neither escaping nor in the parabolic basin")
    phi_val = first.phi
    for N in range(1, N_max + 1):
        cls, _ = _lavaurs_class(L, phi_val)
        if cls.kind == "escape":
            return N, cls.green
        if cls.kind == "other":
            return N + 1, 0.0
        phi_val = cls.phi
    raise Undetermined(f"Lavaurs orbit stays in the basin for {N_max} steps")


# Böttcher-Lavaurs coordinate --------------------------------------------------

STRIP_SAMPLES = 16
M_BUDGET = 200


def _in_invariant_strip(L: LavaursMap, w: complex) -> bool:
    """Heuristic: the unit segment [w - 1, w] maps entirely outside K under psi."""
    for k in range(STRIP_SAMPLES + 1):
        p = eval_psi_point(L.psi, w - k / STRIP_SAMPLES)
        if classify_point(L.phi, p.z, remaining=p.remaining).kind != "escape":
            return False
    return True


def _log_bottcher_partial(map: PolyMap, p: PsiPoint) -> complex:
    """log phi_inf(p.z) (principal imaginary part); the caller owes map^remaining."""
    if abs(p.z) >= bottcher_radius(map):
        return _bottcher_direct(map, p.z)[0]
    # Böttcher below the safe radius: climb the ray
    return cmath.log(boettcher(map, p.z))


def _scaled_arg(map: PolyMap, p: PsiPoint, m: int) -> float:
    """3^{-m} arg phi_inf(map^remaining(p.z)), reduced mod 2 pi 3^{-m}.

    Computed as 3^{remaining - m} arg phi_inf(p.z) so that no angle is ever
    multiplied by a large power of the degree before the reduction.
    """
    d = map.degree
    period = 2 * math.pi / d ** m
    arg = _log_bottcher_partial(map, p).imag
    return math.fmod(arg * float(d) ** (p.remaining - m), period) % period


class BoettcherLavaurs(NamedTuple):
    re: float
    im_mod: float
    m: int
    level: int


def _level_base(L: LavaursMap, z: complex, N: int) -> PointClass:
    """Classification (phi value, petal entry time) of L^{N-1}(z)."""
    cls = classify_point(L.phi, z)
    if cls.kind != "basin":
        raise NotInBasin("point is not in the parabolic basin")
    for _ in range(N - 1):
        cls, _ = _lavaurs_class(L, cls.phi)
        if cls.kind != "basin":
            raise NotInBasin("Lavaurs orbit left the basin before level N")
    return cls


def boettcher_lavaurs_m(L: LavaursMap, z: complex, N: int, m: int) -> BoettcherLavaurs:
    """3^{-m} log phi_inf(L(g^m(L^{N-1} z))) for a prescribed m."""
    base = _level_base(L, z, N).phi
    w = base + m + L.tau.tau
    p = eval_psi_point(L.psi, w)
    cls = classify_point(L.phi, p.z, remaining=p.remaining)
    if cls.kind != "escape":
        raise NotInBasin("point does not escape at the given level")
    d = L.map.degree
    return BoettcherLavaurs(cls.green / d ** m, _scaled_arg(L.map, p, m), m, N)


def boettcher_lavaurs(L: LavaursMap, z: complex, N: int, m_budget: int = M_BUDGET) -> BoettcherLavaurs:
    """Böttcher-Lavaurs coordinate of z at escape level N.

    m is the smallest count such that y = g^m L^{N-1}(z) lies in the
    attracting petal where phi is injective and phi(y) + tau lies in the T_1-invariant component of
    psi^{-1}(C minus K).  The real part is the Green value of L^N(z); the
    imaginary part is defined modulo 2 pi 3^{-m}.
    """
    base = _level_base(L, z, N)
    for m in range(base.steps, m_budget + 1):
        w = base.phi + m + L.tau.tau
        if _in_invariant_strip(L, w):
            return boettcher_lavaurs_m(L, z, N, m)
    raise ComponentNotReached(f"no m <= {m_budget} reaches the invariant component")


def boettcher_lavaurs_path(L: LavaursMap, path, N: int, m: int | None = None) -> np.ndarray:
    """Böttcher-Lavaurs values along a path, imaginary part continued along it.

    All points use the same m (the largest minimal m along the path unless
    given), and the argument is unwrapped between consecutive points.
    """
    path = [complex(z) for z in path]
    if m is None:
        m = max(boettcher_lavaurs(L, z, N).m for z in path)
    d = L.map.degree
    res, args = [], []
    for z in path:
        base = _level_base(L, z, N).phi
        p = eval_psi_point(L.psi, base + m + L.tau.tau)
        cls = classify_point(L.phi, p.z, remaining=p.remaining)
        res.append(cls.green / d ** m)
        args.append(_scaled_arg(L.map, p, m) * d ** m)
    im = np.unwrap(np.array(args)) / d ** m
    return np.array(res) + 1j * im
