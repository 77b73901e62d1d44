"""Holomorphic fixed-point index, j-index and the attractivity criteria built on them.

The holomorphic index of a fixed point sigma of f is the residue

    iota(f, sigma) = (1 / 2 pi i) \\oint dz / (z - f(z))

around a small circle enclosing sigma only.  For a simple fixed point with
multiplier mu != 1 it equals 1 / (1 - mu); at a parabolic point it has to be
computed by quadrature.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ContourHitsFixedPoint, ContourUnresolved, LogSingularity, ParabolicMultiplier
from .poly import FixedPointInfo, PolyMap, fixed_points

PARABOLIC_TOL = 1e-12
NODES = 256


class IndexMethod(enum.Enum):
    CONTOUR = "contour"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class IndexResult:
    iota: complex
    j: complex | None
    method: IndexMethod


def _trapezoid(map: PolyMap, sigma: complex, radius: float, nodes: int) -> complex:
    theta = 2 * np.pi * np.arange(nodes) / nodes
    e = radius * np.exp(1j * theta)
    z = sigma + e
    c = map.coeffs
    fz = np.zeros_like(z)
    for ck in c[::-1]:
        fz = fz * z + ck
    # dz = i e dtheta, so the 1/(2 pi i) prefactor leaves the mean of e / (z - f(z))
    return complex(np.mean(e / (z - fz)))


def _nearest_other(map: PolyMap, sigma: complex) -> float:
    d = math.inf
    for fp in fixed_points(map):
        dist = abs(fp.location - sigma)
        if dist > 1e-9:
            d = min(d, dist)
    return d


def holo_index_contour(map: PolyMap, sigma: complex, radius: float | None = None,
                       nodes: int = NODES, check: bool = True) -> complex:
    """Index of the fixed point ``sigma`` by trapezoidal quadrature on a circle.

    The default radius is half the distance to the nearest other fixed point.
    With ``check`` the quadrature is repeated with twice the nodes and must
    agree to 1e-10.
    """
    sigma = complex(sigma)
    d = _nearest_other(map, sigma)
    if radius is None:
        radius = 0.5 * d if math.isfinite(d) else 1.0
    if d <= 2 * radius * (1 - 1e-12):
        raise ContourHitsFixedPoint(
            f"another fixed point lies at distance {d:.3g} < 2 * radius = {2 * radius:.3g}")
    val = _trapezoid(map, sigma, radius, nodes)
    if check:
        fine = _trapezoid(map, sigma, radius, 2 * nodes)
        if abs(fine - val) >= 1e-10 * max(1.0, abs(fine)):
            raise ContourUnresolved(f"node doubling moved the index by {abs(fine - val):.2e}")
        val = fine
    return val


def holo_index_closed(multiplier: complex) -> complex:
    """1 / (1 - multiplier) for a non-parabolic simple fixed point."""
    multiplier = complex(multiplier)
    if abs(multiplier - 1) <= PARABOLIC_TOL:
        raise ParabolicMultiplier("multiplier 1: use the contour index")
    return 1 / (1 - multiplier)


def j_from_index(iota: complex, multiplicity: int) -> complex:
    """The j-index of a fixed point from its holomorphic index and multiplicity.

    m = 1:  -2 pi i / log(1 - 1/iota)
    m > 1:   2 pi i (iota - m/2)
    Logs are principal, Im in (-pi, pi].
    """
    iota = complex(iota)
    if multiplicity > 1:
        return 2j * math.pi * (iota - multiplicity / 2)
    if iota == 0:
        raise LogSingularity("simple fixed point with vanishing index")
    w = 1 - 1 / iota
    if w == 0:
        raise LogSingularity("1 - 1/iota vanishes (superattracting point)")
    lg = cmath.log(w)
    if lg == 0:
        raise LogSingularity("log(1 - 1/iota) vanishes")
    return -2j * math.pi / lg


def _find_fixed(map: PolyMap, sigma: complex) -> FixedPointInfo:
    fps = fixed_points(map)
    best = min(fps, key=lambda f: abs(f.location - sigma))
    if abs(best.location - sigma) > 1e-6 * max(1.0, abs(sigma)):
        raise ValueError(f"{sigma} is not a fixed point of the map")
    return best


def index_of(map: PolyMap, sigma: complex) -> IndexResult:
    """Index and j-index of a fixed point, closed form when it applies."""
    fp = _find_fixed(map, sigma)
    if fp.multiplicity == 1 and abs(fp.multiplier - 1) > PARABOLIC_TOL:
        iota, method = holo_index_closed(fp.multiplier), IndexMethod.CLOSED_FORM
    else:
        iota, method = holo_index_contour(map, fp.location), IndexMethod.CONTOUR
    try:
        j = j_from_index(iota, fp.multiplicity)
    except LogSingularity:
        j = None
    return IndexResult(iota, j, method)


def j_index(map: PolyMap, sigma: complex) -> complex:
    fp = _find_fixed(map, sigma)
    return j_from_index(index_of(map, sigma).iota, fp.multiplicity)


def attracting_by_index(iota: complex) -> bool:
    """A non-parabolic fixed point attracts iff Re iota > 1/2."""
    return complex(iota).real > 0.5


@dataclass(frozen=True)
class Lemma215Disk:
    """The disk |a^2 - c/2| < c/2, c = 1 / (1 + Im(tau)/2pi), of parameters a whose
    split fixed point becomes attracting along a perturbation sequence of phase tau."""
    tau: complex

    def __post_init__(self):
        if complex(self.tau).imag < 0:
            raise ValueError("phase must have Im tau >= 0")

    @property
    def c_tau(self) -> float:
        return 1 / (1 + complex(self.tau).imag / (2 * math.pi))


def lemma215_test(disk: Lemma215Disk, a: complex) -> bool:
    c = disk.c_tau
    return abs(complex(a) ** 2 - c / 2) < c / 2


def split_fixed_point(a: complex, lam: complex) -> complex:
    """The fixed point of lam z + a z^2 + z^3 that tends to 0 as lam -> 1 (a != 0)."""
    a, lam = complex(a), complex(lam)
    # z^2 + a z + (lam - 1) = 0; the small root, written without cancellation
    disc = cmath.sqrt(a * a - 4 * (lam - 1))
    big = (-a - disc) / 2 if abs(-a - disc) >= abs(-a + disc) else (-a + disc) / 2
    if big == 0:
        return 0j
    return (lam - 1) / big


def index_sum(map: PolyMap) -> complex:
    """Sum of the contour indices over all finite fixed points."""
    return sum((holo_index_contour(map, fp.location) for fp in fixed_points(map)), 0j)


def fixed_points_with_index(map: PolyMap) -> list[FixedPointInfo]:
    out = []
    for fp in fixed_points(map):
        fp.index = index_of(map, fp.location).iota
        out.append(fp)
    return out


def a_of_s(s: complex) -> complex:
    """Parameter a with g_s conjugate to z + a z^2 + z^3 via z -> sqrt(3) z."""
    s = complex(s)
    return -math.sqrt(3) * (s + 1 / s) / 2


def well_behaved_indices(indices: list[complex], M: float = 3.0) -> bool:
    """True iff every proper nonempty subset has |sum Im iota| > M."""
    n = len(indices)
    for k in range(1, n):
        for sub in combinations(indices, k):
            if abs(sum(complex(x).imag for x in sub)) <= M:
                return False
    return True


def lemma215_sample_points(disk: Lemma215Disk, k: int = 10, r: float = 0.3) -> list[complex]:
    """k parameters a with a^2 on the arc c/2 + r c e^{i theta}, 0 < theta < pi.

    The arc lies inside the disk.  On the upper half the first-order
    correction 3(lam - 1)/a^4 to the index sum pushes Re iota(sigma) up, so
    these points are already attracting for moderate n; on the lower half the
    same lemma holds but only from n ~ 100 on.
    """
    c = disk.c_tau
    return [cmath.sqrt(c * (0.5 + r * cmath.exp(1j * math.pi * (j + 1) / (k + 1)))) for j in range(k)]
