"""Raster scans of escaping regions (dynamical and parameter plane), central-part
proxies, limsup pictures, component reports, the Böttcher-Lavaurs value of the
escaping critical point and the Misiurewicz-parabolic solver."""
from __future__ import annotations

import cmath
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import ndimage

from . import _backend
from .errors import NewtonDiverged, NotEscaping, NotInBasin
from .fatou import _petal_probe
from .lavaurs import (
    BoettcherLavaurs,
    LavaursMap,
    Phase,
    _log_bottcher_partial,
    boettcher_lavaurs,
    build_lavaurs,
    escape_level,
    lavaurs_point,
    perturb_step,
    PerturbationSeq,
)
from .poly import Family, PolyMap, _lead, bottcher_radius

K = _backend.kernels

OUTSIDE = 0  # not in the basin (dynamical) / not in the H proxy (parameter)
INSIDE = 1  # central-part and limsup rasters
MINUS = 100  # Esc_- level N is coded MINUS + N
NONESC = 200
DOUBLE = 201  # both critical points escape: forbidden by the disjointness lemma
UNDET = 255

BUDGET = 10_000
N_MAX = 3
TILE_ROWS = 16

# reference viewports: the s-plane region around the central part, and K_1 of z + z^2
H_VIEWPORT = (-2.2, -2.2, 2.2, 2.2)
QUAD_VIEWPORT = (-1.6, -1.1, 0.6, 1.1)


def code_name(code: int) -> str:
    code = int(code)
    if code == OUTSIDE:
        return "outside"
    if code == NONESC:
        return "nonescaping"
    if code == DOUBLE:
        return "double"
    if code == UNDET:
        return "undetermined"
    if MINUS < code < NONESC:
        return f"esc-{code - MINUS}"
    return f"esc+{code}"


# grids and rasters ------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    viewport: tuple  # (x0, y0, x1, y1)

    def __post_init__(self):
        x0, y0, x1, y1 = self.viewport
        if self.width < 1 or self.height < 1:
            raise ValueError("grid needs positive width and height")
        if not (x1 > x0 and y1 > y0):
            raise ValueError("degenerate viewport")

    @property
    def dx(self) -> float:
        return (self.viewport[2] - self.viewport[0]) / self.width

    @property
    def dy(self) -> float:
        return (self.viewport[3] - self.viewport[1]) / self.height

    def coords(self) -> np.ndarray:
        """Pixel centres, row 0 at the top (largest imaginary part)."""
        x0, y0, x1, y1 = self.viewport
        xs = x0 + (np.arange(self.width) + 0.5) * self.dx
        ys = y1 - (np.arange(self.height) + 0.5) * self.dy
        return xs[None, :] + 1j * ys[:, None]

    def pixel_of(self, z: complex) -> tuple[float, float]:
        """(row, col) in fractional pixel units; pixel centres are at integers."""
        x0, y0, x1, y1 = self.viewport
        return (y1 - z.imag) / self.dy - 0.5, (z.real - x0) / self.dx - 0.5

    def index_of(self, z: complex) -> tuple[int, int] | None:
        r, c = self.pixel_of(complex(z))
        r, c = int(round(r)), int(round(c))
        if 0 <= r < self.height and 0 <= c < self.width:
            return r, c
        return None


@dataclass
class Raster:
    grid: GridSpec
    cells: np.ndarray  # uint8 (height, width)
    omega: np.ndarray | None = None  # Green value at escape, where it applies
    kind: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.grid.width

    @property
    def height(self) -> int:
        return self.grid.height

    @property
    def viewport(self) -> tuple:
        return self.grid.viewport

    def counts(self) -> dict:
        vals, cnt = np.unique(self.cells, return_counts=True)
        return {code_name(v): int(c) for v, c in zip(vals, cnt)}


def _tiles(n_rows: int) -> list[tuple[int, int]]:
    return [(r, min(n_rows, r + TILE_ROWS)) for r in range(0, n_rows, TILE_ROWS)]


def _run_tiles(grid: GridSpec, fn: Callable, threads: int | None):
    """Apply fn to the flattened pixel coordinates tile by tile.

    Every pixel is a pure function of its coordinate, so the assembled result
    does not depend on the number of workers or the order they finish in.
    """
    pts = grid.coords()
    tiles = _tiles(grid.height)

    def work(t):
        r0, r1 = t
        return fn(pts[r0:r1].ravel())

    if not threads or threads <= 1:
        parts = [work(t) for t in tiles]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, tiles))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]).reshape(grid.height, grid.width)
                     for i in range(len(parts[0])))
    return np.concatenate(parts).reshape(grid.height, grid.width)


def _tau(tau) -> complex:
    return tau.tau if isinstance(tau, Phase) else Phase(tau).tau


# dynamical plane --------------------------------------------------------------

def kernel_jet(L: LavaursMap) -> list:
    """Flat description of L for the raster kernels (see _kernels_py)."""
    g = L.map
    jet = L.phi.jet
    return [jet.c2, jet.c3, g.degree, jet.A, list(jet.b), jet.R, jet.R_petal, bottcher_radius(g),
            math.log(abs(_lead(g))), L.phi.shift + L.phi.gauge, L.psi.shift, L.psi.w0]


def scan_dyn_escape(s, tau=0j, grid: GridSpec | None = None, n_max: int = N_MAX, budget: int = BUDGET,
                    threads: int | None = 1, quadratic: bool = False) -> Raster:
    """Escape level of every pixel z under the Lavaurs map.

    Cubic: only the immediate basin (the raster component of the basin that
    contains 1/s and the attracting petal) is kept; other pixels are OUTSIDE.
    Quadratic (z + z^2, s ignored): the whole basin.
    """
    t = _tau(tau)
    g = PolyMap.quadratic() if quadratic else (s if isinstance(s, PolyMap) else PolyMap.cubic(s))
    if grid is None:
        grid = GridSpec(400, 400, QUAD_VIEWPORT if quadratic else (-1.5, -1.5, 1.5, 1.5))
    L = build_lavaurs(g, t)
    J = kernel_jet(L)
    cells, omega = _run_tiles(grid, lambda z: K.dyn_raster(J, z, t, n_max, budget), threads)
    meta = {"s": None if quadratic else complex(g.s), "tau": t, "n_max": n_max, "budget": budget,
            "quadratic": quadratic}
    if not quadratic:
        cells = _immediate_basin(cells, grid, L)
    omega = np.where((cells >= 1) & (cells <= n_max), omega, 0.0)
    return Raster(grid, cells, omega, "dyn", meta)


def _immediate_basin(cells: np.ndarray, grid: GridSpec, L: LavaursMap) -> np.ndarray:
    basin = (cells != OUTSIDE) & (cells != UNDET)
    labels, _ = ndimage.label(basin)
    seeds = [L.phi.anchor] + _petal_probe(L.phi.jet, 5)
    keep = set()
    for z in seeds:
        ij = grid.index_of(z)
        if ij is not None and labels[ij] > 0:
            keep.add(labels[ij])
    if not keep:
        return cells  # the viewport misses the petal; nothing to select
    mask = np.isin(labels, list(keep))
    out = cells.copy()
    out[basin & ~mask] = OUTSIDE
    return out


# parameter plane --------------------------------------------------------------

def scan_esc(grid: GridSpec | None = None, tau=0j, n_max: int = N_MAX, budget: int = BUDGET,
             threads: int | None = 1) -> Raster:
    """Classify each parameter s: Esc_+ level (code N), Esc_- level (MINUS + N),
    NONESC, OUTSIDE (a critical point misses the parabolic basin) or UNDET."""
    t = _tau(tau)
    if grid is None:
        grid = GridSpec(300, 300, H_VIEWPORT)
    cells, omega = _run_tiles(grid, lambda s: K.esc_raster(s, t, n_max, budget), threads)
    return Raster(grid, cells, omega, "esc", {"tau": t, "n_max": n_max, "budget": budget})


def scan_central(grid: GridSpec | None = None, max_iter: int = BUDGET, plane: str = "s",
                 threads: int | None = 1) -> Raster:
    """INSIDE where both critical orbits of the parabolic map converge to 0."""
    if grid is None:
        grid = GridSpec(300, 300, H_VIEWPORT)
    cells = _run_tiles(grid, lambda p: K.central_raster(p, plane == "a", 1 + 0j, max_iter), threads)
    return Raster(grid, cells, None, "central", {"plane": plane, "max_iter": max_iter})


def scan_limsup_K(grid: GridSpec | None = None, tau=0j, n: int = 30, max_iter: int = BUDGET,
                  plane: str = "a", threads: int | None = 1, lam: complex | None = None) -> Raster:
    """INSIDE where both critical orbits of the map with multiplier lambda_n stay bounded.

    ``lam`` overrides lambda_n; lam = 1 gives the central-part predicate.
    """
    t = _tau(tau)
    if lam is None:
        _, _, lam = perturb_step(PerturbationSeq(Phase(t)), n)
    lam = complex(lam)
    if grid is None:
        grid = GridSpec(300, 300, (-1.6, -1.6, 1.6, 1.6))
    cells = _run_tiles(grid, lambda p: K.central_raster(p, plane == "a", lam, max_iter), threads)
    return Raster(grid, cells, None, "limsup", {"plane": plane, "lam": lam, "n": n, "tau": t,
                                                "max_iter": max_iter})


def raster_difference(r1: Raster, r2: Raster) -> int:
    """Number of pixels whose code differs (diagnostic only)."""
    return int(np.count_nonzero(r1.cells != r2.cells))


def _swap_sides(cells: np.ndarray) -> np.ndarray:
    c = cells.astype(int)
    plus = (c >= 1) & (c < MINUS)
    minus = (c > MINUS) & (c < NONESC)
    return np.where(plus, c + MINUS, np.where(minus, c - MINUS, c))


def inversion_agreement(raster: Raster, max_offset: float = 0.7) -> tuple[int, int]:
    """(agreeing, total) conjugate pixel pairs of an Esc raster.

    A pixel p is paired with the pixel q nearest to 1/centre(p) when that
    point lies within ``max_offset`` pixels of the centre of q; the pair
    agrees when the codes are exchanged by the +/- swap.  max_offset = 0.7
    pairs every pixel whose inverse falls in the viewport.
    """
    grid = raster.grid
    inv = 1 / grid.coords().ravel()
    r, c = grid.pixel_of(inv)
    ri, ci = np.rint(r), np.rint(c)
    ok = (ri >= 0) & (ri < grid.height) & (ci >= 0) & (ci < grid.width)
    ok &= np.hypot(r - ri, c - ci) <= max_offset
    a = _swap_sides(raster.cells.ravel()[ok])
    b = raster.cells[ri[ok].astype(int), ci[ok].astype(int)]
    return int(np.count_nonzero(a == b)), int(ok.sum())


# Böttcher-Lavaurs value of the escaping critical value --------------------------

class PhiE(NamedTuple):
    re: float
    im_mod: float
    m: int
    level: int
    sign: int  # +1 when s escapes, -1 when 1/s does


def _escaping_marking(s, tau, n_max):
    g = s if isinstance(s, PolyMap) else PolyMap.cubic(s)
    for sign, h in ((1, g), (-1, g.inverted())):
        L = build_lavaurs(h, tau)
        try:
            rec = escape_level(L, h.s, n_max)
        except NotInBasin:
            continue
        if rec is not None:
            return sign, L, rec.level
    raise NotEscaping("neither critical point escapes under the Lavaurs map")


def phi_E(s, tau=0j, n_max: int = N_MAX) -> PhiE:
    """Böttcher-Lavaurs coordinate of the escaping critical value g(s) (or g(1/s))."""
    sign, L, level = _escaping_marking(s, _tau(tau), n_max)
    v = L.map(L.map.s)
    b: BoettcherLavaurs = boettcher_lavaurs(L, v, level)
    return PhiE(b.re, b.im_mod, b.m, b.level, sign)


def phi_E_residual(s, tau=0j, n_max: int = N_MAX) -> float:
    """Residual of exp(3^m Phi) = phi_inf(L(g^m(L^{N-1} v))), compared through logarithms.

    The right side is astronomically large, so both sides are compared as
    log phi_inf with the owed forward steps applied as powers of the degree;
    the angle is compared only while that power keeps it meaningful.
    """
    sign, L, level = _escaping_marking(s, _tau(tau), n_max)
    g = L.map
    v = g(g.s)
    b = boettcher_lavaurs(L, v, level)
    y = v
    for _ in range(level - 1):
        y = L(y)
    for _ in range(b.m):
        y = g(y)
    p = lavaurs_point(L, y)
    d = g.degree
    logb = _log_bottcher_partial(g, p)
    lhs = d ** b.m * complex(b.re, b.im_mod)
    res = abs(lhs.real - d ** p.remaining * logb.real) / max(1.0, abs(lhs.real))
    if d ** p.remaining < 1e4:
        da = (lhs.imag - d ** p.remaining * logb.imag) % (2 * math.pi)
        res = max(res, min(da, 2 * math.pi - da) / d ** p.remaining)
    return res


# Misiurewicz-parabolic parameters ------------------------------------------------

S_MIN = 1e-6  # Newton runs collapsing onto s = 0 are rejected


def misiurewicz_residual(s: complex, n: int) -> complex:
    """g_s^n(s) at multiplier 1."""
    g = PolyMap.cubic(s)
    z = complex(s)
    for _ in range(n):
        z = g(z)
    return z


def _orbit_and_derivative(s: complex, n: int) -> tuple[complex, complex]:
    """(g_s^n(s), d/ds g_s^n(s)) by forward-mode differentiation."""
    b = (s + 1 / s) / 2
    db = (1 - 1 / (s * s)) / 2
    z, dz = s, 1 + 0j
    for _ in range(n):
        # g(z) = z - b z^2 + z^3/3; dg/dz = 1 - 2 b z + z^2; dg/ds = -b'(s) z^2
        z, dz = z - b * z * z + z ** 3 / 3, (1 - 2 * b * z + z * z) * dz - db * z * z
    return z, dz


def find_misiurewicz(n: int, seed: complex, max_steps: int = 200, tol: float = 1e-10) -> complex:
    """Newton's method for g_s^n(s) = 0 from ``seed``.

    s = 0 solves the equation trivially (both critical points merge with the
    parabolic point) and is not a parameter of the family, so runs that
    collapse onto it count as divergent.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = complex(seed)
    for _ in range(max_steps):
        if abs(s) < S_MIN:
            break
        F, dF = _orbit_and_derivative(s, n)
        if not (cmath.isfinite(F) and cmath.isfinite(dF)) or dF == 0:
            break
        step = F / dF
        s -= step
        if abs(s) >= S_MIN and abs(step) <= 1e-15 * max(1.0, abs(s)):
            break
    if abs(s) >= S_MIN and cmath.isfinite(s) and abs(misiurewicz_residual(s, n)) < tol:
        return s
    raise NewtonDiverged(f"no root of g_s^{n}(s) reached from {seed}")


# components --------------------------------------------------------------------

class ComponentType(enum.Enum):
    CROISSANT = "croissant"
    BI_CROISSANT = "bi-croissant"
    JORDAN_LIKE = "jordan-like"
    OTHER = "other"


@dataclass
class ComponentReport:
    label: int
    pixel_count: int
    hole_count: int
    attachment_estimate: complex | None
    type_guess: ComponentType
    attachment_diameter: float = 0.0  # of the contact cluster, in pixels
    contact_pixels: int = 0
    centroid: complex = 0j
    contact_distance: float = 0.0  # pixels from the component to the outside code


_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


def _predicate(code_filter) -> Callable:
    if callable(code_filter):
        return code_filter
    codes = np.array(sorted(code_filter))
    return lambda cells: np.isin(cells, codes)


def _holes(mask: np.ndarray) -> int:
    padded = np.pad(mask, 1)
    lab, n = ndimage.label(~padded, structure=_EIGHT)
    border = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])))
    return sum(1 for k in range(1, n + 1) if k not in border)


def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if len(points) > 2000:
        points = points[np.linspace(0, len(points) - 1, 2000).astype(int)]
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _type_guess(holes: int) -> ComponentType:
    return {0: ComponentType.JORDAN_LIKE, 1: ComponentType.CROISSANT,
            2: ComponentType.BI_CROISSANT}.get(holes, ComponentType.OTHER)


def label_components(raster: Raster, code_filter) -> tuple[np.ndarray, int]:
    mask = _predicate(code_filter)(raster.cells)
    return ndimage.label(mask, structure=_FOUR)


def components(raster: Raster, code_filter, outside: int = OUTSIDE) -> list[ComponentReport]:
    """4-connected components of the pixels selected by ``code_filter`` (a set
    of codes or a predicate on the code array).

    The attachment estimate is the centroid of the contact cluster: the
    component pixels 8-adjacent to a pixel carrying the ``outside`` code.  A
    component separated from that code by a thin band of other pixels uses
    its pixels closest to it instead.
    """
    labels, n = label_components(raster, code_filter)
    is_out = raster.cells == outside
    if is_out.any():
        dist = ndimage.distance_transform_edt(~is_out)
    else:
        dist = np.full(raster.cells.shape, np.inf)
    coords = raster.grid.coords()
    out = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        comp = labels[sl] == k
        holes = _holes(comp)
        d = dist[sl]
        dmin = float(d[comp].min())
        pts = coords[sl]
        if np.isfinite(dmin):
            contact = comp & (d <= max(dmin, math.sqrt(2)) + 0.1)
            rows, cols = np.nonzero(contact)
            attach = complex(pts[rows, cols].mean())
            diam = _diameter(np.stack([rows, cols], axis=1).astype(float))
        else:
            rows, attach, diam = (), None, 0.0
        out.append(ComponentReport(k, int(comp.sum()), holes, attach, _type_guess(holes), diam, len(rows),
                                   complex(pts[comp].mean()), dmin))
    return out


def invariant_components(raster: Raster, code_filter, map: PolyMap, min_fraction: float = 0.5) -> list[int]:
    """Labels of components that the map sends into themselves (pixel majority vote)."""
    labels, n = label_components(raster, code_filter)
    coords = raster.grid.coords()
    found = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        if len(rows) < 4:
            continue
        hits = 0
        for z in coords[rows, cols]:
            ij = raster.grid.index_of(map(z))
            hits += ij is not None and labels[ij] == k
        if hits >= min_fraction * len(rows):
            found.append(k)
    return found
