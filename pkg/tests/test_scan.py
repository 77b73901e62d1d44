import cmath
import math

import numpy as np
import pytest

from implosion import _backend, _kernels_py
from implosion import index as I
from implosion import scan as S
from implosion.errors import NewtonDiverged
from implosion.lavaurs import PerturbationSeq, Phase, perturb_step
from implosion.poly import PolyMap

ESC = lambda c: ((c >= 1) & (c <= S.N_MAX)) | ((c > S.MINUS) & (c <= S.MINUS + S.N_MAX))


def _swap(c):
    c = np.asarray(c, dtype=int)
    return np.where((c >= 1) & (c < S.MINUS), c + S.MINUS, np.where((c > S.MINUS) & (c < S.NONESC), c - S.MINUS, c))


@pytest.fixture(scope="module")
def esc200():
    return S.scan_esc(S.GridSpec(200, 200, S.H_VIEWPORT))


@pytest.fixture(scope="module")
def dyn12():
    return S.scan_dyn_escape(1.2, 0, S.GridSpec(200, 200, (-1.5, -1.5, 1.5, 1.5)), n_max=1)


# grids -------------------------------------------------------------------------

def test_grid_coords_and_indexing():
    g = S.GridSpec(4, 2, (0, 0, 4, 2))
    c = g.coords()
    assert c.shape == (2, 4)
    assert c[0, 0] == 0.5 + 1.5j and c[1, 3] == 3.5 + 0.5j
    for r in range(2):
        for k in range(4):
            assert g.index_of(c[r, k]) == (r, k)
    assert g.index_of(5 + 1j) is None
    with pytest.raises(ValueError):
        S.GridSpec(4, 4, (1, 0, 0, 1))


def test_code_names():
    assert S.code_name(S.OUTSIDE) == "outside"
    assert S.code_name(2) == "esc+2"
    assert S.code_name(S.MINUS + 3) == "esc-3"
    assert S.code_name(S.UNDET) == "undetermined"


def test_kernel_codes_match():
    assert _kernels_py.CODES == _backend.kernels.CODES
    assert _kernels_py.CODES["MINUS"] == S.MINUS and _kernels_py.CODES["NONESC"] == S.NONESC


# dynamical plane -------------------------------------------------------------------

def test_dyn_openness_proxy(dyn12):
    c = dyn12.cells
    lev = (c >= 1) & (c <= 3)
    pad = np.pad(lev, 1)
    nbr = pad[:-2, 1:-1] | pad[2:, 1:-1] | pad[1:-1, :-2] | pad[1:-1, 2:]
    edge = np.zeros_like(lev)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    # isolated level pixels are allowed only where they touch another class (thin parts)
    isolated = lev & ~nbr & ~edge
    assert isolated.sum() <= 0.01 * lev.sum()


def test_dyn_invariant_component(dyn12):
    assert dyn12.counts().get("esc+1", 0) > 0
    inv = S.invariant_components(dyn12, {1}, PolyMap.cubic(1.2))
    assert len(inv) >= 1


def test_quadratic_attachment_small_raster():
    r = S.scan_dyn_escape(None, 0, S.GridSpec(200, 200, S.QUAD_VIEWPORT), n_max=1, quadratic=True)
    comps = S.components(r, {1})
    assert comps
    big = [c for c in comps if c.pixel_count >= 50]
    assert big
    for c in big:
        assert c.attachment_estimate is not None and c.hole_count >= 0


# parameter plane -------------------------------------------------------------------

def test_esc_no_double(esc200):
    assert not np.any(esc200.cells == S.DOUBLE)
    assert ESC(esc200.cells).any()


def test_esc_inversion_exact_points():
    rng = np.random.default_rng(0)
    s = rng.uniform(-2.2, 2.2, 400) + 1j * rng.uniform(-2.2, 2.2, 400)
    a, _ = _backend.kernels.esc_raster(s, 0j, 3, S.BUDGET)
    b, _ = _backend.kernels.esc_raster(1 / s, 0j, 3, S.BUDGET)
    assert np.array_equal(_swap(a), b)


def test_esc_inversion_raster_pairs(esc200):
    agree, total = S.inversion_agreement(esc200, max_offset=0.7)
    print(f"nearest-pixel inversion agreement: {agree / total:.4f} over {total} pairs")
    assert agree / total > 0.9


def test_esc_near_minus_i():
    g = S.GridSpec(80, 80, (-0.1, -1.1, 0.1, -0.9))
    r = S.scan_esc(g)
    assert np.any(ESC(r.cells) & (np.abs(g.coords() + 1j) < 0.1))


def test_central_examples():
    g = S.GridSpec(3, 1, (0.5, -0.5, 15.5, 0.5))  # pixel centres 3, 8, 13
    assert _kernels_py.central_pixel(1 + 0j, False, 1 + 0j, 10_000) == S.INSIDE
    assert _kernels_py.central_pixel(10 + 0j, False, 1 + 0j, 10_000) == S.OUTSIDE
    assert _kernels_py.central_pixel(0j, True, 1 + 0j, 10_000) == S.INSIDE
    r = S.scan_central(g, 1000)
    assert r.cells.shape == (1, 3) and np.all(r.cells == S.OUTSIDE)
    ga = S.GridSpec(1, 1, (-0.01, -0.01, 0.01, 0.01))
    assert S.scan_central(ga, 10_000, plane="a").cells[0, 0] == S.INSIDE


def test_limsup_lambda_one_is_central():
    g = S.GridSpec(60, 60, (-1.6, -1.6, 1.6, 1.6))
    a = S.scan_limsup_K(g, lam=1, max_iter=2000)
    b = S.scan_central(g, 2000, plane="a")
    assert np.array_equal(a.cells, b.cells)


def test_limsup_lemma215_spot_check():
    disk = I.Lemma215Disk(0)
    seq = PerturbationSeq(Phase(0))
    for n in (50, 75, 100):
        _, _, lam = perturb_step(seq, n)
        for a in I.lemma215_sample_points(disk):
            sg = I.split_fixed_point(a, lam)
            mult = lam + 2 * a * sg + 3 * sg * sg
            assert abs(mult) < 1


def test_limsup_difference_metric():
    g = S.GridSpec(60, 60, (-1.6, -1.6, 1.6, 1.6))
    r30 = S.scan_limsup_K(g, n=30, max_iter=2000)
    r60 = S.scan_limsup_K(g, n=60, max_iter=2000)
    diff = S.raster_difference(r30, r60)
    print(f"limsup n=30 vs n=60 differing pixels: {diff}")
    assert 0 <= diff <= g.width * g.height


def test_determinism_across_threads():
    g = S.GridSpec(48, 40, S.H_VIEWPORT)
    r1 = S.scan_esc(g, threads=1)
    r4 = S.scan_esc(g, threads=4)
    assert r1.cells.tobytes() == r4.cells.tobytes()
    assert r1.omega.tobytes() == r4.omega.tobytes()


def test_resolution_stability():
    fr = []
    for n in (100, 200):
        r = S.scan_esc(S.GridSpec(n, n, S.H_VIEWPORT))
        fr.append(ESC(r.cells).mean())
    assert abs(fr[1] - fr[0]) < 0.05 * fr[1]


def test_pure_and_compiled_kernels_agree():
    if not _backend.COMPILED:
        pytest.skip("compiled kernels not built")
    g = S.GridSpec(24, 24, S.H_VIEWPORT)
    s = g.coords().ravel()
    a, oa = _kernels_py.esc_raster(s, 0j, 3, 2000)
    b, ob = _backend.kernels.esc_raster(s, 0j, 3, 2000)
    assert np.array_equal(a, b)
    assert np.allclose(oa, ob, rtol=1e-9, atol=0)
    p = (g.coords() * 0.7).ravel()
    assert np.array_equal(_kernels_py.central_raster(p, True, 1, 500), _backend.kernels.central_raster(p, True, 1, 500))


# Böttcher-Lavaurs value of the critical value -------------------------------------------

@pytest.mark.parametrize("s", [0.6 + 0.6j, 0.7 + 0.4j, 0.898333 - 0.825j])
def test_phi_E_examples(s):
    p = S.phi_E(s)
    assert p.re > 0
    assert S.phi_E_residual(s) < 1e-6


def test_phi_E_minus_side_uses_inverse():
    p = S.phi_E(1 / (0.6 + 0.6j))
    q = S.phi_E(0.6 + 0.6j)
    assert p.sign == -q.sign
    assert abs(p.re - q.re) < 1e-9 * max(1.0, q.re)


def test_phi_E_stencil_injective():
    s0, h = 0.6 + 0.6j, 1e-3
    vals = set()
    for i in (-1, 0, 1):
        for k in (-1, 0, 1):
            p = S.phi_E(s0 + h * (i + 1j * k))
            vals.add((round(p.re, 12), round(p.im_mod, 12)))
    assert len(vals) == 9


# Misiurewicz-parabolic parameters -------------------------------------------------------

def test_misiurewicz_level_one():
    s = S.find_misiurewicz(1, 1.5)
    assert abs(s - math.sqrt(3)) < 1e-10


@pytest.mark.parametrize("n,seed", [(2, 1.2 + 0.5j), (2, -2.5j), (3, 2 + 1j)])
def test_misiurewicz_higher_levels(n, seed):
    s = S.find_misiurewicz(n, seed)
    assert abs(S.misiurewicz_residual(s, n)) < 1e-10
    assert abs(S.misiurewicz_residual(s, n + 1)) < 1e-9


def test_misiurewicz_rejects_collapse():
    with pytest.raises(NewtonDiverged):
        S.find_misiurewicz(1, 0.8 + 0.8j)
    with pytest.raises(ValueError):
        S.find_misiurewicz(0, 1.5)


def test_misiurewicz_derivative_forward_mode():
    s, h = 1.3 + 0.4j, 1e-6
    F, dF = S._orbit_and_derivative(s, 3)
    fd = (S.misiurewicz_residual(s + h, 3) - S.misiurewicz_residual(s - h, 3)) / (2 * h)
    assert abs(F - S.misiurewicz_residual(s, 3)) < 1e-14
    assert abs(dF - fd) < 1e-6 * max(1.0, abs(dF))


def test_misiurewicz_attachment():
    s0 = S.find_misiurewicz(1, 1.5)
    g = S.GridSpec(300, 300, S.H_VIEWPORT)
    r = S.scan_esc(g)
    comps = S.components(r, ESC)
    d = min(abs(c.attachment_estimate - s0) for c in comps if c.attachment_estimate is not None)
    assert d / g.dx <= 3


# components --------------------------------------------------------------------------

def _raster(cells):
    h, w = cells.shape
    return S.Raster(S.GridSpec(w, h, (0, 0, w, h)), cells.astype(np.uint8))


def test_components_disk():
    y, x = np.mgrid[:41, :41]
    cells = np.where((x - 20) ** 2 + (y - 20) ** 2 <= 100, 1, 0)
    comps = S.components(_raster(cells), {1})
    assert len(comps) == 1
    c = comps[0]
    assert c.hole_count == 0 and c.type_guess is S.ComponentType.JORDAN_LIKE
    assert c.pixel_count == int(cells.sum())


def test_components_two_squares():
    cells = np.zeros((20, 20), int)
    cells[2:6, 2:6] = 1
    cells[10:15, 10:15] = 1
    comps = S.components(_raster(cells), {1})
    assert sorted(c.pixel_count for c in comps) == [16, 25]


def test_components_croissant_and_contact():
    y, x = np.mgrid[:41, :41]
    disk = (x - 20) ** 2 + (y - 20) ** 2 <= 196
    hole = (x - 20) ** 2 + (y - 24) ** 2 <= 25  # strictly inside: one hole
    cells = np.where(disk & ~hole, 1, S.NONESC)
    cells[20, 34:] = S.OUTSIDE  # outside code reaching the rim at one point
    comps = S.components(_raster(cells), {1})
    assert len(comps) == 1
    c = comps[0]
    assert c.hole_count == 1 and c.type_guess is S.ComponentType.CROISSANT
    assert c.attachment_diameter <= 3 and abs(c.attachment_estimate - (33.5 + 20.5j)) < 2


def test_components_labels_partition():
    rng = np.random.default_rng(2)
    cells = (rng.uniform(size=(30, 30)) < 0.45).astype(int)
    labels, n = S.label_components(_raster(cells), {1})
    assert set(np.unique(labels[cells == 1])) == set(range(1, n + 1))
    assert np.all(labels[cells == 0] == 0)
    comps = S.components(_raster(cells), {1})
    assert sum(c.pixel_count for c in comps) == cells.sum()
