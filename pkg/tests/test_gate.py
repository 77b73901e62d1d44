import cmath
import math

import numpy as np
import pytest

from implosion import gate as G
from implosion.errors import AmbiguousGate, BranchCut
from implosion.poly import PolyMap, fixed_points


def test_fixed_point_is_stationary():
    m = PolyMap.cubic_a(0.05j)
    tr = G.flow(m, -0.05j)
    assert tr.endpoint is G.Endpoint.CONVERGED and len(tr.samples) == 1
    # the vector field vanishes at every fixed point
    rhs = G._vector_field(m, 1)
    for f in fixed_points(m):
        assert abs(rhs(0, np.array([f.location]))[0]) < 1e-10


def test_seed_trajectories_converge_to_fixed_points():
    m = PolyMap.cubic_a(0.05 * cmath.exp(0.6j))
    fix = [f.location for f in fixed_points(m)]
    for z0 in G.seeds().values():
        for d in G.Direction:
            tr = G.flow(m, z0, direction=d)
            assert tr.endpoint is G.Endpoint.CONVERGED
            assert min(abs(tr.end - f) for f in fix) < 1e-6


def test_step_halving():
    m = PolyMap.cubic_a(0.05 * cmath.exp(0.6j))
    for z0 in G.seeds().values():
        z1 = G.rk4_endpoint(m, z0, 4.0, 0.02)
        z2 = G.rk4_endpoint(m, z0, 4.0, 0.01)
        assert abs(z1 - z2) < 1e-8
        # the adaptive pair agrees with the fixed-step solution
        tr = G.flow(m, z0, t_max=4.0)
        assert abs(tr.end - z2) < 1e-8


def test_gate_examples():
    assert G.classify_gate(0.05 * cmath.exp(1j * math.pi / 4)).gates == (G.STAR, 2)
    assert G.classify_gate(0.05 * cmath.exp(-1j * math.pi / 4)).gates == (2, G.STAR)
    assert G.classify_gate(0).gates == (G.STAR, G.STAR)
    assert str(G.classify_gate(0)) == "(*, *)"


def test_gate_ambiguous_when_fixed_points_merge():
    # the two fixed points are closer than the matching tolerance
    with pytest.raises(AmbiguousGate) as err:
        G.classify_gate(2e-5 * cmath.exp(0.7j))
    assert err.value.trajectories


def test_gate_locally_constant():
    rng = np.random.default_rng(7)
    for _ in range(20):
        th = rng.uniform(0.15, math.pi / 2 - 0.15)
        a = 0.05 * cmath.exp(1j * th)
        da = 1e-4 * cmath.exp(2j * math.pi * rng.uniform())
        assert G.classify_gate(a) == G.classify_gate(a + da)


@pytest.mark.parametrize("rot,expected", [(1, (G.STAR, 2)), (-1j, (2, G.STAR))])
def test_gate_sectors(rot, expected):
    for th in np.linspace(0.1, math.pi / 2 - 0.1, 12):
        assert G.classify_gate(rot * 0.05 * cmath.exp(1j * th)).gates == expected


def test_tau_of_a():
    assert abs(G.tau_of_a(cmath.sqrt(math.e - 1)) + 2j * math.pi) < 1e-12
    for a in [1e-3, 1e-3j, 1e-4 * (1 + 1j)]:
        assert abs(G.tau_of_a(a) * a * a + 2j * math.pi) < 1e-3
    with pytest.raises(BranchCut):
        G.tau_of_a(2j)  # 1 + a^2 = -3
    t = G.tau_of_a(1.2j + 0.01)  # 1 + a^2 close to the cut from above
    assert abs(cmath.log(1 + (1.2j + 0.01) ** 2).imag) <= math.pi
    assert t == -2j * math.pi / cmath.log(1 + (1.2j + 0.01) ** 2)


def test_well_behaved():
    # single fixed point in the disk: vacuous
    assert G.well_behaved(PolyMap.cubic_a(0))
    assert G.well_behaved_indices([7j, -7j], 5)
    assert not G.well_behaved_indices([2j, -2j], 5)
    # 0 and -a carry indices 1/a^2 and -1/a^2
    assert G.well_behaved(PolyMap.cubic_a(0.05 * cmath.exp(0.5j)), 3)
    assert not G.well_behaved(PolyMap.cubic_a(0.05), 3)  # real a: Im iota = 0


def test_well_behaved_vs_gate_report(capsys):
    rng = np.random.default_rng(11)
    agree = 0
    for _ in range(30):
        a = 0.05 * cmath.exp(2j * math.pi * rng.uniform())
        wb = G.well_behaved(PolyMap.cubic_a(a), 3)
        try:
            G.classify_gate(a)
            ok = True
        except AmbiguousGate:
            ok = False
        agree += wb == ok
    print(f"well_behaved vs gate success agreement: {agree}/30")
