import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from implosion import poly as P
from implosion.errors import PullbackObstructed


def test_eval_examples():
    g = P.PolyMap.cubic(1)
    assert g(0) == 0
    assert abs(g(3) - 3) < 1e-14
    half = P.PolyMap.cubic(2, lam=0.5)
    assert abs(half(1) - 0.5 * P.PolyMap.cubic(2)(1)) < 1e-15
    assert P.eval(g, 3) == g(3)


def test_lambda_scaling_pointwise():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = complex(*rng.normal(size=2))
        lam = complex(*rng.normal(size=2))
        z = complex(*rng.normal(size=2))
        assert abs(P.PolyMap.cubic(s, lam)(z) - lam * P.PolyMap.cubic(s)(z)) < 1e-12 * (1 + abs(z) ** 3)


def test_critical_points():
    g = P.PolyMap.cubic(2)
    assert sorted(P.critical_points(g), key=abs) == [0.5, 2]
    for c in P.critical_points(g):
        assert abs(g.deriv(c)) < 1e-12
    assert P.distinct_critical_points(P.PolyMap.cubic(1)) == [(1, 2)]
    q = P.PolyMap.quadratic(0.3 + 0.2j)
    (c,) = P.critical_points(q)
    assert c == -(0.3 + 0.2j) / 2 and abs(q.deriv(c)) < 1e-15
    f = P.PolyMap.cubic_a(0.4 - 0.1j, 0.9)
    for c in P.critical_points(f):
        assert abs(f.deriv(c)) < 1e-12


def test_fixed_points_examples():
    fps = {round(f.location.real, 9): f for f in P.fixed_points(P.PolyMap.cubic(1))}
    assert fps[0].multiplicity == 2 and fps[0].multiplier == 1
    assert abs(fps[3].multiplier - 4) < 1e-12 and fps[3].multiplicity == 1
    fp = [f for f in P.fixed_points(P.PolyMap.cubic(1, 0.9)) if f.location == 0][0]
    assert fp.multiplicity == 1 and fp.multiplier == 0.9
    (q,) = P.fixed_points(P.PolyMap.quadratic())
    assert q.location == 0 and q.multiplicity == 2


@settings(max_examples=60, deadline=None)
@given(st.complex_numbers(min_magnitude=0.2, max_magnitude=5),
       st.complex_numbers(min_magnitude=0.5, max_magnitude=1.5))
def test_fixed_point_completeness(s, lam):
    fps = P.fixed_points(P.PolyMap.cubic(s, lam))
    assert sum(f.multiplicity for f in fps) == 3
    for f in fps:
        if abs(f.multiplier - 1) > 1e-6:
            assert f.multiplicity == 1


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(min_magnitude=0.2, max_magnitude=5),
       st.complex_numbers(max_magnitude=50))
def test_s_inversion_identical(s, z):
    g, h = P.PolyMap.cubic(s), P.PolyMap.cubic(s).inverted()
    assert g.coeffs == h.coeffs and g(z) == h(z)
    assert h.s == g.s_inv and h.s_inv == g.s


def test_s_inversion_grid():
    g = P.PolyMap.cubic(0.7 + 0.4j)
    h = g.inverted()
    xs = np.linspace(-3, 3, 32)
    zs = (xs[:, None] + 1j * xs[None, :]).ravel()[:1000]
    assert all(g(z) - h(z) == 0 for z in zs)


def test_iterate_escape_examples():
    g = P.PolyMap.cubic(1)
    assert not P.iterate_escape(g, 0).escaped
    r = P.iterate_escape(g, 1e6)
    assert r.escaped and r.n == 0 or r.n == 1


@pytest.mark.parametrize("m", [P.PolyMap.cubic(1.2), P.PolyMap.cubic(0.3 + 2j), P.PolyMap.quadratic(),
                               P.PolyMap.cubic(2, lam=0.6)])
def test_escape_soundness(m):
    R = P.escape_radius(m)
    rng = np.random.default_rng(2)
    for _ in range(200):
        z = complex(*rng.normal(scale=3, size=2))
        res = P.iterate_escape(m, z, 500)
        if res.escaped:
            w = res.z
            for _ in range(10):
                if abs(w) > 1e80:  # float range exhausted, growth already certified
                    break
                w2 = m(w)
                assert abs(w2) > abs(w)
                assert abs(w2) >= 2 * abs(w) - 1e-9 * abs(w)
                w = w2


def test_escape_radius_doubling():
    for m in [P.PolyMap.cubic(1), P.PolyMap.cubic(5j), P.PolyMap.quadratic(0.5)]:
        R = P.escape_radius(m) * 1.0000001
        for th in np.linspace(0, 2 * np.pi, 64, endpoint=False):
            z = R * cmath.exp(1j * th)
            assert abs(m(z)) >= 2 * abs(z)


def test_green_examples():
    g = P.PolyMap.cubic(1.2)
    assert P.green(g, 0) == 0
    assert P.green(g, 1 / 1.2) == 0
    z = 1e6 * cmath.exp(0.3j)
    assert abs(P.green(g, z) - math.log(abs(z)) + 0.5 * math.log(3)) < 1e-5


@pytest.mark.parametrize("m", [P.PolyMap.cubic(1.2), P.PolyMap.cubic(0.8 + 0.3j), P.PolyMap.quadratic()])
def test_green_functional_equation(m):
    rng = np.random.default_rng(3)
    for _ in range(200):
        z = complex(*rng.normal(scale=2, size=2))
        G = P.green(m, z)
        if G > 0:
            assert abs(P.green(m, m(z)) - m.degree * G) < 1e-8 * max(1, G)


@pytest.mark.parametrize("m", [P.PolyMap.cubic(1.2), P.PolyMap.cubic(0.8 + 0.3j), P.PolyMap.quadratic(),
                               P.PolyMap.cubic_a(0.5 + 0.3j)])
def test_boettcher_identities(m):
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(80):
        z = complex(*rng.normal(scale=2, size=2))
        if P.green(m, z) == 0:
            with pytest.raises(PullbackObstructed):
                P.boettcher(m, z)
            continue
        try:
            phi = P.boettcher(m, z)
        except PullbackObstructed:
            continue
        phi2 = P.boettcher(m, m(z))
        assert abs(abs(phi) - math.exp(P.green(m, z))) < 1e-8 * abs(phi)
        assert abs(phi2 - phi ** m.degree) < 1e-8 * abs(phi2)
        checked += 1
    assert checked > 20


def test_boettcher_scaling():
    g = P.PolyMap.cubic(0.9 + 0.2j)
    z = 1e6 * cmath.exp(1.1j)
    assert abs(P.boettcher(g, z) / z - 3 ** -0.5) < 1e-5
    q = P.PolyMap.quadratic()
    assert abs(P.boettcher(q, z) / z - 1) < 1e-5


def test_boettcher_bounded_raises():
    with pytest.raises(PullbackObstructed):
        P.boettcher(P.PolyMap.cubic(1.2), 0.1)


def test_ray_zero_is_real():
    g = P.PolyMap.cubic(1.2)
    ray = P.external_ray(g, 0.0, (1e-3, 2.0), 40)
    assert max(abs(z.imag) for z in ray.points) < 1e-9
    assert all(a > b for a, b in zip(ray.green, ray.green[1:]))
    # it lands on the repelling fixed point 3b
    assert abs(ray.points[-1] - 3 * g.b) < 0.05


@pytest.mark.parametrize("m,t", [(P.PolyMap.cubic(1.2), 0.3), (P.PolyMap.cubic(0.8 + 0.3j), 0.71),
                                 (P.PolyMap.quadratic(), 1 / 7)])
def test_ray_consistency(m, t):
    ray = P.external_ray(m, t, (0.01, 1.5), 25)
    for z, G in zip(ray.points, ray.green):
        phi = P.boettcher(m, z)
        dt = (cmath.phase(phi) / (2 * math.pi) - t + 0.5) % 1 - 0.5
        assert abs(dt) < 1e-6 / (2 * math.pi)
        assert abs(math.log(abs(phi)) - G) < 1e-8
        assert abs(P.green(m, z) - G) < 1e-8


def test_ray_image_lies_on_tripled_ray():
    g = P.PolyMap.cubic(1.2)
    t = 0.13
    ray = P.external_ray(g, t, (0.05, 0.5), 20)
    img = P.external_ray(g, (3 * t) % 1, (0.15, 1.5), 20)
    # both traces are sampled at identical potentials up to the factor 3
    for z, w in zip(ray.points, img.points):
        assert abs(g(z) - w) < 1e-6
