import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from effcycle.hyperbolic import INF, GeometryError, IdealPoint, Point3, apply, dist
from effcycle.simplices import (
    PERMUTATIONS, REGULAR_INRADIUS, GeodesicSimplex3, alt, alt_chain, distance_to_faces,
    incenter, inradius, is_degenerate, orientation_sign, perm_compose, perm_inverse,
    perm_sign, volume, volumes,
)
from effcycle.volume import V3

from conftest import finite_points, rand_iso, seeds

simplices = st.builds(lambda *vs: GeodesicSimplex3(vs), *[finite_points] * 4)

REG_DIRS = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)


def pulled(R):
    return GeodesicSimplex3(tuple(Point3.from_klein(math.tanh(R) * d) for d in REG_DIRS))


def grid_inradius(s, n=60):
    """Oracle: brute-force max of the min face distance over a barycentric grid."""
    K = s.klein()
    idx = np.array([(a, b, c) for a, b, c in itertools.product(range(1, n), repeat=3)
                    if a + b + c < n], dtype=float)
    W = np.column_stack([idx, n - idx.sum(axis=1)]) / n
    pts = W @ K
    root = np.sqrt(1 - np.sum(pts ** 2, axis=1))
    cen = K.mean(axis=0)
    worst = np.full(len(pts), np.inf)
    for i in range(4):
        F = np.delete(K, i, axis=0)
        nrm = np.cross(F[1] - F[0], F[2] - F[0])
        nrm /= np.linalg.norm(nrm)
        d = nrm @ F[0]
        if nrm @ cen < d:
            nrm, d = -nrm, -d
        worst = np.minimum(worst, np.arcsinh((pts @ nrm - d) / (root * math.sqrt(1 - d * d))))
    return worst.max()


def test_perm_helpers():
    assert sum(perm_sign(p) for p in PERMUTATIONS) == 0
    for p, q in itertools.product(PERMUTATIONS[:6], PERMUTATIONS[::5]):
        assert perm_sign(perm_compose(p, q)) == perm_sign(p) * perm_sign(q)
        assert perm_compose(p, perm_inverse(p)) == (0, 1, 2, 3)


def test_regular_ideal_basics(delta0):
    assert orientation_sign(delta0) == 1
    assert volume(delta0) == pytest.approx(V3, abs=1e-12)
    assert inradius(delta0) == pytest.approx(REGULAR_INRADIUS, abs=1e-9)
    assert REGULAR_INRADIUS == pytest.approx(0.5 * math.log(2))
    c = incenter(delta0)
    d = distance_to_faces(delta0, c.klein())
    assert np.ptp(d) < 1e-7


def test_degenerate_detection():
    p = Point3(0, 0, 1)
    assert is_degenerate(GeodesicSimplex3((p, p, Point3(1, 0, 1), Point3(0, 1, 2))))
    flat = GeodesicSimplex3((IdealPoint(0), IdealPoint(1), IdealPoint(2), INF))
    assert is_degenerate(flat)
    assert orientation_sign(flat) == 0
    assert volume(flat) == 0.0
    with pytest.raises(GeometryError):
        inradius(flat)


def test_simplex_requires_four_vertices():
    with pytest.raises(GeometryError):
        GeodesicSimplex3((INF, IdealPoint(0), IdealPoint(1)))
    with pytest.raises(TypeError):
        GeodesicSimplex3((INF, IdealPoint(0), IdealPoint(1), 3.0))


@given(simplices, st.sampled_from(PERMUTATIONS))
@settings(max_examples=50, deadline=None)
def test_orientation_follows_permutation_sign(s, p):
    o = orientation_sign(s)
    assert orientation_sign(s.permuted(p)) == o * perm_sign(p)


@given(simplices, seeds)
@settings(max_examples=30, deadline=None)
def test_orientation_under_isometry(s, seed):
    if is_degenerate(s, 1e-6):
        return
    g = rand_iso(seed)
    assert orientation_sign(s.image(g)) == orientation_sign(s) * g.orientation


@given(simplices, seeds)
@settings(max_examples=15, deadline=None)
def test_volume_invariant_and_bounded(s, seed):
    if is_degenerate(s, 1e-6):
        return
    v = volume(s)
    assert 0 <= v <= V3 + 1e-6
    assert volume(s.image(rand_iso(seed))) == pytest.approx(v, abs=1e-7)


@given(simplices, seeds)
@settings(max_examples=20, deadline=None)
def test_inradius_equivariant_and_bounded(s, seed):
    if is_degenerate(s, 1e-4):
        return
    r = inradius(s)
    assert 0 < r <= REGULAR_INRADIUS + 1e-9
    g = rand_iso(seed)
    assert inradius(s.image(g)) == pytest.approx(r, abs=1e-6)
    c1 = apply(g, incenter(s))
    c2 = incenter(s.image(g))
    assert dist(c1, c2) < 1e-4


def test_inradius_against_grid_oracle():
    rng = np.random.default_rng(7)
    for _ in range(4):
        P = np.column_stack([rng.normal(size=(4, 2)) * 0.8, np.exp(rng.normal(size=4) * 0.5)])
        s = GeodesicSimplex3(tuple(Point3(*row) for row in P))
        r = inradius(s)
        g = grid_inradius(s)
        assert g <= r + 1e-9
        assert r - g < 0.01


def test_pulled_family_monotone():
    Rs = [1, 2, 4, 6, 8, 10]
    vols = [volume(pulled(R)) for R in Rs]
    rads = [inradius(pulled(R)) for R in Rs]
    assert all(a < b for a, b in zip(vols, vols[1:]))
    assert all(a < b for a, b in zip(rads, rads[1:]))
    assert V3 - vols[-1] < 1e-6
    assert abs(rads[-1] - REGULAR_INRADIUS) < 1e-3


def test_volumes_batch_helper(delta0):
    rng = np.random.default_rng(1)
    ss = [delta0, pulled(9)]
    for _ in range(10):
        P = np.column_stack([rng.normal(size=(4, 2)), np.exp(rng.normal(size=4))])
        ss.append(GeodesicSimplex3(tuple(Point3(*row) for row in P)))
    v = volumes(ss)
    assert v[0] == pytest.approx(V3)
    assert v[1] == pytest.approx(volume(pulled(9)), abs=1e-9)
    assert np.all(v <= V3 + 1e-6)


def test_alt_structure(delta0):
    a = alt(delta0)
    assert len(a) == 24
    assert a.l1() == pytest.approx(1.0)
    assert sum(c for c, _ in a) == pytest.approx(0.0)
    assert all(abs(c) == 1 / 24 for c, _ in a)


def test_alt_idempotent(delta0):
    once = alt_chain([(1.0, delta0)])
    twice = alt_chain(once)
    d1 = {s: c for c, s in once}
    d2 = {s: c for c, s in twice}
    assert d1.keys() == d2.keys()
    assert all(d1[k] == pytest.approx(d2[k], abs=1e-15) for k in d1)
