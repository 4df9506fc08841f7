import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from effcycle.hyperbolic import INF, Horoball, IdealPoint, Point3
from effcycle.volume import (
    V3, horoball_clip_volume, horoball_clip_volume_mc, ideal_cusp_clip_volume,
    ideal_dihedral_angles, ideal_volume, klein_volume, klein_volume_batch, lobachevsky,
)


def lob_quad(theta):
    """Oracle: -int_0^theta log|2 sin t| dt by adaptive quadrature."""
    val, _ = quad(lambda t: -math.log(abs(2 * math.sin(t))), 0, theta, limit=200,
                  points=[k * math.pi for k in range(1, 4) if k * math.pi < theta])
    return val


def bloch_wigner(z):
    """Oracle: volume of the ideal tetrahedron (0, 1, z, oo)."""
    z = mpmath.mpc(z)
    return float(mpmath.im(mpmath.polylog(2, z)) + mpmath.arg(1 - z) * mpmath.log(abs(z)))


@pytest.mark.parametrize("theta", [0.1, 0.5, math.pi / 6, math.pi / 3, 1.3, 2.0, 2.9, 4.0])
def test_lobachevsky_against_quadrature(theta):
    assert lobachevsky(theta) == pytest.approx(lob_quad(theta), abs=1e-10)


def test_lobachevsky_symmetries():
    for t in np.linspace(-5, 5, 41):
        assert lobachevsky(t + math.pi) == pytest.approx(lobachevsky(t), abs=1e-13)
        assert lobachevsky(-t) == pytest.approx(-lobachevsky(t), abs=1e-13)
    assert lobachevsky(0.0) == 0.0
    assert lobachevsky(math.pi / 2) == pytest.approx(0.0, abs=1e-15)


def test_v3_value():
    assert V3 == pytest.approx(3 * lob_quad(math.pi / 3), abs=1e-12)
    assert V3 == pytest.approx(1.0149416064096536, abs=1e-15)


def test_regular_ideal_volume(delta0):
    assert ideal_volume(delta0.vertices) == pytest.approx(V3, abs=1e-13)
    angles = ideal_dihedral_angles(delta0.vertices)
    assert all(a == pytest.approx(math.pi / 3) for a in angles.values())


@given(st.floats(-2, 3), st.floats(0.05, 2))
@settings(max_examples=60, deadline=None)
def test_ideal_volume_against_dilogarithm(x, y):
    z = complex(x, y)
    verts = (IdealPoint(0), IdealPoint(1), IdealPoint(z), INF)
    assert ideal_volume(verts) == pytest.approx(bloch_wigner(z), abs=1e-10)


def test_ideal_dihedral_opposite_edges_equal():
    verts = (IdealPoint(0), IdealPoint(1), IdealPoint(0.3 + 0.8j), INF)
    ang = ideal_dihedral_angles(verts)
    assert ang[(0, 1)] == pytest.approx(ang[(2, 3)])
    assert ang[(0, 2)] == pytest.approx(ang[(1, 3)])
    assert ang[(0, 3)] == pytest.approx(ang[(1, 2)])
    assert ang[(0, 1)] + ang[(0, 2)] + ang[(0, 3)] == pytest.approx(math.pi)


def test_degenerate_ideal_volume_zero():
    assert ideal_volume((IdealPoint(0), IdealPoint(1), IdealPoint(2), INF)) == 0.0


def test_klein_volume_ideal_matches_closed_form(delta0):
    K = delta0.klein()
    assert klein_volume(K) == pytest.approx(V3, abs=1e-8)
    z = 0.4 + 1.3j
    K2 = np.array([IdealPoint(v).klein() for v in (0, 1, z)] + [INF.klein()])
    assert klein_volume(K2) == pytest.approx(bloch_wigner(z), abs=1e-8)


def test_klein_volume_additive():
    rng = np.random.default_rng(3)
    for _ in range(5):
        K = rng.normal(size=(4, 3))
        K /= 1.2 * np.linalg.norm(K, axis=1).max()
        p = rng.dirichlet(np.ones(4)) @ K
        whole = klein_volume(K)
        parts = 0.0
        for i in range(4):
            Ki = K.copy()
            Ki[i] = p
            parts += klein_volume(Ki)
        assert parts == pytest.approx(whole, abs=1e-8)


def test_klein_volume_small_simplex_is_euclidean():
    # near the origin the Klein metric is Euclidean to first order
    K = 1e-3 * np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    assert klein_volume(K) == pytest.approx(1e-9 / 6, rel=1e-4)


def test_klein_volume_mc_oracle():
    rng = np.random.default_rng(11)
    K = np.array([[0.6, 0.1, 0.0], [-0.3, 0.5, 0.2], [-0.2, -0.6, 0.1], [0.0, 0.0, -0.7]])
    n = 400_000
    w = rng.dirichlet(np.ones(4), size=n)
    pts = w @ K
    euclid = abs(np.linalg.det(K[1:] - K[0])) / 6
    dens = 1 / (1 - np.sum(pts ** 2, axis=1)) ** 2
    est = euclid * dens.mean()
    err = euclid * dens.std() / math.sqrt(n)
    assert abs(klein_volume(K) - est) < 5 * err


def test_batch_close_to_adaptive():
    rng = np.random.default_rng(4)
    Ks = []
    for _ in range(20):
        P = np.column_stack([rng.normal(size=(4, 2)), np.exp(rng.normal(size=4))])
        Ks.append(np.array([Point3(*row).klein() for row in P]))
    batch = klein_volume_batch(np.array(Ks))
    exact = np.array([klein_volume(K) for K in Ks])
    assert np.max(np.abs(batch - exact)) < 2e-3


def test_cusp_clip_closed_form_vs_quadrature(delta0):
    # vertex oo of the regular tetrahedron cut at height L above all faces
    for L in (1.0, 2.0, 4.0):
        ball = Horoball(INF, L)
        closed = ideal_cusp_clip_volume(delta0.vertices, 3, ball)
        assert closed == pytest.approx(math.sqrt(3) / 4 / (2 * L * L))
        # truncate the apex to a finite point on the horosphere: the clipped
        # region of the finite simplex approaches the closed form
        K = delta0.klein()
        quadv = horoball_clip_volume(K, 3, ball)
        assert quadv == pytest.approx(closed, rel=1e-6)


def test_cusp_clip_not_applicable_below_faces(delta0):
    assert ideal_cusp_clip_volume(delta0.vertices, 3, Horoball(INF, 0.1)) is None


def test_finite_apex_clip_mc_agrees():
    ball = Horoball(INF, 1.0)
    apex = Point3(0.2, 0.1, 1.0)
    verts = [apex, Point3(-0.5, -0.4, 0.5), Point3(0.9, -0.3, 2.5), Point3(0.0, 1.0, 1.8)]
    K = np.array([v.klein() for v in verts])
    det = horoball_clip_volume(K, 0, ball)
    mc, se = horoball_clip_volume_mc(K, 0, ball, 200_000, np.random.default_rng(0))
    assert det > 0
    assert abs(det - mc) < 5 * se + 1e-6


def test_finite_clip_mc_oracle_rejection():
    """Independent check: rejection sampling of the whole simplex."""
    ball = Horoball(INF, 1.0)
    verts = [Point3(0.2, 0.1, 1.0), Point3(-0.5, -0.4, 0.5), Point3(0.9, -0.3, 2.5),
             Point3(0.0, 1.0, 1.8)]
    K = np.array([v.klein() for v in verts])
    rng = np.random.default_rng(1)
    n = 400_000
    pts = rng.dirichlet(np.ones(4), size=n) @ K
    from effcycle.hyperbolic import klein_to_uhs
    t = klein_to_uhs(pts)[:, 2]
    dens = 1 / (1 - np.sum(pts ** 2, axis=1)) ** 2 * (t > 1.0)
    euclid = abs(np.linalg.det(K[1:] - K[0])) / 6
    est, err = euclid * dens.mean(), euclid * dens.std() / math.sqrt(n)
    assert abs(horoball_clip_volume(K, 0, ball) - est) < 5 * err
