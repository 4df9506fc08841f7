"""Volumes of hyperbolic tetrahedra and of their intersections with horoballs.

All-ideal tetrahedra use the closed form in terms of the Lobachevsky function.
Everything else is integrated in the Klein model, where the volume density
is ``(1 - |x|^2)^-2``.  A tetrahedron is cut into 24 cones, each with one
original vertex as apex over a base triangle strictly inside the ball; along
each ray from the apex the integrand ``s^2 / q(s)^2`` (``q`` quadratic) is
integrated on a geometrically graded mesh, which resolves the boundary
layer near apexes lying close to (or on) the sphere at infinity.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from .hyperbolic import GeometryError, Horoball, IdealPoint, Point3, apply, to_infinity

V3 = 1.0149416064096536  # 3 * lobachevsky(pi/3), checked in the test-suite


class IntegrationError(RuntimeError):
    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates or []


# --------------------------------------------------------------------------
# Lobachevsky function

_N_TERMS = 48
_ZETA_COEFFS = np.array([zeta(2 * n) / (n * (2 * n + 1) * math.pi ** (2 * n))
                         for n in range(1, _N_TERMS + 1)])


def lobachevsky(theta: float) -> float:
    """``-int_0^theta log|2 sin t| dt``; odd and pi-periodic."""
    th = math.remainder(float(theta), math.pi)  # in [-pi/2, pi/2]
    if th == 0.0:
        return 0.0
    sign = 1.0 if th > 0 else -1.0
    th = abs(th)
    powers = th ** (2 * np.arange(1, _N_TERMS + 1) + 1)
    val = th - th * math.log(2 * th) + float(_ZETA_COEFFS @ powers)
    return sign * val


# --------------------------------------------------------------------------
# ideal tetrahedra

def _triangle_angles(z0: complex, z1: complex, z2: complex) -> tuple[float, float, float]:
    def ang(a, b, c):
        u, v = b - a, c - a
        if abs(u) == 0 or abs(v) == 0:
            return 0.0
        return abs(cmath.phase(v / u))
    return ang(z0, z1, z2), ang(z1, z2, z0), ang(z2, z0, z1)


def ideal_dihedral_angles(verts) -> dict[tuple[int, int], float]:
    """Dihedral angles of an ideal tetrahedron keyed by edge ``(i, j)``, ``i < j``."""
    g = to_infinity(verts[3])
    w = [apply(g, v) for v in verts[:3]]
    if any(p.infinite for p in w):
        raise GeometryError("ideal vertices must be distinct")
    a0, a1, a2 = _triangle_angles(w[0].z, w[1].z, w[2].z)
    # the angle at image vertex k is the dihedral angle along edge (k, 3);
    # opposite edges carry equal angles
    return {(0, 3): a0, (1, 2): a0, (1, 3): a1, (0, 2): a1, (2, 3): a2, (0, 1): a2}


def ideal_volume(verts) -> float:
    g = to_infinity(verts[3])
    w = [apply(g, v) for v in verts[:3]]
    if any(p.infinite for p in w):
        return 0.0
    return sum(lobachevsky(a) for a in _triangle_angles(w[0].z, w[1].z, w[2].z))


# --------------------------------------------------------------------------
# quadrature rules

@lru_cache(maxsize=None)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=None)
def _triangle_rule(n: int):
    """Collapsed Gauss rule on the reference triangle; barycentric nodes, weights sum to 1."""
    x, w = _gauss01(n)
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    l1 = u.ravel()
    l2 = (v * (1 - u)).ravel()
    wt = (wu * wv * (1 - u)).ravel() * 2.0
    bary = np.stack([1 - l1 - l2, l1, l2], axis=-1)
    return bary, wt


def _ray_integral(a, b, c, s_up, n_gauss=12, ratio=0.25, depth=1e-4):
    """``int_0^{s_up} s^2 / (a + b s + c s^2)^2 ds`` vectorised over arrays.

    The mesh is graded geometrically towards ``s = 0`` down to well below the
    boundary-layer scale ``a / |b|``.
    """
    a, b, c, s_up = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, s_up)))
    out = np.zeros(a.shape)
    live = s_up > 0
    if not np.any(live):
        return out
    layer = np.where(np.abs(b) > 0, a / np.maximum(np.abs(b), 1e-300), np.inf)
    rel = np.where(live, depth * layer / np.where(live, s_up, 1.0), np.inf)
    rel_min = float(np.clip(np.min(rel), 1e-30, 1.0))
    n_int = max(1, int(math.ceil(math.log(rel_min) / math.log(ratio))) + 1)
    edges = np.concatenate([[0.0], ratio ** np.arange(n_int - 1, -1, -1)])
    edges[-1] = 1.0
    xg, wg = _gauss01(n_gauss)
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo[:, None] + (hi - lo)[:, None] * xg[None, :]).ravel()
    weights = ((hi - lo)[:, None] * wg[None, :]).ravel()
    s = s_up[..., None] * nodes
    q = a[..., None] + s * (b[..., None] + c[..., None] * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(q > 0, s * s / (q * q), 0.0)
    return np.where(live, s_up * (f @ weights), 0.0)


def _cone_volume(apex, base_tris, order, s_up_fn=None, ray_opts=None):
    """Hyperbolic volume of cones ``apex * triangle`` in the Klein model.

    ``apex``: (P, 3); ``base_tris``: (P, 3, 3).  ``s_up_fn(y)`` optionally gives
    the per-ray upper limit in ``[0, 1]`` (default 1).
    """
    apex = np.asarray(apex, dtype=float)
    tris = np.asarray(base_tris, dtype=float)
    bary, wt = _triangle_rule(order)
    y = np.einsum("qk,pkd->pqd", bary, tris)  # (P, Q, 3)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    nrm = np.cross(e1, e2)
    area2 = np.linalg.norm(nrm, axis=-1)  # twice the area
    with np.errstate(invalid="ignore", divide="ignore"):
        height = np.abs(np.einsum("pd,pd->p", apex - tris[:, 0], nrm)) / area2
    height = np.where(area2 > 0, height, 0.0)
    v = apex[:, None, :]
    w = y - v
    a = 1.0 - np.sum(v * v, axis=-1)
    b = -2.0 * np.sum(v * w, axis=-1)
    c = -np.sum(w * w, axis=-1)
    s_up = np.ones(a.shape) if s_up_fn is None else s_up_fn(y)
    ray = _ray_integral(np.broadcast_to(a, b.shape), b, c, s_up, **(ray_opts or {}))
    vols = height * (area2 / 2.0) * (ray @ wt)
    return vols


_SUBDIVISION = None


def _subdivision():
    """Index data of the 24-piece split: (vertex, face, edge-partner)."""
    global _SUBDIVISION
    if _SUBDIVISION is None:
        out = []
        for i in range(4):
            for f in range(4):
                if f == i:
                    continue
                face = [k for k in range(4) if k != f]
                for j in face:
                    if j != i:
                        out.append((i, f, j))
        _SUBDIVISION = out
    return _SUBDIVISION


def _split_pieces(K):
    centroid = K.mean(axis=0)
    apexes, bases = [], []
    for i, f, j in _subdivision():
        face = [k for k in range(4) if k != f]
        m = K[face].mean(axis=0)
        e = (K[i] + K[j]) / 2
        apexes.append(K[i])
        bases.append([centroid, m, e])
    return np.array(apexes), np.array(bases)


# coarse settings for screening many simplices; absolute error ~1e-3
_FAST_RAY = {"n_gauss": 8, "depth": 1e-2}


def klein_volume(K, tol: float = 1e-9, orders=(6, 10, 16, 24, 32, 48, 64)) -> float:
    """Hyperbolic volume of the Klein-model tetrahedron with vertex array ``K`` (4, 3)."""
    K = np.asarray(K, dtype=float)
    if abs(np.linalg.det(K[1:] - K[0])) < 1e-15:
        return 0.0
    apexes, bases = _split_pieces(K)
    prev = None
    estimates = []
    for order in orders:
        val = float(np.sum(_cone_volume(apexes, bases, order)))
        estimates.append((order, val))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
    raise IntegrationError(f"volume quadrature did not converge: {estimates}", estimates)


def klein_volume_batch(Ks, order: int = 6, chunk: int = 64, ray_opts=_FAST_RAY) -> np.ndarray:
    """Fixed-order volumes for many tetrahedra at once (no convergence check)."""
    Ks = np.asarray(Ks, dtype=float)
    out = np.empty(len(Ks))
    for start in range(0, len(Ks), chunk):
        apex_all, base_all = [], []
        for K in Ks[start:start + chunk]:
            a, b = _split_pieces(K)
            apex_all.append(a)
            base_all.append(b)
        vols = _cone_volume(np.concatenate(apex_all), np.concatenate(base_all), order, ray_opts=ray_opts)
        out[start:start + chunk] = vols.reshape(-1, 24).sum(axis=1)
    return out


# --------------------------------------------------------------------------
# horoball clipping

def _clip_polygon(poly, keep):
    """Sutherland-Hodgman clip of a convex polygon against ``keep(x) >= 0`` (affine)."""
    out = []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        fp, fq = keep(p), keep(q)
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            tt = fp / (fp - fq)
            out.append(p + tt * (q - p))
    return out


def _horo_geometry(apex, ball: Horoball):
    """Data for rays from ``apex`` (on the horosphere) into the horoball."""
    xi = ball.center.klein()
    lam = ball.klein_lambda()
    A = 1.0 - apex @ xi

    def lin(y):  # -Q1 / 2, affine in y
        w = y - apex
        return A * (w @ xi) - lam * lam * (apex @ w)

    def s_star(y):
        w = y - apex
        B = w @ xi if w.ndim == 1 else np.einsum("...d,d->...", w, xi)
        vw = apex @ w if w.ndim == 1 else np.einsum("...d,d->...", w, apex)
        ww = np.sum(w * w, axis=-1)
        num = 2 * (A * B - lam * lam * vw)
        den = B * B + lam * lam * ww
        return np.clip(num / den, 0.0, 1.0)

    return lin, s_star


def horoball_clip_volume(K, apex_index: int, ball: Horoball, order: int = 24) -> float:
    """Volume of ``tetrahedron(K) n ball`` where vertex ``apex_index`` lies on the horosphere.

    The intersection is star-shaped from the apex (the horoball is convex and
    contains the apex in its closure), so it is a cone over the part of the
    opposite face seen through the horoball, with per-ray depth ``s*(y)``.
    """
    K = np.asarray(K, dtype=float)
    apex = K[apex_index]
    face = [K[k] for k in range(4) if k != apex_index]
    lin, s_star = _horo_geometry(apex, ball)
    poly = _clip_polygon(face, lin)
    if len(poly) < 3:
        return 0.0
    tris = np.array([[poly[0], poly[k], poly[k + 1]] for k in range(1, len(poly) - 1)])
    # the apex-to-plane height is that of the whole face
    full = np.array(face)
    nrm = np.cross(full[1] - full[0], full[2] - full[0])
    height = abs((apex - full[0]) @ nrm) / np.linalg.norm(nrm)
    bary, wt = _triangle_rule(order)
    total = 0.0
    for tri in tris:
        y = bary @ tri
        area = np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) / 2
        w = y - apex
        a = np.full(len(y), 1.0 - apex @ apex)
        b = -2.0 * (w @ apex)
        c = -np.sum(w * w, axis=-1)
        total += height * area * float(_ray_integral(a, b, c, s_star(y)) @ wt)
    return total


def horoball_clip_volume_mc(K, apex_index: int, ball: Horoball, n: int,
                            rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate (value, standard error) of the same clip volume."""
    K = np.asarray(K, dtype=float)
    apex = K[apex_index]
    face = [K[k] for k in range(4) if k != apex_index]
    lin, s_star = _horo_geometry(apex, ball)
    poly = _clip_polygon(face, lin)
    if len(poly) < 3:
        return 0.0, 0.0
    tris = np.array([[poly[0], poly[k], poly[k + 1]] for k in range(1, len(poly) - 1)])
    areas = np.array([np.linalg.norm(np.cross(t[1] - t[0], t[2] - t[0])) / 2 for t in tris])
    full = np.array(face)
    nrm = np.cross(full[1] - full[0], full[2] - full[0])
    height = abs((apex - full[0]) @ nrm) / np.linalg.norm(nrm)
    pick = rng.choice(len(tris), size=n, p=areas / areas.sum())
    r1, r2 = rng.random(n), rng.random(n)
    flip = r1 + r2 > 1
    r1, r2 = np.where(flip, 1 - r1, r1), np.where(flip, 1 - r2, r2)
    t = tris[pick]
    y = t[:, 0] + r1[:, None] * (t[:, 1] - t[:, 0]) + r2[:, None] * (t[:, 2] - t[:, 0])
    su = s_star(y)
    s = su * rng.random(n)
    x = apex + s[:, None] * (y - apex)
    q = 1.0 - np.sum(x * x, axis=-1)
    samples = su * s * s / (q * q)
    scale = height * areas.sum()
    return scale * float(samples.mean()), scale * float(samples.std(ddof=1) / math.sqrt(n))


def _hemisphere_through(points) -> tuple[complex, float] | None:
    """Centre and radius of the hemisphere through three finite UHS points (None if vertical)."""
    P = np.array([[p.x, p.y, p.t] for p in points])
    # |p - c|^2 + t^2 = r^2 with c on the floor: linear in (cx, cy) after differencing
    M = 2 * (P[1:, :2] - P[0, :2])
    rhs = np.sum(P[1:] ** 2, axis=1) - np.sum(P[0] ** 2)
    if abs(np.linalg.det(M)) < 1e-14:
        return None
    cx, cy = np.linalg.solve(M, rhs)
    r = math.sqrt((P[0, 0] - cx) ** 2 + (P[0, 1] - cy) ** 2 + P[0, 2] ** 2)
    return complex(cx, cy), r


def ideal_cusp_clip_volume(verts, apex_index: int, ball: Horoball) -> float | None:
    """Closed-form clip ``area / (2 level^2)`` at an ideal apex.

    Returns None when the horoball reaches the opposite face, in which case
    the closed form does not apply.
    """
    center = verts[apex_index]
    if not isinstance(center, IdealPoint) or not (ball.center == center or ball.center.close_to(center, 1e-12)):
        raise GeometryError("closed-form clip needs the horoball centred at the ideal apex")
    g = to_infinity(center)
    others = [apply(g, v) for k, v in enumerate(verts) if k != apex_index]
    zs, lifted = [], []
    for p in others:
        if isinstance(p, IdealPoint):
            if p.infinite:
                return None
            zs.append(p.z)
            lifted.append(Point3(p.z.real, p.z.imag, 1e-300))
        else:
            zs.append(p.z)
            lifted.append(p)
    area = abs(((zs[1] - zs[0]).conjugate() * (zs[2] - zs[0])).imag) / 2
    hemi = _hemisphere_through(lifted)
    top = max(p.t for p in lifted)
    if hemi is not None:
        top = max(top, hemi[1])
    level = ball.level
    if level < top:
        return None
    return area / (2 * level * level)
