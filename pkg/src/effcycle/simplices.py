"""Straight (geodesic) tetrahedra with finite or ideal vertices.

A straight simplex is identified with its ordered vertex tuple; straightening
is therefore just the constructor.  Klein coordinates are used for every
affine question (degeneracy, orientation, incenter).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .hyperbolic import GeometryError, IdealPoint, Isometry, Point3, apply
from .volume import V3, ideal_volume, klein_volume, klein_volume_batch

PERMUTATIONS = tuple(itertools.permutations(range(4)))


def perm_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def perm_compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """``(p o q)(i) = p[q[i]]``."""
    return tuple(p[i] for i in q)


def perm_inverse(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


@dataclass(frozen=True)
class GeodesicSimplex3:
    vertices: tuple

    def __post_init__(self):
        verts = tuple(self.vertices)
        if len(verts) != 4:
            raise GeometryError("a 3-simplex has exactly four vertices")
        for v in verts:
            if not isinstance(v, (Point3, IdealPoint)):
                raise TypeError(f"bad vertex {v!r}")
        object.__setattr__(self, "vertices", verts)

    def __iter__(self):
        return iter(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    @property
    def ideal_flags(self) -> tuple[bool, ...]:
        return tuple(isinstance(v, IdealPoint) for v in self.vertices)

    @property
    def all_ideal(self) -> bool:
        return all(self.ideal_flags)

    def klein(self) -> np.ndarray:
        """Klein coordinates of the vertices (cached, read-only)."""
        k = self.__dict__.get("_klein")
        if k is None:
            k = np.array([v.klein() for v in self.vertices])
            k.flags.writeable = False
            object.__setattr__(self, "_klein", k)
        return k

    def permuted(self, perm: Sequence[int]) -> "GeodesicSimplex3":
        """The simplex ``(v_perm[0], ..., v_perm[3])``."""
        return GeodesicSimplex3(tuple(self.vertices[i] for i in perm))

    def image(self, g: Isometry) -> "GeodesicSimplex3":
        return GeodesicSimplex3(tuple(apply(g, v) for v in self.vertices))

    def face(self, i: int) -> tuple:
        return tuple(v for k, v in enumerate(self.vertices) if k != i)


def _klein_det(K: np.ndarray) -> float:
    return float(np.linalg.det(K[1:] - K[0]))


def is_degenerate(simplex: GeodesicSimplex3, tol: float = 1e-10) -> bool:
    K = simplex.klein()
    for i in range(4):
        for j in range(i + 1, 4):
            if np.linalg.norm(K[i] - K[j]) < tol:
                return True
    return abs(_klein_det(K)) < tol


def orientation_sign(simplex: GeodesicSimplex3, tol: float = 1e-10) -> int:
    """+1 / -1 by the sign of the Klein affine frame; 0 when degenerate.

    With this convention ``(0, 1, e^{i pi/3}, oo)`` is positive.
    """
    if is_degenerate(simplex, tol):
        return 0
    return 1 if _klein_det(simplex.klein()) > 0 else -1


def volume(simplex: GeodesicSimplex3, tol: float = 1e-9) -> float:
    if is_degenerate(simplex):
        return 0.0
    if simplex.all_ideal:
        return ideal_volume(simplex.vertices)
    return klein_volume(simplex.klein(), tol=tol)


def volumes(simplices: Sequence[GeodesicSimplex3], margin: float = 1e-2) -> np.ndarray:
    """Volumes of many simplices.

    A coarse batch pass is used first; anything within ``margin`` of v3 (or
    with an all-ideal vertex set) is recomputed exactly/adaptively.
    """
    simplices = list(simplices)
    out = np.zeros(len(simplices))
    todo = []
    for n, s in enumerate(simplices):
        if is_degenerate(s):
            continue
        if s.all_ideal:
            out[n] = ideal_volume(s.vertices)
        else:
            todo.append(n)
    if todo:
        out[todo] = np.abs(klein_volume_batch(np.array([simplices[n].klein() for n in todo])))
        for n in todo:
            if out[n] > V3 - margin:
                out[n] = klein_volume(simplices[n].klein())
    return out


# --------------------------------------------------------------------------
# incenter / inradius

def _face_functionals(K: np.ndarray):
    """Rows ``(n, d, scale)`` with ``(n.k - d) / (scale sqrt(1-|k|^2))`` = sinh(distance)."""
    rows = []
    centroid = K.mean(axis=0)
    for i in range(4):
        P = np.delete(K, i, axis=0)
        n = np.cross(P[1] - P[0], P[2] - P[0])
        n /= np.linalg.norm(n)
        d = n @ P[0]
        if n @ centroid - d < 0:
            n, d = -n, -d
        rows.append((n, d, math.sqrt(max(1.0 - d * d, 1e-300))))
    return rows


def distance_to_faces(simplex: GeodesicSimplex3, k) -> np.ndarray:
    """Hyperbolic distances from Klein point ``k`` to the four face planes (signed)."""
    K = simplex.klein()
    k = np.asarray(k, dtype=float)
    root = math.sqrt(1.0 - k @ k)
    return np.array([math.asinh((n @ k - d) / (s * root)) for n, d, s in _face_functionals(K)])


def _incenter_klein(simplex: GeodesicSimplex3, restarts: int, seed: int):
    if is_degenerate(simplex):
        raise GeometryError("incenter of a degenerate simplex")
    K = simplex.klein()
    rows = _face_functionals(K)
    N = np.array([r[0] / r[2] for r in rows])
    D = np.array([r[1] / r[2] for r in rows])

    def cons(z):
        k, tau = z[:3], z[3]
        return N @ k - D - tau * math.sqrt(max(1.0 - k @ k, 0.0))

    def cons_jac(z):
        k, tau = z[:3], z[3]
        root = math.sqrt(max(1.0 - k @ k, 1e-300))
        J = np.empty((4, 4))
        J[:, :3] = N + tau * k[None, :] / root
        J[:, 3] = -root
        return J

    constraints = [
        {"type": "ineq", "fun": cons, "jac": cons_jac},
        {"type": "ineq", "fun": lambda z: 1.0 - 1e-14 - z[:3] @ z[:3],
         "jac": lambda z: np.concatenate([-2 * z[:3], [0.0]])},
    ]
    rng = np.random.default_rng(seed)
    starts = [K.mean(axis=0)]
    for _ in range(restarts - 1):
        w = rng.dirichlet(np.ones(4))
        starts.append(0.9 * (w @ K) + 0.1 * K.mean(axis=0))
    best = None
    for k0 in starts:
        root = math.sqrt(1.0 - k0 @ k0)
        tau0 = float(np.min((N @ k0 - D) / root))
        res = minimize(lambda z: -z[3], np.concatenate([k0, [tau0]]),
                       jac=lambda z: np.array([0.0, 0.0, 0.0, -1.0]),
                       constraints=constraints, method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 500})
        k = res.x[:3]
        if k @ k >= 1.0:
            continue
        val = float(np.min((N @ k - D) / math.sqrt(1.0 - k @ k)))
        if best is None or val > best[1]:
            best = (k, val)
    if best is None:
        raise GeometryError("incenter optimisation failed")
    return best[0], math.asinh(best[1])


def incenter(simplex: GeodesicSimplex3, restarts: int = 4, seed: int = 0) -> Point3:
    k, _ = _incenter_klein(simplex, restarts, seed)
    return Point3.from_klein(k)


def inradius(simplex: GeodesicSimplex3, restarts: int = 4, seed: int = 0) -> float:
    return _incenter_klein(simplex, restarts, seed)[1]


# the regular ideal tetrahedron has incenter at the Klein origin when
# inscribed symmetrically; its faces sit at Euclidean distance 1/3
REGULAR_INRADIUS = math.atanh(1.0 / 3.0)


# --------------------------------------------------------------------------
# alternation

class WeightedSimplexList(list):
    """List of ``(coefficient, GeodesicSimplex3)`` pairs."""

    def l1(self) -> float:
        return float(sum(abs(c) for c, _ in self))

    def merged(self, tol: float = 0.0) -> "WeightedSimplexList":
        acc: dict = {}
        for c, s in self:
            acc[s] = acc.get(s, 0.0) + c
        return WeightedSimplexList((c, s) for s, c in acc.items() if abs(c) > tol)


def alt(simplex: GeodesicSimplex3) -> WeightedSimplexList:
    return WeightedSimplexList((perm_sign(p) / 24.0, simplex.permuted(p)) for p in PERMUTATIONS)


def alt_chain(entries: Iterable[tuple[float, GeodesicSimplex3]]) -> WeightedSimplexList:
    out = WeightedSimplexList()
    for c, s in entries:
        out.extend((c * a, t) for a, t in alt(s))
    return out.merged(tol=1e-15)
