"""Regular ideal tetrahedra, their markings, and the tiling they generate.

A *marking* of an ordered regular ideal simplex ``s`` is the unique isometry
``g`` with ``g(DELTA0) = s`` vertex by vertex, where
``DELTA0 = (0, 1, e^{i pi/3}, oo)``.  Reflection ``rho_i`` in the face of
``DELTA0`` opposite vertex ``i`` acts on markings on the right,
``g -> g rho_i``; geometrically this reflects vertex ``i`` of ``g(DELTA0)``
across the plane of the other three and keeps the vertex order.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import (
    INF, GeometryError, IdealPoint, Isometry, apply, compose, mobius_from_triples,
    reflection_in_ideal_plane,
)
from .simplices import PERMUTATIONS, GeodesicSimplex3
from .volume import ideal_dihedral_angles

OMEGA = cmath.exp(1j * math.pi / 3)
DELTA0 = GeodesicSimplex3((IdealPoint(0), IdealPoint(1), IdealPoint(OMEGA), INF))
KEY_QUANTUM = 1e-7
MAX_DEPTH = 8
SCHEMA_VERSION = 1


class DepthLimitError(ValueError):
    pass


def is_regular_ideal(simplex: GeodesicSimplex3, tol: float = 1e-9) -> bool:
    if not simplex.all_ideal:
        return False
    try:
        angles = ideal_dihedral_angles(simplex.vertices)
    except GeometryError:
        return False
    return all(abs(a - math.pi / 3) < tol for a in angles.values())


def simplex_of_marking(g: Isometry) -> GeodesicSimplex3:
    return DELTA0.image(g)


def marking_of_simplex(simplex: GeodesicSimplex3, tol: float = 1e-8) -> Isometry:
    """The isometry ``g`` with ``g(DELTA0) = simplex`` (ordered)."""
    if not is_regular_ideal(simplex, tol):
        raise GeometryError("marking requires a regular ideal simplex")
    w0, w1, w2, w3 = simplex.vertices
    a = mobius_from_triples((DELTA0[0], DELTA0[1], DELTA0[3]), (w0, w1, w3))
    if apply(a, DELTA0[2]).close_to(w2, 1e-6):
        return a
    # orientation reversing: conjugate first (fixes 0, 1, oo; sends w to conj w)
    b = Isometry(a.matrix, -1)
    if apply(b, DELTA0[2]).close_to(w2, 1e-6):
        return b
    raise GeometryError("vertex data is inconsistent with a regular ideal simplex")


_R: list[Isometry] | None = None


def base_reflection(i: int) -> Isometry:
    """``r_i``: reflection of ``DELTA0`` in its face opposite vertex ``i``."""
    global _R
    if _R is None:
        _R = [reflection_in_ideal_plane(*DELTA0.face(k)) for k in range(4)]
    return _R[i]


def rho(i: int, simplex: GeodesicSimplex3) -> GeodesicSimplex3:
    """Reflect vertex ``i`` across the plane of the other three, keeping the order."""
    r = reflection_in_ideal_plane(*simplex.face(i))
    verts = list(simplex.vertices)
    verts[i] = apply(r, verts[i])
    return GeodesicSimplex3(tuple(verts))


def act_right(g: Isometry, word) -> Isometry:
    """``g r_{w1} r_{w2} ...``"""
    for i in word:
        g = compose(g, base_reflection(i))
    return g


# --------------------------------------------------------------------------
# vertex identification and tile keys

class VertexRegistry:
    """Assigns integer ids to ideal points, merging those within ``tol`` (Klein)."""

    def __init__(self, tol: float = 1e-8):
        self.tol = tol
        self._cells: dict = {}
        self.points: list[IdealPoint] = []

    def _cell(self, k):
        return tuple(int(math.floor(c / KEY_QUANTUM)) for c in k)

    def id_of(self, p: IdealPoint, create: bool = True) -> int | None:
        k = p.klein()
        cx, cy, cz = self._cell(k)
        for d in itertools.product((-1, 0, 1), repeat=3):
            for idx in self._cells.get((cx + d[0], cy + d[1], cz + d[2]), ()):
                if np.linalg.norm(self.points[idx].klein() - k) < self.tol:
                    return idx
        if not create:
            return None
        idx = len(self.points)
        self.points.append(p)
        self._cells.setdefault((cx, cy, cz), []).append(idx)
        return idx


@dataclass
class Tiling:
    """Tiles of the regular ideal tiling within combinatorial depth ``max_depth`` of ``DELTA0``."""

    max_depth: int
    markings: list[Isometry] = field(default_factory=list)
    words: list[tuple[int, ...]] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    keys: list[frozenset] = field(default_factory=list)
    registry: VertexRegistry = field(default_factory=VertexRegistry)
    index: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.markings)

    def key_of(self, simplex: GeodesicSimplex3, create: bool = False):
        ids = [self.registry.id_of(v, create) for v in simplex.vertices]
        if any(i is None for i in ids):
            return None
        return frozenset(ids)

    def contains(self, simplex: GeodesicSimplex3) -> bool:
        key = self.key_of(simplex)
        return key is not None and key in self.index

    def to_json(self) -> dict:
        tiles = []
        for g, w in zip(self.markings, self.words):
            s = simplex_of_marking(g)
            tiles.append({
                "word": list(w),
                "marking": g.to_json(),
                "vertices": [v.klein().tolist() for v in s.vertices],
            })
        return {"schema": "tiling", "version": SCHEMA_VERSION, "max_depth": self.max_depth,
                "count": len(tiles), "tiles": tiles}


def generate_tiling(max_depth: int = MAX_DEPTH, base: Isometry | None = None,
                    depth_limit: int = MAX_DEPTH) -> Tiling:
    """Breadth-first enumeration of tiles by reflection words, deduplicated by vertex set.

    ``base`` is the marking of the starting tile (identity: ``DELTA0``).
    """
    if max_depth < 0 or max_depth > depth_limit:
        raise DepthLimitError(f"depth must be in 0..{depth_limit}, got {max_depth}")
    tiling = Tiling(max_depth)
    g0 = Isometry.identity() if base is None else base

    def add(g, word):
        key = tiling.key_of(simplex_of_marking(g), create=True)
        if key in tiling.index:
            return False
        tiling.index[key] = len(tiling.markings)
        tiling.markings.append(g)
        tiling.words.append(word)
        tiling.depth.append(len(word))
        tiling.keys.append(key)
        return True

    add(g0, ())
    queue = deque([(g0, ())])
    while queue:
        g, word = queue.popleft()
        if len(word) == max_depth:
            continue
        for i in range(4):
            h = compose(g, base_reflection(i))
            if add(h, word + (i,)):
                queue.append((h, word + (i,)))
    return tiling


def vertex_permutation_isometry(perm) -> Isometry | None:
    """Isometry sending vertex ``j`` of ``DELTA0`` to vertex ``perm[j]``, if one exists."""
    src = (DELTA0[0], DELTA0[1], DELTA0[3])
    dst = (DELTA0[perm[0]], DELTA0[perm[1]], DELTA0[perm[3]])
    a = mobius_from_triples(src, dst)
    for g in (a, Isometry(a.matrix, -1)):
        if apply(g, DELTA0[2]).close_to(DELTA0[perm[2]], 1e-9):
            return g
    return None


def tile_stabilizer(tiling: Tiling) -> list[tuple[tuple[int, ...], Isometry]]:
    """Symmetries of ``DELTA0`` that map every tile of depth < max_depth into the tiling.

    Such a map fixes ``DELTA0`` setwise, hence preserves combinatorial depth,
    so checking the inner tiles is enough.
    """
    out = []
    for perm in PERMUTATIONS:
        g = vertex_permutation_isometry(perm)
        if g is None:
            continue
        ok = True
        for m, d in zip(tiling.markings, tiling.depth):
            if d >= tiling.max_depth:
                continue
            if not tiling.contains(simplex_of_marking(compose(g, m))):
                ok = False
                break
        if ok:
            out.append((perm, g))
    return out


def tile_stabilizer_order(tiling: Tiling) -> int:
    return len(tile_stabilizer(tiling))


def pointwise_stabilizer_order(tiling: Tiling) -> int:
    """Stabilizer elements fixing each vertex of ``DELTA0`` (checked geometrically)."""
    return sum(1 for _, g in tile_stabilizer(tiling)
               if all(apply(g, v).close_to(v, 1e-9) for v in DELTA0.vertices))


def write_tiling(tiling: Tiling, path) -> None:
    with open(path, "w") as fh:
        json.dump(tiling.to_json(), fh, indent=1)
