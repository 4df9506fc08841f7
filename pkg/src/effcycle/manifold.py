"""Face-paired ideal triangulations, developing map, holonomy and cusp sections.

Gluing convention: face ``f`` of tetrahedron ``t`` is glued to face
``perm[f]`` of ``neighbor``, vertex ``v`` going to vertex ``perm[v]``.  A
pairing is orientation preserving iff its permutation is odd.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hyperbolic import (
    INF, GeometryError, Horoball, IdealPoint, Isometry, apply, apply_stack_klein, compose, inverse,
)
from .simplices import PERMUTATIONS, GeodesicSimplex3, perm_inverse, perm_sign
from .tiling import (
    DELTA0, Tiling, VertexRegistry, base_reflection, generate_tiling, is_regular_ideal,
    simplex_of_marking, vertex_permutation_isometry,
)
from .volume import V3, ideal_dihedral_angles

SCHEMA_VERSION = 1


class InconsistentHolonomyError(GeometryError):
    pass


class SectionOverlapError(GeometryError):
    pass


class RadiusExhaustedWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# combinatorics

@dataclass(frozen=True)
class IdealTriangulation:
    name: str
    neighbors: tuple  # neighbors[t][f]
    perms: tuple  # perms[t][f]

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(tuple(r) for r in self.neighbors))
        object.__setattr__(self, "perms", tuple(tuple(tuple(p) for p in r) for r in self.perms))
        self.validate()

    @property
    def num_tetrahedra(self) -> int:
        return len(self.neighbors)

    def validate(self) -> None:
        n = self.num_tetrahedra
        for t in range(n):
            for f in range(4):
                t2, p = self.neighbors[t][f], self.perms[t][f]
                if not 0 <= t2 < n or sorted(p) != [0, 1, 2, 3]:
                    raise ValueError(f"bad pairing data at ({t}, {f})")
                if t2 == t and p[f] == f:
                    raise ValueError(f"face ({t}, {f}) paired with itself")
                if self.neighbors[t2][p[f]] != t or self.perms[t2][p[f]] != perm_inverse(p):
                    raise ValueError(f"pairing at ({t}, {f}) is not involutive")

    def pairings(self):
        """Unordered face pairings as ``(t, f, t2, f2, perm)`` with ``(t, f) <= (t2, f2)``."""
        out = []
        for t in range(self.num_tetrahedra):
            for f in range(4):
                t2, p = self.neighbors[t][f], self.perms[t][f]
                if (t, f) <= (t2, p[f]):
                    out.append((t, f, t2, p[f], p))
        return out

    def is_orientable(self) -> bool:
        # look for a consistent sign per tetrahedron
        sign = {0: 1}
        queue = deque([0])
        while queue:
            t = queue.popleft()
            for f in range(4):
                t2, p = self.neighbors[t][f], self.perms[t][f]
                s2 = -sign[t] * perm_sign(p)
                if t2 not in sign:
                    sign[t2] = s2
                    queue.append(t2)
                elif sign[t2] != s2:
                    return False
        return True

    def edge_classes(self) -> list[list[tuple[int, tuple[int, int]]]]:
        """Equivalence classes of (tet, edge) under the face gluings."""
        parent: dict = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t in range(self.num_tetrahedra):
            for e in itertools.combinations(range(4), 2):
                find((t, e))
                for f in range(4):
                    if f in e:
                        continue
                    p, t2 = self.perms[t][f], self.neighbors[t][f]
                    e2 = tuple(sorted((p[e[0]], p[e[1]])))
                    parent[find((t, e))] = find((t2, e2))
        classes: dict = {}
        for k in sorted(parent):
            classes.setdefault(find(k), []).append(k)
        return sorted(classes.values())

    def edge_valences(self) -> list[int]:
        return [len(c) for c in self.edge_classes()]

    def edge_angle_sums(self) -> list[float]:
        """Dihedral angle sums around each edge class (all shapes regular)."""
        angles = ideal_dihedral_angles(DELTA0.vertices)
        return [sum(angles[e] for _, e in c) for c in self.edge_classes()]

    def cusp_classes(self) -> list[list[tuple[int, int]]]:
        parent: dict = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                x = parent[x]
            return x

        for t in range(self.num_tetrahedra):
            for v in range(4):
                find((t, v))
                for f in range(4):
                    if f != v:
                        t2, p = self.neighbors[t][f], self.perms[t][f]
                        parent[find((t, v))] = find((t2, p[v]))
        classes: dict = {}
        for k in sorted(parent):
            classes.setdefault(find(k), []).append(k)
        return sorted(classes.values())

    def num_cusps(self) -> int:
        return len(self.cusp_classes())

    def to_json(self) -> dict:
        return {
            "schema": "triangulation",
            "version": SCHEMA_VERSION,
            "name": self.name,
            "tetrahedra": self.num_tetrahedra,
            "pairings": [[t, f, t2, f2, list(p)] for t, f, t2, f2, p in self.pairings()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "IdealTriangulation":
        if data.get("schema") != "triangulation" or data.get("version") != SCHEMA_VERSION:
            raise ValueError("not a version-1 triangulation document")
        n = int(data["tetrahedra"])
        nb = [[None] * 4 for _ in range(n)]
        pm = [[None] * 4 for _ in range(n)]
        for t, f, t2, f2, p in data["pairings"]:
            p = tuple(p)
            if p[f] != f2:
                raise ValueError("pairing permutation does not send face to face")
            nb[t][f], pm[t][f] = t2, p
            nb[t2][f2], pm[t2][f2] = t, perm_inverse(p)
        if any(x is None for row in nb for x in row):
            raise ValueError("unpaired face")
        return cls(data.get("name", ""), nb, pm)


def figure8() -> IdealTriangulation:
    return IdealTriangulation(
        "figure8",
        [[1, 1, 1, 1], [0, 0, 0, 0]],
        [[(0, 1, 3, 2), (1, 2, 3, 0), (2, 3, 1, 0), (2, 1, 0, 3)],
         [(0, 1, 3, 2), (3, 2, 0, 1), (3, 0, 1, 2), (2, 1, 0, 3)]],
    )


def gieseking() -> IdealTriangulation:
    return IdealTriangulation(
        "gieseking",
        [[0, 0, 0, 0]],
        [[(1, 2, 0, 3), (2, 0, 1, 3), (0, 2, 3, 1), (0, 3, 1, 2)]],
    )


def orientation_double_cover(tri: IdealTriangulation) -> IdealTriangulation:
    """Sheets ``0`` and ``1``; even (orientation reversing) pairings swap sheets."""
    n = tri.num_tetrahedra
    nb = [[0] * 4 for _ in range(2 * n)]
    pm = [[None] * 4 for _ in range(2 * n)]
    for s in (0, 1):
        for t in range(n):
            for f in range(4):
                p = tri.perms[t][f]
                s2 = s if perm_sign(p) < 0 else 1 - s
                nb[s * n + t][f] = s2 * n + tri.neighbors[t][f]
                pm[s * n + t][f] = p
    return IdealTriangulation(tri.name + "~", nb, pm)


def is_isomorphic(a: IdealTriangulation, b: IdealTriangulation) -> bool:
    """Brute force over tetrahedron bijections and vertex relabelings (small inputs only)."""
    n = a.num_tetrahedra
    if b.num_tetrahedra != n:
        return False
    for tp in itertools.permutations(range(n)):
        for rel in itertools.product(PERMUTATIONS, repeat=n):
            if _iso_ok(a, b, tp, rel):
                return True
    return False


def _iso_ok(a, b, tp, rel) -> bool:
    for t in range(a.num_tetrahedra):
        for f in range(4):
            t2, p = a.neighbors[t][f], a.perms[t][f]
            bf = rel[t][f]
            if b.neighbors[tp[t]][bf] != tp[t2]:
                return False
            q = b.perms[tp[t]][bf]
            if any(q[rel[t][v]] != rel[t2][p[v]] for v in range(4)):
                return False
    return True


def read_triangulation(path) -> IdealTriangulation:
    with open(path) as fh:
        return IdealTriangulation.from_json(json.load(fh))


def write_triangulation(tri: IdealTriangulation, path) -> None:
    with open(path, "w") as fh:
        json.dump(tri.to_json(), fh, indent=1)


# --------------------------------------------------------------------------
# developing map

@dataclass
class PlacedTile:
    tet: int
    marking: Isometry  # placed simplex = marking(DELTA0), vertices in tet order
    deck: Isometry  # gamma with gamma(canonical lift of tet) = this tile
    radius: int

    @property
    def simplex(self) -> GeodesicSimplex3:
        return simplex_of_marking(self.marking)


@dataclass
class DevelopedComplex:
    tri: IdealTriangulation
    radius: int
    tiles: list[PlacedTile] = field(default_factory=list)
    canonical: list[Isometry] = field(default_factory=list)  # marking of each tet's canonical lift
    generators: list[Isometry] = field(default_factory=list)
    generator_pairings: list[tuple] = field(default_factory=list)
    registry: VertexRegistry = field(default_factory=VertexRegistry)
    index: dict = field(default_factory=dict)
    cusp_tiles: list[PlacedTile] = field(default_factory=list)  # tiles around oo
    eta: dict = field(default_factory=dict)  # (tet, vertex) -> g with g(oo) = canonical vertex
    _decks: list | None = None

    def canonical_simplex(self, t: int) -> GeodesicSimplex3:
        return simplex_of_marking(self.canonical[t])

    def deck_elements(self, include_inverses: bool = True) -> list[tuple[Isometry, int]]:
        """Distinct deck transformations seen in the ball, with the radius where they occur."""
        if self._decks is not None and include_inverses:
            return self._decks
        out: list[tuple[Isometry, int]] = []
        seen: set = set()
        for tile in self.tiles + self.cusp_tiles:
            cands = [tile.deck, inverse(tile.deck)] if include_inverses else [tile.deck]
            for g in cands:
                key = _iso_key(g)
                if key not in seen:
                    seen.add(key)
                    out.append((g, tile.radius))
        if include_inverses:
            self._decks = out
        return out

    def deck_stack(self):
        if getattr(self, "_stack", None) is None:
            decks = self.deck_elements()
            self._stack = (np.array([g.matrix for g, _ in decks]),
                           np.array([g.orientation for g, _ in decks]))
        return self._stack

    def vertex_map(self, tile: PlacedTile, v: int) -> Isometry:
        """Deck transformation sending oo to vertex ``v`` of ``tile``."""
        if (tile.tet, v) not in self.eta:
            raise GeometryError(f"cusp walk too short to reach vertex {v} of tet {tile.tet}")
        return compose(tile.deck, self.eta[(tile.tet, v)])

    def tile_at(self, simplex: GeodesicSimplex3) -> PlacedTile | None:
        ids = [self.registry.id_of(v, create=False) for v in simplex.vertices]
        if any(i is None for i in ids):
            return None
        k = self.index.get(frozenset(ids))
        return None if k is None else self.tiles[k]


def _iso_key(g: Isometry, digits: int = 6):
    m = g.matrix
    # fix the sign ambiguity of SL2C
    k = int(np.argmax(np.abs(m.ravel()) > 1e-9))
    m = m * (1 if m.ravel()[k].real > 0 or (m.ravel()[k].real == 0 and m.ravel()[k].imag > 0) else -1)
    return (g.orientation,) + tuple(np.round(np.concatenate([m.real.ravel(), m.imag.ravel()]), digits) + 0.0)


def _crossing(face: int, perm) -> Isometry:
    """``r_f Q`` where ``Q`` relabels vertices by ``perm^{-1}``."""
    q = vertex_permutation_isometry(perm_inverse(perm))
    return compose(base_reflection(face), q)


def develop(tri: IdealTriangulation, radius: int = 4, cusp_radius: int = 24) -> DevelopedComplex:
    """Place lifts of the tetrahedra by face crossings out to ``radius``.

    A second search of depth ``cusp_radius`` walks only around the ideal
    vertex at infinity, which gives the peripheral subgroup cheaply.
    """
    if any(abs(s - 2 * math.pi) > 1e-9 for s in tri.edge_angle_sums()):
        raise GeometryError("edge equations fail; cannot develop")
    if not tri.is_orientable():
        raise GeometryError("developing is implemented for orientable triangulations")
    dev = DevelopedComplex(tri, radius)
    n = tri.num_tetrahedra
    # canonical lifts: a spanning tree of the dual graph rooted at DELTA0
    canon: list[Isometry | None] = [None] * n
    canon[0] = Isometry.identity()
    tree = deque([0])
    while tree:
        t = tree.popleft()
        for f in range(4):
            t2 = tri.neighbors[t][f]
            if canon[t2] is None:
                canon[t2] = compose(canon[t], _crossing(f, tri.perms[t][f]))
                tree.append(t2)

    def key_of(g):
        return frozenset(dev.registry.id_of(v) for v in simplex_of_marking(g).vertices)

    def add(t, g, r):
        k = key_of(g)
        if k in dev.index:
            other = dev.tiles[dev.index[k]]
            if other.tet != t or not other.marking.close_to(g, 1e-7):
                raise InconsistentHolonomyError(
                    f"tile reached twice with different labels (tet {other.tet} vs {t})")
            return None
        tile = PlacedTile(t, g, compose(g, inverse(canon[t])), r)
        dev.index[k] = len(dev.tiles)
        dev.tiles.append(tile)
        return tile

    first = add(0, canon[0], 0)
    queue = deque([first])
    while queue:
        tile = queue.popleft()
        if tile.radius == radius:
            continue
        for f in range(4):
            p = tri.perms[tile.tet][f]
            g2 = compose(tile.marking, _crossing(f, p))
            new = add(tri.neighbors[tile.tet][f], g2, tile.radius + 1)
            if new is not None:
                queue.append(new)
    dev.canonical = list(canon)
    # face pairings that are not realised by identity give generators
    for t, f, t2, f2, p in tri.pairings():
        g = compose(compose(canon[t], _crossing(f, p)), inverse(canon[t2]))
        if g.is_identity(1e-8):
            continue
        if any(g.close_to(h, 1e-8) or g.close_to(inverse(h), 1e-8) for h in dev.generators):
            continue
        dev.generators.append(g)
        dev.generator_pairings.append((t, f, t2, f2))
    _develop_cusp(dev, cusp_radius)
    return dev


def _develop_cusp(dev: DevelopedComplex, depth: int) -> None:
    tri = dev.tri
    seen = {}
    start = dev.tiles[0]
    v_inf = next(v for v, p in enumerate(start.simplex.vertices) if p.infinite)
    queue = deque([(start, v_inf, 0)])
    seen[_iso_key(start.marking)] = True
    while queue:
        tile, vi, d = queue.popleft()
        dev.eta.setdefault((tile.tet, vi), inverse(tile.deck))
        if tile is not start:
            dev.cusp_tiles.append(tile)
        if d == depth:
            continue
        for f in range(4):
            if f == vi:
                continue
            p = tri.perms[tile.tet][f]
            g2 = compose(tile.marking, _crossing(f, p))
            k = _iso_key(g2)
            if k in seen:
                continue
            seen[k] = True
            t2 = tri.neighbors[tile.tet][f]
            new = PlacedTile(t2, g2, compose(g2, inverse(dev.canonical[t2])), dev.radius + 1)
            queue.append((new, p[vi], d + 1))



@lru_cache(maxsize=8)
def cached_develop(tri: IdealTriangulation, radius: int = 4, cusp_radius: int = 24) -> DevelopedComplex:
    """Shared read-only development (do not mutate the result)."""
    return develop(tri, radius, cusp_radius)


def holonomy_generators(tri: IdealTriangulation, radius: int = 2) -> list[Isometry]:
    return develop(tri, radius).generators


def word_in_generators(gens: list[Isometry], word) -> Isometry:
    """Signed word: ``k`` means ``gens[k-1]``, ``-k`` its inverse."""
    g = Isometry.identity()
    for k in word:
        h = gens[abs(k) - 1]
        g = compose(g, h if k > 0 else inverse(h))
    return g


def edge_loop_holonomy(dev: DevelopedComplex, t: int, edge: tuple[int, int]) -> Isometry:
    """Compose the face crossings around ``edge`` of ``t``; the product returns the marking."""
    tri = dev.tri
    a, b = edge
    g = dev.canonical[t]
    cur_t, (ca, cb) = t, (a, b)
    faces = [f for f in range(4) if f not in edge]
    f = faces[0]
    for _ in range(64):
        p = tri.perms[cur_t][f]
        g = compose(g, _crossing(f, p))
        nxt_t = tri.neighbors[cur_t][f]
        na, nb = p[ca], p[cb]
        # leave through the other face containing the edge
        entered = p[f]
        f = next(x for x in range(4) if x not in (na, nb, entered))
        cur_t, ca, cb = nxt_t, na, nb
        if cur_t == t and {ca, cb} == {a, b} and f == faces[0] and (ca, cb) == (a, b):
            return compose(g, inverse(dev.canonical[t]))
    raise InconsistentHolonomyError("edge loop did not close")


def peripheral_elements(dev: DevelopedComplex, cusp: IdealPoint = INF) -> list[Isometry]:
    """Deck transformations in the ball fixing ``cusp`` (excluding the identity)."""
    out = []
    for g, _ in dev.deck_elements():
        if g.is_identity(1e-8):
            continue
        if apply(g, cusp).close_to(cusp, 1e-9):
            out.append(g)
    return out


def cusp_lattice(dev: DevelopedComplex) -> tuple[complex, complex]:
    """A reduced basis of translations for the cusp at infinity."""
    trans = []
    for g in peripheral_elements(dev):
        m = g.matrix / g.matrix[0, 0]
        trans.append(complex(m[0, 1]))
    trans.sort(key=abs)
    if not trans:
        raise GeometryError("no peripheral elements in the developed ball")
    a = trans[0]
    for b in trans[1:]:
        if abs((a.conjugate() * b).imag) > 1e-9:
            return a, b
    raise GeometryError("peripheral subgroup of rank < 2 in the developed ball")


def cusp_area(dev: DevelopedComplex, height: float = 1.0) -> float:
    """Euclidean area of the cusp torus cross-section at ``height`` (upper half-space metric)."""
    a, b = cusp_lattice(dev)
    return abs((a.conjugate() * b).imag) / height ** 2


# --------------------------------------------------------------------------
# cusp sections

@dataclass
class CuspSection:
    level: float
    window: int | None
    dev: DevelopedComplex
    max_level: float  # t0: horoballs at levels >= t0 are disjoint
    _cache: dict = field(default_factory=dict)

    def horoball(self, p: IdealPoint) -> Horoball:
        """The member of the equivariant family centred at developed vertex ``p``."""
        if p.infinite:
            return Horoball(INF, self.level)
        key = tuple(np.round(p.klein(), 9))
        if key not in self._cache:
            g = _orbit_map(self.dev, p)
            self._cache[key] = Horoball(INF, self.level).image(g)
        return self._cache[key]

    def cusp_volume(self) -> float:
        return cusp_area(self.dev, 1.0) / (2 * self.level ** 2)

    def thick_volume(self) -> float:
        return self.dev.tri.num_tetrahedra * V3 - self.cusp_volume()

    def vertices(self, radius: int = 2) -> list[IdealPoint]:
        reg = VertexRegistry()
        out = []
        for tile in self.dev.tiles:
            if tile.radius > radius:
                continue
            for v in tile.simplex.vertices:
                if reg.id_of(v) == len(out):
                    out.append(v)
        return out

    def is_embedded(self, radius: int = 2) -> bool:
        """Pairwise disjointness of the horoballs at the vertices of tiles within ``radius``."""
        balls = [self.horoball(v) for v in self.vertices(radius)]
        return all(a.disjoint_from(b) for a, b in itertools.combinations(balls, 2))


def _orbit_map(dev: DevelopedComplex, p: IdealPoint) -> Isometry:
    """A deck transformation sending infinity to ``p`` (a vertex of a developed tile)."""
    for tile in dev.tiles + dev.cusp_tiles:
        for v, q in enumerate(tile.simplex.vertices):
            if q.close_to(p, 1e-9):
                return dev.vertex_map(tile, v)
    raise GeometryError("ideal point is not a vertex of the developed ball")


def max_cusp_level(dev: DevelopedComplex) -> float:
    """Smallest level ``t0`` at which the equivariant horoballs are disjoint.

    At level ``t`` the horoball at ``g(oo)`` has Euclidean diameter ``1/(|c|^2 t)``;
    it touches the ball at infinity when that equals ``t``.
    """
    best = 0.0
    for g, _ in dev.deck_elements():
        c = g.matrix[1, 0]
        if abs(c) > 1e-12:
            best = max(best, 1.0 / abs(c) ** 2)
    return math.sqrt(best)


WINDOW_MIN = 1


def window_level(t0: float, i: int) -> float:
    return 2 ** (i / 2) * t0


def thick_part(tri: IdealTriangulation, i: int, dev: DevelopedComplex | None = None) -> CuspSection:
    if i < WINDOW_MIN:
        raise SectionOverlapError(f"window {i} is below the embedded range (i >= {WINDOW_MIN})")
    dev = dev or cached_develop(tri)
    t0 = max_cusp_level(dev)
    return CuspSection(window_level(t0, i), i, dev, t0)


def thick_volume(tri: IdealTriangulation, i: int, dev: DevelopedComplex | None = None) -> float:
    return thick_part(tri, i, dev).thick_volume()


def manifold_volume(tri: IdealTriangulation) -> float:
    """All tetrahedra are regular ideal."""
    return tri.num_tetrahedra * V3


# --------------------------------------------------------------------------
# orbit distance

def chordal_distance(s1: GeodesicSimplex3, s2: GeodesicSimplex3) -> float:
    return float(np.max(np.linalg.norm(s1.klein() - s2.klein(), axis=1)))


def _images_klein(mats, orients, simplex: GeodesicSimplex3) -> np.ndarray:
    """(M, 4, 3) Klein vertices of ``g(simplex)`` for each stacked ``g``."""
    return np.stack([apply_stack_klein(mats, orients, v) for v in simplex.vertices], axis=1)


def orbit_distance(s1: GeodesicSimplex3, s2: GeodesicSimplex3, dev: DevelopedComplex,
                   return_element: bool = False):
    """Min over deck elements of the ball of the max vertex chordal (Klein) distance."""
    decks = dev.deck_elements()
    mats, orients = dev.deck_stack()
    K2 = s2.klein()
    dist = np.linalg.norm(_images_klein(mats, orients, s1) - K2[None], axis=2).max(axis=1)
    k = int(np.argmin(dist))
    if decks[k][1] >= dev.radius:
        warnings.warn("minimum attained at the edge of the developed ball", RadiusExhaustedWarning)
    best = float(dist[k])
    return (best, decks[k][0]) if return_element else best


def check_tiles_in_tiling(dev: DevelopedComplex, tiling: Tiling | None = None) -> bool:
    tiling = tiling or generate_tiling(dev.radius)
    return all(tiling.contains(t.simplex) and is_regular_ideal(t.simplex, 1e-7) for t in dev.tiles)
