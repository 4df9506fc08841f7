"""Spines dual to ideal triangulations, theta-spine insertion, torus covers, and the tower.

Cusp-torus geometry lives in the plane of the cusp at infinity: the torus
is ``C / L`` for the peripheral lattice ``L``, its cellularization (pulled
back from the dual spine) is the Voronoi diagram of the projected ideal
vertices, and a theta-spine is a pair of points joined by three straight
polylines.  Vertices of the enlarged spine are classified by where the
inserted walls meet the old spine:

* B: an edge of the theta-spine crosses an edge of the cellularization,
* C: a vertex of the theta-spine sits in a region,
* D: the traces coming from the two sides of one region cross each other.

The two sides of a region are identified through the deck transformation
swapping the horoballs at the ends of the dual edge; on the region it acts
as a Euclidean isometry of the cusp plane.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chains import SignedChain
from .hyperbolic import (
    INF, GeometryError, IdealPoint, Point3, apply, inverse, to_infinity,
)
from .manifold import (
    CuspSection, DevelopedComplex, IdealTriangulation, _orbit_map, cached_develop, cusp_lattice,
    thick_part,
)
from .simplices import PERMUTATIONS, GeodesicSimplex3, orientation_sign, perm_sign

EPS = 1e-9
GENERIC_MARGIN = 1e-6
JITTER_RADIUS = 0.05  # intrinsic radius of the jitter disc on each horosphere
SCHEMA_VERSION = 1


class NonSpecialWarning(UserWarning):
    pass


class GenericityError(GeometryError):
    pass


class PlacementError(GeometryError):
    pass


# --------------------------------------------------------------------------
# dual spine

@dataclass
class SpinePolyhedron:
    """Cells of a simple polyhedron.

    ``vertices`` are ``(type, data)`` pairs; ``edges`` join vertex indices;
    ``regions`` are ``(colour, boundary edge list)``.  For an enlarged spine
    the inserted pieces are summarised per cusp in ``insertions``.
    """

    vertices: list
    edges: list
    regions: list
    insertions: list = field(default_factory=list)
    special: bool = True

    def count(self, kind: str) -> int:
        return sum(1 for t, _ in self.vertices if t == kind)

    def census(self) -> dict:
        return {k: self.count(k) for k in "ABCDE"}

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.regions)


def dual_spine(tri: IdealTriangulation) -> SpinePolyhedron:
    """One vertex per tetrahedron, one edge per face pairing, one region per edge class."""
    tri.validate()
    vertices = [("A", t) for t in range(tri.num_tetrahedra)]
    edges, edge_of_face = [], {}
    for t, f, u, g, _ in tri.pairings():
        edge_of_face[(t, f)] = edge_of_face[(u, g)] = len(edges)
        edges.append((t, u))
    regions = []
    for cls in tri.edge_classes():
        # the region dual to an edge class is a polygon with one side per germ
        regions.append(("white", [edge_of_face[(t, min(f for f in range(4) if f not in e))]
                                  for t, e in cls]))
    X = SpinePolyhedron(vertices, edges, regions)
    _check_simple(tri, X)
    return X


def _check_simple(tri: IdealTriangulation, X: SpinePolyhedron) -> None:
    # every vertex meets 4 edge germs and 6 region germs; chi of the spine is 0
    deg = [0] * len(X.vertices)
    for a, b in X.edges:
        deg[a] += 1
        deg[b] += 1
    germs = [0] * len(X.vertices)
    for cls in tri.edge_classes():
        for t, _ in cls:
            germs[t] += 1
    simple = all(d == 4 for d in deg) and all(g == 6 for g in germs)
    chi = len(X.vertices) - len(X.edges) + len(X.regions)
    if not simple or chi != 0:
        X.special = False
        warnings.warn("dual polyhedron is not special", NonSpecialWarning)


# --------------------------------------------------------------------------
# plane geometry helpers (complex numbers)

def _cross(u: complex, v: complex) -> float:
    return (u.conjugate() * v).imag


def _lattice_coords(z: complex, lattice) -> tuple[float, float]:
    a, b = lattice
    det = _cross(a, b)
    return _cross(z, b) / det, _cross(a, z) / det


def _reduce(z: complex, lattice) -> tuple[complex, complex]:
    """``(z - mu, mu)`` with ``mu`` in the lattice and ``z - mu`` in the base parallelogram."""
    s, t = _lattice_coords(z, lattice)
    m, n = math.floor(s + 1e-9), math.floor(t + 1e-9)
    mu = m * lattice[0] + n * lattice[1]
    return z - mu, mu


def _translates(lattice, radius: float):
    """Lattice vectors of length at most ``radius``."""
    a, b = lattice
    area = abs(_cross(a, b))
    na = int(math.ceil(radius * abs(b) / area)) + 1
    nb = int(math.ceil(radius * abs(a) / area)) + 1
    out = []
    for m in range(-na, na + 1):
        for n in range(-nb, nb + 1):
            mu = m * a + n * b
            if abs(mu) <= radius:
                out.append(mu)
    return out


def _clip_polygon(poly: list[complex], n: complex, c: complex) -> list[complex]:
    """Keep the part of ``poly`` with ``Re((z - c) conj n) <= 0``."""
    out = []
    for k in range(len(poly)):
        p, q = poly[k], poly[(k + 1) % len(poly)]
        fp, fq = ((p - c) * n.conjugate()).real, ((q - c) * n.conjugate()).real
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            out.append(p + (q - p) * fp / (fp - fq))
    return out


def _clip_segment(p: complex, q: complex, poly: list[complex]) -> tuple[float, float] | None:
    """Parameter interval of ``p + s(q - p)`` inside a convex counter-clockwise polygon."""
    lo, hi = 0.0, 1.0
    d = q - p
    for k in range(len(poly)):
        a, b = poly[k], poly[(k + 1) % len(poly)]
        e = b - a
        num = _cross(e, p - a)  # >= 0 inside
        den = _cross(e, d)
        if abs(den) < 1e-15:
            if num < 0:
                return None
            continue
        s = -num / den
        if den > 0:
            lo = max(lo, s)
        else:
            hi = min(hi, s)
        if lo > hi:
            return None
    return (lo, hi) if hi - lo > EPS else None


def _segment_hit(p1, p2, q1, q2):
    """Parameters ``(s, t)`` of a crossing of two segments, or ``None``; raises on overlap."""
    d1, d2 = p2 - p1, q2 - q1
    den = _cross(d1, d2)
    w = q1 - p1
    if abs(den) < 1e-12 * max(abs(d1) * abs(d2), 1e-300):
        if abs(_cross(w, d1)) < 1e-12 * max(abs(d1), 1e-300):
            s0 = (w * d1.conjugate()).real / abs(d1) ** 2
            s1 = ((q2 - p1) * d1.conjugate()).real / abs(d1) ** 2
            if min(s0, s1) < 1 - EPS and max(s0, s1) > EPS:
                raise GenericityError("collinear overlapping segments")
        return None
    s = _cross(w, d2) / den
    t = _cross(w, d1) / den
    if -EPS <= s <= 1 + EPS and -EPS <= t <= 1 + EPS:
        return s, t
    return None


def _affine_from_points(src: list[complex], dst: list[complex]):
    """The Euclidean isometry ``z -> alpha z + beta`` or ``alpha conj(z) + beta`` fitting three points."""
    for conj in (False, True):
        f = (lambda z: z.conjugate()) if conj else (lambda z: z)
        a = (dst[1] - dst[0]) / (f(src[1]) - f(src[0]))
        b = dst[0] - a * f(src[0])
        if abs(a * f(src[2]) + b - dst[2]) < 1e-8 and abs(abs(a) - 1) < 1e-8:
            return (complex(a), complex(b), conj)
    raise GeometryError("region identification is not a Euclidean isometry")


def _apply_affine(m, z: complex) -> complex:
    a, b, conj = m
    return a * (z.conjugate() if conj else z) + b


# --------------------------------------------------------------------------
# torus cellularization

@dataclass
class TorusCellularization:
    """Voronoi cells of the projected ideal vertices in ``C / lattice``.

    ``base_lattice`` is the peripheral lattice of the manifold; a cover by the
    characteristic subgroup of index ``x^2`` has ``lattice = x * base_lattice``.
    ``pairing`` lists ``(site, partner_site_position, isometry)`` for one side of
    every region of the spine: the isometry maps the cell at ``sites[site]`` onto
    the cell at ``partner_site_position`` (a plane position, not reduced).
    """

    base_lattice: tuple
    sites: tuple  # base representatives, plane positions
    pairing: tuple
    x: int = 1

    @property
    def lattice(self) -> tuple:
        return (self.x * self.base_lattice[0], self.x * self.base_lattice[1])

    @property
    def degree(self) -> int:
        return self.x * self.x

    def base_translations(self):
        a, b = self.base_lattice
        return [m * a + n * b for m in range(self.x) for n in range(self.x)]

    def all_sites(self) -> list[complex]:
        return [s + lam for lam in self.base_translations() for s in self.sites]

    def _span(self) -> float:
        a, b = self.base_lattice
        return abs(a) + abs(b)

    def sites_near(self, z: complex, radius: float) -> list[complex]:
        """Plane positions of sites within ``radius`` of ``z``."""
        r, mu = _reduce(z, self.base_lattice)
        return [c + mu for c in _site_cloud(self.base_lattice, self.sites, radius + self._span())
                if abs(c - r) <= radius]

    def site_of(self, z: complex) -> complex:
        """The site whose cell contains ``z``."""
        r, mu = _reduce(z, self.base_lattice)
        cloud = _site_cloud(self.base_lattice, self.sites, 2 * self._span())
        return min(cloud, key=lambda c: abs(c - r)) + mu

    def cell(self, c: complex) -> list[complex]:
        """Counter-clockwise Voronoi polygon of the site at plane position ``c``."""
        for k, s in enumerate(self.sites):
            r, mu = _reduce(c - s, self.base_lattice)
            for nu in (0, self.base_lattice[0], self.base_lattice[1], sum(self.base_lattice)):
                if abs(r - nu) < 1e-7:
                    shift = mu + nu
                    return [v + shift for v in _base_cell(self.base_lattice, self.sites, k)]
        raise GeometryError("not a site position")

    def cell_vertices(self) -> list[complex]:
        """Vertices of the cellularization, one representative each modulo the lattice."""
        seen, out = set(), []
        for c in self.all_sites():
            for v in self.cell(c):
                r, _ = _reduce(v, self.lattice)
                key = (round(r.real, 7), round(r.imag, 7))
                if key not in seen:
                    seen.add(key)
                    out.append(r)
        return out

    def counts(self) -> dict:
        """Vertices, edges, and regions of the cellularization of the torus."""
        regions = len(self.sites) * self.degree
        edges = sum(len(self.cell(c)) for c in self.sites) * self.degree // 2
        vertices = len(self.cell_vertices())
        return {"vertices": vertices, "edges": edges, "regions": regions}

    def euler_characteristic(self) -> int:
        c = self.counts()
        return c["vertices"] - c["edges"] + c["regions"]

    def region_pairs(self):
        """Lifted region identifications ``(c1, c2, isometry)`` in the cover (equivariant model)."""
        out = []
        for lam in self.base_translations():
            for k, partner, m in self.pairing:
                a, b, conj = m
                # z -> m(z - lam) + lam
                shift = a * (lam.conjugate() if conj else lam)
                out.append((self.sites[k] + lam, partner + lam, (a, b - shift + lam, conj)))
        return out


@lru_cache(maxsize=32)
def _site_cloud(lattice, sites, radius: float) -> tuple:
    """Sites translated by lattice vectors, within ``radius`` of the base parallelogram."""
    a, b = lattice
    centre = (a + b) / 2
    reach = radius + abs(a + b) / 2 + abs(a - b) / 2
    return tuple(s + mu for s in sites for mu in _translates(lattice, reach + abs(s - centre))
                 if abs(s + mu - centre) <= reach)


@lru_cache(maxsize=64)
def _base_cell(lattice, sites, k: int) -> tuple:
    c = sites[k]
    span = abs(lattice[0]) + abs(lattice[1])
    R = 4 * span
    poly = [c + R * complex(sx, sy) for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
    r, mu = _reduce(c, lattice)
    for n in _site_cloud(lattice, sites, 3 * span):
        n = n + mu
        if abs(n - c) < 1e-12 or abs(n - c) > 2 * span:
            continue
        poly = _clip_polygon(poly, n - c, (n + c) / 2)
    return tuple(poly)


def cusp_cellularization(tri: IdealTriangulation, dev: DevelopedComplex | None = None
                         ) -> TorusCellularization:
    """The cellularization of the cusp torus at infinity pulled back from the dual spine."""
    if tri.num_cusps() != 1 or not tri.is_orientable():
        raise GeometryError("cusp cellularizations are built for one-cusped orientable manifolds")
    dev = dev or cached_develop(tri)
    lattice = cusp_lattice(dev)
    pts = {}
    for tile in dev.tiles + dev.cusp_tiles:
        verts = tile.simplex.vertices
        if not any(v.infinite for v in verts):
            continue
        for v in verts:
            if v.infinite:
                continue
            r, _ = _reduce(v.z, lattice)
            key = (round(r.real, 6), round(r.imag, 6))
            # keep the representative closest to the origin, it is a developed vertex
            if key not in pts or abs(v.z) < abs(pts[key]):
                pts[key] = v.z
    sites = tuple(sorted(pts.values(), key=lambda z: (round(abs(z), 9), z.real, z.imag)))
    n_link = sum(2 for _ in tri.edge_classes())
    if len(sites) != n_link:
        raise GeometryError(f"found {len(sites)} link vertices, expected {n_link}")
    cell = TorusCellularization(lattice, sites, ())
    object.__setattr__(cell, "pairing", _region_pairing(cell, dev))
    return cell


def _site_index(cell: TorusCellularization, z: complex) -> int:
    for k, s in enumerate(cell.sites):
        r, _ = _reduce(z - s, cell.base_lattice)
        if min(abs(r), abs(r - cell.base_lattice[0]), abs(r - cell.base_lattice[1]),
               abs(r - cell.base_lattice[0] - cell.base_lattice[1])) < 1e-6:
            return k
    raise GeometryError("point is not a site of the cellularization")


def _region_pairing(cell: TorusCellularization, dev: DevelopedComplex):
    """One identification per region: the deck map sending the cusp at a site to infinity."""
    done, out = set(), []
    for k, s in enumerate(cell.sites):
        if k in done:
            continue
        g = inverse(_orbit_map(dev, IdealPoint(s)))  # g(s) = oo
        partner = apply(g, INF)
        if partner.infinite:
            raise GeometryError("deck map fixes infinity")
        j = _site_index(cell, partner.z)
        c = g.matrix[1, 0] / np.sqrt(np.linalg.det(g.matrix))
        R = 1.0 / abs(c)  # radius of the bisecting hemisphere over s

        def image(z):
            h = math.sqrt(max(R * R - abs(z - s) ** 2, 0.0))
            q = apply(g, Point3(z.real, z.imag, h))
            return q.z

        probe = [s + 0.1 * R * complex(math.cos(th), math.sin(th)) for th in (0.3, 2.1, 4.4)]
        m = _affine_from_points(probe, [image(z) for z in probe])
        out.append((k, partner.z, m))
        done.update((k, j))
    return tuple(out)


def characteristic_cover(cell: TorusCellularization, x: int) -> TorusCellularization:
    """The cover by the index-``x^2`` characteristic subgroup ``x L``."""
    if x < 1:
        raise ValueError("x must be a positive integer")
    return TorusCellularization(cell.base_lattice, cell.sites, cell.pairing, cell.x * x)


# --------------------------------------------------------------------------
# theta spines

@dataclass(frozen=True)
class ThetaSpine:
    """Two vertices joined by three polylines in ``C / lattice``.

    Each edge starts at ``u`` and ends at a lattice translate of ``v``.
    """

    lattice: tuple
    u: complex
    v: complex
    edges: tuple  # three tuples of plane points

    def segments(self) -> list[tuple[complex, complex, int]]:
        out = []
        for k, e in enumerate(self.edges):
            for p, q in zip(e[:-1], e[1:]):
                out.append((p, q, k))
        return out

    def loop_classes(self) -> tuple[complex, complex]:
        ends = [e[-1] for e in self.edges]
        return ends[1] - ends[0], ends[2] - ends[0]

    def is_disc_complement(self) -> bool:
        """The two loops through the first edge form a basis of the lattice."""
        g1, g2 = self.loop_classes()
        s1, t1 = _lattice_coords(g1, self.lattice)
        s2, t2 = _lattice_coords(g2, self.lattice)
        ints = all(abs(c - round(c)) < 1e-7 for c in (s1, t1, s2, t2))
        return ints and abs(abs(round(s1) * round(t2) - round(t1) * round(s2)) - 1) < 0.5

    def is_embedded(self) -> bool:
        segs = self.segments()
        span = max(abs(q - p) for p, q, _ in segs) * 2 + abs(self.lattice[0]) + abs(self.lattice[1])
        shifts = _translates(self.lattice, span)
        for (i, (p1, p2, _)), (j, (q1, q2, _)) in itertools.combinations_with_replacement(enumerate(segs), 2):
            for mu in shifts:
                if i == j and abs(mu) < 1e-12:
                    continue
                hit = _segment_hit(p1, p2, q1 + mu, q2 + mu)
                if hit is None:
                    continue
                s, t = hit
                # shared endpoints (vertices and bends) are fine
                a = p1 + s * (p2 - p1)
                if _at_graph_node(a, self, mu_ok=True) and (s < EPS or s > 1 - EPS) and (t < EPS or t > 1 - EPS):
                    continue
                return False
        return True

    def validate(self) -> None:
        if not self.is_embedded():
            raise GenericityError("theta spine is not embedded")
        if not self.is_disc_complement():
            raise GenericityError("theta spine complement is not a disc")

    def to_json(self) -> dict:
        return {"lattice": [[z.real, z.imag] for z in self.lattice],
                "u": [self.u.real, self.u.imag], "v": [self.v.real, self.v.imag],
                "edges": [[[z.real, z.imag] for z in e] for e in self.edges]}


def _at_graph_node(a: complex, th: ThetaSpine, mu_ok: bool = True) -> bool:
    nodes = [p for e in th.edges for p in e]
    for p in nodes:
        r, _ = _reduce(a - p, th.lattice)
        for mu in (0, th.lattice[0], th.lattice[1], th.lattice[0] + th.lattice[1]):
            if abs(r - mu) < 1e-7:
                return True
    return False


DEFAULT_U = complex(0.13, 0.07)
DEFAULT_V = complex(0.48, 0.27)


def default_theta(cell: TorusCellularization, u: complex = DEFAULT_U, v: complex = DEFAULT_V) -> ThetaSpine:
    """Straight edges from ``u`` to ``v``, ``v + a`` and ``v + b`` for the lattice basis ``(a, b)``."""
    a, b = cell.lattice
    th = ThetaSpine(cell.lattice, u, v, ((u, v), (u, v + a), (u, v + b)))
    th.validate()
    return th


def simplified_theta(cover: TorusCellularization, base: ThetaSpine) -> ThetaSpine:
    """The theta spine of the cover kept inside the lift of ``base``.

    Edge 0 is one lift of the base edge 0; edges 1 and 2 run through ``x``
    lifts of base edges 1 and 2, returning along ``x - 1`` lifts of edge 0.
    """
    x = cover.x // _lattice_multiple(base.lattice, cover.base_lattice)
    u, v = base.u, base.v
    e0, e1, e2 = base.edges
    a = e1[-1] - e0[-1]
    b = e2[-1] - e0[-1]

    def chain(step, edge):
        pts = [u]
        for k in range(x):
            off = k * step
            pts.extend(p + off for p in edge[1:])
            if k < x - 1:
                back = [p + off + step for p in reversed(e0[:-1])]
                pts.extend(back)
        return tuple(pts)

    th = ThetaSpine(cover.lattice, u, v, (tuple(e0), chain(a, e1), chain(b, e2)))
    th.validate()
    return th


def _lattice_multiple(small, big) -> int:
    s, _ = _lattice_coords(small[0], big)
    return max(1, int(round(s))) if abs(small[0]) > abs(big[0]) - 1e-9 else 1


# --------------------------------------------------------------------------
# census

@dataclass
class ThetaCensus:
    B: int
    C: int
    D: int
    E: int
    crossings: list  # (type, plane point)

    @property
    def residual(self) -> int:
        return self.B + self.C + self.D


def _pieces(cell: TorusCellularization, th: ThetaSpine):
    """Split the spine along the cellularization.

    Returns ``(pieces, b_points)``: pieces keyed by the reduced site position,
    each a list of plane segments moved next to that representative.
    """
    lattice = cell.lattice
    pieces: dict = {}
    b_points = []
    for p, q, _ in th.segments():
        found = []
        lo = 0.0
        c = cell.site_of(p)
        while True:
            iv = _clip_segment(p, q, cell.cell(c))
            if iv is None or abs(iv[0] - lo) > 1e-7:
                raise GenericityError("segment decomposition has a gap")
            found.append((iv, c))
            lo = iv[1]
            if lo >= 1 - 1e-12:
                break
            c2 = cell.site_of(p + (lo + 1e-7) * (q - p))
            if abs(c2 - c) < 1e-9:
                raise GenericityError("segment runs along a cellularization edge")
            c = c2
        for (lo, hi), c in found:
            a, b = p + lo * (q - p), p + hi * (q - p)
            red, mu = _reduce(c, lattice)
            key = (round(red.real, 6), round(red.imag, 6))
            pieces.setdefault(key, []).append((a - mu, b - mu))
        for k in range(1, len(found)):
            z = p + found[k][0][0] * (q - p)
            for w in cell.cell(found[k][1]):
                if abs(z - w) < GENERIC_MARGIN:
                    raise GenericityError("theta spine passes through a cellularization vertex")
            b_points.append(z)
        for z in (p, q):
            c = cell.site_of(z)
            poly = cell.cell(c)
            if min(_dist_to_segment(z, poly[k], poly[(k + 1) % len(poly)]) for k in range(len(poly))) < GENERIC_MARGIN:
                raise GenericityError("theta spine node on a cellularization edge")
    return pieces, b_points


def _dist_to_segment(z, a, b) -> float:
    d = b - a
    s = min(1.0, max(0.0, ((z - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(z - (a + s * d))


def theta_census(cell: TorusCellularization, th: ThetaSpine) -> ThetaCensus:
    """Count the B, C, D (and boundary E) vertices created by inserting ``th``."""
    th.validate()
    pieces, b_points = _pieces(cell, th)
    crossings = [("B", z) for z in b_points]
    for z in (th.u, th.v):
        crossings.append(("C", z))
    lattice = cell.lattice
    n_d = 0
    for c1, c2, m in cell.region_pairs():
        r1, mu1 = _reduce(c1, lattice)
        r2, mu2 = _reduce(c2, lattice)
        P = [(a + mu1, b + mu1) for a, b in pieces.get((round(r1.real, 6), round(r1.imag, 6)), [])]
        Q = [(a + mu2, b + mu2) for a, b in pieces.get((round(r2.real, 6), round(r2.imag, 6)), [])]
        for a, b in P:
            ma, mb = _apply_affine(m, a), _apply_affine(m, b)
            for c, d in Q:
                hit = _segment_hit(ma, mb, c, d)
                if hit is None:
                    continue
                s, t = hit
                if min(s, 1 - s, t, 1 - t) < GENERIC_MARGIN:
                    raise GenericityError("traces from the two sides meet at an endpoint")
                n_d += 1
                crossings.append(("D", ma + s * (mb - ma)))
    return ThetaCensus(len(b_points), 2, n_d, 2, crossings)


# --------------------------------------------------------------------------
# enlarged spine and adapted triangulation

def insert_theta_spines(X: SpinePolyhedron, tri: IdealTriangulation, theta: ThetaSpine | None = None,
                        dev: DevelopedComplex | None = None) -> SpinePolyhedron:
    """Attach ``Y x (0, 1]`` and the boundary torus for the (single) cusp."""
    cell = cusp_cellularization(tri, dev)
    theta = theta or default_theta(cell)
    census = theta_census(cell, theta)
    vertices = list(X.vertices) + [(t, z) for t, z in census.crossings]
    vertices += [("E", z) for z in (theta.u, theta.v)]
    Xp = SpinePolyhedron(vertices, list(X.edges), list(X.regions) + [("green", [])],
                         insertions=[{"cell": cell, "theta": theta, "census": census}],
                         special=X.special)
    return Xp


@dataclass
class AdaptedTriangulation:
    """Tetrahedra dual to the interior vertices of an enlarged spine."""

    tetrahedra: list  # vertex type per tetrahedron
    injection: dict  # source tetrahedron -> index in ``tetrahedra``
    residual: list
    boundary: list  # per torus: (vertices, edges, triangles)
    placement: str = "edge-to-lowest-index"
    degree: int = 1

    @property
    def residual_count(self) -> int:
        return len(self.residual)

    @property
    def non_residual_count(self) -> int:
        return len(self.injection) if self.degree == 1 else len(self.tetrahedra) - len(self.residual)

    def to_json(self) -> dict:
        return {"schema": "adapted-triangulation", "version": SCHEMA_VERSION,
                "degree": self.degree, "tetrahedra": self.tetrahedra,
                "injection": {str(k): v for k, v in self.injection.items()},
                "residual": self.residual, "boundary": self.boundary,
                "placement": self.placement}


def dualize_back(Xp: SpinePolyhedron) -> AdaptedTriangulation:
    if not Xp.special:
        raise GeometryError("cannot dualize a non-special polyhedron")
    tets, inj, residual = [], {}, []
    for t, data in Xp.vertices:
        if t == "E":
            continue  # boundary vertices dualize to boundary triangles
        if t == "A":
            inj[data] = len(tets)
        else:
            residual.append(len(tets))
        tets.append(t)
    # the boundary cellularization (2 vertices, 3 edges, 1 disc) dualizes to 1, 3, 2
    boundary = [(1, 3, 2) for _ in Xp.insertions]
    return AdaptedTriangulation(tets, inj, residual, boundary)


# --------------------------------------------------------------------------
# tower

@dataclass
class TowerRow:
    i: int
    k: int
    h: int
    d: int
    v_A: int
    v_B: int
    v_C: int
    v_D: int
    base: tuple  # (v_B, v_C, v_D) of the base spine

    @property
    def r(self) -> int:
        return self.v_B + self.v_C + self.v_D

    @property
    def ratio(self) -> float:
        return self.r / self.d

    def bounds(self) -> tuple[bool, bool, bool]:
        vB, vC, vD = self.base
        ikh = 2 * self.i * self.k * self.h
        return self.v_B <= ikh * vB, self.v_C <= 2 * vC, self.v_D <= ikh * vD

    def envelope(self) -> float:
        """``C / i`` with ``C = 2 k h (v_B + v_D) + 2 v_C``."""
        vB, vC, vD = self.base
        return (2 * self.k * self.h * (vB + vD) + 2 * vC) / self.i


def base_census(tri: IdealTriangulation, theta: ThetaSpine | None = None,
                dev: DevelopedComplex | None = None) -> ThetaCensus:
    cell = cusp_cellularization(tri, dev)
    return theta_census(cell, theta or default_theta(cell))


def tower_row(i: int, k: int = 1, h: int = 1, tri: IdealTriangulation | None = None,
              theta: ThetaSpine | None = None, dev: DevelopedComplex | None = None) -> TowerRow:
    if i < 1 or k < 1 or h < 1:
        raise ValueError("i, k, h must be positive")
    from .manifold import figure8

    tri = tri or figure8()
    cell = cusp_cellularization(tri, dev)
    theta = theta or default_theta(cell)
    base = theta_census(cell, theta)
    x = i * k
    cover = characteristic_cover(cell, x)
    cen = theta_census(cover, simplified_theta(cover, theta))
    d = x * x * h
    return TowerRow(i, k, h, d, d * tri.num_tetrahedra, h * cen.B, h * cen.C, h * cen.D,
                    (base.B, base.C, base.D))


def adapted_triangulation(row: TowerRow, tri: IdealTriangulation) -> AdaptedTriangulation:
    """Count-level adapted triangulation of the degree-``d`` cover."""
    n = row.d * tri.num_tetrahedra
    tets = ["A"] * n + ["B"] * row.v_B + ["C"] * row.v_C + ["D"] * row.v_D
    return AdaptedTriangulation(tets, {t: t for t in range(n)}, list(range(n, len(tets))),
                                [(1, 3, 2)] * row.h, degree=row.d)


TOWER_COLUMNS = ["i", "d_i", "v_B^i", "v_C^i", "v_D^i", "r_i", "r_i/d_i", "l1Norm", "omegaEps", "maxAtomError"]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return f"{float(x):.12g}"


def write_tower_csv(rows, path, extras=None) -> None:
    """``extras[n]`` may carry ``l1Norm``, ``omegaEps``, ``maxAtomError`` for row ``n``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TOWER_COLUMNS)
        for n, row in enumerate(rows):
            ex = (extras or [{}] * len(rows))[n]
            w.writerow([fmt(row.i), fmt(row.d), fmt(row.v_B), fmt(row.v_C), fmt(row.v_D), fmt(row.r),
                        fmt(row.ratio), fmt(ex.get("l1Norm")), fmt(ex.get("omegaEps")),
                        fmt(ex.get("maxAtomError"))])


# --------------------------------------------------------------------------
# minimizing chains

def placement_point(sec: CuspSection, xi: IdealPoint, eta: IdealPoint, offset: complex = 0j) -> Point3:
    """Where the geodesic from ``xi`` to ``eta`` meets the horosphere of ``sec`` at ``xi``.

    ``offset`` moves the point along the horosphere by that intrinsic displacement.
    """
    level = sec.horoball(xi).level
    g = to_infinity(xi)
    e = apply(g, eta)
    if e.infinite:
        raise PlacementError("degenerate edge")
    z = e.z + level * offset
    return apply(inverse(g), Point3(z.real, z.imag, level))


def placed_vertices(sec: CuspSection, simplex: GeodesicSimplex3, offsets=None) -> tuple:
    verts = simplex.vertices
    out = []
    for j, xi in enumerate(verts):
        m = min(k for k in range(4) if k != j)
        out.append(placement_point(sec, xi, verts[m], 0j if offsets is None else offsets[j]))
    return tuple(out)


def _jitter_offsets(rng: np.random.Generator, radius: float) -> list[complex]:
    r = radius * np.sqrt(rng.random(4))
    th = 2 * np.pi * rng.random(4)
    return [complex(a * math.cos(b), a * math.sin(b)) for a, b in zip(r, th)]


def build_minimizing_chain(tri: IdealTriangulation, row: TowerRow, jitter_seed: int | None = None,
                           jitter_radius: float = JITTER_RADIUS, dev: DevelopedComplex | None = None
                           ) -> SignedChain:
    """The straightened relative cycle of window ``row.i``.

    Every ordering of every tetrahedron gets the straight simplex through
    its placed vertices with coefficient ``sign / 24``; with jitter the
    ``d_i`` cover copies are scattered on the horospheres and carry
    ``sign / (24 d_i)`` each.  The residual tetrahedra are tracked by mass.
    """
    dev = dev or cached_develop(tri)
    sec = thick_part(tri, row.i, dev)
    from .chains import BallFamily

    family = BallFamily(sec)
    copies = 1 if jitter_seed is None else row.d
    rng = None if jitter_seed is None else np.random.default_rng([jitter_seed, row.i])
    located = []
    for t in range(tri.num_tetrahedra):
        tile = dev.canonical_simplex(t)
        for _ in range(copies):
            offs = None if rng is None else _jitter_offsets(rng, jitter_radius)
            verts = placed_vertices(sec, tile, offs)
            for p in verts:
                try:
                    ball = family.ball_through(p)
                except GeometryError as exc:
                    raise PlacementError(str(exc)) from exc
                if ball is None:
                    raise PlacementError("placed vertex is outside every horoball")
            s = GeodesicSimplex3(verts)
            if orientation_sign(s) != orientation_sign(tile):
                raise PlacementError("placed simplex lost the orientation of its tetrahedron")
            for p in PERMUTATIONS:
                located.append((perm_sign(p) / (24.0 * copies), s.permuted(p)))
    return SignedChain(located, row.ratio)


def write_adapted(at: AdaptedTriangulation, path) -> None:
    with open(path, "w") as fh:
        json.dump(at.to_json(), fh, indent=1)
