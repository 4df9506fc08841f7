"""Straight chains, the volume cochain, atomic measures on simplex classes.

Simplices live in developed coordinates (upper half-space); two simplices
represent the same class of ``Gamma \\ (H^3-bar)^4`` when some deck
transformation of the developed ball carries one onto the other.  Nearness
is measured by the max over vertices of the Euclidean distance between
Klein coordinates ("chordal" distance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .hyperbolic import INF, GeometryError, IdealPoint, Point3, apply_stack_klein
from .manifold import DevelopedComplex, cached_develop, figure8, thick_part, IdealTriangulation
from .simplices import (
    PERMUTATIONS, GeodesicSimplex3, orientation_sign, perm_compose, perm_sign, volume,
)
from .tiling import is_regular_ideal, rho
from .volume import V3, horoball_clip_volume, horoball_clip_volume_mc, ideal_cusp_clip_volume

TAU_CLS = 1e-6
HAT_RADIUS = 0.3  # below half the minimal separation (1/sqrt 2) of the mu_T atoms
SCHEMA_VERSION = 1
MC_BUDGET = 10_000_000


class UnsupportedKeyError(ValueError):
    pass


class MonteCarloBudgetError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# chains

@dataclass
class SignedChain:
    located: list = field(default_factory=list)  # (coefficient, GeodesicSimplex3)
    residual_mass: float = 0.0

    def __post_init__(self):
        self.located = [(float(c), s) for c, s in self.located if c != 0]
        if self.residual_mass < 0:
            raise ValueError("residual mass must be nonnegative")

    def __len__(self):
        return len(self.located)

    def __add__(self, other: "SignedChain") -> "SignedChain":
        return SignedChain(self.located + other.located, self.residual_mass + other.residual_mass)

    def scaled(self, a: float) -> "SignedChain":
        return SignedChain([(a * c, s) for c, s in self.located], abs(a) * self.residual_mass)


def l1_norm(c: SignedChain) -> float:
    return math.fsum([abs(a) for a, _ in c.located] + [c.residual_mass])


def orientation_mismatch_mass(c: SignedChain) -> float:
    """l1 mass of located simplices whose orientation disagrees with the coefficient sign."""
    return float(sum(abs(a) for a, s in c.located if orientation_sign(s) * np.sign(a) < 0))


def low_volume_mass(c: SignedChain, cut: float = V3 - 0.01) -> float:
    seen: dict = {}
    out = 0.0
    for a, s in c.located:
        k = frozenset(s.vertices)
        if k not in seen:
            seen[k] = volume(s)
        if seen[k] < cut:
            out += abs(a)
    return out


# --------------------------------------------------------------------------
# orbit classification

def _stack(dev: DevelopedComplex):
    return dev.deck_stack()


def canonical_representatives(simplices: Sequence[GeodesicSimplex3], dev: DevelopedComplex,
                              slack: float = 1e-5):
    """For each simplex, the Klein images under deck elements whose vertex centroid is
    (nearly) closest to the Klein origin.  Several representatives are kept near ties.
    """
    mats, orients = _stack(dev)
    cache: dict = {}

    def images(v):
        if v not in cache:
            cache[v] = apply_stack_klein(mats, orients, v)
        return cache[v]

    reps = []
    for s in simplices:
        imgs = np.stack([images(v) for v in s.vertices], axis=1)
        score = np.linalg.norm(imgs.mean(axis=1), axis=1)
        best = score.min()
        reps.append(imgs[score <= best + slack])
    return reps


def orbit_classes(simplices: Sequence[GeodesicSimplex3], dev: DevelopedComplex,
                  tol: float = TAU_CLS) -> tuple[np.ndarray, list[np.ndarray]]:
    """Label simplices so that labels agree iff they are orbit-close within ``tol``."""
    n = len(simplices)
    reps = canonical_representatives(simplices, dev, max(10 * tol, 1e-9))
    owner = np.concatenate([np.full(len(r), k) for k, r in enumerate(reps)]) if n else np.zeros(0, int)
    pts = np.concatenate([r.reshape(len(r), -1) for r in reps]) if n else np.zeros((0, 12))
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if n:
        tree = cKDTree(pts)
        for a, b in tree.query_pairs(2 * tol):
            pa, pb = pts[a].reshape(4, 3), pts[b].reshape(4, 3)
            if np.linalg.norm(pa - pb, axis=1).max() < tol:
                ra, rb = find(owner[a]), find(owner[b])
                if ra != rb:
                    parent[ra] = rb
    labels = np.array([find(k) for k in range(n)], dtype=int)
    return labels, [r[0] for r in reps]


# --------------------------------------------------------------------------
# class keys and atomic measures

@dataclass(frozen=True)
class TileKey:
    """Ordering ``perm`` of tetrahedron ``tet``: vertex ``j`` is vertex ``perm[j]`` of the tet."""

    tet: int
    perm: tuple

    def simplex(self, dev: DevelopedComplex) -> GeodesicSimplex3:
        return dev.canonical_simplex(self.tet).permuted(self.perm)

    def to_json(self):
        return {"tet": self.tet, "perm": list(self.perm)}


@dataclass(frozen=True, eq=False)
class CoordKey:
    """A class represented by a simplex in developed coordinates."""

    rep: GeodesicSimplex3

    def simplex(self, dev: DevelopedComplex | None = None) -> GeodesicSimplex3:
        return self.rep

    def to_json(self):
        out = []
        for v in self.rep.vertices:
            if isinstance(v, IdealPoint):
                out.append({"ideal": "inf"} if v.infinite else {"ideal": [v.z.real, v.z.imag]})
            else:
                out.append({"uhs": [v.x, v.y, v.t]})
        return {"vertices": out}


@dataclass
class AtomicMeasure:
    atoms: list = field(default_factory=list)  # (key, weight)
    unlocated_mass: float = 0.0

    def total_variation(self) -> float:
        return math.fsum([abs(w) for _, w in self.atoms] + [self.unlocated_mass])

    def total_weight(self) -> float:
        return math.fsum(w for _, w in self.atoms)

    def weights(self) -> dict:
        return {k: w for k, w in self.atoms}

    def negated(self) -> "AtomicMeasure":
        return AtomicMeasure([(k, -w) for k, w in self.atoms], self.unlocated_mass)

    def to_json(self) -> dict:
        return {
            "schema": "measure",
            "version": SCHEMA_VERSION,
            "unlocatedMass": self.unlocated_mass,
            "totalVariation": self.total_variation(),
            "atoms": [{"key": k.to_json(), "weight": w} for k, w in self.atoms],
        }


def measure_from_json(data: dict) -> AtomicMeasure:
    if data.get("schema") != "measure" or data.get("version") != SCHEMA_VERSION:
        raise ValueError("not a version-1 measure document")
    atoms = []
    for a in data["atoms"]:
        k = a["key"]
        if "tet" in k:
            key = TileKey(int(k["tet"]), tuple(k["perm"]))
        else:
            verts = []
            for v in k["vertices"]:
                if "uhs" in v:
                    verts.append(Point3(*v["uhs"]))
                elif v["ideal"] == "inf":
                    verts.append(INF)
                else:
                    verts.append(IdealPoint(complex(*v["ideal"])))
            key = CoordKey(GeodesicSimplex3(tuple(verts)))
        atoms.append((key, float(a["weight"])))
    return AtomicMeasure(atoms, float(data.get("unlocatedMass", 0.0)))


def tile_keys(tri: IdealTriangulation) -> list[TileKey]:
    return [TileKey(t, p) for t in range(tri.num_tetrahedra) for p in PERMUTATIONS]


def theta(c: SignedChain, dev: DevelopedComplex | None = None, tol: float = TAU_CLS) -> AtomicMeasure:
    """Push a chain to the atomic measure ``sum a_k delta_{sigma_k}`` on classes.

    Simplices orbit-close to an ordering of a tetrahedron of the triangulation
    get a ``TileKey``; the rest are keyed by a representative.
    """
    dev = dev or cached_develop(figure8())
    sims = [s for _, s in c.located]
    coefs = np.array([a for a, _ in c.located])
    tk = tile_keys(dev.tri)
    labels, reps = orbit_classes(sims + [k.simplex(dev) for k in tk], dev, tol)
    n = len(sims)
    tile_of_label = {labels[n + j]: key for j, key in enumerate(tk)}
    acc: dict = {}
    first: dict = {}
    for k in range(n):
        lab = labels[k]
        acc[lab] = acc.get(lab, 0.0) + coefs[k]
        first.setdefault(lab, k)
    atoms = []
    for lab, w in acc.items():
        if w == 0.0:
            continue
        key = tile_of_label.get(lab)
        if key is None:
            key = CoordKey(sims[first[lab]])
        atoms.append((key, float(w)))
    return AtomicMeasure(atoms, c.residual_mass)


def mu_t(tri: IdealTriangulation, dev: DevelopedComplex | None = None) -> AtomicMeasure:
    """``Theta(alt(sum of the tetrahedra))`` with positively oriented representatives."""
    dev = dev or cached_develop(tri)
    for t in range(tri.num_tetrahedra):
        s = dev.canonical_simplex(t)
        if not is_regular_ideal(s, 1e-9):
            raise GeometryError(f"tetrahedron {t} is not regular ideal")
        if orientation_sign(s) != 1:
            raise GeometryError(f"canonical lift of tetrahedron {t} is negatively oriented")
    return AtomicMeasure([(TileKey(t, p), perm_sign(p) / 24.0)
                          for t in range(tri.num_tetrahedra) for p in PERMUTATIONS])


# --------------------------------------------------------------------------
# reflections

def pushforward_reflection(m: AtomicMeasure, word: Iterable[int], dev: DevelopedComplex | None = None
                           ) -> AtomicMeasure:
    """Relabel atoms by the right action of ``r_{w1} r_{w2} ...`` (weights kept)."""
    word = list(word)
    tri = None if dev is None else dev.tri
    atoms = []
    for key, w in m.atoms:
        for i in word:
            key = _reflect_key(key, i, tri or figure8(), dev)
        atoms.append((key, w))
    return AtomicMeasure(atoms, m.unlocated_mass)


def _reflect_key(key, i: int, tri: IdealTriangulation, dev):
    if isinstance(key, TileKey):
        f = key.perm[i]
        p = tri.perms[key.tet][f]
        return TileKey(tri.neighbors[key.tet][f], perm_compose(p, key.perm))
    rep = key.simplex()
    if not is_regular_ideal(rep, 1e-8):
        raise UnsupportedKeyError("reflections act only on regular ideal classes")
    return CoordKey(rho(i, rep))


@dataclass
class ReflectionReport:
    passed: bool
    max_discrepancy: float
    words: list  # (word, discrepancy)


def measure_difference(a: AtomicMeasure, b: AtomicMeasure, dev: DevelopedComplex | None = None) -> float:
    """Max atom discrepancy between two measures (keys compared by class)."""
    if all(isinstance(k, TileKey) for k, _ in a.atoms + b.atoms):
        wa, wb = {}, {}
        for k, w in a.atoms:
            wa[k] = wa.get(k, 0.0) + w
        for k, w in b.atoms:
            wb[k] = wb.get(k, 0.0) + w
        keys = set(wa) | set(wb)
        return max((abs(wa.get(k, 0.0) - wb.get(k, 0.0)) for k in keys), default=0.0)
    dev = dev or cached_develop(figure8())
    sims = [k.simplex(dev) for k, _ in a.atoms] + [k.simplex(dev) for k, _ in b.atoms]
    ws = [w for _, w in a.atoms] + [-w for _, w in b.atoms]
    labels, _ = orbit_classes(sims, dev)
    acc: dict = {}
    for lab, w in zip(labels, ws):
        acc[lab] = acc.get(lab, 0.0) + w
    return max((abs(v) for v in acc.values()), default=0.0)


def check_reflection_law(m: AtomicMeasure, n_random: int = 20, max_len: int = 8, seed: int = 0,
                         dev: DevelopedComplex | None = None, tol: float = 0.0) -> ReflectionReport:
    """``r_*(m) = m`` for even words and ``-m`` for odd ones."""
    rng = np.random.default_rng(seed)
    words = [[i] for i in range(4)]
    for _ in range(n_random):
        words.append(list(rng.integers(0, 4, size=int(rng.integers(1, max_len + 1)))))
    results = []
    for w in words:
        pushed = pushforward_reflection(m, w, dev)
        target = m if len(w) % 2 == 0 else m.negated()
        results.append((w, measure_difference(pushed, target, dev)))
    worst = max(d for _, d in results)
    return ReflectionReport(worst <= tol, worst, results)


# --------------------------------------------------------------------------
# test functions

@dataclass
class TestFunction:
    """Hat ``max(0, 1 - orbit_distance(., center) / radius)``."""

    __test__ = False  # not a pytest class

    center: GeodesicSimplex3
    radius: float = HAT_RADIUS

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def _tree(self, dev):
        cache = self.__dict__.setdefault("_trees", {})
        if id(dev) not in cache:
            mats, orients = dev.deck_stack()
            imgs = np.stack([apply_stack_klein(mats, orients, v) for v in self.center.vertices], axis=1)
            cache[id(dev)] = (cKDTree(imgs.reshape(len(imgs), 12)), imgs)
        return cache[id(dev)]

    def values(self, simplices: Sequence[GeodesicSimplex3], dev: DevelopedComplex) -> np.ndarray:
        tree, imgs = self._tree(dev)
        out = np.zeros(len(simplices))
        if not len(simplices):
            return out
        K = np.array([s.klein() for s in simplices])
        # a max-over-vertices distance below r bounds every coordinate by r
        hits = tree.query_ball_point(K.reshape(len(K), 12), self.radius, p=np.inf)
        for n, cand in enumerate(hits):
            if cand:
                d = np.linalg.norm(imgs[cand] - K[n][None], axis=2).max(axis=1).min()
                out[n] = max(0.0, 1.0 - d / self.radius)
        return out

    def __call__(self, s: GeodesicSimplex3, dev: DevelopedComplex | None = None) -> float:
        return float(self.values([s], dev or cached_develop(figure8()))[0])


@dataclass
class Integral:
    value: float
    uncertainty: float  # unlocated mass times sup |f|

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.uncertainty, self.value + self.uncertainty


def integrate(m: AtomicMeasure, f: TestFunction, dev: DevelopedComplex | None = None) -> Integral:
    dev = dev or cached_develop(figure8())
    if not m.atoms:
        return Integral(0.0, m.unlocated_mass)
    vals = f.values([k.simplex(dev) for k, _ in m.atoms], dev)
    w = np.array([w for _, w in m.atoms])
    return Integral(float(vals @ w), m.unlocated_mass)


def hat_integrals(m: AtomicMeasure, centers: Sequence[GeodesicSimplex3], dev: DevelopedComplex | None = None,
                  radius: float = HAT_RADIUS) -> np.ndarray:
    """``integrate(m, TestFunction(c, radius))`` for every centre ``c`` in one pass."""
    dev = dev or cached_develop(figure8())
    out = np.zeros(len(centers))
    if not m.atoms or not len(centers):
        return out
    mats, orients = dev.deck_stack()
    imgs = np.stack([np.stack([apply_stack_klein(mats, orients, v) for v in c.vertices], axis=1)
                     for c in centers])  # (centres, deck, 4, 3)
    flat = imgs.reshape(-1, 12)
    owner = np.repeat(np.arange(len(centers)), imgs.shape[1])
    K = np.array([k.simplex(dev).klein() for k, _ in m.atoms])
    w = np.array([w for _, w in m.atoms])
    tree = cKDTree(K.reshape(len(K), 12))
    best = np.full((len(K), len(centers)), np.inf)
    for j, cand in enumerate(tree.query_ball_point(flat, radius, p=np.inf)):
        if cand:
            d = np.linalg.norm(K[cand] - flat[j].reshape(4, 3)[None], axis=2).max(axis=1)
            col = owner[j]
            best[cand, col] = np.minimum(best[cand, col], d)
    vals = np.clip(1.0 - best / radius, 0.0, None)
    return w @ vals


def weight_near(m: AtomicMeasure, center: GeodesicSimplex3, dev: DevelopedComplex | None = None,
                radius: float = HAT_RADIUS) -> float:
    """Integral of the hat of ``radius`` at ``center`` (weight of ``m`` near the class)."""
    return integrate(m, TestFunction(center, radius), dev).value


def off_support_centers(dev: DevelopedComplex, count: int = 16, seed: int = 0,
                        min_sep: float = 2 * HAT_RADIUS) -> list[GeodesicSimplex3]:
    """Regular ideal simplices ``g DELTA0`` far (in orbit distance) from every mu_T atom."""
    from .hyperbolic import random_isometry
    from .tiling import simplex_of_marking

    rng = np.random.default_rng(seed)
    support = [k.simplex(dev) for k in tile_keys(dev.tri)]
    hats = [TestFunction(s, min_sep) for s in support]
    out = []
    while len(out) < count:
        g = random_isometry(rng, 0.8, 1)
        cand = simplex_of_marking(g)
        if any(h.values([cand], dev)[0] > 0 for h in hats):
            continue
        if any(TestFunction(o, min_sep).values([cand], dev)[0] > 0 for o in out):
            continue
        out.append(cand)
    return out


# --------------------------------------------------------------------------
# relative cycles

@dataclass
class CycleReport:
    is_cycle: bool
    offending_faces: list
    vertices_outside: int
    max_vertex_offset: float  # largest Klein distance from a vertex to its horoball centre

    def __bool__(self):
        return self.is_cycle


class BallFamily:
    """The equivariant horoballs of a window at the vertices of the developed ball."""

    def __init__(self, sec):
        self.sec = sec
        self.centres = [INF] + [v for v in sec.vertices(sec.dev.radius) if not v.infinite]
        self.balls = [sec.horoball(c) for c in self.centres]
        self._z = np.array([c.z for c in self.centres[1:]])
        self._lv = np.array([b.level for b in self.balls[1:]])

    def locate(self, p: Point3) -> tuple[int, float]:
        """Index of the family member deepest around ``p`` and ``busemann / level`` there."""
        r_inf = p.t / self.balls[0].level
        if len(self._z) == 0:
            return 0, r_inf
        ratio = p.t / (np.abs(p.z - self._z) ** 2 + p.t ** 2) / self._lv
        k = int(np.argmax(ratio))
        if ratio[k] > r_inf:
            return k + 1, float(ratio[k])
        return 0, r_inf

    def centre_of(self, p, tol: float = 1e-9):
        if isinstance(p, IdealPoint):
            return p
        k, r = self.locate(p)
        return self.centres[k] if r >= 1 - tol else None

    def ball_through(self, p: Point3, tol: float = 1e-7):
        """The member whose boundary passes through ``p`` (``None`` if ``p`` is outside all)."""
        k, r = self.locate(p)
        if r < 1 - 1e-9:
            return None
        if r > 1 + tol:
            raise GeometryError("vertex lies strictly inside a horoball; clip is not a cone from the vertex")
        return self.balls[k]


def is_relative_cycle(c: SignedChain, i: int, dev: DevelopedComplex | None = None,
                      tol: float = 1e-9) -> CycleReport:
    """Boundary faces must cancel modulo Gamma, or lie in a single horoball.

    Vertices of located simplices must lie in the closed level-``i``
    horoballs; faces are compared through the ordered triples of horoball
    centres, i.e. up to sliding vertices inside the thin part.
    """
    dev = dev or cached_develop(figure8())
    family = BallFamily(thick_part(dev.tri, i, dev))
    pts = []
    for _, s in c.located:
        pts.extend(s.vertices)
    cache: dict = {}
    centres = []
    for p in pts:
        if p not in cache:
            cache[p] = family.centre_of(p)
        centres.append(cache[p])
    outside = sum(1 for x in centres if x is None)
    offset = 0.0
    for p, x in zip(pts, centres):
        if x is not None:
            offset = max(offset, float(np.linalg.norm(p.klein() - x.klein())))
    faces = []  # (coefficient, ordered centre triple)
    single_ball = 0
    for n, (a, s) in enumerate(c.located):
        cs = centres[4 * n: 4 * n + 4]
        if any(x is None for x in cs):
            continue
        for j in range(4):
            tri_c = [cs[k] for k in range(4) if k != j]
            if all(x.close_to(tri_c[0], 1e-9) for x in tri_c):
                single_ball += 1
                continue
            faces.append(((-1) ** j * a, tri_c))
    offending = _uncancelled(faces, dev, tol)
    return CycleReport(outside == 0 and not offending, offending, outside, offset)


_TRIPLE_PERMS = ((0, 1, 2), (1, 2, 0), (2, 0, 1), (1, 0, 2), (0, 2, 1), (2, 1, 0))


def _merge_exact(faces):
    """Combine faces whose centre triples coincide up to reordering (with parity)."""
    acc: dict = {}
    for a, tri_c in faces:
        order = sorted(range(3), key=lambda k: _point_order(tri_c[k]))
        key = tuple(tri_c[k] for k in order)
        acc[key] = acc.get(key, 0.0) + perm_sign(order + [3]) * a
    return [(a, list(k)) for k, a in acc.items()]


def _point_order(p: IdealPoint):
    return (1, 0.0, 0.0) if p.infinite else (0, p.z.real, p.z.imag)


def _uncancelled(faces, dev: DevelopedComplex, tol: float):
    scale = max((abs(a) for a, _ in faces), default=1.0)
    faces = [(a, t) for a, t in _merge_exact(faces) if abs(a) > tol * max(scale, 1.0)]
    if not faces:
        return []
    # classify every ordering of every face; a face's class is the set of
    # labels of its orderings, and the canonical ordering carries the sign
    pseudo = []
    for _, tri_c in faces:
        for p in _TRIPLE_PERMS:
            t = [tri_c[k] for k in p]
            pseudo.append(GeodesicSimplex3((t[0], t[1], t[2], t[0])))
    labels, _ = _triple_classes(pseudo, dev)
    acc: dict = {}
    rep: dict = {}
    for n, (a, tri_c) in enumerate(faces):
        labs = labels[6 * n: 6 * n + 6]
        k = int(np.argmin(labs))
        sign = 1 if k < 3 else -1  # first three orderings are cyclic (even)
        key = frozenset(labs.tolist())
        acc[key] = acc.get(key, 0.0) + sign * a
        rep.setdefault(key, tri_c)
    return [rep[k] for k, v in acc.items() if abs(v) > tol * max(scale, 1.0)]


def _triple_classes(pseudo, dev):
    # degenerate 4-tuples (first vertex repeated); orbit classification works unchanged
    return orbit_classes(pseudo, dev, 1e-7)


# --------------------------------------------------------------------------
# volume cochain

@dataclass
class OmegaResult:
    value: float
    stderr: float
    residual_bracket: float  # residual mass * v3
    samples: int
    method: str

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.residual_bracket, self.value + self.residual_bracket


def thick_simplex_volume(s: GeodesicSimplex3, family: BallFamily, method: str = "mc",
                         samples: int = 0, rng: np.random.Generator | None = None
                         ) -> tuple[float, float]:
    """``vol(s minus the horoballs at its vertices)`` and a standard error.

    Only the horoballs centred at the simplex's own vertices are removed; at
    the embedded levels no other horoball of the family meets such a simplex.
    """
    K = s.klein()
    total = volume(s)
    clip, var = 0.0, 0.0
    for j, v in enumerate(s.vertices):
        if isinstance(v, IdealPoint):
            ball = family.sec.horoball(v)
            cf = ideal_cusp_clip_volume(s.vertices, j, ball)
            if cf is None:
                cf = horoball_clip_volume(K, j, ball)
            clip += cf
            continue
        ball = family.ball_through(v)
        if ball is None:
            continue
        if method == "mc":
            val, se = horoball_clip_volume_mc(K, j, ball, samples, rng)
            clip += val
            var += se * se
        else:
            clip += horoball_clip_volume(K, j, ball)
    return total - clip, math.sqrt(var)


def omega_eps(c: SignedChain, i: int, dev: DevelopedComplex | None = None, method: str = "mc",
              samples: int = 1_000_000, seed: int = 0, budget: int = MC_BUDGET) -> OmegaResult:
    """``sum a_k sign(sigma_k) vol(sigma_k cut to the thick part)`` for window ``i``."""
    if method not in ("mc", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if samples > budget:
        raise MonteCarloBudgetError(f"{samples} samples exceed the budget {budget}")
    dev = dev or cached_develop(figure8())
    family = BallFamily(thick_part(dev.tri, i, dev))
    groups: dict = {}
    for a, s in c.located:
        # orderings of one vertex set share the thick volume up to orientation
        key = frozenset(s.vertices)
        groups.setdefault(key, []).append((a, s))
    n_finite = sum(1 for k in groups for v in k if isinstance(v, Point3))
    per_clip = samples // max(n_finite, 1)
    value, var = 0.0, 0.0
    for n, (key, items) in enumerate(groups.items()):
        rep = items[0][1]
        rng = np.random.default_rng([seed, n])
        vol, se = thick_simplex_volume(rep, family, method, per_clip, rng)
        weight = sum(a * orientation_sign(s) for a, s in items)
        value += weight * vol
        var += (weight * se) ** 2
    return OmegaResult(value, math.sqrt(var), c.residual_mass * V3,
                       per_clip * n_finite if method == "mc" else 0, method)
