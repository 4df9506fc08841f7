"""Upper half-space and Klein models of H^3, Moebius isometries, horoballs.

Points of H^3 are stored in upper half-space coordinates ``(x, y, t)`` with
``t > 0``; the Klein (projective) ball model is reached through
:meth:`Point3.klein` / :meth:`Point3.from_klein`.  Ideal points are
``IdealPoint`` values with an explicit infinity tag.

Isometries are 2x2 complex matrices normalised to determinant one, paired
with an orientation sign.  A negative sign means "complex-conjugate first,
then apply the matrix".
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

TAU_GEO = 1e-9

# |c| below this (relative to the matrix norm) is treated as an exact zero
# when deciding whether a Moebius map sends a point to infinity.
_ZERO_REL = 1e-13


class GeometryError(ValueError):
    """Raised on invalid geometric input (coincident points, ideal where finite needed...)."""


@dataclass(frozen=True)
class IdealPoint:
    """A point of the sphere at infinity, ``C u {oo}``."""

    z: complex = 0j
    infinite: bool = False

    def __post_init__(self):
        if self.infinite:
            object.__setattr__(self, "z", 0j)
        else:
            object.__setattr__(self, "z", complex(self.z))

    def __repr__(self):
        return "IdealPoint(oo)" if self.infinite else f"IdealPoint({self.z!r})"

    def klein(self) -> np.ndarray:
        """Unit vector on the Klein sphere (inverse stereographic projection)."""
        if self.infinite:
            return np.array([0.0, 0.0, 1.0])
        x, y = self.z.real, self.z.imag
        r2 = x * x + y * y
        return np.array([2 * x, 2 * y, r2 - 1.0]) / (r2 + 1.0)

    @classmethod
    def from_klein(cls, v) -> "IdealPoint":
        u, w, s = (float(c) for c in v)
        if abs(1.0 - s) < 1e-15:
            return INF
        return cls(complex(u, w) / (1.0 - s))

    def close_to(self, other: "IdealPoint", tol: float = TAU_GEO) -> bool:
        return bool(np.linalg.norm(self.klein() - other.klein()) < tol)


INF = IdealPoint(infinite=True)


@dataclass(frozen=True)
class Point3:
    """A finite point of H^3 in upper half-space coordinates."""

    x: float
    y: float
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise GeometryError(f"height must be positive, got {self.t}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.t])

    def klein(self) -> np.ndarray:
        return uhs_to_klein(self.as_array())

    @classmethod
    def from_klein(cls, k) -> "Point3":
        x, y, t = klein_to_uhs(np.asarray(k, dtype=float))
        return cls(float(x), float(y), float(t))

    def close_to(self, other: "Point3", tol: float = TAU_GEO) -> bool:
        return dist(self, other) < tol


Vertex = Union[Point3, IdealPoint]


# --------------------------------------------------------------------------
# model conversion

def uhs_to_klein(p: np.ndarray) -> np.ndarray:
    """Upper half-space ``(x, y, t)`` -> Klein ball; works on ``(..., 3)`` arrays."""
    p = np.asarray(p, dtype=float)
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    r2 = x * x + y * y + t * t
    den = x * x + y * y + (t + 1.0) ** 2
    ball = np.stack([2 * x, 2 * y, r2 - 1.0], axis=-1) / den[..., None]
    n2 = np.sum(ball * ball, axis=-1)
    return 2.0 * ball / (1.0 + n2)[..., None]


def klein_to_uhs(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    n2 = np.sum(k * k, axis=-1)
    if np.any(n2 >= 1.0):
        raise GeometryError("Klein point not inside the unit ball")
    b = k / (1.0 + np.sqrt(1.0 - n2))[..., None]
    u, v, w = b[..., 0], b[..., 1], b[..., 2]
    den = u * u + v * v + (1.0 - w) ** 2
    return np.stack([2 * u, 2 * v, 1.0 - u * u - v * v - w * w], axis=-1) / den[..., None]


def convert_model(coords, source: str, target: str) -> np.ndarray:
    """Convert finite-point coordinates between ``"uhs"`` and ``"klein"``."""
    if source == target:
        return np.asarray(coords, dtype=float)
    if (source, target) == ("uhs", "klein"):
        return uhs_to_klein(coords)
    if (source, target) == ("klein", "uhs"):
        return klein_to_uhs(coords)
    raise ValueError(f"unknown models {source!r} -> {target!r}")


def klein_coords(v: Vertex) -> np.ndarray:
    return v.klein()


# --------------------------------------------------------------------------
# isometries

def _normalize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-300:
        raise GeometryError("singular Moebius matrix")
    return m / cmath.sqrt(det)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Element of Isom(H^3) as (SL2C matrix, orientation sign)."""

    matrix: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        object.__setattr__(self, "matrix", _normalize(self.matrix))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(2, dtype=complex), 1)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return compose(self, other)

    def __call__(self, p):
        return apply(self, p)

    def inverse(self) -> "Isometry":
        return inverse(self)

    @property
    def trace(self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    def close_to(self, other: "Isometry", tol: float = TAU_GEO) -> bool:
        if self.orientation != other.orientation:
            return False
        d = min(np.abs(self.matrix - other.matrix).max(),
                np.abs(self.matrix + other.matrix).max())
        return bool(d < tol)

    def is_identity(self, tol: float = TAU_GEO) -> bool:
        return self.close_to(Isometry.identity(), tol)

    def to_json(self) -> dict:
        m = self.matrix
        return {"matrix": [[m[i, j].real, m[i, j].imag] for i in range(2) for j in range(2)],
                "orientation": "+" if self.orientation > 0 else "-"}

    @classmethod
    def from_json(cls, d: dict) -> "Isometry":
        vals = [complex(re, im) for re, im in d["matrix"]]
        return cls(np.array(vals, dtype=complex).reshape(2, 2),
                   1 if d["orientation"] == "+" else -1)

    def __repr__(self):
        return f"Isometry({np.round(self.matrix, 6).tolist()}, {'+' if self.orientation > 0 else '-'})"


def compose(g: Isometry, h: Isometry) -> Isometry:
    """``g o h`` (apply ``h`` first)."""
    hm = h.matrix if g.orientation > 0 else np.conj(h.matrix)
    return Isometry(g.matrix @ hm, g.orientation * h.orientation)


def inverse(g: Isometry) -> Isometry:
    a, b = g.matrix[0]
    c, d = g.matrix[1]
    inv = np.array([[d, -b], [-c, a]], dtype=complex)
    if g.orientation < 0:
        inv = np.conj(inv)
    return Isometry(inv, g.orientation)


def conjugation() -> Isometry:
    """``z -> conj(z)``, the reflection in the vertical plane over the real axis."""
    return Isometry(np.eye(2, dtype=complex), -1)


def _mobius_ideal(m: np.ndarray, p: IdealPoint) -> IdealPoint:
    (a, b), (c, d) = m
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if p.infinite:
        if abs(c) <= _ZERO_REL * scale:
            return INF
        return IdealPoint(a / c)
    z = p.z
    den = c * z + d
    if abs(den) <= _ZERO_REL * scale * max(1.0, abs(z)):
        return INF
    return IdealPoint((a * z + b) / den)


def _mobius_point(m: np.ndarray, p: Point3) -> Point3:
    (a, b), (c, d) = m
    z, t = p.z, p.t
    czd = c * z + d
    den = abs(czd) ** 2 + abs(c) ** 2 * t * t
    w = ((a * z + b) * czd.conjugate() + a * c.conjugate() * t * t) / den
    return Point3(float(w.real), float(w.imag), float(t / den))


def apply(g: Isometry, p):
    """Image of a point (finite or ideal) under ``g``."""
    if isinstance(p, IdealPoint):
        if g.orientation < 0 and not p.infinite:
            p = IdealPoint(p.z.conjugate())
        return _mobius_ideal(g.matrix, p)
    if isinstance(p, Point3):
        if g.orientation < 0:
            p = Point3(p.x, -p.y, p.t)
        return _mobius_point(g.matrix, p)
    raise TypeError(f"cannot apply an isometry to {type(p).__name__}")


def mobius_to_zero_one_inf(a: IdealPoint, b: IdealPoint, c: IdealPoint) -> Isometry:
    """Orientation-preserving map sending ``a, b, c`` to ``0, 1, oo``."""
    pts = (a, b, c)
    for i in range(3):
        for j in range(i + 1, 3):
            if pts[i] == pts[j] or pts[i].close_to(pts[j], 1e-12):
                raise GeometryError("ideal points must be pairwise distinct")
    if a.infinite:
        m = [[0, b.z - c.z], [1, -c.z]]
    elif b.infinite:
        m = [[1, -a.z], [1, -c.z]]
    elif c.infinite:
        m = [[1, -a.z], [0, b.z - a.z]]
    else:
        m = [[b.z - c.z, -a.z * (b.z - c.z)], [b.z - a.z, -c.z * (b.z - a.z)]]
    return Isometry(np.array(m, dtype=complex), 1)


def mobius_from_triples(src, dst) -> Isometry:
    """Orientation-preserving map sending the ideal triple ``src`` to ``dst``."""
    f = mobius_to_zero_one_inf(*src)
    g = mobius_to_zero_one_inf(*dst)
    return inverse(g) @ f


def reflection_in_ideal_plane(a: IdealPoint, b: IdealPoint, c: IdealPoint) -> Isometry:
    """Reflection in the geodesic plane spanned by three ideal points."""
    f = mobius_to_zero_one_inf(a, b, c)
    return inverse(f) @ conjugation() @ f


def apply_stack_klein(mats: np.ndarray, orients: np.ndarray, p) -> np.ndarray:
    """Klein coordinates of ``g(p)`` for a stack of isometries ``(mats[k], orients[k])``."""
    mats = np.asarray(mats, dtype=complex)
    orients = np.asarray(orients)
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    if isinstance(p, IdealPoint):
        if p.infinite:
            num, den = a, c
        else:
            z = np.where(orients > 0, p.z, np.conj(p.z))
            num, den = a * z + b, c * z + d
        inf = np.abs(den) <= _ZERO_REL * np.maximum(np.abs(num), 1e-300)
        w = np.where(inf, 0, num / np.where(inf, 1, den))
        r2 = np.abs(w) ** 2
        out = np.stack([2 * w.real, 2 * w.imag, r2 - 1], axis=-1) / (r2 + 1)[:, None]
        out[inf] = (0.0, 0.0, 1.0)
        return out
    z = np.where(orients > 0, p.z, np.conj(p.z))
    t = p.t
    czd = c * z + d
    den = np.abs(czd) ** 2 + np.abs(c) ** 2 * t * t
    w = ((a * z + b) * np.conj(czd) + a * np.conj(c) * t * t) / den
    return uhs_to_klein(np.stack([w.real, w.imag, t / den], axis=-1))


# --------------------------------------------------------------------------
# metric and horoballs

def dist(p: Point3, q: Point3) -> float:
    if not isinstance(p, Point3) or not isinstance(q, Point3):
        raise GeometryError("distance is only defined between finite points")
    num = (p.x - q.x) ** 2 + (p.y - q.y) ** 2 + (p.t - q.t) ** 2
    return math.acosh(1.0 + num / (2.0 * p.t * q.t))


def to_infinity(center: IdealPoint) -> Isometry:
    """The fixed normalising map for Busemann levels: ``z -> -1/(z - center)``."""
    if center.infinite:
        return Isometry.identity()
    return Isometry(np.array([[0, -1], [1, -center.z]], dtype=complex), 1)


def busemann_level(center: IdealPoint, p: Point3) -> float:
    """Height of ``p`` after sending ``center`` to infinity by :func:`to_infinity`.

    Horoballs centred at ``center`` are superlevel sets of this function.
    For a finite centre, level ``L`` bounds a Euclidean ball of diameter ``1/L``.
    """
    if center.infinite:
        return p.t
    z = p.z - center.z
    return p.t / (abs(z) ** 2 + p.t ** 2)


@dataclass(frozen=True)
class Horoball:
    center: IdealPoint
    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise GeometryError("horoball level must be positive")

    def contains(self, p: Point3, closed: bool = False, tol: float = 0.0) -> bool:
        b = busemann_level(self.center, p)
        return b >= self.level - tol if closed else b > self.level + tol

    def top_point(self) -> Point3:
        """A point on the bounding horosphere (the Euclidean top for finite centres)."""
        if self.center.infinite:
            return Point3(0.0, 0.0, self.level)
        return Point3(self.center.z.real, self.center.z.imag, 1.0 / self.level)

    def euclidean_diameter(self) -> float:
        if self.center.infinite:
            return math.inf
        return 1.0 / self.level

    def image(self, g: Isometry) -> "Horoball":
        c = apply(g, self.center)
        q = apply(g, self.top_point())
        return Horoball(c, busemann_level(c, q))

    def klein_lambda(self) -> float:
        """Constant ``lam`` with ball = ``{k : 1 - k.xi < lam * sqrt(1 - |k|^2)}``."""
        xi = self.center.klein()
        k = self.top_point().klein()
        return float((1.0 - k @ xi) / math.sqrt(1.0 - k @ k))

    def disjoint_from(self, other: "Horoball") -> bool:
        """Open horoballs are disjoint (tangency allowed)."""
        a, b = self, other
        if a.center.infinite and b.center.infinite:
            return False
        if b.center.infinite:
            a, b = b, a
        if a.center.infinite:
            return b.euclidean_diameter() <= a.level * (1 + 1e-12)
        d2 = abs(a.center.z - b.center.z) ** 2
        return d2 >= a.euclidean_diameter() * b.euclidean_diameter() * (1 - 1e-12)


# --------------------------------------------------------------------------
# random isometries for property tests

def random_isometry(rng: np.random.Generator, scale: float = 1.0,
                    orientation: int | None = None) -> Isometry:
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = np.eye(2) + scale * m
    if orientation is None:
        orientation = 1 if rng.random() < 0.5 else -1
    return Isometry(m, orientation)
