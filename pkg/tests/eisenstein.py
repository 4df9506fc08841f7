"""Exact arithmetic in Q(w), w = e^{i pi/3}, used as an independent oracle.

Elements are ``a + b w`` with rational ``a, b``; ``w^2 = w - 1`` and
``conj(w) = 1 - w``.  ``None`` stands for the point at infinity.
"""

import cmath
import math
from fractions import Fraction

W = cmath.exp(1j * math.pi / 3)


class Eis:
    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    def __add__(self, o):
        o = _lift(o)
        return Eis(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o):
        o = _lift(o)
        return Eis(self.a - o.a, self.b - o.b)

    def __neg__(self):
        return Eis(-self.a, -self.b)

    def __mul__(self, o):
        o = _lift(o)
        a, b, c, d = self.a, self.b, o.a, o.b
        return Eis(a * c - b * d, a * d + b * c + b * d)

    __rmul__ = __mul__

    def conj(self):
        return Eis(self.a + self.b, -self.b)

    def norm(self):
        return self.a * self.a + self.a * self.b + self.b * self.b

    def __truediv__(self, o):
        o = _lift(o)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError
        q = self * o.conj()
        return Eis(q.a / n, q.b / n)

    def __eq__(self, o):
        if o is None:
            return False
        o = _lift(o)
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __complex__(self):
        return float(self.a) + float(self.b) * W

    def __repr__(self):
        return f"Eis({self.a}, {self.b})"


def _lift(x):
    return x if isinstance(x, Eis) else Eis(x)


OMEGA = Eis(0, 1)
DELTA0 = (Eis(0), Eis(1), OMEGA, None)


def _is_real_multiple(u):
    """True iff u is real (its w-coefficient vanishes)."""
    return u.b == 0


def reflection(p, q, r):
    """Exact reflection in the plane through ideal points p, q, r."""
    pts = [p, q, r]
    if None in pts:
        a, b = [x for x in pts if x is not None]
        u = (b - a) / (b - a).conj()
        return lambda z: None if z is None else a + u * (z - a).conj()
    a, b, c = pts
    if _is_real_multiple((c - a) / (b - a)):
        u = (b - a) / (b - a).conj()
        return lambda z: None if z is None else a + u * (z - a).conj()
    num = a * a.conj() * (b - c) + b * b.conj() * (c - a) + c * c.conj() * (a - b)
    den = a.conj() * (b - c) + b.conj() * (c - a) + c.conj() * (a - b)
    c0 = num / den
    R = (a - c0) * (a - c0).conj()
    assert (b - c0) * (b - c0).conj() == R and (c - c0) * (c - c0).conj() == R

    def refl(z):
        if z is None:
            return c0
        if z is not None and z == c0:
            return None
        return c0 + R / (z - c0).conj()

    return refl


def rho(i, verts):
    others = [v for k, v in enumerate(verts) if k != i]
    out = list(verts)
    out[i] = reflection(*others)(verts[i])
    return tuple(out)


def enumerate_tiles(depth):
    """All tiles reachable by reflection words of length <= depth, as vertex sets."""
    seen = {frozenset(DELTA0)}
    layer = [DELTA0]
    for _ in range(depth):
        nxt = []
        for t in layer:
            for i in range(4):
                u = rho(i, t)
                key = frozenset(u)
                if key not in seen:
                    seen.add(key)
                    nxt.append(u)
        layer = nxt
    return seen
