"""Hyperbolic plane primitives in the Poincare disk, with Klein-model conversions.

Points are stored as Python ``complex`` numbers (or numpy complex arrays) in the
Poincare unit disk. Geodesics are straight chords in the Klein model, which is
where every intersection predicate of the package is evaluated.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .constants import TOL

PlanePoint = complex

QUARTER_PI = math.pi / 4
# side length of the equilateral triangle with all angles pi/4
SIDE_LENGTH = math.acosh(1.0 + math.sqrt(2.0))


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a geometric operation."""


def check_point(z: complex) -> complex:
    z = complex(z)
    if abs(z) ** 2 >= 1.0 - TOL.disk_margin:
        raise DomainError(f"point {z!r} is not inside the unit disk")
    return z


def dist(p: complex, q: complex) -> float:
    """Hyperbolic distance between two points of the Poincare disk."""
    p = check_point(p)
    q = check_point(q)
    num = 2.0 * abs(p - q) ** 2
    den = (1.0 - abs(p) ** 2) * (1.0 - abs(q) ** 2)
    # arccosh(1 + x) == 2 asinh(sqrt(x / 2)), stable for nearby points
    return 2.0 * math.asinh(math.sqrt(num / den / 2.0))


def dist_array(p, q) -> np.ndarray:
    """Vectorised ``dist`` without the domain check."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    num = np.abs(p - q) ** 2
    den = (1.0 - np.abs(p) ** 2) * (1.0 - np.abs(q) ** 2)
    return 2.0 * np.arcsinh(np.sqrt(num / den))


def radius_to_euclidean(r: float) -> float:
    """Euclidean radius in the Poincare disk of the hyperbolic circle of radius r about 0."""
    return math.tanh(r / 2.0)


def disk_area(r: float) -> float:
    """Area of a hyperbolic disk of radius r: ``4 pi sinh^2(r/2)``."""
    if r < 0:
        raise DomainError(f"negative radius {r}")
    return 4.0 * math.pi * math.sinh(r / 2.0) ** 2


def triangle_angle(a: float, b: float, c: float) -> float:
    """Angle opposite side ``a`` in the hyperbolic triangle with sides a, b, c."""
    if min(a, b, c) < 0:
        raise DomainError("side lengths must be non-negative")
    if b == 0 or c == 0:
        raise DomainError("adjacent sides must be positive")
    # realizable iff the triangle inequalities hold
    slack = TOL.metric * max(1.0, a, b, c)
    if a > b + c + slack or b > a + c + slack or c > a + b + slack:
        raise DomainError(f"sides ({a}, {b}, {c}) violate the triangle inequality")
    cos_a = (math.cosh(b) * math.cosh(c) - math.cosh(a)) / (math.sinh(b) * math.sinh(c))
    return math.acos(min(1.0, max(-1.0, cos_a)))


def tangent_triangle_angles(ra, rb, rc) -> np.ndarray:
    """Angle at the ``ra`` vertex of triangles of mutually tangent circles (vectorised).

    Uses the half-angle form, which stays accurate for very small radii.
    """
    ra = np.asarray(ra, dtype=float)
    rb = np.asarray(rb, dtype=float)
    rc = np.asarray(rc, dtype=float)
    s = ra + rb + rc
    # tan^2(A/2) = sinh(s-b) sinh(s-c) / (sinh s sinh(s-a)) with a=rb+rc, b=ra+rc, c=ra+rb
    t = np.sinh(rb) * np.sinh(rc) / (np.sinh(s) * np.sinh(ra))
    return 2.0 * np.arctan(np.sqrt(t))


def klein_from_poincare(z):
    return 2.0 * z / (1.0 + np.abs(z) ** 2)


def poincare_from_klein(k):
    r2 = np.abs(k) ** 2
    return k / (1.0 + np.sqrt(np.maximum(0.0, 1.0 - r2)))


@dataclass(frozen=True)
class Isometry:
    """Mobius (``reflect=False``) or anti-Mobius map of the disk.

    Acts by ``z -> (a w + b) / (c w + d)`` with ``w = z`` or ``w = conj(z)``.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    reflect: bool = False

    def __call__(self, z):
        return self.apply(z)

    def apply(self, z):
        w = np.conj(z) if self.reflect else z
        return (self.a * w + self.b) / (self.c * w + self.d)

    def compose(self, other: "Isometry") -> "Isometry":
        """``self`` after ``other``."""
        a2, b2, c2, d2 = other.a, other.b, other.c, other.d
        if self.reflect:
            a2, b2, c2, d2 = a2.conjugate(), b2.conjugate(), c2.conjugate(), d2.conjugate()
        a = self.a * a2 + self.b * c2
        b = self.a * b2 + self.b * d2
        c = self.c * a2 + self.d * c2
        d = self.c * b2 + self.d * d2
        return Isometry(a, b, c, d, self.reflect != other.reflect)._normalized()

    def inverse(self) -> "Isometry":
        a, b, c, d = self.d, -self.b, -self.c, self.a
        if self.reflect:
            # z = conj(M^-1 w)
            a, b, c, d = a.conjugate(), b.conjugate(), c.conjugate(), d.conjugate()
        return Isometry(a, b, c, d, self.reflect)._normalized()

    def _normalized(self) -> "Isometry":
        det = self.a * self.d - self.b * self.c
        if det == 0:
            raise DomainError("singular isometry matrix")
        s = cmath.sqrt(det)
        return Isometry(self.a / s, self.b / s, self.c / s, self.d / s, self.reflect)

    def close_to(self, other: "Isometry", tol: float = TOL.metric) -> bool:
        if self.reflect != other.reflect:
            return False
        probes = np.array([0.0, 0.5, -0.5j, 0.3 + 0.4j])
        return bool(np.max(np.abs(self.apply(probes) - other.apply(probes))) <= tol)


IDENTITY = Isometry(1, 0, 0, 1, False)
CONJUGATION = Isometry(1, 0, 0, 1, True)


def rotation(theta: float) -> Isometry:
    h = cmath.exp(0.5j * theta)
    return Isometry(h, 0, 0, h.conjugate())


def recentering(p: complex) -> Isometry:
    """Orientation-preserving isometry sending ``p`` to 0."""
    p = complex(p)
    return Isometry(1, -p, -p.conjugate(), 1)._normalized()


def frame_map(p: complex, q: complex) -> Isometry:
    """Isometry sending ``p`` to 0 and ``q`` onto the positive real axis."""
    m = recentering(p)
    w = complex(m.apply(q))
    return rotation(-cmath.phase(w)).compose(m)


def isometry_from_pairs(p: complex, q: complex, p2: complex, q2: complex, reflect: bool = False) -> Isometry:
    """The isometry mapping p -> p2 and q -> q2 (distances must agree)."""
    src = frame_map(p, q)
    dst = frame_map(p2, q2)
    mid = CONJUGATION if reflect else IDENTITY
    return dst.inverse().compose(mid.compose(src))


def point_along(p: complex, q: complex, s: float) -> complex:
    """Point at hyperbolic distance s from p on the geodesic towards q."""
    f = frame_map(p, q)
    return complex(f.inverse().apply(complex(math.tanh(s / 2.0))))


@dataclass(frozen=True)
class ReferenceTriangle:
    vertices: tuple[complex, complex, complex]
    side: float
    angle: float
    area: float

    def klein_vertices(self) -> np.ndarray:
        return klein_from_poincare(np.array(self.vertices))

    def contains(self, z, tol: float = 1e-12):
        """Vectorised inside-or-on-boundary test, done in the Klein chart."""
        k = klein_from_poincare(np.asarray(z, dtype=complex))
        kv = self.klein_vertices()
        inside = np.ones(np.shape(k), dtype=bool)
        for i in range(3):
            a, b = kv[i], kv[(i + 1) % 3]
            inside &= cross2(b - a, k - a) >= -tol
        return inside

    def side_point(self, side: int, t: float) -> complex:
        """Point at fraction t of the way (by arc length) along side ``side``."""
        a = self.vertices[side]
        b = self.vertices[(side + 1) % 3]
        return point_along(a, b, t * self.side)


def cross2(u, v):
    """z-component of the cross product of complex numbers viewed as plane vectors."""
    return (np.conj(u) * v).imag


def circumradius(side: float) -> float:
    """Centre-to-vertex distance of the equilateral hyperbolic triangle with given side."""
    # cosh(side) = cosh^2 R + sinh^2 R / 2
    return math.acosh(math.sqrt((2.0 * math.cosh(side) + 1.0) / 3.0))


def inradius(side: float) -> float:
    """Centre-to-side distance of the equilateral hyperbolic triangle."""
    # right triangle: centre, vertex, edge midpoint; cosh R = cosh r cosh(side/2)
    return math.acosh(math.cosh(circumradius(side)) / math.cosh(side / 2.0))


def build_reference_triangle() -> ReferenceTriangle:
    """Equilateral triangle with angles pi/4, centred at 0 with vertex 0 on the positive x-axis."""
    rho = math.tanh(circumradius(SIDE_LENGTH) / 2.0)
    verts = tuple(rho * cmath.exp(2j * math.pi * k / 3) for k in range(3))
    return ReferenceTriangle(
        vertices=verts,
        side=SIDE_LENGTH,
        angle=QUARTER_PI,
        area=math.pi - 3 * QUARTER_PI,
    )


REFERENCE = build_reference_triangle()
