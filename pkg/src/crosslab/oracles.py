"""Constant-curvature reference backends: random geometric K_n on the round sphere and flat tori.

On the sphere four uniform points span two crossing minor arcs with
probability 1/8, so K_n has 3/8 C(n, 4) crossings in expectation. Flat tori
have no closed form here; they serve for shape comparisons.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np


@lru_cache(maxsize=None)
def _independent_edge_pairs(n: int) -> tuple[np.ndarray, ...]:
    """Edge list of K_n and all pairs of edges with four distinct endpoints."""
    edges = np.array(list(combinations(range(n), 2)), dtype=np.int64).reshape(-1, 2)
    e1, e2 = np.triu_indices(len(edges), 1)
    a, b = edges[e1].T
    c, d = edges[e2].T
    keep = (a != c) & (a != d) & (b != c) & (b != d)
    for arr in (edges, e1, e2):
        arr.flags.writeable = False
    return edges, e1[keep], e2[keep]


# sphere ---------------------------------------------------------------------


def sample_sphere(n: int, rng: np.random.Generator, min_gap: float = 1e-9) -> np.ndarray:
    """n uniform unit vectors, resampled until no two are equal or antipodal."""
    while True:
        x = rng.standard_normal((n, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        dots = x @ x.T
        np.fill_diagonal(dots, 0.0)
        if np.all(np.abs(dots) < 1.0 - min_gap):
            return x


def minor_arcs_cross(a, b, c, d) -> np.ndarray:
    """Whether minor arcs ab and cd cross (vectorised over leading axes).

    The great circles meet at +-P. Opposite-side tests on both planes say one
    of those points lies on both arcs' circles between the endpoints; the sign
    pairing det[a,b,c] vs det[c,d,b] selects P over -P.
    """
    nab = np.cross(a, b)
    ncd = np.cross(c, d)
    s1 = np.einsum("...i,...i->...", nab, c)
    s2 = np.einsum("...i,...i->...", nab, d)
    s3 = np.einsum("...i,...i->...", ncd, a)
    s4 = np.einsum("...i,...i->...", ncd, b)
    # a point within rounding of the other plane lies on it; touching is not crossing
    tiny = 1e-12
    strict = (np.abs(s1) > tiny) & (np.abs(s2) > tiny) & (np.abs(s3) > tiny) & (np.abs(s4) > tiny)
    return strict & (s1 * s2 < 0) & (s3 * s4 < 0) & (s1 * s4 > 0)


def sphere_crossings(points: np.ndarray) -> int:
    n = len(points)
    if n < 4:
        return 0
    edges, e1, e2 = _independent_edge_pairs(n)
    a, b = points[edges[e1, 0]], points[edges[e1, 1]]
    c, d = points[edges[e2, 0]], points[edges[e2, 1]]
    return int(minor_arcs_cross(a, b, c, d).sum())


def sphere_drawing(n: int, rng: np.random.Generator) -> int:
    """Crossings of K_n drawn with minor great-circle arcs between n uniform points."""
    if n < 2:
        raise ValueError("need at least two points")
    return sphere_crossings(sample_sphere(n, rng))


def moon_expectation(n: int) -> float:
    return 3.0 * math.comb(n, 4) / 8.0


# flat tori ------------------------------------------------------------------


@dataclass(frozen=True)
class TorusLattice:
    name: str
    w1: complex
    w2: complex

    def __post_init__(self):
        if abs((self.w1.conjugate() * self.w2).imag) < 1e-12:
            raise ValueError("lattice generators are dependent")

    @property
    def area(self) -> float:
        return abs((self.w1.conjugate() * self.w2).imag)

    def to_coords(self, z):
        """Coordinates of z in the (w1, w2) basis."""
        z = np.asarray(z, dtype=complex)
        det = (self.w1.conjugate() * self.w2).imag
        u = (z.real * self.w2.imag - z.imag * self.w2.real) / det
        v = (self.w1.real * z.imag - self.w1.imag * z.real) / det
        return u, v

    def from_coords(self, u, v):
        return np.asarray(u) * self.w1 + np.asarray(v) * self.w2

    def reduce(self, z):
        """Representative of z mod the lattice with coordinates in [-1/2, 1/2)."""
        u, v = self.to_coords(z)
        return self.from_coords(u - np.floor(u + 0.5), v - np.floor(v + 0.5))


SQUARE = TorusLattice("square", 1 + 0j, 1j)
HONEYCOMB = TorusLattice("honeycomb", 1 + 0j, cmath.exp(2j * math.pi / 3))
LATTICES = {"square": SQUARE, "honeycomb": HONEYCOMB}

_RING3 = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
_RING5 = [(i, j) for i in range(-2, 3) for j in range(-2, 3)]


@dataclass(frozen=True)
class TorusResult:
    crossings: int
    tie_events: int
    widened: int


def shortest_representatives(lattice: TorusLattice, delta: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Shortest lattice translate of each displacement, among the 9 around its reduction.

    Ties (to 1e-12) go to the lexicographically first offset and are counted.
    Each choice is checked against the 25 offsets; any shorter one found there
    replaces it and is counted as a widening.
    """
    base = lattice.reduce(delta)
    ring3 = np.array([lattice.from_coords(i, j) for i, j in _RING3])
    ring5 = np.array([lattice.from_coords(i, j) for i, j in _RING5])
    cand = base[:, None] + ring3[None, :]
    lengths = np.abs(cand)
    pick = np.argmin(lengths, axis=1)
    best = lengths[np.arange(len(delta)), pick]
    ties = int(np.sum(np.sum(lengths <= best[:, None] + 1e-12, axis=1) > 1))
    rep = cand[np.arange(len(delta)), pick]
    wide = base[:, None] + ring5[None, :]
    wl = np.abs(wide)
    shorter = wl.min(axis=1) < best - 1e-12
    rep = np.where(shorter, wide[np.arange(len(delta)), np.argmin(wl, axis=1)], rep)
    return rep, ties, int(shorter.sum())


def _cross(u, v):
    return (np.conj(u) * v).imag


def torus_crossings(lattice: TorusLattice, points: np.ndarray) -> TorusResult:
    """Crossings of the straight-line K_n on the torus; each edge is its shortest representative.

    Two edges cross once for every lattice translate of the second that the
    first crosses properly in the plane.
    """
    n = len(points)
    if n < 4:
        return TorusResult(0, 0, 0)
    edges, e1, e2 = _independent_edge_pairs(n)
    start = points[edges[:, 0]]
    delta, ties, widened = shortest_representatives(lattice, points[edges[:, 1]] - start)
    a1, d1 = start[e1], delta[e1]
    a2, d2 = start[e2], delta[e2]
    # translate the second edge next to the first by reducing the midpoint offset
    mid_gap = (a2 + d2 / 2) - (a1 + d1 / 2)
    shift = lattice.reduce(mid_gap) - mid_gap
    ring = np.array([lattice.from_coords(i, j) for i, j in _RING5])
    p = a1[:, None]
    r = d1[:, None]
    q = (a2 + shift)[:, None] + ring[None, :]
    s = d2[:, None]
    denom = _cross(r, s)
    t = _cross(q - p, s) / denom
    u = _cross(q - p, r) / denom
    hit = (t > 0) & (t < 1) & (u > 0) & (u < 1)
    return TorusResult(int(hit.sum()), ties, widened)


def sample_torus(lattice: TorusLattice, n: int, rng: np.random.Generator) -> np.ndarray:
    uv = rng.random((n, 2))
    return lattice.from_coords(uv[:, 0], uv[:, 1])


def torus_drawing(n: int, lattice: TorusLattice, rng: np.random.Generator) -> TorusResult:
    """Crossings of K_n on n uniform points of the flat torus."""
    if n < 2:
        raise ValueError("need at least two points")
    return torus_crossings(lattice, sample_torus(lattice, n, rng))


# hyperbolic crossings, counted without face buckets -----------------------------


def _hyperboloid(z: np.ndarray) -> np.ndarray:
    """Lift Poincare-disk points to the upper sheet of x0^2 - x1^2 - x2^2 = 1."""
    r2 = np.abs(z) ** 2
    return np.stack([1.0 + r2, 2.0 * z.real, 2.0 * z.imag], axis=-1) / (1.0 - r2)[..., None]


@dataclass(frozen=True)
class GlobalCount:
    crossings: int
    touches: int


def global_crossing_oracle(drawing) -> GlobalCount:
    """Reference crossing count over every pair of segments of the drawing.

    Each geodesic segment spans a plane through the origin of Minkowski space;
    two segments of the same face cross iff each separates the other's
    endpoints. Pairs meeting only at an endpoint are tallied as touches.
    """
    segs = [(e, s.face, s.start, s.end) for e, path in enumerate(drawing.paths) for s in path.segments]
    if len(segs) < 2:
        return GlobalCount(0, 0)
    edge = np.array([s[0] for s in segs])
    face = np.array([s[1] for s in segs])
    A = _hyperboloid(np.array([s[2] for s in segs]))
    B = _hyperboloid(np.array([s[3] for s in segs]))
    normal = np.cross(A, B)
    sa = normal @ A.T  # sa[i, j]: side of plane i holding A[j]
    sb = normal @ B.T
    # side values below this are rounding noise: the point lies on the plane
    na = np.linalg.norm(normal, axis=1)
    za = 1e-10 * na[:, None] * np.linalg.norm(A, axis=1)[None, :]
    zb = 1e-10 * na[:, None] * np.linalg.norm(B, axis=1)[None, :]
    ta, tb = np.abs(sa) <= za, np.abs(sb) <= zb
    i, j = np.triu_indices(len(segs), 1)
    eligible = (face[i] == face[j]) & (edge[i] != edge[j])
    on_plane = ta[i, j] | tb[i, j] | ta[j, i] | tb[j, i]
    separated = (sa[i, j] * sb[i, j] <= 0) & (sa[j, i] * sb[j, i] <= 0)
    proper = eligible & separated & ~on_plane
    touching = eligible & separated & on_plane
    return GlobalCount(int(proper.sum()), int(touching.sum()))
