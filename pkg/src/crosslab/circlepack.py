"""Hyperbolic circle packings of closed triangulated surfaces, and the arithmetic built on them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import tangent_triangle_angles
from .surface import CombinatorialSurface

TWO_PI = 2.0 * math.pi


class PackingError(RuntimeError):
    def __init__(self, message: str, best_residual: float, radii=None):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual
        self.radii = radii


@dataclass(frozen=True)
class Triangulation:
    """Closed surface triangulation as corner triples; repeated edges are allowed."""

    vertex_count: int
    triangles: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        sides: dict = {}
        for t in self.triangles:
            for i in range(3):
                u, v = t[i], t[(i + 1) % 3]
                if not (0 <= u < self.vertex_count):
                    raise ValueError(f"triangle {t} uses unknown vertex {u}")
                key = (min(u, v), max(u, v))
                sides[key] = sides.get(key, 0) + 1
        odd = [k for k, c in sides.items() if c % 2]
        if odd:
            raise ValueError(f"edges {odd[:5]} are not shared by two triangle sides")
        used = {v for t in self.triangles for v in t}
        if len(used) != self.vertex_count:
            raise ValueError("some vertices belong to no triangle")
        if self._components() != 1:
            raise ValueError("triangulation is disconnected")

    def _components(self) -> int:
        parent = list(range(self.vertex_count))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b, c in self.triangles:
            parent[find(a)] = find(b)
            parent[find(b)] = find(c)
        return len({find(v) for v in range(self.vertex_count)})

    @property
    def face_count(self) -> int:
        return len(self.triangles)

    @property
    def edge_count(self) -> int:
        return 3 * len(self.triangles) // 2

    @property
    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.face_count

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        for t in self.triangles:
            for v in t:
                deg[v] += 1
        return deg


def triangulation_from_surface(surface: CombinatorialSurface) -> Triangulation:
    """The (4,4,4) tiling itself, viewed combinatorially: every vertex has degree 8."""
    tris = tuple(tuple(int(x) for x in surface.corner_vertex[f]) for f in range(surface.F))
    return Triangulation(surface.V, tris)


def load_triangulation(text: str) -> Triangulation:
    doc = json.loads(text)
    return Triangulation(int(doc["vertices"]), tuple(tuple(int(x) for x in t) for t in doc["triangles"]))


def dump_triangulation(tri: Triangulation) -> str:
    return json.dumps({"vertices": tri.vertex_count, "triangles": [list(t) for t in tri.triangles]})


def flip_edge(surface: CombinatorialSurface, tris: list, f: int, s: int) -> list:
    """Flip the edge on side s of face f in a corner-list triangulation that shares the surface's faces.

    ``tris`` must still index faces like ``surface`` on the two faces touched.
    Returns the new triangle list; faces f and its neighbour are rewritten in place.
    """
    f2, s2, o = surface.partner(f, s)
    if f2 == f or o != -1:
        raise ValueError("cannot flip a self-glued or orientation-reversing edge")
    a, b, c = tris[f][s], tris[f][(s + 1) % 3], tris[f][(s + 2) % 3]
    d = tris[f2][(s2 + 2) % 3]
    out = list(tris)
    out[f] = (c, a, d)
    out[f2] = (d, b, c)
    return out


@dataclass(frozen=True)
class Packing:
    radii: np.ndarray = field(repr=False)
    residual: float
    iterations: int

    def angle_sums(self, tri: Triangulation) -> np.ndarray:
        return angle_sums(tri, self.radii)


def _corner_table(tri: Triangulation):
    own, left, right = [], [], []
    for a, b, c in tri.triangles:
        own += [a, b, c]
        left += [b, c, a]
        right += [c, a, b]
    return np.array(own), np.array(left), np.array(right)


def angle_sums(tri: Triangulation, radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    own, left, right = _corner_table(tri)
    ang = tangent_triangle_angles(radii[own], radii[left], radii[right])
    return np.bincount(own, weights=ang, minlength=tri.vertex_count)


def thurston_pack(
    tri: Triangulation,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    lo: float = 1e-6,
    hi: float = 20.0,
) -> Packing:
    """Tangency packing by Gauss-Seidel sweeps of per-vertex bisection.

    Each sweep visits vertices in index order and sets r_v so that the angle
    sum at v is 2 pi with its neighbours held fixed.
    """
    if tri.genus < 2:
        raise ValueError(f"hyperbolic packing needs genus >= 2, got {tri.genus}")
    own, left, right = _corner_table(tri)
    order = np.argsort(own, kind="stable")
    bounds = np.searchsorted(own[order], np.arange(tri.vertex_count + 1))
    flower = [(left[order[bounds[v]:bounds[v + 1]]], right[order[bounds[v]:bounds[v + 1]]]) for v in range(tri.vertex_count)]
    r = np.full(tri.vertex_count, 0.5)
    best = math.inf
    for sweep in range(1, max_iter + 1):
        for v in range(tri.vertex_count):
            nl, nr = flower[v]
            rl, rr = r[nl], r[nr]
            a, b = lo, hi
            # angle sum is strictly decreasing in r_v
            for _ in range(200):
                mid = 0.5 * (a + b)
                if mid == a or mid == b:
                    break
                if tangent_triangle_angles(mid, rl, rr).sum() > TWO_PI:
                    a = mid
                else:
                    b = mid
            r[v] = 0.5 * (a + b)
        residual = float(np.max(np.abs(angle_sums(tri, r) - TWO_PI)))
        best = min(best, residual)
        if residual <= tol:
            r.flags.writeable = False
            return Packing(r, residual, sweep)
    raise PackingError(f"no convergence in {max_iter} sweeps", best, r.copy())


@dataclass(frozen=True)
class AreaReport:
    disk_area_lower: float  # pi * sum r^2
    surface_area: float  # 2 pi (2g - 2)
    holds: bool

    @property
    def slack(self) -> float:
        return self.surface_area - self.disk_area_lower


def packing_area_check(packing: Packing, g: int) -> AreaReport:
    """Disjoint disks fit in the surface: pi * sum r_i^2 < 2 pi (2g - 2)."""
    lower = math.pi * float(np.sum(np.square(packing.radii)))
    area = 2.0 * math.pi * (2 * g - 2)
    report = AreaReport(lower, area, lower < area)
    if not report.holds:
        raise AssertionError(f"packing area {lower} exceeds surface area {area}")
    return report


def cauchy_schwarz_bound(radii, g: int) -> float:
    """Crossing lower bound (sum r_i)^2 / (4g) from the radii of crossing vertices."""
    radii = np.asarray(list(radii), dtype=float)
    if radii.size and np.any(radii <= 0):
        raise ValueError("radii must be positive")
    return float(radii.sum()) ** 2 / (4.0 * g)


@dataclass(frozen=True)
class Certificate:
    n: int
    m: int
    g: float
    eps: float
    avg_edge_length: float
    threshold: float
    case: int
    applicable: bool
    bound: float | None
    hypothesis_lhs: float | None = None
    hypothesis_rhs: float | None = None
    crossing_radii: tuple = ()
    # proof-internal sets (large-radius vertices, long edges); empty without an optimal drawing
    large_radius_vertices: tuple = ()
    long_edges: tuple = ()


def theorem1_case_evaluator(n: int, m: int, g: float, eps: float, avg_edge_length: float, crossing_radii=()) -> Certificate:
    """Evaluate the two-case crossing lower bound for given graph and surface sizes."""
    if not (0.0 < eps < 0.25):
        raise ValueError(f"eps must lie in (0, 1/4), got {eps}")
    if g < 2:
        raise ValueError(f"genus must be at least 2, got {g}")
    log_g = math.log(g)
    threshold = 0.25 * (1.0 - 2.0 * eps) * log_g
    common = dict(n=n, m=m, g=g, eps=eps, avg_edge_length=avg_edge_length, threshold=threshold,
                  crossing_radii=tuple(crossing_radii))
    if avg_edge_length < threshold:
        g_ball = g ** (1.0 - 2.0 * eps) + 1.0
        lhs = m * m / (32.0 * n * n)
        rhs = max(2.0 * math.sqrt(3.0) * n, 12.0 * g_ball, 24.0 * n * n / g_ball)
        ok = lhs >= rhs
        bound = m * m / (32.0 * g_ball) if ok else None
        return Certificate(case=1, applicable=ok, bound=bound, hypothesis_lhs=lhs, hypothesis_rhs=rhs, **common)
    bound = m * m * log_g ** 2 / (2 ** 14 * g)
    return Certificate(case=2, applicable=True, bound=bound, **common)
