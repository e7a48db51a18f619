"""Executable versions of the dense-subgraph and metric-ball lemmas."""

from __future__ import annotations

import heapq
import math
from itertools import count
from dataclasses import dataclass

import numpy as np

from .drawing import Drawing
from .geodesic import PathParams, SurfacePoint, portal_field, portal_graph, shortest_path
from .hyperbolic import REFERENCE, cross2, dist_array, klein_from_poincare, recentering
from .surface import CombinatorialSurface


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: frozenset

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"loop at {u}")
            if u > v:
                raise ValueError(f"edge ({u}, {v}) is not normalized")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range")

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "SimpleGraph":
        edges = set()
        for u, v in pairs:
            u, v = int(u), int(v)
            key = (min(u, v), max(u, v))
            if key in edges:
                raise ValueError(f"multi-edge {key}")
            edges.add(key)
        return cls(n, frozenset(edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[set]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def induced(self, vertices) -> "SimpleGraph":
        keep = set(vertices)
        return SimpleGraph(self.n, frozenset(e for e in self.edges if e[0] in keep and e[1] in keep))


def parse_edge_list(text: str, n: int | None = None) -> SimpleGraph:
    """One "u v" pair per line; blank lines and '#' comments are skipped."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two vertex ids, got {line!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=-1)
    return SimpleGraph.from_pairs(n, pairs)


def dense_ball2_subgraph(graph: SimpleGraph) -> tuple[int, SimpleGraph]:
    """Vertex x and the subgraph induced on its closed 2-neighbourhood, with at least m^2/(8n^2) edges.

    Vertices of degree below m/(2n) are deleted one at a time, lowest id first,
    with degrees recomputed after every deletion.
    """
    if graph.m < 1:
        raise ValueError("graph has no edges")
    adj = graph.adjacency()
    cutoff = graph.m / (2.0 * graph.n)
    alive = set(range(graph.n))
    deg = {v: len(adj[v]) for v in alive}
    while True:
        low = [v for v in sorted(alive) if deg[v] < cutoff]
        if not low:
            break
        v = low[0]
        alive.discard(v)
        for w in adj[v]:
            if w in alive:
                deg[w] -= 1
    x = min(v for v in alive if deg[v] > 0)
    ball = {x} | adj[x]
    for w in adj[x]:
        ball |= adj[w]
    return x, graph.induced(ball)


def ssv_lower_bound(n: int, m: int, g: int) -> float | None:
    """m^2 / (32 g) when m >= max(2 sqrt(3) n, 12 g, 24 n^2 / g), else None."""
    if min(n, m, g) < 1:
        raise ValueError("n, m and g must be positive")
    if m >= max(2.0 * math.sqrt(3.0) * n, 12.0 * g, 24.0 * n * n / g):
        return m * m / (32.0 * g)
    return None


@dataclass(frozen=True)
class DenseBall:
    center: int
    center_point: SurfacePoint
    radius: float
    filtered_edges: int
    inside: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.inside)


def metric_ball_dense(
    drawing: Drawing,
    surface: CombinatorialSurface,
    params: PathParams | None = None,
) -> DenseBall:
    """Ball of radius 4 times the mean edge length holding many short edges.

    An edge u-w of drawn length L is inside B(x, R) when
    (d(x,u) + d(x,w) + L) / 2 <= R, since every point of the path is within
    that distance of x along one of its two ends.
    """
    if drawing.m < 1:
        raise ValueError("drawing has no edges")
    lengths = np.array([p.length for p in drawing.paths])
    mean = float(lengths.mean())
    short = [e for e, L in zip(drawing.edges, lengths) if L <= 2.0 * mean]
    if 2 * len(short) < drawing.m:
        raise AssertionError("length filter kept fewer than half of the edges")
    x, _ = dense_ball2_subgraph(SimpleGraph.from_pairs(drawing.n, short))
    radius = 4.0 * mean
    drawn = dict(zip(drawing.edges, lengths))
    reach = {}

    def to_x(u: int) -> float:
        if u == x:
            return 0.0
        if u not in reach:
            key = (min(u, x), max(u, x))
            reach[u] = drawn[key] if key in drawn else shortest_path(
                surface, drawing.vertices[x], drawing.vertices[u], params=params
            ).length
        return reach[u]

    inside = []
    for u, w in short:
        du, dw = to_x(u), to_x(w)
        L = drawn[(u, w)]
        du, dw = min(du, dw + L), min(dw, du + L)
        if (du + dw + L) / 2.0 <= radius:
            inside.append((u, w))
    return DenseBall(x, drawing.vertices[x], radius, len(short), tuple(inside))


# metric balls as face subcomplexes ------------------------------------------

TIE_TOL = 1e-9


@dataclass(frozen=True)
class BallSubcomplex:
    center: SurfacePoint
    radius: float
    faces: frozenset
    euler_characteristic: int
    genus: int
    boundary_components: int
    components: int
    # surface vertices where the union meets itself in two or more separate fans
    pinched_vertices: int = 0

    @property
    def is_disk(self) -> bool:
        """A closed topological disk: split and unsplit topology agree."""
        return (
            self.components == 1
            and self.genus == 0
            and self.boundary_components == 1
            and self.pinched_vertices == 0
        )


def face_thresholds(surface: CombinatorialSurface, center: SurfacePoint, k: int = 8, margin: float = 0.0) -> np.ndarray:
    """Radius from which each face is certified to lie inside the ball about ``center``.

    For a portal a of face T, every point of T is within D(c, a) + max_v d(a, v)
    of the centre, as distance to a point is convex on the triangle.
    """
    field = portal_field(surface, center, k)
    verts = np.array(REFERENCE.vertices)
    graph = portal_graph(surface, k)
    reach = dist_array(graph.local_positions[:, None], verts[None, :]).max(axis=1)
    thresholds = np.min(field[graph.local_ids] + reach[None, :], axis=1)
    thresholds[center.face] = min(thresholds[center.face], float(dist_array(center.z, verts).max()))
    return thresholds + margin


def subcomplex(surface: CombinatorialSurface, faces, center: SurfacePoint | None = None, radius: float = 0.0) -> BallSubcomplex:
    """Topology of a union of closed faces, with vertices pinched between separate fans split apart."""
    faces = frozenset(int(f) for f in faces)
    if not faces:
        return BallSubcomplex(center, radius, faces, 0, 0, 0, 0)
    parent = {f: f for f in faces}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges_used = {}
    for f in faces:
        for s in range(3):
            e = int(surface.edge_of_slot[f, s])
            f2 = surface.partner(f, s)[0]
            interior = f2 in faces
            edges_used[e] = interior
            if interior:
                parent[find(f)] = find(f2)
    comp_of_face = {f: find(f) for f in faces}
    roots = sorted(set(comp_of_face.values()))
    idx = {r: i for i, r in enumerate(roots)}
    V = np.zeros(len(roots), dtype=np.int64)
    E = np.zeros(len(roots), dtype=np.int64)
    Fc = np.zeros(len(roots), dtype=np.int64)
    for f in faces:
        Fc[idx[comp_of_face[f]]] += 1
    for e, interior in edges_used.items():
        f, s = surface.edges[e][0], surface.edges[e][1]
        if f not in faces:
            f, s = surface.edges[e][2], surface.edges[e][3]
        E[idx[comp_of_face[f]]] += 1
    # boundary edges are joined into cycles at split vertices
    bparent = {e: e for e, interior in edges_used.items() if not interior}

    def bfind(a):
        while bparent[a] != a:
            bparent[a] = bparent[bparent[a]]
            a = bparent[a]
        return a

    pinched = 0
    for orbit in surface.orbits:
        if not any(f in faces for f, _, _ in orbit):
            continue
        L = len(orbit)
        flags = [f in faces for f, _, _ in orbit]
        if all(flags):
            V[idx[comp_of_face[orbit[0][0]]]] += 1
            continue
        start = flags.index(False)
        runs = 0
        t = 0
        while t < L:
            i = (start + t) % L
            if not flags[i]:
                t += 1
                continue
            run = []
            while t < L and flags[(start + t) % L]:
                run.append((start + t) % L)
                t += 1
            runs += 1
            V[idx[comp_of_face[orbit[run[0]][0]]]] += 1
            # edge entering the run and edge leaving it
            before = orbit[(run[0] - 1) % L]
            enter = int(surface.edge_of_slot[before[0], before[2]])
            last = orbit[run[-1]]
            leave = int(surface.edge_of_slot[last[0], last[2]])
            bparent[bfind(enter)] = bfind(leave)
        pinched += runs > 1
    B = np.zeros(len(roots), dtype=np.int64)
    for r in {bfind(e) for e in bparent}:
        e = r
        f, s = surface.edges[e][0], surface.edges[e][1]
        if f not in faces:
            f = surface.edges[e][2]
        B[idx[comp_of_face[f]]] += 1
    chi = V - E + Fc
    genus = (2 - chi - B) // 2
    return BallSubcomplex(center, radius, faces, int(chi.sum()), int(genus.sum()), int(B.sum()), len(roots), pinched)


@dataclass(frozen=True)
class GenusVerdict:
    ball: BallSubcomplex
    c: float
    allowed: float
    passed: bool


def disk_genus_check(surface: CombinatorialSurface, center: SurfacePoint, r: float, k: int = 8) -> GenusVerdict:
    """Genus of the certified ball subcomplex against g^c / 4 + 1 with c = r / log g."""
    if r <= 0:
        raise ValueError("radius must be positive")
    thresholds = face_thresholds(surface, center, k)
    ball = subcomplex(surface, np.nonzero(thresholds <= r)[0], center, r)
    g = surface.genus
    c = r / math.log(g)
    allowed = math.exp(r) / 4.0 + 1.0  # g ** c
    return GenusVerdict(ball, c, allowed, ball.genus <= allowed)


def _develop(surface: CombinatorialSurface, center: SurfacePoint, limit: float):
    """Copies of faces in the plane around ``center`` (moved to 0), in order of distance.

    Yields (face, placement, distance from the origin) for every copy within
    ``limit``; callers may stop early once the distance is large enough.
    """
    kv_ref = np.array(REFERENCE.vertices)
    seen = set()
    tick = count()
    start = recentering(center.z)
    heap = [(0.0, next(tick), center.face, start)]
    while heap:
        d, _, f, place = heapq.heappop(heap)
        c0 = complex(place.apply(0j))
        key = (f, round(c0.real, 9), round(c0.imag, 9))
        if key in seen:
            continue
        seen.add(key)
        yield f, place, d
        for s in range(3):
            f2 = surface.partner(f, s)[0]
            nxt = place.compose(surface.transition(f, s))
            d2 = _origin_to_triangle(klein_from_poincare(nxt.apply(kv_ref)))
            if d2 <= limit:
                heapq.heappush(heap, (d2, next(tick), f2, nxt))


def face_distances(surface: CombinatorialSurface, center: SurfacePoint, limit: float) -> np.ndarray:
    """Distance from ``center`` to every face, exact up to ``limit`` and clipped there.

    The tiling is developed into the hyperbolic plane around the centre; the
    distance to a face is the least distance to any developed copy. In the
    Klein chart centred at the point, distance to a chord is measured to its
    Euclidean foot point, so each copy costs one convex-polygon query.
    """
    out = np.full(surface.F, float(limit))
    for f, _, d in _develop(surface, center, limit):
        out[f] = min(out[f], d)
    return out


def injectivity_radius(surface: CombinatorialSurface, center: SurfacePoint) -> float:
    """Half the shortest geodesic loop at ``center``, from the nearest other copy of it in the development."""
    limit = 2.0 * (2.0 * math.asinh(math.sqrt(surface.genus - 1)) + 0.5)
    best = math.inf
    for f, place, d in _develop(surface, center, limit):
        if d >= best:
            break
        if f != center.face:
            continue
        w = complex(place.apply(center.z))
        if abs(w) > 1e-9:
            best = min(best, 2.0 * math.atanh(abs(w)))
    return best / 2.0


def _origin_to_triangle(k: np.ndarray) -> float:
    """Hyperbolic distance from the origin to a Klein-chart triangle."""
    signs = [cross2(k[(i + 1) % 3] - k[i], -k[i]) for i in range(3)]
    if all(x >= 0 for x in signs) or all(x <= 0 for x in signs):
        return 0.0
    best = 1.0
    for i in range(3):
        a, b = k[i], k[(i + 1) % 3]
        t = min(1.0, max(0.0, float(((np.conj(b - a) * (-a)).real) / abs(b - a) ** 2)))
        best = min(best, abs(a + t * (b - a)))
    return math.atanh(min(best, 1.0 - 1e-16))


@dataclass(frozen=True)
class DiskVerdict:
    estimate: float
    bound: float
    passed: bool
    ball: BallSubcomplex | None


def embedded_disk_check(
    surface: CombinatorialSurface,
    center: SurfacePoint,
    margin: float = 0.0,
    resolution: float = 0.01,
) -> DiskVerdict:
    """Grid radius r up to which the faces meeting B(center, r) form a closed disk, against log g + log 4.

    A geodesic loop at the centre of length at most 2r stays inside
    B(center, r); if that ball lies in a disk the loop would be contractible,
    which cannot happen on a hyperbolic surface. So every such r is a
    certified lower bound on the embedded-disk radius at the centre. The
    faces meeting the ball change only at face distances, which are scanned
    in increasing order; ``margin`` inflates every ball and can only lower the
    estimate.
    """
    g = surface.genus
    # area caps any embedded disk at 2 asinh(sqrt(g - 1)); look a little past it
    limit = 2.0 * math.asinh(math.sqrt(g - 1)) + 0.5
    dist = face_distances(surface, center, limit) - margin
    order = np.argsort(dist, kind="stable")
    first_bad = None
    last_disk = None
    i = 0
    while i < len(order):
        t = dist[order[i]]
        j = i
        # faces at geometrically equal distance join together; rounding must not split them
        while j < len(order) and dist[order[j]] <= t + TIE_TOL:
            j += 1
        ball = subcomplex(surface, order[:j], center, float(t))
        if not ball.is_disk:
            first_bad = float(t)
            break
        last_disk = ball
        i = j
    if first_bad is None:
        raise AssertionError("closed surface cannot be a disk")
    steps = math.ceil(first_bad / resolution) - 1
    estimate = max(0.0, round(steps * resolution, 10))
    bound = math.log(g) + math.log(4.0)
    return DiskVerdict(estimate, bound, estimate <= bound, last_disk)
