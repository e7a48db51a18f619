"""Uniform sampling and shortest paths on glued (4,4,4) surfaces.

Shortest paths are found in two stages. Dijkstra over a portal graph (k
sample points per triangulation edge) picks a strip of faces; the strip is
unfolded into one chart of the hyperbolic plane and the path is pulled taut
with a funnel pass in the Klein model, where geodesics are straight. When the
taut path wraps around a strip vertex it is rerouted through the other side of
that vertex's fan, which strictly shortens it, until it is a single chord.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path

from .hyperbolic import (
    IDENTITY,
    REFERENCE,
    Isometry,
    cross2,
    dist,
    dist_array,
    klein_from_poincare,
    poincare_from_klein,
)
from .surface import CombinatorialSurface, _corner_pairs


@dataclass(frozen=True)
class SurfacePoint:
    face: int
    z: complex


@dataclass(frozen=True)
class Segment:
    face: int
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return dist(self.start, self.end)


@dataclass(frozen=True)
class GeodesicPath:
    segments: tuple[Segment, ...]
    length: float
    bends: int = 0

    @property
    def faces(self) -> list[int]:
        return [s.face for s in self.segments]


@dataclass(frozen=True)
class PathParams:
    """Knobs for ``shortest_path``: portals per edge, candidate slack, candidate cap."""

    k: int = 8
    eps: float = 0.05
    max_candidates: int = 8
    max_repairs: int = 64


def faces_crossed(path: GeodesicPath) -> int:
    """Number of triangles met by the path, with multiplicity."""
    return len(path.segments)


# sampling ------------------------------------------------------------------

_RHO = abs(REFERENCE.vertices[0])


def sample_in_face(rng: np.random.Generator) -> complex:
    """Point of the reference triangle distributed by hyperbolic area."""
    rho2 = _RHO * _RHO
    while True:
        u, v, w = rng.random(3)
        z = _RHO * math.sqrt(u) * complex(math.cos(2 * math.pi * v), math.sin(2 * math.pi * v))
        # density 4/(1-|z|^2)^2 against its maximum on the bounding disk
        if w * (1.0 - abs(z) ** 2) ** 2 > (1.0 - rho2) ** 2:
            continue
        if REFERENCE.contains(z):
            return z


def sample_uniform(surface: CombinatorialSurface, rng: np.random.Generator) -> SurfacePoint:
    face = int(rng.integers(surface.F))
    return SurfacePoint(face, sample_in_face(rng))


def sample_points(surface: CombinatorialSurface, n: int, rng: np.random.Generator) -> list[SurfacePoint]:
    return [sample_uniform(surface, rng) for _ in range(n)]


# portal graph --------------------------------------------------------------


def portal_params(k: int) -> np.ndarray:
    return np.arange(1, k + 1) / (k + 1)


@dataclass(eq=False)
class PortalGraph:
    """k points per edge; arcs join every pair of portals on a common face."""

    surface: CombinatorialSurface
    k: int
    local_positions: np.ndarray  # (3k,) reference-chart positions, side-major
    local_ids: np.ndarray  # (F, 3k) node id of each local position
    in_face: np.ndarray  # (3k, 3k) hyperbolic distances between local positions
    arcs: dict = field(repr=False)  # (u, v) with u < v -> (face, local u, local v)
    matrix: object = field(repr=False)
    _dist: np.ndarray | None = field(default=None, repr=False)
    _pred: np.ndarray | None = field(default=None, repr=False)

    @property
    def node_count(self) -> int:
        return self.surface.E * self.k

    def all_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        if self._dist is None:
            self._dist, self._pred = _csgraph_shortest_path(
                self.matrix, method="D", directed=False, return_predecessors=True
            )
        return self._dist, self._pred

    def node_path(self, a: int, b: int) -> list[int]:
        _, pred = self.all_pairs()
        out = [b]
        row = pred[a]
        while out[-1] != a:
            nxt = row[out[-1]]
            if nxt < 0:
                raise RuntimeError(f"portal graph disconnected between {a} and {b}")
            out.append(int(nxt))
        return out[::-1]

    def point_distances(self, p: SurfacePoint) -> np.ndarray:
        """Distances from p to the 3k portals of its face."""
        return dist_array(p.z, self.local_positions)


def build_portal_graph(surface: CombinatorialSurface, k: int) -> PortalGraph:
    if k < 1:
        raise ValueError("need at least one portal per edge")
    t = portal_params(k)
    local = np.array([REFERENCE.side_point(s, ti) for s in range(3) for ti in t])
    in_face = dist_array(local[:, None], local[None, :])
    ids = np.empty((surface.F, 3 * k), dtype=np.int64)
    for e, (f, s, f2, s2, o) in enumerate(surface.edges):
        ids[f, s * k:(s + 1) * k] = e * k + np.arange(k)
        # the partner side runs the other way when glued with reversed orientation
        ids[f2, s2 * k:(s2 + 1) * k] = e * k + (np.arange(k)[::-1] if o == -1 else np.arange(k))
    iu, ju = np.triu_indices(3 * k, 1)
    w = in_face[iu, ju]
    arcs: dict = {}
    rows, cols, vals = [], [], []
    for f in range(surface.F):
        u = ids[f, iu]
        v = ids[f, ju]
        for a, b, la, lb, wt in zip(u.tolist(), v.tolist(), iu.tolist(), ju.tolist(), w.tolist()):
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            prev = arcs.get(key)
            if prev is None or wt < prev[3] - 1e-15:
                arcs[key] = (f, la, lb, wt) if a < b else (f, lb, la, wt)
    for (a, b), (_, _, _, wt) in arcs.items():
        rows.append(a)
        cols.append(b)
        vals.append(wt)
    n = surface.E * k
    matrix = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    for arr in (local, ids, in_face):
        arr.flags.writeable = False
    return PortalGraph(surface, k, local, ids, in_face, arcs, matrix)


_GRAPHS: "weakref.WeakKeyDictionary[CombinatorialSurface, dict]" = weakref.WeakKeyDictionary()


def portal_graph(surface: CombinatorialSurface, k: int) -> PortalGraph:
    """Cached ``build_portal_graph``; graphs live as long as their surface."""
    per_surface = _GRAPHS.setdefault(surface, {})
    if k not in per_surface:
        per_surface[k] = build_portal_graph(surface, k)
    return per_surface[k]


# strips --------------------------------------------------------------------


@dataclass(frozen=True)
class Strip:
    """Faces met in order, with the slot (face, side) crossed out of each but the last."""

    faces: tuple[int, ...]
    slots: tuple[tuple[int, int], ...]


def strip_from_slots(surface: CombinatorialSurface, first_face: int, slots) -> Strip:
    faces = [first_face]
    for f, s in slots:
        if f != faces[-1]:
            raise ValueError(f"slot ({f},{s}) does not leave face {faces[-1]}")
        faces.append(surface.partner(f, s)[0])
    return Strip(tuple(faces), tuple(slots))


def _cancel_backtracks(surface: CombinatorialSurface, slots) -> list:
    out: list = []
    for f, s in slots:
        if out:
            pf, ps = out[-1]
            f2, s2, _ = surface.partner(pf, ps)
            if (f2, s2) == (f, s):
                out.pop()
                continue
        out.append((f, s))
    return out


def unfold_slots(surface: CombinatorialSurface, slots) -> list[Isometry]:
    placements = [IDENTITY]
    for f, s in slots:
        placements.append(placements[-1].compose(surface.transition(f, s)))
    return placements


def unfold_strip(surface: CombinatorialSurface, faces, sides=None) -> list[Isometry]:
    """Placements putting each face of a strip into the chart of the first face.

    ``sides[i]`` picks the side of ``faces[i]`` glued to ``faces[i + 1]``; when
    omitted, the lowest such side is used.
    """
    faces = list(faces)
    slots = []
    for i in range(len(faces) - 1):
        f, g = faces[i], faces[i + 1]
        options = [s for s in range(3) if surface.partner(f, s)[0] == g]
        if not options:
            raise ValueError(f"faces {f} and {g} are not adjacent")
        if sides is not None:
            if sides[i] not in options:
                raise ValueError(f"side {sides[i]} of face {f} is not glued to face {g}")
            options = [sides[i]]
        slots.append((f, options[0]))
    return unfold_slots(surface, slots)


class _VertexHit(Exception):
    """The chord passes through a triangulation vertex (measure-zero event)."""


@dataclass
class _Funnel:
    polyline: list  # Klein points
    apex_portals: list  # portal index of each interior polyline vertex
    apex_sides: list  # 0 = left endpoint, 1 = right endpoint


def _run_funnel(portals, keys) -> _Funnel:
    """Taut path through a sequence of (left, right) Klein portals.

    ``keys[i]`` identifies the endpoints of portal i so that shared vertices
    are compared combinatorially, not by coordinates.
    """
    apex = portals[0][0]
    apex_key = keys[0][0]
    left, right = apex, apex
    left_key, right_key = apex_key, apex_key
    left_idx = right_idx = 0
    poly = [apex]
    apex_portals, apex_sides = [], []
    i = 1
    n = len(portals)
    while i < n:
        pl, pr = portals[i]
        kl, kr = keys[i]
        # right side
        if cross2(right - apex, pr - apex) >= 0.0:
            if apex_key == right_key or kr == left_key or cross2(left - apex, pr - apex) < 0.0:
                right, right_key, right_idx = pr, kr, i
            else:
                poly.append(left)
                apex_portals.append(left_idx)
                apex_sides.append(0)
                apex, apex_key = left, left_key
                right, right_key, right_idx = apex, apex_key, left_idx
                i = left_idx + 1
                continue
        # left side
        if cross2(left - apex, pl - apex) <= 0.0:
            if apex_key == left_key or kl == right_key or cross2(right - apex, pl - apex) > 0.0:
                left, left_key, left_idx = pl, kl, i
            else:
                poly.append(right)
                apex_portals.append(right_idx)
                apex_sides.append(1)
                apex, apex_key = right, right_key
                left, left_key, left_idx = apex, apex_key, right_idx
                i = right_idx + 1
                continue
        i += 1
    poly.append(portals[-1][0])
    return _Funnel(poly, apex_portals, apex_sides)


def _line_param(a, b, c, d) -> float:
    """Parameter t along c->d where line a-b meets it."""
    r = b - a
    s = d - c
    den = cross2(r, s)
    if den == 0:
        return 0.5
    return float(cross2(c - a, r) / den)


@dataclass
class _Layout:
    placements: list
    portals: list  # (left, right) Klein points incl. the two end caps
    keys: list
    corners: list  # (left corner, right corner) in the face before each crossing


def _layout(surface: CombinatorialSurface, slots, p: SurfacePoint, q: SurfacePoint) -> _Layout:
    placements = unfold_slots(surface, slots)
    mid = placements[len(placements) // 2].inverse()
    placements = [mid.compose(P) for P in placements]
    verts = REFERENCE.vertices
    portals = [(None, None)]
    corners = [(None, None)]
    centres = klein_from_poincare(np.array([P.apply(0j) for P in placements]))
    raw = []
    for i, (f, s) in enumerate(slots):
        P = placements[i]
        a = complex(klein_from_poincare(P.apply(verts[s])))
        b = complex(klein_from_poincare(P.apply(verts[(s + 1) % 3])))
        d = centres[i + 1] - centres[i]
        if cross2(d, a - centres[i]) > 0:
            raw.append((a, b, s, (s + 1) % 3))
        else:
            raw.append((b, a, (s + 1) % 3, s))
    pk = complex(klein_from_poincare(placements[0].apply(p.z)))
    qk = complex(klein_from_poincare(placements[-1].apply(q.z)))
    portals = [(pk, pk)] + [(l, r) for l, r, _, _ in raw] + [(qk, qk)]
    corners = [(None, None)] + [(cl, cr) for _, _, cl, cr in raw] + [(None, None)]
    # consecutive portals share exactly one endpoint
    keys = [("p", "p")]
    counter = 0
    for i in range(1, len(portals) - 1):
        l, r = portals[i]
        if i == 1:
            kl, kr = counter, counter + 1
            counter += 2
        else:
            pl, pr = portals[i - 1]
            pkl, pkr = keys[i - 1]
            if abs(l - pl) < 1e-9:
                kl, kr = pkl, counter
            elif abs(r - pr) < 1e-9:
                kl, kr = counter, pkr
            else:
                raise RuntimeError("consecutive portals do not share a vertex")
            counter += 1
        keys.append((kl, kr))
    keys.append(("q", "q"))
    return _Layout(placements, portals, keys, corners)


def _fan_reroute(surface: CombinatorialSurface, slots: list, faces: list, layout: _Layout, funnel: _Funnel) -> list:
    """Replace the fan run around the first bend vertex by the other side of the fan."""
    idx = funnel.apex_portals[0]
    side = funnel.apex_sides[0]
    key = layout.keys[idx][side]
    lo = idx
    while lo - 1 >= 1 and layout.keys[lo - 1][side] == key:
        lo -= 1
    hi = idx
    while hi + 1 < len(layout.keys) - 1 and layout.keys[hi + 1][side] == key:
        hi += 1
    j0, j1 = lo - 1, hi - 1  # crossing indices
    f_start = faces[j0]
    c_start = layout.corners[lo][side]
    f_last, s_last = slots[j1]
    c_last = layout.corners[hi][side]
    f_end, s_end, o = surface.partner(f_last, s_last)
    (a0, b0), (a1, b1) = _corner_pairs(s_last, s_end, o)
    c_end = b0 if a0 == c_last else b1
    orbit_i, t_start = surface.corner_position[(f_start, c_start)]
    orbit_j, t_end = surface.corner_position[(f_end, c_end)]
    assert orbit_i == orbit_j
    orbit = surface.orbits[orbit_i]
    n = len(orbit)
    forward = orbit[t_start][2] == slots[j0][1]
    alt = []
    t = t_start
    if forward:
        # original run went forward: go backwards around the vertex
        while t != t_end:
            pf, _, pside = orbit[(t - 1) % n]
            f2, s2, _ = surface.partner(pf, pside)
            alt.append((f2, s2))
            t = (t - 1) % n
    else:
        while t != t_end:
            f, _, side_out = orbit[t]
            alt.append((f, side_out))
            t = (t + 1) % n
    return slots[:j0] + alt + slots[j1 + 1:]


def _chord_path(surface, slots, faces, layout, p, q) -> GeodesicPath:
    pk = layout.portals[0][0]
    qk = layout.portals[-1][0]
    segments = []
    entry = p.z
    for i in range(1, len(layout.portals) - 1):
        l, r = layout.portals[i]
        t = _line_param(pk, qk, l, r)
        if t <= 1e-12 or t >= 1 - 1e-12:
            raise _VertexHit
        x = poincare_from_klein(l + t * (r - l))
        P = layout.placements[i - 1]
        exit_pt = complex(P.inverse().apply(x))
        segments.append(Segment(faces[i - 1], entry, exit_pt))
        entry = complex(layout.placements[i].inverse().apply(x))
    segments.append(Segment(faces[-1], entry, q.z))
    length = float(sum(dist_array(np.array([s.start for s in segments]), np.array([s.end for s in segments]))))
    return GeodesicPath(tuple(segments), length)


def _polyline_path(layout, faces, funnel, p, q) -> GeodesicPath:
    """In-strip shortest path that may bend at strip vertices."""
    poly = funnel.polyline
    marks = [0] + list(funnel.apex_portals) + [len(layout.portals) - 1]
    segments = []
    entry = p.z
    k = 0
    for i in range(1, len(layout.portals) - 1):
        while k + 1 < len(marks) - 1 and marks[k + 1] < i:
            k += 1
        a, b = poly[k], poly[k + 1]
        l, r = layout.portals[i]
        t = min(1.0, max(0.0, _line_param(a, b, l, r)))
        x = poincare_from_klein(l + t * (r - l))
        segments.append(Segment(faces[i - 1], entry, complex(layout.placements[i - 1].inverse().apply(x))))
        entry = complex(layout.placements[i].inverse().apply(x))
    segments.append(Segment(faces[-1], entry, q.z))
    length = float(sum(dist_array(np.array([s.start for s in segments]), np.array([s.end for s in segments]))))
    return GeodesicPath(tuple(segments), length, bends=len(funnel.apex_portals))


def shorten_in_strip(surface: CombinatorialSurface, strip: Strip, p: SurfacePoint, q: SurfacePoint) -> GeodesicPath:
    """Shortest path from p (first face) to q (last face) that stays inside the strip."""
    if p.face != strip.faces[0] or q.face != strip.faces[-1]:
        raise ValueError("endpoints must lie in the first and last faces of the strip")
    if not strip.slots:
        return GeodesicPath((Segment(p.face, p.z, q.z),), dist(p.z, q.z))
    layout = _layout(surface, strip.slots, p, q)
    funnel = _run_funnel(layout.portals, layout.keys)
    if not funnel.apex_portals:
        return _chord_path(surface, strip.slots, list(strip.faces), layout, p, q)
    return _polyline_path(layout, list(strip.faces), funnel, p, q)


def _taut_path(surface, slots, p, q, max_repairs) -> GeodesicPath:
    for _ in range(max_repairs):
        slots = _cancel_backtracks(surface, slots)
        faces = list(strip_from_slots(surface, p.face, slots).faces)
        if faces[-1] != q.face:
            raise RuntimeError("strip does not end at the target face")
        if not slots:
            return GeodesicPath((Segment(p.face, p.z, q.z),), dist(p.z, q.z))
        layout = _layout(surface, slots, p, q)
        funnel = _run_funnel(layout.portals, layout.keys)
        if not funnel.apex_portals:
            return _chord_path(surface, slots, faces, layout, p, q)
        slots = _fan_reroute(surface, slots, faces, layout, funnel)
    raise RuntimeError("funnel repair did not converge")


def _portal_slots(graph: PortalGraph, p: SurfacePoint, q: SurfacePoint, la: int, lb: int) -> list:
    """Crossed slots along the portal route entering at local la of p's face, leaving at lb of q's."""
    ids = graph.local_ids
    nodes = graph.node_path(int(ids[p.face, la]), int(ids[q.face, lb]))
    visits = [(p.face, None, la)]
    for u, v in zip(nodes, nodes[1:]):
        if u < v:
            f, lu, lv, _ = graph.arcs[(u, v)]
        else:
            f, lv, lu, _ = graph.arcs[(v, u)]
        visits.append((f, lu, lv))
    visits.append((q.face, lb, None))
    k = graph.k
    slots = []
    for (fx, _, out_local), (fy, in_local, _) in zip(visits, visits[1:]):
        if fx == fy and out_local == in_local:
            continue
        slots.append((fx, out_local // k))
    return slots


def shortest_path(
    surface: CombinatorialSurface,
    p: SurfacePoint,
    q: SurfacePoint,
    k: int = 8,
    eps: float = 0.05,
    params: PathParams | None = None,
) -> GeodesicPath:
    """Locally geodesic path from p to q, no longer than the best portal route."""
    params = params or PathParams(k=k, eps=eps)
    if p.face == q.face:
        if p.z == q.z:
            return GeodesicPath((), 0.0)
        return GeodesicPath((Segment(p.face, p.z, q.z),), dist(p.z, q.z))
    graph = portal_graph(surface, params.k)
    D, _ = graph.all_pairs()
    dp = graph.point_distances(p)
    dq = graph.point_distances(q)
    cost = dp[:, None] + D[np.ix_(graph.local_ids[p.face], graph.local_ids[q.face])] + dq[None, :]
    flat = np.argsort(cost, axis=None, kind="stable")
    best = cost.flat[flat[0]]
    tried = set()
    result = None
    # many portal pairs share a strip; scan the whole window for distinct ones
    for pos in flat:
        if cost.flat[pos] > best * (1.0 + params.eps) and tried:
            break
        la, lb = divmod(int(pos), cost.shape[1])
        slots = tuple(_cancel_backtracks(surface, _portal_slots(graph, p, q, la, lb)))
        if slots in tried:
            continue
        tried.add(slots)
        path = _taut_with_perturbation(surface, list(slots), p, q, params.max_repairs)
        if result is None or path.length < result.length:
            result = path
        if len(tried) >= params.max_candidates:
            break
    return result


def _taut_with_perturbation(surface, slots, p, q, max_repairs) -> GeodesicPath:
    try:
        return _taut_path(surface, slots, p, q, max_repairs)
    except _VertexHit:
        # nudge the start off the vertex-through chord and retry
        nudged = SurfacePoint(p.face, p.z * (1.0 - 1e-9) + 1e-9j * abs(p.z))
        path = _taut_path(surface, slots, nudged, q, max_repairs)
        first = path.segments[0]
        segs = (Segment(first.face, p.z, first.end),) + path.segments[1:]
        return GeodesicPath(segs, path.length - first.length + dist(p.z, first.end))


# distance upper bounds -----------------------------------------------------


def portal_field(surface: CombinatorialSurface, p: SurfacePoint, k: int = 8) -> np.ndarray:
    """Upper bounds on the distance from p to every portal node."""
    graph = portal_graph(surface, k)
    ids = graph.local_ids[p.face]
    rows = _csgraph_shortest_path(graph.matrix, method="D", directed=False, indices=ids)
    return np.min(graph.point_distances(p)[:, None] + rows, axis=0)


def face_bounds(surface: CombinatorialSurface, field: np.ndarray, targets, k: int = 8) -> np.ndarray:
    """Per-face upper bounds on the distance to reference-chart targets: shape (F, len(targets)).

    Routes through the best portal of each face, so the result is the length of an actual path.
    """
    graph = portal_graph(surface, k)
    local = dist_array(graph.local_positions[:, None], np.asarray(targets, dtype=complex)[None, :])
    return np.min(field[graph.local_ids][:, :, None] + local[None, :, :], axis=1)


def surface_diameter_estimate(
    surface: CombinatorialSurface,
    sample_count: int = 16,
    portal_density: int = 8,
    seed: int = 0,
) -> float:
    """Largest portal-route distance from sampled sources to sources, vertices and face centroids.

    Every distance used is the length of a real path, so each is an upper bound
    on the true distance; refining the portal set in a nested way (k to 2k+1)
    can only lower it.
    """
    rng = np.random.default_rng(seed)
    sources = sample_points(surface, sample_count, rng)
    targets = np.array(list(REFERENCE.vertices) + [0j])
    best = 0.0
    for src in sources:
        field = portal_field(surface, src, portal_density)
        bounds = face_bounds(surface, field, targets, portal_density)
        own = dist_array(src.z, targets)
        bounds[src.face] = np.minimum(bounds[src.face], own)
        vertex = np.full(surface.V, np.inf)
        np.minimum.at(vertex, surface.corner_vertex.ravel(), bounds[:, :3].ravel())
        best = max(best, float(vertex.max()), float(bounds[:, 3].max()))
        for other in sources:
            best = max(best, _point_bound(surface, field, src, other, portal_density))
    return best


def _point_bound(surface, field, src: SurfacePoint, dst: SurfacePoint, k: int) -> float:
    graph = portal_graph(surface, k)
    via = float(np.min(field[graph.local_ids[dst.face]] + graph.point_distances(dst)))
    if src.face == dst.face:
        return min(via, dist_array(src.z, dst.z).item())
    return via
