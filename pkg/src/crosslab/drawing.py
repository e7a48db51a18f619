"""Geodesic drawings of graphs on glued surfaces: crossings and congestion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geodesic import GeodesicPath, PathParams, Segment, SurfacePoint, sample_points, shortest_path
from .hyperbolic import REFERENCE, klein_from_poincare
from .surface import CombinatorialSurface

EDGE_TOUCH_TOL = 1e-12


@dataclass(frozen=True)
class Drawing:
    vertices: tuple[SurfacePoint, ...]
    edges: tuple[tuple[int, int], ...]
    paths: tuple[GeodesicPath, ...]
    faces: int

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    def buckets(self) -> dict[int, list[tuple[int, Segment]]]:
        """Segments grouped by face as (edge index, segment)."""
        out: dict[int, list] = {}
        for e, path in enumerate(self.paths):
            for seg in path.segments:
                out.setdefault(seg.face, []).append((e, seg))
        return out

    def segment_count(self) -> int:
        return sum(len(p.segments) for p in self.paths)


@dataclass(frozen=True)
class CrossingReport:
    total: int
    per_face: dict
    degenerate_events: int
    # edge pairs crossing more than once, against the at-most-once rule for geodesics
    repeat_pairs: int = 0


@dataclass(frozen=True)
class CongestionReport:
    per_face: np.ndarray
    max: int
    sum: int


def draw_graph(
    surface: CombinatorialSurface,
    edges,
    points,
    params: PathParams | None = None,
) -> Drawing:
    """Draw a simple graph with given vertex positions, one shortest path per edge."""
    params = params or PathParams()
    points = tuple(points)
    seen = set()
    for p in points:
        key = (p.face, p.z)
        if key in seen:
            raise ValueError(f"duplicate vertex position {key}")
        seen.add(key)
    clean = []
    pairs = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in pairs:
            raise ValueError(f"multi-edge {key}")
        if not (0 <= u < len(points) and 0 <= v < len(points)):
            raise ValueError(f"edge {key} references a missing vertex")
        pairs.add(key)
        clean.append(key)
    paths = tuple(shortest_path(surface, points[u], points[v], params=params) for u, v in clean)
    return Drawing(points, tuple(clean), paths, surface.F)


def random_geometric_drawing(
    surface: CombinatorialSurface,
    n: int,
    rng: np.random.Generator,
    params: PathParams | None = None,
) -> Drawing:
    """K_n on n uniformly sampled points, every edge a shortest path."""
    if n < 1:
        raise ValueError("need at least one vertex")
    points = sample_points(surface, n, rng)
    return draw_graph(surface, combinations(range(n), 2), points, params)


# crossing counting ---------------------------------------------------------


def _orient(a, b, c):
    return (np.conj(b - a) * (c - a)).imag


def _on_side(z: complex) -> int | None:
    """Side of the reference triangle that z lies on, if any."""
    k = complex(klein_from_poincare(z))
    kv = REFERENCE.klein_vertices()
    for s in range(3):
        a, b = kv[s], kv[(s + 1) % 3]
        if abs(_orient(a, b, k)) <= 1e-12:
            return s
    return None


def _face_crossings(items, edges, face: int, surface, block: int = 512) -> tuple[int, int, list]:
    """Proper crossings among the segments in one face, plus degenerate events.

    Returns (count, degenerate, crossing edge pairs).
    """
    n = len(items)
    if n < 2:
        return 0, 0, []
    eid = np.array([e for e, _ in items])
    a = klein_from_poincare(np.array([s.start for _, s in items]))
    b = klein_from_poincare(np.array([s.end for _, s in items]))
    count = 0
    degenerate = 0
    pairs = []
    for lo in range(0, n, block):
        rows = np.arange(lo, min(n, lo + block))
        ai, bi = a[rows, None], b[rows, None]
        aj, bj = a[None, :], b[None, :]
        upper = (np.arange(n)[None, :] > rows[:, None]) & (eid[None, :] != eid[rows, None])
        d1 = _orient(ai, bi, aj)
        d2 = _orient(ai, bi, bj)
        d3 = _orient(aj, bj, ai)
        d4 = _orient(aj, bj, bi)
        # chords with a common endpoint never cross properly, whatever the rounding of the
        # orientation at that endpoint says
        near = np.minimum(
            np.minimum(np.abs(ai - aj), np.abs(ai - bj)), np.minimum(np.abs(bi - aj), np.abs(bi - bj))
        )
        touching = near <= EDGE_TOUCH_TOL
        proper = upper & ~touching & (d1 * d2 < 0) & (d3 * d4 < 0)
        ii, jj = np.nonzero(proper)
        count += len(ii)
        pairs.extend(zip(eid[rows[ii]].tolist(), eid[jj].tolist()))
        # exactly overlapping chords
        degenerate += int((upper & (d1 == 0) & (d2 == 0)).sum())
        # shared endpoints: two paths meeting exactly on a side of this face
        ti, tj = np.nonzero(upper & touching)
        for i, j in zip(rows[ti].tolist(), tj.tolist()):
            if set(edges[eid[i]]) & set(edges[eid[j]]):
                continue
            si, sj = items[i][1], items[j][1]
            for zi in (si.start, si.end):
                side = _on_side(zi)
                if side is None or min(abs(zi - sj.start), abs(zi - sj.end)) > EDGE_TOUCH_TOL:
                    continue
                if face <= surface.partner(face, side)[0]:
                    degenerate += 1
                    count += 1
                    pairs.append((int(eid[i]), int(eid[j])))
                break
    return count, degenerate, pairs


def count_crossings(drawing: Drawing, surface: CombinatorialSurface) -> CrossingReport:
    """Crossings of the drawing, counted face by face in the Klein chart."""
    per_face = {}
    degenerate = 0
    pair_counts: dict = {}
    for face, items in drawing.buckets().items():
        c, d, pairs = _face_crossings(items, drawing.edges, face, surface)
        if c:
            per_face[face] = c
        degenerate += d
        for e1, e2 in pairs:
            key = (min(e1, e2), max(e1, e2))
            pair_counts[key] = pair_counts.get(key, 0) + 1
    repeats = sum(1 for v in pair_counts.values() if v > 1)
    return CrossingReport(sum(per_face.values()), per_face, degenerate, repeats)


def congestion(drawing: Drawing) -> CongestionReport:
    per_face = np.zeros(drawing.faces, dtype=np.int64)
    for path in drawing.paths:
        for seg in path.segments:
            per_face[seg.face] += 1
    return CongestionReport(per_face, int(per_face.max(initial=0)), int(per_face.sum()))


def congestion_bound(drawing: Drawing) -> int:
    """Max congestion squared times the number of faces."""
    rep = congestion(drawing)
    return rep.max ** 2 * drawing.faces


def pairwise_bound(drawing: Drawing) -> int:
    """Sum over faces of C(con(T), 2): the per-face pair budget."""
    con = congestion(drawing).per_face
    return int((con * (con - 1) // 2).sum())


def normalized_crossings(crossings: float, n: int, g: int) -> float:
    return crossings * g / (n ** 4 * math.log(g + 1) ** 2)


# serialization -------------------------------------------------------------


def drawing_to_dict(drawing: Drawing) -> dict:
    return {
        "faces": drawing.faces,
        "vertices": [[p.face, p.z.real, p.z.imag] for p in drawing.vertices],
        "edges": [
            {
                "u": u,
                "v": v,
                "length": path.length,
                "segments": [[s.face, s.start.real, s.start.imag, s.end.real, s.end.imag] for s in path.segments],
            }
            for (u, v), path in zip(drawing.edges, drawing.paths)
        ],
    }


def drawing_from_dict(doc: dict) -> Drawing:
    vertices = tuple(SurfacePoint(int(f), complex(x, y)) for f, x, y in doc["vertices"])
    edges, paths = [], []
    for e in doc["edges"]:
        edges.append((int(e["u"]), int(e["v"])))
        segs = tuple(Segment(int(f), complex(x0, y0), complex(x1, y1)) for f, x0, y0, x1, y1 in e["segments"])
        paths.append(GeodesicPath(segs, float(e["length"])))
    return Drawing(vertices, tuple(edges), tuple(paths), int(doc["faces"]))


def dumps_drawing(drawing: Drawing) -> str:
    # repr-precision floats make the document replayable bit for bit
    return json.dumps(drawing_to_dict(drawing), indent=1)


def loads_drawing(text: str) -> Drawing:
    return drawing_from_dict(json.loads(text))


# validation ----------------------------------------------------------------


def validate_drawing(drawing: Drawing, surface: CombinatorialSurface, tol: float = 1e-8) -> list[str]:
    """Names and details of every broken drawing invariant; empty when the drawing is valid."""
    problems = []
    if drawing.faces != surface.F:
        problems.append(f"face_count: drawing has {drawing.faces} faces, surface has {surface.F}")
        return problems
    keys = set()
    for u, v in drawing.edges:
        key = (min(u, v), max(u, v))
        if u == v or key in keys or not (0 <= u < drawing.n and 0 <= v < drawing.n):
            problems.append(f"simple_graph: bad edge ({u}, {v})")
        keys.add(key)
    for e, ((u, v), path) in enumerate(zip(drawing.edges, drawing.paths)):
        segs = path.segments
        if not segs:
            if drawing.vertices[u] != drawing.vertices[v]:
                problems.append(f"edge_endpoints: edge {e} is empty but its ends differ")
            continue
        pu, pv = drawing.vertices[u], drawing.vertices[v]
        if segs[0].face != pu.face or abs(segs[0].start - pu.z) > tol:
            problems.append(f"edge_endpoints: edge {e} does not start at vertex {u}")
        if segs[-1].face != pv.face or abs(segs[-1].end - pv.z) > tol:
            problems.append(f"edge_endpoints: edge {e} does not end at vertex {v}")
        for seg in segs:
            if not (0 <= seg.face < surface.F) or not np.all(REFERENCE.contains([seg.start, seg.end], 1e-9)):
                problems.append(f"segment_in_face: edge {e} has a segment outside face {seg.face}")
                break
        else:
            for i, (a, b) in enumerate(zip(segs, segs[1:])):
                side = _on_side_tol(a.end, 1e-9)
                if side is None:
                    problems.append(f"path_continuity: edge {e} segment {i} ends inside its face")
                    break
                f2 = surface.partner(a.face, side)[0]
                there = complex(surface.transition(a.face, side).inverse().apply(a.end))
                if f2 != b.face or abs(there - b.start) > tol:
                    problems.append(f"path_continuity: edge {e} breaks between segments {i} and {i + 1}")
                    break
            total = sum(s.length for s in segs)
            if abs(total - path.length) > tol * max(1.0, total):
                problems.append(f"length_additivity: edge {e} records {path.length}, segments sum to {total}")
    return problems


def _on_side_tol(z: complex, tol: float) -> int | None:
    k = complex(klein_from_poincare(z))
    kv = REFERENCE.klein_vertices()
    scores = [abs(_orient(kv[s], kv[(s + 1) % 3], k)) for s in range(3)]
    s = int(np.argmin(scores))
    return s if scores[s] <= tol else None
