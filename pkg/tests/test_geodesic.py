import math

import numpy as np
import pytest
from scipy import optimize, stats

from crosslab.drawing import Drawing, validate_drawing
from crosslab.geodesic import (
    PathParams,
    Strip,
    SurfacePoint,
    build_portal_graph,
    faces_crossed,
    portal_graph,
    sample_in_face,
    sample_points,
    sample_uniform,
    shorten_in_strip,
    shortest_path,
    strip_from_slots,
    unfold_slots,
    unfold_strip,
)
from crosslab.hyperbolic import (
    IDENTITY,
    REFERENCE,
    dist,
    dist_array,
    disk_area,
    inradius,
    klein_from_poincare,
    poincare_from_klein,
    SIDE_LENGTH,
)


def portal_optimum(surface, p, q, k):
    g = portal_graph(surface, k)
    D, _ = g.all_pairs()
    block = D[np.ix_(g.local_ids[p.face], g.local_ids[q.face])]
    return float(np.min(g.point_distances(p)[:, None] + block + g.point_distances(q)[None, :]))


def crossed_sides(surface, path):
    """Side of each segment's face through which the path leaves it."""
    kv = REFERENCE.klein_vertices()
    out = []
    for seg in path.segments[:-1]:
        k = complex(klein_from_poincare(seg.end))
        scores = [abs(((kv[(s + 1) % 3] - kv[s]).conjugate() * (k - kv[s])).imag) for s in range(3)]
        out.append(int(np.argmin(scores)))
    return out


def random_pairs(surface, count, seed):
    rng = np.random.default_rng(seed)
    return [(sample_uniform(surface, rng), sample_uniform(surface, rng)) for _ in range(count)]


class TestSampling:
    def test_face_histogram_uniform(self, genus2):
        rng = np.random.default_rng(1)
        faces = np.array([sample_uniform(genus2, rng).face for _ in range(100_000)])
        counts = np.bincount(faces, minlength=genus2.F)
        assert stats.chisquare(counts).pvalue > 0.001

    def test_radial_law_on_inscribed_disk(self):
        # inside the inscribed disk of radius rho, P(d(0, z) <= r) = area(r) / area(rho)
        rho = inradius(SIDE_LENGTH)
        rng = np.random.default_rng(2)
        pts = np.array([sample_in_face(rng) for _ in range(40_000)])
        r = 2 * np.arctanh(np.abs(pts))
        r = r[r < rho]
        cdf = lambda x: np.array([disk_area(t) for t in np.atleast_1d(x)]) / disk_area(rho)
        assert len(r) > 5_000
        assert stats.kstest(r, cdf).pvalue > 0.001

    def test_points_inside_reference(self):
        rng = np.random.default_rng(3)
        pts = np.array([sample_in_face(rng) for _ in range(2000)])
        assert np.all(REFERENCE.contains(pts))

    def test_seeded(self, genus2):
        a = sample_points(genus2, 20, np.random.default_rng(7))
        b = sample_points(genus2, 20, np.random.default_rng(7))
        assert a == b


class TestPortalGraph:
    def test_node_count(self, genus2):
        assert build_portal_graph(genus2, 4).node_count == 96
        assert build_portal_graph(genus2, 4).matrix.shape == (96, 96)

    def test_weights_positive_and_symmetric(self, genus2):
        g = build_portal_graph(genus2, 4)
        m = g.matrix.toarray()
        assert np.all(m[m != 0] > 0)
        # each arc is stored once (u < v) and searched as undirected
        assert not np.any(np.tril(m))
        for (u, v), (f, lu, lv, *_rest) in g.arcs.items():
            assert m[u, v] == pytest.approx(g.in_face[lu, lv]) and g.in_face[lu, lv] == g.in_face[lv, lu]

    def test_every_node_reaches_both_faces(self, genus2):
        g = build_portal_graph(genus2, 3)
        faces_of = {}
        for (u, v), (f, *_rest) in g.arcs.items():
            faces_of.setdefault(u, set()).add(f)
            faces_of.setdefault(v, set()).add(f)
        assert len(faces_of) == g.node_count
        assert all(len(fs) == 2 for fs in faces_of.values())

    def test_nested_refinement(self, genus2):
        # k -> 2k + 1 keeps every old portal, so route lengths can only drop
        for p, q in random_pairs(genus2, 30, 4):
            assert portal_optimum(genus2, p, q, 7) <= portal_optimum(genus2, p, q, 3) + 1e-12

    def test_rejects_zero(self, genus2):
        with pytest.raises(ValueError):
            build_portal_graph(genus2, 0)


class TestShortestPath:
    def test_same_point(self, genus2):
        p = SurfacePoint(3, 0.1 + 0.05j)
        path = shortest_path(genus2, p, p)
        assert path.segments == () and path.length == 0.0
        assert faces_crossed(path) == 0

    def test_same_face(self, genus2):
        p, q = SurfacePoint(3, 0.1 + 0.05j), SurfacePoint(3, -0.2j)
        path = shortest_path(genus2, p, q)
        assert faces_crossed(path) == 1
        assert path.length == pytest.approx(dist(p.z, q.z))

    def test_invariants(self, genus3):
        pairs = random_pairs(genus3, 60, 5)
        paths = tuple(shortest_path(genus3, p, q) for p, q in pairs)
        vertices = tuple(x for pair in pairs for x in pair)
        edges = tuple((2 * i, 2 * i + 1) for i in range(len(pairs)))
        assert validate_drawing(Drawing(vertices, edges, paths, genus3.F), genus3) == []

    def test_no_longer_than_portal_route(self, genus2):
        for p, q in random_pairs(genus2, 10_000, 6):
            path = shortest_path(genus2, p, q)
            if p.face != q.face:
                assert path.length <= portal_optimum(genus2, p, q, 8) + 1e-9

    def test_locally_geodesic(self, genus5):
        worst = 0.0
        for p, q in random_pairs(genus5, 200, 7):
            path = shortest_path(genus5, p, q)
            for seg, nxt, side in zip(path.segments, path.segments[1:], crossed_sides(genus5, path)):
                t = genus5.transition(seg.face, side)
                a, b = klein_from_poincare(np.array([seg.start, seg.end]))
                c = complex(klein_from_poincare(t.apply(nxt.end)))
                turn = abs(np.angle((c - b) / (b - a))) if abs(c - b) > 1e-12 and abs(b - a) > 1e-12 else 0.0
                worst = max(worst, turn)
        assert worst < 1e-6

    def test_lower_bound_in_face(self, genus2):
        for p, q in random_pairs(genus2, 200, 8):
            if p.face == q.face:
                assert shortest_path(genus2, p, q).length >= dist(p.z, q.z) - 1e-12

    def test_symmetric(self, genus2):
        for p, q in random_pairs(genus2, 100, 9):
            assert shortest_path(genus2, p, q).length == pytest.approx(shortest_path(genus2, q, p).length, abs=1e-6)

    def test_dense_portal_oracle(self, genus2):
        for p, q in random_pairs(genus2, 100, 10):
            coarse = shortest_path(genus2, p, q, params=PathParams(k=8)).length
            fine = shortest_path(genus2, p, q, params=PathParams(k=64)).length
            assert coarse <= fine * 1.02 + 1e-12

    def test_refinement_within_slack(self, genus2):
        for p, q in random_pairs(genus2, 50, 11):
            assert shortest_path(genus2, p, q, params=PathParams(k=7)).length <= (
                shortest_path(genus2, p, q, params=PathParams(k=3)).length * 1.02
            )


class TestUnfold:
    def test_single_face(self, genus2):
        assert unfold_strip(genus2, [4]) == [IDENTITY]

    def test_back_and_forth(self, genus2):
        f2 = genus2.partner(0, 1)[0]
        places = unfold_strip(genus2, [0, f2, 0], sides=[1, genus2.partner(0, 1)[1]])
        assert places[0].close_to(places[2], 1e-12)

    def test_not_adjacent(self, genus5):
        nb = set(genus5.dual_graph()[0])
        other = next(f for f in range(genus5.F) if f not in nb and f != 0)
        with pytest.raises(ValueError):
            unfold_strip(genus5, [0, other])

    def test_long_random_strips(self, genus5):
        rng = np.random.default_rng(12)
        v = np.array(REFERENCE.vertices)
        worst = 0.0
        for _ in range(50):
            f = int(rng.integers(genus5.F))
            slots = []
            for _ in range(20):
                s = int(rng.integers(3))
                slots.append((f, s))
                f = genus5.partner(f, s)[0]
            places = unfold_slots(genus5, slots)
            for i, (fa, s) in enumerate(slots):
                _, s2, _ = genus5.partner(fa, s)
                here = places[i].apply(v[[s, (s + 1) % 3]])
                there = places[i + 1].apply(v[[s2, (s2 + 1) % 3]])
                worst = max(worst, min(np.max(np.abs(here - there)), np.max(np.abs(here - there[::-1]))))
        assert worst < 1e-8


def _strip_oracle(surface, slots, p, q):
    """Shortest path inside a strip by direct optimization over edge crossing points."""
    places = unfold_slots(surface, slots)
    v = np.array(REFERENCE.vertices)
    ends = []
    for i, (f, s) in enumerate(slots):
        ends.append(klein_from_poincare(places[i].apply(v[[s, (s + 1) % 3]])))
    a = p.z
    b = complex(places[-1].apply(q.z))

    def length(t):
        pts = [a] + [poincare_from_klein(e0 + ti * (e1 - e0)) for (e0, e1), ti in zip(ends, t)] + [b]
        pts = np.array(pts)
        return float(np.sum(dist_array(pts[:-1], pts[1:])))

    best = math.inf
    for start in (0.5, 0.25, 0.75):
        res = optimize.minimize(length, np.full(len(slots), start), method="L-BFGS-B",
                                bounds=[(0.0, 1.0)] * len(slots), options={"ftol": 1e-14, "gtol": 1e-10})
        res = optimize.minimize(length, res.x, method="Powell", bounds=[(0.0, 1.0)] * len(slots),
                                options={"xtol": 1e-12, "ftol": 1e-15, "maxfev": 200_000})
        best = min(best, res.fun)
    return best


class TestShortenInStrip:
    def test_matches_optimizer(self, genus3):
        for p, q in random_pairs(genus3, 40, 13):
            if p.face == q.face:
                continue
            path = shortest_path(genus3, p, q)
            slots = list(zip(path.faces[:-1], crossed_sides(genus3, path)))
            strip = strip_from_slots(genus3, p.face, slots)
            tight = shorten_in_strip(genus3, strip, p, q)
            assert tight.length == pytest.approx(_strip_oracle(genus3, slots, p, q), abs=1e-6)

    def test_funnel_pivots_in_bent_strip(self, genus3):
        # a fan of faces round one vertex: the chord between the two ends leaves it
        orbit = genus3.orbits[0]
        slots = [(f, side) for f, _, side in orbit[:5]]
        strip = strip_from_slots(genus3, slots[0][0], slots)
        p = SurfacePoint(strip.faces[0], 0j)
        q = SurfacePoint(strip.faces[-1], 0j)
        bent = shorten_in_strip(genus3, strip, p, q)
        assert bent.length == pytest.approx(_strip_oracle(genus3, slots, p, q), abs=1e-6)
        assert bent.bends >= 1

    def test_two_faces(self, genus2):
        f, s = 0, 0
        f2, s2, _ = genus2.partner(f, s)
        p = SurfacePoint(f, 0.6 * REFERENCE.side_point(s, 0.3))
        q = SurfacePoint(f2, 0.6 * REFERENCE.side_point(s2, 0.6))
        path = shorten_in_strip(genus2, Strip((f, f2), ((f, s),)), p, q)
        assert path.bends == 0 and faces_crossed(path) == 2
        assert path.length < portal_optimum(genus2, p, q, 1)

    def test_endpoint_faces_checked(self, genus2):
        with pytest.raises(ValueError):
            shorten_in_strip(genus2, Strip((0,), ()), SurfacePoint(1, 0j), SurfacePoint(0, 0j))
