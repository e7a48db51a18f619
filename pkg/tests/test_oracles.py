import math
from itertools import combinations

import numpy as np
import pytest

from crosslab.drawing import Drawing, draw_graph, random_geometric_drawing
from crosslab.geodesic import SurfacePoint
from crosslab.oracles import (
    HONEYCOMB,
    SQUARE,
    TorusLattice,
    global_crossing_oracle,
    minor_arcs_cross,
    moon_expectation,
    sample_sphere,
    shortest_representatives,
    sphere_crossings,
    sphere_drawing,
    torus_crossings,
    torus_drawing,
)


def unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def on_minor_arc(p, a, b):
    angle = lambda x, y: math.acos(max(-1.0, min(1.0, float(x @ y))))
    return abs(angle(a, p) + angle(p, b) - angle(a, b)) < 1e-9


def arcs_cross_by_membership(a, b, c, d):
    """The great circles meet at +-P; the arcs cross iff one of those lies on both."""
    p = unit(np.cross(np.cross(a, b), np.cross(c, d)))
    return any(on_minor_arc(s * p, a, b) and on_minor_arc(s * p, c, d) for s in (1, -1))


def segments_cross(p, r, q, s):
    den = (np.conj(r) * s).imag
    if abs(den) < 1e-15:
        return False
    t = (np.conj(q - p) * s).imag / den
    u = (np.conj(q - p) * r).imag / den
    return 0 < t < 1 and 0 < u < 1


def torus_brute_force(lattice, points):
    """Unroll into the plane: count translates of each edge crossed by each other edge."""
    offsets = [lattice.from_coords(i, j) for i in range(-4, 5) for j in range(-4, 5)]
    rep = {}
    for u, v in combinations(range(len(points)), 2):
        rep[u, v] = min((points[v] + w - points[u] for w in offsets), key=abs)
    total = 0
    for (e, f) in combinations(rep, 2):
        if set(e) & set(f):
            continue
        total += sum(segments_cross(points[e[0]], rep[e], points[f[0]] + w, rep[f]) for w in offsets)
    return total


class TestSphere:
    def test_small(self, rng):
        assert sphere_drawing(2, rng) == 0
        assert sphere_drawing(3, rng) == 0

    def test_bad_n(self, rng):
        with pytest.raises(ValueError):
            sphere_drawing(1, rng)

    def test_samples_are_unit(self, rng):
        x = sample_sphere(50, rng)
        assert np.allclose(np.linalg.norm(x, axis=1), 1.0)

    def test_tuple_probability(self):
        rng = np.random.default_rng(0)
        n = 1_000_000
        a, b, c, d = (unit(rng.standard_normal((n, 3))) for _ in range(4))
        rate = minor_arcs_cross(a, b, c, d).mean()
        sigma = math.sqrt(0.125 * 0.875 / n)
        assert abs(rate - 0.125) < 3 * sigma

    def test_against_membership(self):
        rng = np.random.default_rng(1)
        for _ in range(2000):
            a, b, c, d = unit(rng.standard_normal((4, 3)))
            assert bool(minor_arcs_cross(a, b, c, d)) == arcs_cross_by_membership(a, b, c, d)

    def test_symmetries(self):
        rng = np.random.default_rng(2)
        a, b, c, d = (unit(rng.standard_normal((5000, 3))) for _ in range(4))
        base = minor_arcs_cross(a, b, c, d)
        assert np.array_equal(base, minor_arcs_cross(c, d, a, b))
        assert np.array_equal(base, minor_arcs_cross(b, a, c, d))
        assert np.array_equal(base, minor_arcs_cross(a, b, d, c))

    def test_shared_endpoint_never_counts(self):
        rng = np.random.default_rng(3)
        a, b, d = (unit(rng.standard_normal((5000, 3))) for _ in range(3))
        assert not minor_arcs_cross(a, b, a, d).any()

    def test_counts_only_independent_pairs(self):
        rng = np.random.default_rng(4)
        pts = unit(rng.standard_normal((7, 3)))
        brute = 0
        for e, f in combinations(combinations(range(7), 2), 2):
            if not set(e) & set(f):
                brute += arcs_cross_by_membership(pts[e[0]], pts[e[1]], pts[f[0]], pts[f[1]])
        assert sphere_crossings(pts) == brute

    def test_mean_near_expectation(self):
        rng = np.random.default_rng(5)
        counts = [sphere_drawing(12, rng) for _ in range(200)]
        assert np.mean(counts) == pytest.approx(moon_expectation(12), rel=0.05)


class TestTorus:
    def test_small(self, rng):
        assert torus_drawing(2, SQUARE, rng).crossings == 0
        assert torus_drawing(3, HONEYCOMB, rng).crossings == 0

    def test_dependent_lattice(self):
        with pytest.raises(ValueError):
            TorusLattice("flat", 1 + 0j, 2 + 0j)

    def test_representatives_are_shortest(self):
        rng = np.random.default_rng(6)
        delta = rng.uniform(-3, 3, 500) + 1j * rng.uniform(-3, 3, 500)
        for lattice in (SQUARE, HONEYCOMB):
            rep, _, _ = shortest_representatives(lattice, delta)
            u, v = lattice.to_coords(rep - delta)
            assert np.allclose(u, np.round(u)) and np.allclose(v, np.round(v))
            offsets = np.array([lattice.from_coords(i, j) for i in range(-5, 6) for j in range(-5, 6)])
            brute = np.abs(lattice.reduce(delta)[:, None] + offsets[None, :]).min(axis=1)
            assert np.allclose(np.abs(rep), brute)

    @pytest.mark.parametrize("lattice", [SQUARE, HONEYCOMB], ids=["square", "honeycomb"])
    def test_brute_force(self, lattice):
        rng = np.random.default_rng(7)
        for _ in range(5):
            uv = rng.random((7, 2))
            pts = lattice.from_coords(uv[:, 0], uv[:, 1])
            assert torus_crossings(lattice, pts).crossings == torus_brute_force(lattice, pts)

    def test_n4_square(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            uv = rng.random((4, 2))
            pts = SQUARE.from_coords(uv[:, 0], uv[:, 1])
            assert torus_crossings(SQUARE, pts).crossings == torus_brute_force(SQUARE, pts)

    def test_translation_invariant(self):
        rng = np.random.default_rng(9)
        uv = rng.random((10, 2))
        pts = HONEYCOMB.from_coords(uv[:, 0], uv[:, 1])
        shifted = HONEYCOMB.reduce(pts + (0.37 - 0.21j))
        assert torus_crossings(HONEYCOMB, pts).crossings == torus_crossings(HONEYCOMB, shifted).crossings


class TestGlobalOracle:
    def test_empty(self, genus2):
        assert global_crossing_oracle(Drawing((), (), (), genus2.F)).crossings == 0

    def test_one_crossing(self, genus2):
        pts = [SurfacePoint(2, -0.2), SurfacePoint(2, 0.2), SurfacePoint(2, -0.2j), SurfacePoint(2, 0.2j)]
        count = global_crossing_oracle(draw_graph(genus2, [(0, 1), (2, 3)], pts))
        assert (count.crossings, count.touches) == (1, 0)

    def test_disjoint_faces(self, genus2):
        pts = [SurfacePoint(2, -0.2), SurfacePoint(2, 0.2), SurfacePoint(3, -0.2j), SurfacePoint(3, 0.2j)]
        assert global_crossing_oracle(draw_graph(genus2, [(0, 1), (2, 3)], pts)).crossings == 0

    def test_shared_endpoint_is_touch(self, genus2):
        pts = [SurfacePoint(2, 0j), SurfacePoint(2, 0.2), SurfacePoint(2, 0.2j)]
        count = global_crossing_oracle(draw_graph(genus2, [(0, 1), (0, 2)], pts))
        assert count.crossings == 0

    def test_edge_order_irrelevant(self, genus3):
        d = random_geometric_drawing(genus3, 7, np.random.default_rng(10))
        order = np.random.default_rng(11).permutation(d.m)
        moved = Drawing(d.vertices, tuple(d.edges[i] for i in order), tuple(d.paths[i] for i in order), d.faces)
        assert global_crossing_oracle(moved) == global_crossing_oracle(d)
