import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from crosslab.hyperbolic import (
    IDENTITY,
    REFERENCE,
    SIDE_LENGTH,
    DomainError,
    circumradius,
    dist,
    disk_area,
    inradius,
    isometry_from_pairs,
    klein_from_poincare,
    poincare_from_klein,
    recentering,
    rotation,
    tangent_triangle_angles,
    triangle_angle,
)


def disk_points(max_radius=0.95):
    return st.builds(
        lambda r, t: r * cmath.exp(1j * t),
        st.floats(0.0, max_radius),
        st.floats(0.0, 2 * math.pi),
    )


def random_disk(rng, size, max_radius=0.95):
    return max_radius * np.sqrt(rng.random(size)) * np.exp(2j * np.pi * rng.random(size))


def random_isometry(rng):
    p = complex(random_disk(rng, 1, 0.8)[0])
    f = rotation(rng.uniform(0, 2 * math.pi)).compose(recentering(p))
    return f.compose(isometry_from_pairs(0, 0.1, 0, 0.1, reflect=True)) if rng.random() < 0.5 else f


class TestDistance:
    def test_zero(self):
        assert dist(0, 0) == 0.0

    def test_closed_form_on_axis(self):
        # d(0, r) = ln((1 + r) / (1 - r))
        assert dist(0, 0.5) == pytest.approx(math.log(3.0), abs=1e-12)
        assert dist(0, 0.5) == pytest.approx(1.0986123, abs=1e-7)

    def test_symmetric_on_random_pairs(self, rng):
        p, q = random_disk(rng, 1000), random_disk(rng, 1000)
        for a, b in zip(p, q):
            assert dist(a, b) == dist(b, a)

    @given(disk_points(), disk_points(), disk_points())
    def test_triangle_inequality(self, a, b, c):
        assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9

    @given(disk_points(), disk_points())
    def test_zero_iff_equal(self, a, b):
        assert dist(a, a) == 0.0
        assume(abs(a - b) > 1e-100)
        assert dist(a, b) > 0.0

    def test_outside_disk_rejected(self):
        with pytest.raises(DomainError):
            dist(0, 1.0)
        with pytest.raises(DomainError):
            dist(1.2j, 0)


class TestDiskArea:
    def test_values(self):
        assert disk_area(0) == 0.0
        # sinh(1/2) summed from its Taylor series, independent of math.sinh
        s = sum(0.5 ** (2 * k + 1) / math.factorial(2 * k + 1) for k in range(20))
        assert disk_area(1.0) == pytest.approx(4 * math.pi * s * s, rel=1e-14)
        assert disk_area(1.0) == pytest.approx(3.41228, abs=1e-5)

    def test_exceeds_euclidean_area(self):
        assert math.pi * 4 == pytest.approx(12.566, abs=1e-3)
        assert disk_area(2.0) == pytest.approx(17.35539, abs=1e-5)
        assert math.pi * 4 <= disk_area(2.0)

    @given(st.floats(0.0, 20.0))
    def test_bracketed(self, r):
        assert math.pi * r * r <= disk_area(r) * (1 + 1e-12)
        assert disk_area(r) / (math.pi * math.exp(r)) <= 1.0

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            disk_area(-0.1)


class TestTriangleAngle:
    def test_reference_side(self):
        assert SIDE_LENGTH == pytest.approx(1.5285709, abs=1e-7)
        assert triangle_angle(SIDE_LENGTH, SIDE_LENGTH, SIDE_LENGTH) == pytest.approx(math.pi / 4, abs=1e-12)

    def test_unit_equilateral(self):
        c = math.cosh(1.0)
        expected = math.acos(c * (c - 1) / math.sinh(1.0) ** 2)
        assert triangle_angle(1, 1, 1) == pytest.approx(expected, abs=1e-12)
        assert triangle_angle(1, 1, 1) == pytest.approx(0.9188, abs=1e-4)

    def test_degenerate_limit(self):
        assert triangle_angle(1e-9, 1.0, 1.0) < 1e-8

    def test_unrealizable(self):
        with pytest.raises(DomainError):
            triangle_angle(5.0, 1.0, 1.0)

    @given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(0.05, 5))
    def test_angle_sum_below_pi(self, a, b, c):
        if a >= b + c or b >= a + c or c >= a + b:
            return
        total = triangle_angle(a, b, c) + triangle_angle(b, c, a) + triangle_angle(c, a, b)
        assert total < math.pi + 1e-9

    @given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5))
    def test_tangent_form_matches_law_of_cosines(self, ra, rb, rc):
        direct = triangle_angle(rb + rc, ra + rb, ra + rc)
        assert float(tangent_triangle_angles(ra, rb, rc)) == pytest.approx(direct, abs=1e-7)

    @settings(max_examples=50)
    @given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5))
    def test_angle_decreases_with_own_radius(self, ra, rb, rc):
        assert tangent_triangle_angles(ra * 1.1, rb, rc) < tangent_triangle_angles(ra, rb, rc)


class TestReferenceTriangle:
    def test_sides_and_angles(self):
        v = REFERENCE.vertices
        for i in range(3):
            assert dist(v[i], v[(i + 1) % 3]) == pytest.approx(SIDE_LENGTH, abs=1e-9)
        assert REFERENCE.angle * 8 == pytest.approx(2 * math.pi)
        assert REFERENCE.area == pytest.approx(math.pi / 4)

    def test_canonical_placement(self):
        v = np.array(REFERENCE.vertices)
        assert v[0].imag == 0 and v[0].real > 0
        assert abs(v.sum()) < 1e-12

    def test_radii(self):
        assert circumradius(SIDE_LENGTH) == pytest.approx(dist(0, REFERENCE.vertices[0]), abs=1e-12)
        mid = REFERENCE.side_point(0, 0.5)
        assert inradius(SIDE_LENGTH) == pytest.approx(dist(0, mid), abs=1e-12)

    def test_klein_image_convex(self):
        k = REFERENCE.klein_vertices()
        turns = [((k[(i + 1) % 3] - k[i]).conjugate() * (k[(i + 2) % 3] - k[(i + 1) % 3])).imag for i in range(3)]
        assert all(t > 0 for t in turns)

    def test_side_points_lie_on_sides(self):
        for s in range(3):
            for t in (0.1, 0.5, 0.9):
                z = REFERENCE.side_point(s, t)
                assert REFERENCE.contains(z, 1e-12)
                # the triangle is star-shaped about 0, so pushing outward leaves it
                assert not REFERENCE.contains(z * 1.001)


class TestModels:
    def test_klein_values(self):
        assert klein_from_poincare(0j) == 0
        assert klein_from_poincare(0.5 + 0j) == pytest.approx(0.8)

    def test_roundtrip(self, rng):
        z = random_disk(rng, 1000, 0.999)
        assert np.max(np.abs(poincare_from_klein(klein_from_poincare(z)) - z)) < 1e-12


class TestIsometries:
    def test_inverse(self, rng):
        z = random_disk(rng, 100)
        for _ in range(20):
            f = random_isometry(rng)
            assert np.max(np.abs(f.compose(f.inverse()).apply(z) - z)) < 1e-9
            assert np.max(np.abs(f.inverse().compose(f).apply(z) - z)) < 1e-9

    def test_compose_is_application_order(self, rng):
        z = random_disk(rng, 50, 0.7)
        for _ in range(20):
            f, g = random_isometry(rng), random_isometry(rng)
            assert np.max(np.abs(f.compose(g).apply(z) - f.apply(g.apply(z)))) < 1e-9

    def test_preserves_distance(self, rng):
        for _ in range(100):
            f = random_isometry(rng)
            p, q = random_disk(rng, 2, 0.7)
            assert dist(f(p), f(q)) == pytest.approx(dist(p, q), abs=1e-9)

    def test_quarter_turns(self):
        r = rotation(math.pi / 2)
        assert r.compose(r).compose(r).compose(r).close_to(IDENTITY)

    def test_from_pairs(self):
        p, q = 0.1 + 0.2j, -0.3 + 0.1j
        d = dist(p, q)
        p2 = 0.4j
        q2 = complex(recentering(-p2).apply(math.tanh(d / 2)))
        for reflect in (False, True):
            f = isometry_from_pairs(p, q, p2, q2, reflect)
            assert abs(f(p) - p2) < 1e-12 and abs(f(q) - q2) < 1e-12
