import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odlab.errors import DegenerateInputError, OutOfRangeError
from odlab.geometry import (Triangulation, convex_hull_area, delaunay,
                            in_circumcircle, interp_linear, interp_to_grid,
                            locate_many, orient2d, vertex_values)


def assert_empty_circumcircles(tri: Triangulation) -> None:
    """Brute-force Delaunay check: no vertex strictly inside any circumcircle."""
    xs = tri.vertices[:, 0]
    ys = tri.vertices[:, 1]
    for a, b, c in tri.triangles:
        others = np.setdiff1d(np.arange(len(xs)), [a, b, c])
        for p in others:
            det = in_circumcircle(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c],
                                  xs[p], ys[p])
            assert det <= 0.0, f"vertex {p} inside circumcircle of ({a},{b},{c})"


def assert_is_triangulation(tri: Triangulation) -> None:
    """Euler count and mutual neighbor links."""
    n = len(tri.vertices)
    hull_edges = int(np.count_nonzero(tri.neighbors < 0))
    assert tri.n_triangles == 2 * (n - 1) - hull_edges
    for t in range(tri.n_triangles):
        for j in range(3):
            nb = tri.neighbors[t, j]
            if nb >= 0:
                assert t in tri.neighbors[nb]
        a, b, c = tri.triangles[t]
        v = tri.vertices
        assert orient2d(v[a, 0], v[a, 1], v[b, 0], v[b, 1], v[c, 0], v[c, 1]) > 0


class TestPredicates:
    def test_orient_sign(self):
        assert orient2d(0, 0, 1, 0, 0, 1) > 0
        assert orient2d(0, 0, 0, 1, 1, 0) < 0
        assert orient2d(0, 0, 1, 1, 2, 2) == 0.0

    def test_orient_nearly_collinear(self):
        # sign is trusted above the documented 1e-12 relative band and
        # snapped to zero below it
        for eps in (1e-6, 1e-7, 1e-8):
            assert orient2d(0.5, 0.5, 12.0, 12.0, 24.0, 24.0 + eps) > 0
            assert orient2d(0.5, 0.5, 12.0, 12.0, 24.0, 24.0 - eps) < 0
        tiny = math.ldexp(1.0, -60)
        assert orient2d(0.5, 0.5, 12.0, 12.0, 24.0, 24.0 + tiny) == 0.0

    def test_incircle_sign(self):
        # unit circle through three CCW points; origin strictly inside
        assert in_circumcircle(1, 0, 0, 1, -1, 0, 0, 0) > 0
        assert in_circumcircle(1, 0, 0, 1, -1, 0, 0, -2) < 0
        assert in_circumcircle(1, 0, 0, 1, -1, 0, 0, -1) == 0.0


class TestDelaunay:
    def test_square_with_center(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
                        [0.5, 0.5]])
        tri = delaunay(pts)
        assert tri.n_triangles == 4
        assert_is_triangulation(tri)
        assert_empty_circumcircles(tri)

    def test_random_clouds(self, rng):
        for n in (10, 57, 200):
            pts = rng.normal(size=(n, 2))
            tri = delaunay(pts)
            assert_is_triangulation(tri)
            assert_empty_circumcircles(tri)

    def test_grid_cloud_with_cocircular_quads(self):
        # regular grid: every unit cell is cocircular, the degenerate case
        xs, ys = np.meshgrid(np.arange(7.0), np.arange(6.0))
        pts = np.column_stack([xs.ravel(), ys.ravel()])
        tri = delaunay(pts)
        assert_is_triangulation(tri)
        assert_empty_circumcircles(tri)

    def test_duplicate_points_merged(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0],
                        [0.0, 0.0]])
        tri = delaunay(pts)
        assert len(tri.vertices) == 3
        np.testing.assert_array_equal(tri.point_vertex, [0, 1, 2, 1, 0])

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateInputError):
            delaunay(np.array([[0.0, 0.0], [1.0, 1.0]]))
        with pytest.raises(DegenerateInputError):
            delaunay(np.column_stack([np.arange(9.0), 2.0 * np.arange(9.0)]))
        with pytest.raises(DegenerateInputError):
            delaunay(np.array([[0.0, 0.0], [1.0, np.nan], [0.0, 1.0]]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000),
           st.integers(min_value=5, max_value=40))
    def test_property_random_cloud_is_delaunay(self, seed, n):
        pts = np.random.default_rng(seed).uniform(-3.0, 3.0, size=(n, 2))
        tri = delaunay(pts)
        assert_is_triangulation(tri)
        assert_empty_circumcircles(tri)


class TestInterpolation:
    def linear_field(self, pts):
        return 0.7 - 1.3 * pts[:, 0] + 2.9 * pts[:, 1]

    def test_linear_exact_at_queries(self, rng):
        pts = rng.uniform(size=(80, 2))
        tri = delaunay(pts)
        vals = self.linear_field(pts)
        for q in rng.uniform(0.2, 0.8, size=(40, 2)):
            got = interp_linear(tri, vals, q)
            want = 0.7 - 1.3 * q[0] + 2.9 * q[1]
            assert abs(got - want) < 1e-12

    def test_linear_exact_on_grid(self, rng):
        pts = rng.uniform(size=(120, 2))
        tri = delaunay(pts)
        field = interp_to_grid(tri, self.linear_field(pts), 41, 37)
        gx, gy = np.meshgrid(field.xs, field.ys, indexing="ij")
        want = 0.7 - 1.3 * gx + 2.9 * gy
        assert np.abs(field.values[field.mask] - want[field.mask]).max() < 1e-12
        assert np.all(field.values[~field.mask] == 0.0)

    def test_outside_hull_raises(self, rng):
        pts = rng.uniform(size=(30, 2))
        tri = delaunay(pts)
        with pytest.raises(OutOfRangeError):
            interp_linear(tri, self.linear_field(pts), np.array([5.0, 5.0]))

    def test_grid_masks_outside(self):
        # triangle hull: grid corners away from the hypotenuse are outside
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.3, 0.3]])
        tri = delaunay(pts)
        field = interp_to_grid(tri, np.ones(4), 21, 21)
        assert not field.mask[20, 20]
        assert field.mask[0, 0]
        assert field.values[20, 20] == 0.0

    def test_vertex_values_averages_duplicates(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        tri = delaunay(pts)
        vals = vertex_values(tri, np.array([2.0, 5.0, 7.0, 4.0]))
        assert vals[tri.point_vertex[0]] == 3.0
        assert vals[tri.point_vertex[1]] == 5.0

    def test_locate_barycentric_partition(self, rng):
        pts = rng.normal(size=(60, 2))
        tri = delaunay(pts)
        q = rng.normal(size=(25, 2)) * 0.3
        t_idx, bary = locate_many(tri, q)
        inside = t_idx >= 0
        assert inside.any()
        np.testing.assert_allclose(bary[inside].sum(axis=1), 1.0, atol=1e-12)
        assert (bary[inside] >= -1e-12).all()

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000),
           st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
    def test_property_affine_reproduction(self, seed, a, b, c):
        pts = np.random.default_rng(seed).uniform(size=(25, 2))
        tri = delaunay(pts)
        vals = a + b * pts[:, 0] + c * pts[:, 1]
        q = np.mean(pts, axis=0)  # centroid is always in the hull
        got = interp_linear(tri, vals, q)
        want = a + b * q[0] + c * q[1]
        scale = 1.0 + abs(a) + abs(b) + abs(c)
        assert abs(got - want) < 1e-11 * scale


class TestHullArea:
    def test_known_shapes(self):
        square = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0],
                           [1.0, 1.0], [0.5, 1.7]])
        assert convex_hull_area(square) == pytest.approx(4.0, abs=1e-14)
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert convex_hull_area(tri) == pytest.approx(0.5, abs=1e-14)

    def test_rotation_invariant(self, rng):
        pts = rng.normal(size=(50, 2))
        a0 = convex_hull_area(pts)
        th = 0.83
        rot = np.array([[math.cos(th), -math.sin(th)],
                        [math.sin(th), math.cos(th)]])
        assert convex_hull_area(pts @ rot.T) == pytest.approx(a0, rel=1e-12)

    def test_degenerate_zero(self):
        assert convex_hull_area(np.array([[0.0, 0.0], [1.0, 1.0]])) == 0.0
        line = np.column_stack([np.arange(5.0), np.arange(5.0)])
        assert convex_hull_area(line) == 0.0

    def test_triangulation_covers_hull(self, rng):
        # triangle areas over the whole triangulation sum to the hull area
        pts = rng.uniform(size=(70, 2))
        tri = delaunay(pts)
        v = tri.vertices
        a = v[tri.triangles[:, 0]]
        b = v[tri.triangles[:, 1]]
        c = v[tri.triangles[:, 2]]
        areas = 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                             - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        assert areas.sum() == pytest.approx(convex_hull_area(pts), rel=1e-12)
