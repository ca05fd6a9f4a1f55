"""Tests for convex sets and their projections."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ishikawa_ep import (
    Ball,
    Box,
    ConfigError,
    DimensionError,
    Halfspace,
    Hyperplane,
    Intersection,
    ProjectionConvergenceError,
    Simplex,
    Singleton,
    Tolerance,
    WholeSpace,
    contains,
    project,
)
from ishikawa_ep.sampling import sample_points

CLOSED_FORM_SETS = [
    WholeSpace(2),
    Box([0.0, 0.0], [1.0, 1.0]),
    Ball([0.5, -0.5], 2.0),
    Halfspace([1.0, 2.0], 1.0),
    Hyperplane([1.0, 1.0], 1.0),
    Simplex(2, 3.0),
    Singleton([0.25, 0.75]),
]

points = arrays(
    np.float64, 2, elements=st.floats(min_value=-20, max_value=20, allow_nan=False)
)


@pytest.mark.unit
class TestProjection:
    """Closed-form projections."""

    def test_box_clamps(self):
        np.testing.assert_array_equal(project(Box([0, 0], [1, 1]), np.array([2.0, -1.0])), [1.0, 0.0])

    def test_ball_scales_radially(self):
        np.testing.assert_allclose(project(Ball([0, 0], 1.0), np.array([3.0, 4.0])), [0.6, 0.8])

    def test_halfspace(self):
        np.testing.assert_allclose(project(Halfspace([1, 0], 0.0), np.array([2.0, 5.0])), [0.0, 5.0])

    def test_simplex(self):
        z = project(Simplex(3), np.array([0.5, 0.5, 0.5]))
        np.testing.assert_allclose(z, [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(project(Simplex(2), np.array([2.0, -1.0])), [1.0, 0.0])

    def test_interior_point_is_unchanged(self):
        x = np.array([0.2, 0.3])
        np.testing.assert_array_equal(project(Ball([0, 0], 1.0), x), x)

    def test_contains(self):
        assert contains(Ball([0, 0], 1.0), np.array([0.0, 0.0]))
        assert not contains(Box([0, 0], [1, 1]), np.array([1.5, 0.5]))
        assert contains(Hyperplane([1, 1], 1.0), np.array([0.5, 0.5]))

    def test_contains_uses_the_absolute_tolerance(self):
        ball, tol = Ball([0, 0], 1.0), Tolerance(abs=1e-3, rel=1.0)
        assert contains(ball, np.array([1.0005, 0.0]), tol)
        assert not contains(ball, np.array([3.0, 0.0]), tol)
        assert not contains(ball, np.array([1.0 + 1e-6, 0.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError, match='R\\^2'):
            project(Box([0, 0], [1, 1]), np.array([1.0, 2.0, 3.0]))

    def test_invalid_construction(self):
        with pytest.raises(ConfigError):
            Ball([0, 0], -1.0)
        with pytest.raises(ConfigError):
            Box([1.0], [0.0])
        with pytest.raises(ConfigError):
            Halfspace([0.0, 0.0], 1.0)
        with pytest.raises(DimensionError):
            Intersection([Box([0], [1]), Ball([0, 0], 1.0)])

    def test_equality_and_hash(self):
        assert Box([0, 0], [1, 1]) == Box([0.0, 0.0], [1.0, 1.0])
        assert hash(Ball([0, 0], 1.0)) == hash(Ball([0, 0], 1.0))
        assert Ball([0, 0], 1.0) != Ball([0, 0], 2.0)

    @pytest.mark.parametrize('convex_set', CLOSED_FORM_SETS, ids=lambda s: s.kind)
    @settings(max_examples=30, deadline=None)
    @given(x=points)
    def test_variational_characterization(self, convex_set, x):
        z = convex_set.project(x)
        ys = sample_points(convex_set, 100, seed=7)
        assert np.max((ys - z) @ (x - z)) <= 1e-8 * max(1.0, float(np.dot(x, x)))

    @pytest.mark.parametrize('convex_set', CLOSED_FORM_SETS, ids=lambda s: s.kind)
    @settings(max_examples=30, deadline=None)
    @given(x=points)
    def test_idempotent(self, convex_set, x):
        z = convex_set.project(x)
        np.testing.assert_allclose(convex_set.project(z), z, atol=1e-10)

    @pytest.mark.parametrize('convex_set', CLOSED_FORM_SETS, ids=lambda s: s.kind)
    @settings(max_examples=30, deadline=None)
    @given(x=points, y=points)
    def test_firmly_nonexpansive(self, convex_set, x, y):
        px, py = convex_set.project(x), convex_set.project(y)
        assert float(np.dot(px - py, px - py)) <= float(np.dot(px - py, x - y)) + 1e-8


@pytest.mark.unit
class TestIntersection:
    """Dykstra projection onto intersections."""

    def test_box_and_halfspace(self):
        K = Intersection([Box([0, 0], [1, 1]), Halfspace([1, 1], 1.0)])
        z = K.project(np.array([1.0, 1.0]))
        np.testing.assert_allclose(z, [0.5, 0.5], atol=1e-9)

    def test_matches_exact_projection(self):
        # Ball ∩ upper halfplane; the projection of (0, -3) is the origin.
        K = Intersection([Ball([0, 0], 1.0), Halfspace([0, -1], 0.0)])
        np.testing.assert_allclose(K.project(np.array([0.0, -3.0])), [0.0, 0.0], atol=1e-9)

    def test_stalls_on_empty_intersection(self):
        K = Intersection([Box([0], [1]), Box([2], [3])], max_iter=20)
        with pytest.raises(ProjectionConvergenceError) as excinfo:
            K.project(np.array([5.0]))
        assert excinfo.value.last_iterate.shape == (1,)
        assert excinfo.value.residual > 0

    def test_single_member(self):
        K = Intersection([Ball([0, 0], 1.0)])
        np.testing.assert_allclose(K.project(np.array([3.0, 4.0])), [0.6, 0.8])


@pytest.mark.unit
class TestProjectionBatches:
    """Projection properties on 10 000 seeded instances per set kind."""

    N = 10_000

    @staticmethod
    def _project_all(convex_set, points):
        return np.array([convex_set.project(p) for p in points])

    @pytest.mark.parametrize('convex_set', CLOSED_FORM_SETS, ids=lambda s: s.kind)
    def test_variational_characterization(self, convex_set):
        rng = np.random.default_rng(2024)
        xs = rng.uniform(-20.0, 20.0, size=(self.N, 2))
        zs = self._project_all(convex_set, xs)
        ys = sample_points(convex_set, self.N, seed=rng)
        values = np.einsum('ij,ij->i', ys - zs, xs - zs)
        scale = 1.0 + np.einsum('ij,ij->i', xs, xs)
        assert np.all(values <= 1e-8 * scale)

    @pytest.mark.parametrize('convex_set', CLOSED_FORM_SETS, ids=lambda s: s.kind)
    def test_firmly_nonexpansive(self, convex_set):
        rng = np.random.default_rng(2025)
        xs = rng.uniform(-20.0, 20.0, size=(self.N, 2))
        ys = rng.uniform(-20.0, 20.0, size=(self.N, 2))
        d = self._project_all(convex_set, xs) - self._project_all(convex_set, ys)
        values = np.einsum('ij,ij->i', d, d) - np.einsum('ij,ij->i', d, xs - ys)
        scale = 1.0 + np.einsum('ij,ij->i', xs, xs) + np.einsum('ij,ij->i', ys, ys)
        assert np.all(values <= 1e-8 * scale)

    @pytest.mark.parametrize('convex_set', CLOSED_FORM_SETS, ids=lambda s: s.kind)
    def test_idempotent(self, convex_set):
        xs = np.random.default_rng(2026).uniform(-20.0, 20.0, size=(self.N, 2))
        zs = self._project_all(convex_set, xs)
        np.testing.assert_allclose(self._project_all(convex_set, zs), zs, rtol=0, atol=1e-10)
