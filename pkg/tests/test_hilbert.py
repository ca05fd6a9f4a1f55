"""Tests for the R^n vector kernel."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ishikawa_ep import (
    ConfigError,
    DimensionError,
    Tolerance,
    as_vector,
    combine,
    distance,
    inner,
    norm,
    norm_sq,
)
from ishikawa_ep.hilbert import as_matrix

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


def vectors(dim=3):
    return arrays(np.float64, dim, elements=finite)


@pytest.mark.unit
class TestKernel:
    """Inner product, norm and affine combinations."""

    def test_inner(self):
        assert inner(as_vector([1, 0]), as_vector([0, 1])) == 0.0
        assert inner(as_vector([3, 4]), as_vector([3, 4])) == 25.0
        assert inner(as_vector([1, 2, 3]), as_vector([4, 5, 6])) == 32.0

    def test_norm(self):
        assert norm(as_vector([0, 0, 0])) == 0.0
        assert norm(as_vector([3, 4])) == 5.0
        assert norm(as_vector([1, 1, 1, 1])) == 2.0
        assert norm_sq(as_vector([3, 4])) == 25.0

    def test_combine(self):
        x, y = as_vector([2, 0]), as_vector([0, 2])
        np.testing.assert_array_equal(combine(1.0, x, y), x)
        np.testing.assert_array_equal(combine(0.5, x, y), [1.0, 1.0])
        np.testing.assert_array_equal(combine(0.25, as_vector([4, 0]), as_vector([0, 0])), [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError, match='dimension mismatch'):
            inner(as_vector([1, 2]), as_vector([1, 2, 3]))
        with pytest.raises(DimensionError):
            combine(0.5, as_vector([1]), as_vector([1, 2]))
        with pytest.raises(DimensionError):
            distance(as_vector([1]), as_vector([1, 2]))

    def test_vectors_are_frozen(self):
        x = as_vector([1.0, 2.0])
        with pytest.raises(ValueError):
            x[0] = 5.0
        assert not combine(0.5, x, x).flags.writeable

    def test_as_vector_rejects_bad_input(self):
        with pytest.raises(ConfigError, match='non-finite'):
            as_vector([1.0, float('nan')])
        with pytest.raises(ConfigError, match='1-D'):
            as_vector([[1.0, 2.0]])
        with pytest.raises(ConfigError):
            as_vector([])
        np.testing.assert_array_equal(as_vector(2.5), [2.5])

    @pytest.mark.parametrize('values', ['zz', ['a', 0], [[1.0], 2.0], {'x': 1}])
    def test_as_vector_rejects_non_numeric_input(self, values):
        with pytest.raises(ConfigError, match='vector of numbers'):
            as_vector(values, 'x1')

    def test_as_matrix_rejects_non_numeric_input(self):
        with pytest.raises(ConfigError, match='matrix of numbers'):
            as_matrix([[1.0, 'b']])

    def test_tolerance(self):
        assert Tolerance(abs=1e-3, rel=0.1).bound(10.0) == pytest.approx(1.001)
        with pytest.raises(ConfigError):
            Tolerance(abs=-1.0)
        with pytest.raises(ConfigError, match='abs > 0 or rel > 0'):
            Tolerance(abs=0.0, rel=0.0).as_stopping_rule()


@pytest.mark.unit
class TestHilbertIdentities:
    """Properties every point of R^n satisfies."""

    @given(st.floats(min_value=-2, max_value=2), vectors(), vectors())
    def test_convex_combination_identity(self, t, x, y):
        lhs = norm_sq(combine(t, x, y))
        rhs = t * norm_sq(x) + (1 - t) * norm_sq(y) - t * (1 - t) * norm_sq(x - y)
        assert abs(lhs - rhs) <= 1e-10 * (1 + norm_sq(x) + norm_sq(y))

    @given(vectors(), vectors())
    def test_sum_inequality(self, x, y):
        scale = 1 + norm_sq(x) + norm_sq(y)
        assert norm_sq(x + y) <= norm_sq(x) + 2 * inner(y, x + y) + 1e-10 * scale

    @given(vectors(), vectors())
    def test_difference_identity(self, x, y):
        lhs = norm_sq(x - y)
        rhs = norm_sq(x) - norm_sq(y) - 2 * inner(x - y, y)
        assert abs(lhs - rhs) <= 1e-10 * (1 + norm_sq(x) + norm_sq(y))


@pytest.mark.unit
class TestHilbertIdentityBatches:
    """The same identities on 10 000 seeded instances in R^1..R^10."""

    N = 10_000

    @pytest.fixture
    def batch(self):
        rng = np.random.default_rng(7)
        dims = rng.integers(1, 11, size=self.N)
        xs = [as_vector(rng.uniform(-100.0, 100.0, d)) for d in dims]
        ys = [as_vector(rng.uniform(-100.0, 100.0, d)) for d in dims]
        ts = rng.uniform(-2.0, 2.0, size=self.N)
        scale = np.array([1 + norm_sq(x) + norm_sq(y) for x, y in zip(xs, ys)])
        return xs, ys, ts, scale

    def test_convex_combination_identity(self, batch):
        xs, ys, ts, scale = batch
        gaps = np.array(
            [
                norm_sq(combine(t, x, y))
                - (t * norm_sq(x) + (1 - t) * norm_sq(y) - t * (1 - t) * norm_sq(x - y))
                for t, x, y in zip(ts, xs, ys)
            ]
        )
        assert np.all(np.abs(gaps) <= 1e-8 * scale)

    def test_sum_inequality(self, batch):
        xs, ys, _, scale = batch
        gaps = np.array([norm_sq(x + y) - norm_sq(x) - 2 * inner(y, x + y) for x, y in zip(xs, ys)])
        assert np.all(gaps <= 1e-8 * scale)

    def test_difference_identity(self, batch):
        xs, ys, _, scale = batch
        gaps = np.array(
            [norm_sq(x - y) - (norm_sq(x) - norm_sq(y) - 2 * inner(x - y, y)) for x, y in zip(xs, ys)]
        )
        assert np.all(np.abs(gaps) <= 1e-8 * scale)
