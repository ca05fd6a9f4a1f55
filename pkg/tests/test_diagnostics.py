"""Tests for the finite-trace certificates."""

import numpy as np
import pytest

from ishikawa_ep import (
    Ball,
    ConfigError,
    StopRule,
    UncertifiedSolutionError,
    accumulation_points,
    certify,
    fejer_check,
    limit_existence_check,
    projection_series,
    residual_decay,
    run,
)
from ishikawa_ep.diagnostics import (
    ACCUMULATION,
    FEJER,
    LIMIT_CERTIFICATION,
    LIMIT_EXISTENCE,
    PROJECTION_AGREEMENT,
    PROJECTION_SERIES,
    RESIDUAL_DECAY,
)
from ishikawa_ep.reports import NORM_CONVERGENCE_LABEL


class _RoundedBall(Ball):
    """A ball whose projection is rounded to one decimal."""

    def _project(self, x):
        return np.round(super()._project(x), 1)


@pytest.fixture
def rotation_trace(rotation_problem, half_schedule, tight_stop):
    return run(rotation_problem, 'modified_ishikawa', half_schedule, tight_stop, [1.0, 0.0])


@pytest.mark.unit
class TestFejer:
    """Monotone distance to the known solution."""

    def test_monotone_trace_passes(self, trace_factory):
        trace = trace_factory([[1.0], [0.5], [0.25], [0.1]])
        result = fejer_check(trace, [0.0])
        assert result.passed
        assert result.name == FEJER

    def test_injected_ascent_is_located(self, trace_factory):
        trace = trace_factory([[1.0], [0.5], [0.25], [0.6], [0.1]])
        result = fejer_check(trace, [0.0])
        assert not result.passed
        assert result.worst_index == 4
        assert result.worst_margin == pytest.approx(0.35)

    def test_uses_recorded_distances_for_thin_traces(self, rotation_problem, half_schedule, tight_stop):
        trace = run(rotation_problem, 'modified_ishikawa', half_schedule, tight_stop, [1.0, 0.0], thin=True)
        assert fejer_check(trace, [0.0, 0.0]).passed

    def test_uncertified_reference_point(self, trace_factory, combined_problem):
        trace = trace_factory([[1.0], [0.5]])
        with pytest.raises(UncertifiedSolutionError, match='not certified'):
            fejer_check(trace, [0.5], problem=combined_problem)

    def test_single_record(self, trace_factory):
        assert fejer_check(trace_factory([[1.0]]), [0.0]).passed


@pytest.mark.unit
class TestResidualDecay:
    """Residuals reaching the tolerance inside the final window."""

    def test_decayed(self, trace_factory):
        trace = trace_factory([[1.0], [0.1], [0.0]], residuals=[1.0, 1e-3, 1e-8])
        result = residual_decay(trace, tol=1e-6, window=2)
        assert result.passed
        assert result.name == RESIDUAL_DECAY

    def test_not_decayed(self, trace_factory):
        trace = trace_factory([[1.0], [0.1], [0.0]], residuals=[1e-8, 1.0, 0.5])
        result = residual_decay(trace, tol=1e-6, window=2)
        assert not result.passed
        assert result.witness == 'res_x_Su'
        assert result.worst_margin == pytest.approx(0.5 - 1e-6)

    def test_empty_trace(self, trace_factory):
        trace = trace_factory([[1.0]])
        trace.records.clear()
        with pytest.raises(ConfigError):
            residual_decay(trace)


@pytest.mark.unit
class TestLimitExistence:
    """Settling of ||x_n − q|| over the tail."""

    def test_settled(self, rotation_trace):
        result = limit_existence_check(rotation_trace, [0.0, 0.0])
        assert result.passed
        assert result.name == LIMIT_EXISTENCE

    def test_oscillating(self, trace_factory):
        trace = trace_factory([[1.0], [-2.0]] * 10)
        result = limit_existence_check(trace, [0.0], tail_fraction=0.5)
        assert not result.passed
        assert result.worst_margin > 1.0

    def test_tail_fraction_bounds(self, trace_factory):
        with pytest.raises(ConfigError, match='tail_fraction'):
            limit_existence_check(trace_factory([[1.0], [0.5]]), [0.0], tail_fraction=0.0)


@pytest.mark.unit
class TestProjectionSeries:
    """Projections of the iterates onto the solution set."""

    def test_singleton(self, rotation_trace, rotation_problem):
        series = projection_series(rotation_trace, rotation_problem.known_solution_set)
        np.testing.assert_array_equal(series.final, [0.0, 0.0])
        assert series.tail_bound == 0.0
        assert series.u_points.shape == series.points.shape
        assert series.check().passed

    def test_ball_solution_set(self, trace_factory):
        trace = trace_factory([[3.0, 0.0], [2.0, 0.0], [1.5, 0.0], [1.5, 0.0]])
        series = projection_series(trace, Ball([0.0, 0.0], 1.0), window=1)
        np.testing.assert_allclose(series.points, [[1.0, 0.0]] * 4)
        assert series.check().name == PROJECTION_SERIES
        assert series.check().passed

    def test_moving_projection_fails(self, trace_factory):
        trace = trace_factory([[3.0, 0.0], [0.0, 3.0]])
        result = projection_series(trace, Ball([0.0, 0.0], 1.0)).check()
        assert not result.passed

    def test_exact_projection_has_no_limit_gap(self, trace_factory):
        trace = trace_factory([[3.0, 0.0], [0.0, 3.0], [0.7, 0.75]])
        assert projection_series(trace, Ball([0.0, 0.0], 1.0)).limit_gap <= 1e-12

    def test_inexact_projection_shows_a_limit_gap(self, trace_factory):
        trace = trace_factory([[3.0, 0.0], [0.0, 3.0], [0.7, 0.75]])
        series = projection_series(trace, _RoundedBall([0.0, 0.0], 1.0))
        np.testing.assert_allclose(series.final, [0.7, 0.7])
        # <x_N - p_N, p_2 - p_N> = <(0, 0.05), (-0.7, 0.3)>
        assert series.limit_gap == pytest.approx(0.015)
        assert 'limit gap 1.500e-02' in series.check().detail


@pytest.mark.unit
class TestAccumulationPoints:
    """Clustering of the trace tail."""

    def test_period_two_gives_two_clusters(self, trace_factory):
        trace = trace_factory([[1.0, 0.0], [-1.0, 0.0]] * 10)
        points = accumulation_points(trace)
        assert len(points) == 2
        centres = sorted(p[0] for p in points)
        assert centres == [-1.0, 1.0]

    def test_converging_trace_has_one(self, rotation_trace):
        points = accumulation_points(rotation_trace)
        assert len(points) == 1
        assert np.linalg.norm(points[0]) < 1e-6

    def test_stale_cluster_is_dropped(self, trace_factory):
        # the early point near 5 falls in the tail but is never revisited
        trace = trace_factory([[5.0]] + [[0.0]] * 7)
        points = accumulation_points(trace, tail_fraction=1.0)
        assert [float(p[0]) for p in points] == [0.0]

    def test_radius_must_be_positive(self, rotation_trace):
        with pytest.raises(ConfigError):
            accumulation_points(rotation_trace, cluster_radius=0.0)

    def test_needs_two_records(self, trace_factory):
        with pytest.raises(ConfigError, match='at least 2 records'):
            accumulation_points(trace_factory([[1.0]]))


@pytest.mark.unit
class TestCertify:
    """The bundled suite."""

    def test_converged_run_passes(self, rotation_trace, rotation_problem):
        report = certify(rotation_trace, rotation_problem, residual_tol=1e-8)
        assert report.passed, report.to_dict()
        assert report.label == NORM_CONVERGENCE_LABEL
        names = [c.name for c in report.checks]
        assert names == [
            RESIDUAL_DECAY,
            ACCUMULATION,
            FEJER,
            LIMIT_EXISTENCE,
            PROJECTION_SERIES,
            PROJECTION_AGREEMENT,
            LIMIT_CERTIFICATION,
        ]

    def test_without_problem(self, rotation_trace):
        report = certify(rotation_trace)
        assert [c.name for c in report.checks] == [RESIDUAL_DECAY, ACCUMULATION]
        assert report.verdict == 'pass'

    def test_single_record_trace(self, trace_factory):
        report = certify(trace_factory([[0.0, 0.0]]))
        accumulation = report.check(ACCUMULATION)
        assert accumulation.passed
        assert 'no tail to cluster' in accumulation.detail

    def test_oscillation_fails(self, trace_factory):
        trace = trace_factory([[1.0, 0.0], [-1.0, 0.0]] * 10)
        report = certify(trace)
        assert not report.check(ACCUMULATION).passed
        assert report.verdict == 'fail'

    def test_thin_trace_is_rejected(self, rotation_problem, half_schedule, tight_stop):
        trace = run(rotation_problem, 'modified_ishikawa', half_schedule, tight_stop, [1.0, 0.0], thin=True)
        with pytest.raises(ConfigError, match='thin'):
            certify(trace, rotation_problem)

    def test_unconverged_limit_is_not_certified(self, rotation_problem, half_schedule):
        trace = run(rotation_problem, 'modified_ishikawa', half_schedule, StopRule(max_iter=2), [1.0, 0.0])
        report = certify(trace, rotation_problem)
        assert not report.check(LIMIT_CERTIFICATION).passed
        assert report.to_dict()['verdict'] == 'fail'
