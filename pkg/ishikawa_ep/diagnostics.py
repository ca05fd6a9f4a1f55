"""Finite-trace certificates for the convergence claims.

Asymptotic statements become finite-tail criteria with explicit windows and
tolerances. A passing report is evidence about the recorded trace, never a
proof; reports say so through their label.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Final

import numpy as np

from ishikawa_ep.exceptions import ConfigError, DomainError, UncertifiedSolutionError
from ishikawa_ep.hilbert import Vector, as_vector, norm
from ishikawa_ep.mappings import fixed_point_residual
from ishikawa_ep.reports import NORM_CONVERGENCE_LABEL, CertificateReport, CheckResult
from ishikawa_ep.resolvent import ep_membership
from ishikawa_ep.schemes import KNOWN_SOLUTION_TOL, RESIDUAL_NAMES, Problem, Trace
from ishikawa_ep.sets import ConvexSet, Singleton

log = logging.getLogger(__name__)

DEFAULT_FEJER_TOL: Final[float] = 1e-8
DEFAULT_DECAY_TOL: Final[float] = 1e-6
DEFAULT_LIMIT_TOL: Final[float] = 1e-5
DEFAULT_WINDOW: Final[int] = 10
DEFAULT_TAIL_FRACTION: Final[float] = 0.2
DEFAULT_CLUSTER_RADIUS: Final[float] = 1e-3
DEFAULT_PROJECTION_TOL: Final[float] = 1e-8
ACCUMULATION_RESIDUAL_TOL: Final[float] = 1e-5
AGREEMENT_TOL: Final[float] = 1e-4
LIMIT_FACTOR: Final[float] = 10.0

FEJER: Final[str] = 'fejer'
RESIDUAL_DECAY: Final[str] = 'residual-decay'
LIMIT_EXISTENCE: Final[str] = 'limit-existence'
PROJECTION_SERIES: Final[str] = 'projection-series'
ACCUMULATION: Final[str] = 'accumulation-point'
LIMIT_CERTIFICATION: Final[str] = 'limit-certification'
PROJECTION_AGREEMENT: Final[str] = 'projection-accumulation-agreement'


def _certify_q(problem: Problem, q: Vector) -> None:
    try:
        fixed = fixed_point_residual(problem.S, q) <= KNOWN_SOLUTION_TOL
        in_ep = ep_membership(problem.f, problem.E, q, tol=KNOWN_SOLUTION_TOL)
    except DomainError as e:
        raise UncertifiedSolutionError(f'q={q.tolist()}: {e}') from e
    if not (fixed and in_ep):
        raise UncertifiedSolutionError(
            f'q={q.tolist()} is not certified in F(S) ∩ EP(f) '
            f'(fixed point: {fixed}, equilibrium: {in_ep})'
        )


def _distances(trace: Trace, q: Vector) -> np.ndarray:
    if not trace.thin:
        return np.linalg.norm(trace.xs() - q, axis=1)
    dist = trace.series('dist_q')
    if np.any(np.isnan(dist)):
        raise ConfigError('thin trace has no recorded distances to the known solution')
    return dist


def _tail_start(length: int, tail_fraction: float) -> int:
    if not 0 < tail_fraction <= 1:
        raise ConfigError(f'tail_fraction must lie in (0, 1], got {tail_fraction}')
    size = max(min(2, length), math.ceil(tail_fraction * length))
    return length - size


def fejer_check(
    trace: Trace,
    q: Vector,
    tol: float = DEFAULT_FEJER_TOL,
    problem: Problem | None = None,
) -> CheckResult:
    """Pass iff ||x_{n+1} − q|| <= ||x_n − q|| + tol for every recorded n.

    ``worst_index`` is the n of the record that moved furthest away from q.

    Raises:
        UncertifiedSolutionError: ``problem`` is given and q is not in F(S) ∩ EP(f).
    """
    q = as_vector(q, 'q')
    if problem is not None:
        _certify_q(problem, q)
    dist = _distances(trace, q)
    if dist.size < 2:
        return CheckResult(FEJER, True, detail='fewer than two iterates')
    ascent = np.diff(dist)
    worst = int(np.argmax(ascent))
    margin = float(ascent[worst])
    return CheckResult(
        FEJER,
        passed=margin <= tol,
        worst_index=trace.records[worst + 1].n,
        worst_margin=margin,
        detail=f'max ||x_(n+1) - q|| - ||x_n - q|| = {margin:.3e} (tol {tol:g})',
    )


def residual_decay(
    trace: Trace, tol: float = DEFAULT_DECAY_TOL, window: int = DEFAULT_WINDOW
) -> CheckResult:
    """Pass iff every residual series dips to <= tol within the last ``window`` records."""
    if not trace.records:
        raise ConfigError('residual_decay needs a non-empty trace')
    if window < 1:
        raise ConfigError(f'window must be >= 1, got {window}')
    tails = {name: float(np.min(trace.series(name)[-window:])) for name in RESIDUAL_NAMES}
    worst_name = max(tails, key=lambda k: tails[k])
    margin = tails[worst_name] - tol
    return CheckResult(
        RESIDUAL_DECAY,
        passed=margin <= 0,
        worst_index=trace.records[-1].n,
        worst_margin=margin,
        witness=worst_name,
        detail=', '.join(f'{k}={v:.3e}' for k, v in tails.items()),
    )


def limit_existence_check(
    trace: Trace,
    q: Vector,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    tol: float = DEFAULT_LIMIT_TOL,
) -> CheckResult:
    """Pass iff ||x_n − q|| has total variation <= tol over the trace tail."""
    q = as_vector(q, 'q')
    dist = _distances(trace, q)
    tail = dist[_tail_start(dist.size, tail_fraction):]
    steps = np.abs(np.diff(tail))
    variation = float(steps.sum()) if steps.size else 0.0
    worst_index = None
    if steps.size:
        offset = dist.size - tail.size
        worst_index = trace.records[offset + int(np.argmax(steps)) + 1].n
    return CheckResult(
        LIMIT_EXISTENCE,
        passed=variation <= tol,
        worst_index=worst_index,
        worst_margin=variation - tol,
        detail=f'total variation {variation:.3e} over the last {tail.size} records',
    )


@dataclass(frozen=True, eq=False)
class ProjectionSeries:
    """pₙ = P_sol(xₙ) with successive gaps.

    ``tail_bound`` is the largest gap over the final window. ``limit_gap`` is the
    projection inequality at the last iterate, max over n of
    <x_N − p_N, p_n − p_N> clipped at 0, using the series itself as the points
    of ``sol``; it vanishes when p_N is the exact projection.
    The same series over uₙ is kept alongside without being compared.
    """

    points: np.ndarray
    gaps: np.ndarray
    tail_bound: float
    limit_gap: float
    u_points: np.ndarray | None = None
    u_tail_bound: float | None = None

    @property
    def final(self) -> Vector:
        return self.points[-1]

    def check(self, tol: float = DEFAULT_PROJECTION_TOL) -> CheckResult:
        margin = max(self.tail_bound, self.limit_gap)
        return CheckResult(
            PROJECTION_SERIES,
            passed=margin <= tol,
            worst_index=len(self.points),
            worst_margin=margin - tol,
            witness=self.final,
            detail=f'tail gap {self.tail_bound:.3e}, limit gap {self.limit_gap:.3e}',
        )


def _series(points: np.ndarray, sol: ConvexSet, window: int) -> tuple[np.ndarray, np.ndarray, float]:
    projected = np.array([sol.project(p) for p in points])
    gaps = np.linalg.norm(np.diff(projected, axis=0), axis=1)
    tail = float(np.max(gaps[-window:])) if gaps.size else 0.0
    return projected, gaps, tail


def projection_series(
    trace: Trace, sol: ConvexSet, window: int = DEFAULT_WINDOW
) -> ProjectionSeries:
    """Project every iterate onto the known solution set.

    Raises:
        ProjectionConvergenceError: ``sol`` is an Intersection whose projection stalls.
    """
    xs = trace.xs()
    if xs.shape[0] == 0:
        raise ConfigError('projection_series needs a non-empty trace')
    points, gaps, tail = _series(xs, sol, window)
    limit_gap = max(0.0, float(np.max((points - points[-1]) @ (xs[-1] - points[-1]))))
    u_points, _, u_tail = _series(trace.us(), sol, window)
    return ProjectionSeries(points, gaps, tail, limit_gap, u_points, u_tail)


def accumulation_points(
    trace: Trace,
    cluster_radius: float = DEFAULT_CLUSTER_RADIUS,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> list[Vector]:
    """Cluster centres the trace tail keeps returning to.

    Leader clustering runs over the tail from the newest point backwards. A
    cluster survives only if one of its members lies in the most recent
    quarter of the tail; survivors closer than ``cluster_radius`` are merged.

    Raises:
        ConfigError: if the trace has fewer than 2 records.
    """
    if cluster_radius <= 0:
        raise ConfigError(f'cluster_radius must be > 0, got {cluster_radius}')
    xs = trace.xs()
    if xs.shape[0] < 2:
        raise ConfigError(f'accumulation_points needs at least 2 records, got {xs.shape[0]}')
    tail = xs[_tail_start(xs.shape[0], tail_fraction):][::-1]
    recent = min(tail.shape[0], max(2, math.ceil(tail.shape[0] / 4)))

    leaders: list[np.ndarray] = []
    members: list[list[int]] = []
    for i, point in enumerate(tail):
        for k, leader in enumerate(leaders):
            if norm(point - leader) <= cluster_radius:
                members[k].append(i)
                break
        else:
            leaders.append(point)
            members.append([i])

    centres = [
        tail[idx].mean(axis=0) for idx in members if min(idx) < recent
    ]
    merged: list[np.ndarray] = []
    for c in centres:
        if all(norm(c - m) > cluster_radius for m in merged):
            merged.append(c)
    return [as_vector(c, 'centre') for c in merged]


def _accumulation_check(
    trace: Trace, problem: Problem | None, cluster_radius: float, tail_fraction: float
) -> tuple[CheckResult, list[Vector]]:
    if len(trace) < 2:
        # a single record is its own limit candidate
        points = [as_vector(p, 'x_1') for p in trace.xs()]
        detail = f'{len(points)} record(s), no tail to cluster'
    else:
        points = accumulation_points(trace, cluster_radius, tail_fraction)
        detail = f'{len(points)} cluster(s)'
    passed = len(points) == 1
    if passed and problem is not None:
        p = points[0]
        try:
            fixed = fixed_point_residual(problem.S, p)
            in_ep = ep_membership(problem.f, problem.E, p, tol=ACCUMULATION_RESIDUAL_TOL)
        except DomainError as e:
            fixed, in_ep = math.inf, False
            detail += f'; {e}'
        passed = fixed <= ACCUMULATION_RESIDUAL_TOL and in_ep
        detail += f'; ||Sp - p|| = {fixed:.3e}, equilibrium: {in_ep}'
    return (
        CheckResult(
            ACCUMULATION,
            passed=passed,
            worst_margin=float(len(points) - 1),
            witness=points[0] if len(points) == 1 else points,
            detail=detail,
        ),
        points,
    )


def _limit_certification(trace: Trace, problem: Problem, residual_tol: float) -> CheckResult:
    x_last = trace.final_x if trace.final_x is not None else trace.xs()[-1]
    bound = LIMIT_FACTOR * residual_tol
    try:
        fixed = fixed_point_residual(problem.S, x_last)
        in_ep = ep_membership(problem.f, problem.E, x_last, tol=bound)
    except DomainError as e:
        return CheckResult(
            LIMIT_CERTIFICATION, False, trace.records[-1].n, math.inf, x_last, str(e)
        )
    return CheckResult(
        LIMIT_CERTIFICATION,
        passed=fixed <= bound and in_ep,
        worst_index=trace.records[-1].n,
        worst_margin=fixed - bound,
        witness=x_last,
        detail=f'||Sx_N - x_N|| = {fixed:.3e} (bound {bound:g}), equilibrium: {in_ep}',
    )


def certify(
    trace: Trace,
    problem: Problem | None = None,
    *,
    fejer_tol: float = DEFAULT_FEJER_TOL,
    decay_tol: float = DEFAULT_DECAY_TOL,
    limit_tol: float = DEFAULT_LIMIT_TOL,
    window: int = DEFAULT_WINDOW,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    cluster_radius: float = DEFAULT_CLUSTER_RADIUS,
    residual_tol: float | None = None,
) -> CertificateReport:
    """Apply the whole suite to ``trace``.

    Without a problem only the q-free checks run (residual decay and the
    accumulation-point count). With one, its known solution and solution set
    enable the Fejér, limit-existence and projection checks, and the final
    iterate is certified at ``10 * residual_tol``.
    """
    checks = [residual_decay(trace, decay_tol, window)]
    accumulation, points = _accumulation_check(trace, problem, cluster_radius, tail_fraction)
    checks.append(accumulation)
    if problem is not None:
        q = problem.known_solution
        if q is not None:
            checks.append(fejer_check(trace, q, fejer_tol, problem))
            checks.append(limit_existence_check(trace, q, tail_fraction, limit_tol))
        if problem.known_solution_set is not None:
            series = projection_series(trace, problem.known_solution_set, window)
            checks.append(series.check())
            if isinstance(problem.known_solution_set, Singleton) and len(points) == 1:
                gap = norm(series.final - points[0])
                checks.append(
                    CheckResult(
                        PROJECTION_AGREEMENT,
                        passed=gap <= AGREEMENT_TOL,
                        worst_margin=gap - AGREEMENT_TOL,
                        detail=f'||p_N - accumulation point|| = {gap:.3e}',
                    )
                )
        checks.append(_limit_certification(trace, problem, residual_tol or decay_tol))
    report = CertificateReport(tuple(checks), NORM_CONVERGENCE_LABEL)
    log.info('certify %s trace (%d records): %s', trace.scheme, len(trace), report.verdict)
    for check in checks:
        if not check.passed:
            log.info('  %s failed: %s', check.name, check.detail)
    return report
