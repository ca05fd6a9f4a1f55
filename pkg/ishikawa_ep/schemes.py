"""Iteration engines: the modified Ishikawa scheme, its variants and the baselines.

One step of the main scheme, from xₙ::

    uₙ   = T_{rₙ} xₙ
    yₙ   = (1 − βₙ) xₙ + βₙ S uₙ
    xₙ₊₁ = (1 − αₙ) xₙ + αₙ S yₙ

Every scheme is registered by name in :mod:`ishikawa_ep.registry`; :func:`run`
looks it up, validates the schedule against the scheme's hypotheses and
iterates until the stop rule fires.
"""

from __future__ import annotations

import concurrent.futures
import enum
import logging
import math
import os
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Any, ClassVar, Final

import numpy as np

from ishikawa_ep import registry
from ishikawa_ep.bifunctions import Bifunction, ZeroBifunction
from ishikawa_ep.exceptions import (
    ConfigError,
    DimensionError,
    DomainError,
    IshikawaEPError,
    ResolventError,
    SchemeRuntimeError,
    SolverRuntimeError,
    UncertifiedSolutionError,
)
from ishikawa_ep.hilbert import Vector, as_vector, norm
from ishikawa_ep.mappings import Mapping, classify, fixed_point_residual
from ishikawa_ep.resolvent import (
    DEFAULT_VERIFY_SAMPLES,
    Auto,
    ResolventRequest,
    Strategy,
    ep_membership,
    resolvent,
)
from ishikawa_ep.schedules import (
    ISHIKAWA,
    MAIN,
    MANN,
    TADA_TAKAHASHI,
    Constant,
    Schedule,
    ValidatedSchedule,
    validate_schedule,
)
from ishikawa_ep.sets import ConvexSet

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER: Final[int] = 1000
DEFAULT_RESIDUAL_TOL: Final[float] = 1e-6
KNOWN_SOLUTION_TOL: Final[float] = 1e-8
FEJER_TOL: Final[float] = 1e-10
DESCENT_TOL: Final[float] = 1e-8
DEFAULT_MAX_WORKERS: Final[int] = 4
MAX_WORKERS_ENV: Final[str] = 'ISHIKAWA_EP_MAX_WORKERS'

RESIDUAL_NAMES: Final[tuple[str, ...]] = ('res_x_Su', 'res_y_x', 'res_x_u', 'res_u_Su')

# Runtime invariant names
RESOLVENT_CONTRACTION: Final[str] = 'resolvent-contraction'
FEJER: Final[str] = 'fejer'
DESCENT: Final[str] = 'descent'


class Status(str, enum.Enum):
    CONVERGED = 'Converged'
    MAX_ITER = 'MaxIter'
    INNER_SOLVER_FAILURE = 'InnerSolverFailure'


def _frozen(arr: Any) -> Vector:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


def _affine(a: float, x: Vector, b: float, z: Vector) -> Vector:
    return _frozen(a * x + b * z)


# --------------------------------------------------------------------------
# Problem / stop rule / trace
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Problem:
    """Find a point of F(S) ∩ EP(f) inside E.

    ``known_solution`` must be certified: ||Sq − q|| <= 1e-8 and q passes the
    sampled equilibrium test. ``known_solution_set`` is the whole solution set
    when it has a closed-form projection.
    """

    E: ConvexSet
    S: Mapping
    f: Bifunction
    known_solution: Vector | None = None
    known_solution_set: ConvexSet | None = None
    resolvent_strategy: Strategy = field(default_factory=Auto)

    def __post_init__(self) -> None:
        if not self.E.dim == self.S.dim == self.f.dim:
            raise DimensionError(
                f'problem dimensions disagree: E in R^{self.E.dim}, '
                f'S on R^{self.S.dim}, f on R^{self.f.dim}'
            )
        if self.known_solution_set is not None and self.known_solution_set.dim != self.dim:
            raise DimensionError(
                f'known_solution_set lives in R^{self.known_solution_set.dim}, expected R^{self.dim}'
            )
        if self.known_solution is not None:
            q = as_vector(self.known_solution, 'known_solution')
            if q.shape[0] != self.dim:
                raise DimensionError(f'known_solution has dimension {q.shape[0]}, expected {self.dim}')
            object.__setattr__(self, 'known_solution', q)
            self.validate()

    @property
    def dim(self) -> int:
        return self.E.dim

    def validate(self, seed: int = 0, n_samples: int = DEFAULT_VERIFY_SAMPLES) -> None:
        """Certify ``known_solution``.

        Raises:
            UncertifiedSolutionError: q is not a fixed point of S or not in EP(f).
        """
        q = self.known_solution
        if q is None:
            return
        try:
            residual = fixed_point_residual(self.S, q)
            in_ep = ep_membership(self.f, self.E, q, seed, n_samples, KNOWN_SOLUTION_TOL)
        except DomainError as e:
            raise UncertifiedSolutionError(f'known_solution {q.tolist()}: {e}') from e
        if residual > KNOWN_SOLUTION_TOL:
            raise UncertifiedSolutionError(
                f'known_solution {q.tolist()} is not a fixed point of {self.S.kind} '
                f'(||Sq - q|| = {residual:.3e})'
            )
        if not in_ep:
            raise UncertifiedSolutionError(
                f'known_solution {q.tolist()} fails the equilibrium test for {self.f.family}'
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Problem):
            return NotImplemented
        return (
            self.E == other.E
            and self.S == other.S
            and self.f == other.f
            and _same_optional_vector(self.known_solution, other.known_solution)
            and self.known_solution_set == other.known_solution_set
            and self.resolvent_strategy == other.resolvent_strategy
        )

    __hash__ = None  # type: ignore[assignment]


def _same_optional_vector(a: Vector | None, b: Vector | None) -> bool:
    if a is None or b is None:
        return a is b
    return bool(np.array_equal(a, b))


@dataclass(frozen=True)
class StopRule:
    """Stop once every recorded residual is <= ``residual_tol``."""

    max_iter: int = DEFAULT_MAX_ITER
    residual_tol: float = DEFAULT_RESIDUAL_TOL

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ConfigError(f'max_iter must be >= 1, got {self.max_iter}')
        if not (self.residual_tol > 0 and math.isfinite(self.residual_tol)):
            raise ConfigError(f'residual_tol must be > 0, got {self.residual_tol}')


@dataclass(frozen=True, eq=False)
class TraceRecord:
    n: int
    x: Vector | None
    u: Vector | None
    y: Vector | None
    alpha: float
    beta: float
    r: float
    res_x_Su: float
    res_y_x: float
    res_x_u: float
    res_u_Su: float
    dist_q: float | None = None

    @property
    def residuals(self) -> tuple[float, float, float, float]:
        return self.res_x_Su, self.res_y_x, self.res_x_u, self.res_u_Su

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    def thinned(self) -> TraceRecord:
        return replace(self, x=None, u=None, y=None)


@dataclass(frozen=True)
class InvariantViolation:
    n: int
    invariant: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def __str__(self) -> str:
        return f'{self.invariant} violated at n={self.n}: {self.lhs:.6g} > {self.rhs:.6g}'


@dataclass(eq=False)
class Trace:
    """The record of one run. Records are contiguous from n = 1."""

    scheme: str
    dim: int
    records: list[TraceRecord] = field(default_factory=list)
    status: Status | None = None
    thin: bool = False
    violations: list[InvariantViolation] = field(default_factory=list)
    advisories: tuple[str, ...] = ()
    final_x: Vector | None = None
    next_x: Vector | None = None
    message: str = ''

    def __len__(self) -> int:
        return len(self.records)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def last(self) -> TraceRecord:
        if not self.records:
            raise ConfigError(f'{self.scheme} trace is empty')
        return self.records[-1]

    def _points(self, attr: str) -> np.ndarray:
        if self.thin:
            raise ConfigError('thin traces keep residuals only; rerun with thin=False')
        if not self.records:
            return np.empty((0, self.dim))
        return np.array([getattr(rec, attr) for rec in self.records])

    def xs(self) -> np.ndarray:
        return self._points('x')

    def us(self) -> np.ndarray:
        return self._points('u')

    def ys(self) -> np.ndarray:
        return self._points('y')

    def series(self, name: str) -> np.ndarray:
        if name not in (*RESIDUAL_NAMES, 'dist_q', 'alpha', 'beta', 'r'):
            raise ConfigError(f'unknown trace series {name!r}')
        return np.array(
            [np.nan if getattr(rec, name) is None else getattr(rec, name) for rec in self.records],
            dtype=np.float64,
        )


@dataclass(frozen=True, eq=False)
class IterState:
    """xₙ together with the record of the step that produced it."""

    n: int
    x: Vector
    last: TraceRecord | None = None


@dataclass(frozen=True, eq=False)
class _Step:
    u: Vector
    su: Vector
    y: Vector
    x_next: Vector


# --------------------------------------------------------------------------
# Schemes
# --------------------------------------------------------------------------


def _resolvent_point(problem: Problem, x: Vector, r: float) -> Vector:
    result = resolvent(
        ResolventRequest(problem.f, problem.E, r, x, problem.resolvent_strategy),
        verify_samples=0,
    )
    if not result.converged:
        raise ResolventError(
            f'{result.strategy_used} stopped after {result.inner_iterations} iterations '
            f'without converging (r={r:g})',
            result=result,
        )
    return result.z


class Scheme(ABC):
    """One registered iteration scheme."""

    name: ClassVar[str] = ''
    hypotheses: ClassVar[str] = MAIN
    # whether the per-step bound with coefficient alpha*beta*(1 - beta) applies
    descent: ClassVar[bool] = False

    def prepare(self, problem: Problem, schedule: Schedule, seed: int = 0) -> Schedule:
        """Check scheme preconditions and return the schedule actually used."""
        return schedule

    @abstractmethod
    def advance(
        self, problem: Problem, x: Vector, alpha: float, beta: float, r: float
    ) -> _Step: ...

    def step(
        self,
        state: IterState,
        problem: Problem,
        schedule: Schedule | ValidatedSchedule,
        q: Vector | None = None,
    ) -> IterState:
        n, x = state.n, state.x
        alpha, beta, r = schedule.term(n)
        out = self.advance(problem, x, alpha, beta, r)
        record = TraceRecord(
            n=n,
            x=x,
            u=out.u,
            y=out.y,
            alpha=alpha,
            beta=beta,
            r=r,
            res_x_Su=norm(x - out.su),
            res_y_x=norm(out.y - x),
            res_x_u=norm(x - out.u),
            res_u_Su=norm(out.u - out.su),
            dist_q=norm(x - q) if q is not None else None,
        )
        return IterState(n + 1, out.x_next, record)

    def __repr__(self) -> str:
        return f'{type(self).__name__}()'


@registry.register(r'^modified[_-]ishikawa$', priority=10)
class ModifiedIshikawa(Scheme):
    name: ClassVar[str] = 'modified_ishikawa'
    descent: ClassVar[bool] = True

    def inner_point(self, problem: Problem, x: Vector, r: float) -> Vector:
        return _resolvent_point(problem, x, r)

    def advance(
        self, problem: Problem, x: Vector, alpha: float, beta: float, r: float
    ) -> _Step:
        u = self.inner_point(problem, x, r)
        su = problem.S.apply(u)
        y = _affine(1.0 - beta, x, beta, su)
        x_next = _affine(1.0 - alpha, x, alpha, problem.S.apply(y))
        return _Step(u, su, y, x_next)


@registry.register(r'^projected[_-]ishikawa$', priority=10)
class ProjectedIshikawa(ModifiedIshikawa):
    """f ≡ 0 and rₙ ≡ 1, so uₙ = P_E xₙ."""

    name: ClassVar[str] = 'projected_ishikawa'

    def prepare(self, problem: Problem, schedule: Schedule, seed: int = 0) -> Schedule:
        if not isinstance(problem.f, ZeroBifunction):
            raise ConfigError(
                f'{self.name} requires the Zero bifunction, got {problem.f.family}'
            )
        return schedule.with_r(Constant(1.0))

    def inner_point(self, problem: Problem, x: Vector, r: float) -> Vector:
        return problem.E.project(x)


@registry.register(r'^composed[_-]ishikawa$', priority=10)
class ComposedIshikawa(ModifiedIshikawa):
    """αₙ ≡ 1: xₙ₊₁ = S((1 − βₙ)xₙ + βₙ S uₙ)."""

    name: ClassVar[str] = 'composed_ishikawa'

    def prepare(self, problem: Problem, schedule: Schedule, seed: int = 0) -> Schedule:
        return schedule.with_alpha(Constant(1.0))


@registry.register(r'^hybrid[_-]ishikawa$', priority=10)
class HybridIshikawa(ModifiedIshikawa):
    """The main scheme, refused unless S passes the sampled hybrid check."""

    name: ClassVar[str] = 'hybrid_ishikawa'

    def prepare(self, problem: Problem, schedule: Schedule, seed: int = 0) -> Schedule:
        report = classify(problem.S, 'hybrid', sampler_seed=seed)
        if not report.consistent:
            x, y = report.witness  # type: ignore[misc]
            raise ConfigError(
                f'{self.name}: {problem.S.kind} is not hybrid (residual '
                f'{report.worst_residual:.3e} at x={x.tolist()}, y={y.tolist()})'
            )
        return schedule


@registry.register(r'^mann$', priority=10)
class Mann(Scheme):
    """xₙ₊₁ = αₙ xₙ + (1 − αₙ) S xₙ."""

    name: ClassVar[str] = 'mann'
    hypotheses: ClassVar[str] = MANN

    def advance(
        self, problem: Problem, x: Vector, alpha: float, beta: float, r: float
    ) -> _Step:
        sx = problem.S.apply(x)
        return _Step(x, sx, x, _affine(alpha, x, 1.0 - alpha, sx))


@registry.register(r'^ishikawa$', priority=10)
class Ishikawa(Scheme):
    """yₙ = βₙ xₙ + (1 − βₙ) S xₙ, xₙ₊₁ = αₙ xₙ + (1 − αₙ) S yₙ."""

    name: ClassVar[str] = 'ishikawa'
    hypotheses: ClassVar[str] = ISHIKAWA

    def advance(
        self, problem: Problem, x: Vector, alpha: float, beta: float, r: float
    ) -> _Step:
        sx = problem.S.apply(x)
        y = _affine(beta, x, 1.0 - beta, sx)
        return _Step(x, sx, y, _affine(alpha, x, 1.0 - alpha, problem.S.apply(y)))


@registry.register(r'^tada[_-]takahashi$', priority=10)
class TadaTakahashi(Scheme):
    """uₙ = T_{rₙ} xₙ, xₙ₊₁ = αₙ xₙ + (1 − αₙ) S uₙ."""

    name: ClassVar[str] = 'tada_takahashi'
    hypotheses: ClassVar[str] = TADA_TAKAHASHI

    def advance(
        self, problem: Problem, x: Vector, alpha: float, beta: float, r: float
    ) -> _Step:
        u = _resolvent_point(problem, x, r)
        su = problem.S.apply(u)
        return _Step(u, su, x, _affine(alpha, x, 1.0 - alpha, su))


def get_scheme(scheme: str | Scheme) -> Scheme:
    if isinstance(scheme, Scheme):
        return scheme
    target = registry.resolve(scheme)
    return target() if isinstance(target, type) else target


def step_modified_ishikawa(
    state: IterState,
    problem: Problem,
    schedule: Schedule | ValidatedSchedule,
    q: Vector | None = None,
) -> IterState:
    """Advance the main scheme from ``state.x``; the returned state carries the step's record."""
    return ModifiedIshikawa().step(state, problem, schedule, q)


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------


def _invariant_checks(
    scheme: Scheme, record: TraceRecord, x_next: Vector, q: Vector
) -> list[InvariantViolation]:
    assert record.x is not None and record.u is not None
    d_x = norm(record.x - q)
    d_u = norm(record.u - q)
    d_next = norm(x_next - q)
    slack = FEJER_TOL * max(1.0, d_x)
    found = []
    if d_u > d_x + slack:
        found.append(InvariantViolation(record.n, RESOLVENT_CONTRACTION, d_u, d_x + slack))
    if d_next > d_x + slack:
        found.append(InvariantViolation(record.n, FEJER, d_next, d_x + slack))
    if scheme.descent:
        bound = (
            d_x**2
            - record.alpha * record.beta * (1.0 - record.beta) * record.res_x_Su**2
            + DESCENT_TOL * max(1.0, d_x**2)
        )
        if d_next**2 > bound:
            found.append(InvariantViolation(record.n, DESCENT, d_next**2, bound))
    return found


def run(
    problem: Problem,
    scheme: str | Scheme,
    schedule: Schedule,
    stop: StopRule,
    x1: Vector | Sequence[float],
    *,
    seed: int = 0,
    strict: bool = False,
    thin: bool = False,
) -> Trace:
    """Run ``scheme`` from ``x1`` until the stop rule fires.

    The schedule is validated over ``stop.max_iter`` terms before the first
    step. With a known solution every step is checked for the resolvent
    contraction, the Fejér step and (main-scheme family) the quantified
    descent; violations land in ``Trace.violations``.

    Args:
        seed: seeds every sampled precondition check.
        strict: raise instead of recording violations and inner failures.
        thin: keep residuals only, not the points.

    Raises:
        ScheduleViolation: a schedule term breaks the scheme's hypotheses.
        ConfigError: scheme preconditions fail.
        SchemeRuntimeError: in strict mode, or when a point leaves a domain.
    """
    impl = get_scheme(scheme)
    x = as_vector(x1, 'x1')
    if x.shape[0] != problem.dim:
        raise DimensionError(f'x1 has dimension {x.shape[0]}, problem is in R^{problem.dim}')
    validated = validate_schedule(impl.prepare(problem, schedule, seed), stop.max_iter, impl.hypotheses)
    q = problem.known_solution
    trace = Trace(scheme=impl.name, dim=problem.dim, thin=thin, advisories=tuple(validated.advisories))
    log.info('run %s: x1=%s, max_iter=%d, tol=%g', impl.name, x.tolist(), stop.max_iter, stop.residual_tol)

    state = IterState(1, x)
    try:
        for _ in range(stop.max_iter):
            nxt = impl.step(state, problem, validated, q)
            record = nxt.last
            assert record is not None
            trace.records.append(record.thinned() if thin else record)
            trace.final_x, trace.next_x = state.x, nxt.x
            if q is not None:
                for violation in _invariant_checks(impl, record, nxt.x, q):
                    trace.violations.append(violation)
                    log.warning('%s: %s', impl.name, violation)
                    if strict:
                        raise SchemeRuntimeError(f'{impl.name}: {violation}', trace=trace)
            log.debug('%s n=%d residuals=%s', impl.name, record.n, record.residuals)
            if record.max_residual <= stop.residual_tol:
                trace.status = Status.CONVERGED
                break
            state = nxt
        else:
            trace.status = Status.MAX_ITER
    except SchemeRuntimeError:
        raise
    except SolverRuntimeError as e:
        trace.status = Status.INNER_SOLVER_FAILURE
        trace.message = str(e)
        log.warning('%s: inner solver failed at n=%d: %s', impl.name, state.n, e)
        if strict:
            raise SchemeRuntimeError(
                f'{impl.name}: inner solver failed at n={state.n}', trace=trace, original=e
            ) from e
    except (DomainError, DimensionError) as e:
        raise SchemeRuntimeError(
            f'{impl.name} failed at n={state.n}: {e}', trace=trace, original=e
        ) from e

    log.info(
        'run %s finished: %s after %d iterations (%d invariant violations)',
        impl.name,
        trace.status.value if trace.status else None,
        trace.iterations,
        len(trace.violations),
    )
    return trace


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    status: Status | None = None
    iterations: int = 0
    residuals: tuple[float, float, float, float] | None = None
    dist_q: float | None = None
    violations: int = 0
    error: str | None = None
    trace: Trace | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            'scheme': self.scheme,
            'status': self.status.value if self.status else 'Error',
            'iterations': self.iterations,
        }
        residuals = self.residuals or (None,) * len(RESIDUAL_NAMES)
        row.update(zip(RESIDUAL_NAMES, residuals, strict=True))
        row['dist_q'] = self.dist_q
        row['violations'] = self.violations
        row['error'] = self.error or ''
        return row


def _max_workers(max_workers: int | None) -> int:
    if max_workers is not None:
        value: int | str = max_workers
    else:
        value = os.environ.get(MAX_WORKERS_ENV, DEFAULT_MAX_WORKERS)
    try:
        workers = int(value)
    except ValueError as e:
        raise ConfigError(f'{MAX_WORKERS_ENV} must be an integer, got {value!r}') from e
    if workers < 1:
        raise ConfigError(f'max_workers must be >= 1, got {workers}')
    return workers


def compare(
    problem: Problem,
    schemes: Sequence[str | Scheme],
    schedule: Schedule,
    stop: StopRule,
    x1: Vector | Sequence[float],
    *,
    seed: int = 0,
    max_workers: int | None = None,
) -> list[ComparisonRow]:
    """Run each scheme on the same problem, schedule and start point.

    Rows come back in the order of ``schemes``. A scheme that fails gets a
    row carrying the error instead of aborting the table.
    ``max_workers`` falls back to ``$ISHIKAWA_EP_MAX_WORKERS`` (default 4).
    """

    def one(name: str | Scheme) -> ComparisonRow:
        label = name if isinstance(name, str) else name.name
        try:
            trace = run(problem, name, schedule, stop, x1, seed=seed)
        except IshikawaEPError as e:
            log.info('compare: %s failed: %s', label, e)
            return ComparisonRow(scheme=label, error=f'{type(e).__name__}: {e}')
        last = trace.records[-1] if trace.records else None
        return ComparisonRow(
            scheme=trace.scheme,
            status=trace.status,
            iterations=trace.iterations,
            residuals=last.residuals if last else None,
            dist_q=last.dist_q if last else None,
            violations=len(trace.violations),
            error=trace.message or None,
            trace=trace,
        )

    workers = _max_workers(max_workers)
    if len(schemes) > 1 and workers > 1:
        with concurrent.futures.ThreadPoolExecutor(
            max_workers=min(workers, len(schemes))
        ) as executor:
            future_to_index = {executor.submit(one, s): i for i, s in enumerate(schemes)}
            rows: list[ComparisonRow | None] = [None] * len(schemes)
            for future in concurrent.futures.as_completed(future_to_index):
                index = future_to_index[future]
                try:
                    rows[index] = future.result()
                except Exception as e:
                    raise SchemeRuntimeError(f'Parallel comparison error: {e}', original=e) from e
        return [row for row in rows if row is not None]
    return [one(s) for s in schemes]
