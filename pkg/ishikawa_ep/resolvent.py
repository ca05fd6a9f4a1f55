"""The resolvent T_r of a monotone bifunction and its sampled verifiers.

T_r(x) is the unique z in E with f(z, y) + (1/r)<y − z, z − x> >= 0 for all
y in E. It is computed for the structural families only:

* ``Zero``        z = P_E(x)
* ``AffineVI``    a direct solve of (rA + I)z = x − rb on the whole space,
                  otherwise the projected fixed-point iteration
                  z <- P_E(z − γ(Az + b + (z − x)/r))
* ``ConvexGap``   projected gradient on g(z) + ||z − x||²/(2r)

``Custom`` bifunctions can be verified but not solved.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import ClassVar, Final, TypeAlias

import numpy as np
import scipy.linalg

from ishikawa_ep.bifunctions import AffineVI, Bifunction, ConvexGap, ZeroBifunction
from ishikawa_ep.exceptions import (
    ConfigError,
    DimensionError,
    DomainError,
    SingularSystemError,
    StrategyMismatchError,
)
from ishikawa_ep.hilbert import Vector, as_vector, norm
from ishikawa_ep.sampling import sample_points
from ishikawa_ep.sets import ConvexSet, WholeSpace

log = logging.getLogger(__name__)

DEFAULT_INNER_MAX_ITER: Final[int] = 100_000
DEFAULT_INNER_TOL: Final[float] = 1e-10
DEFAULT_VERIFY_SAMPLES: Final[int] = 256
DEFAULT_VERIFY_TOL: Final[float] = 1e-8

StepMap: TypeAlias = Callable[[Vector], Vector]


def _frozen(arr: Vector) -> Vector:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# Strategies
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Strategy:
    name: ClassVar[str] = ''


@dataclass(frozen=True)
class Auto(Strategy):
    """Pick the strategy matching the bifunction family and the set."""

    name: ClassVar[str] = 'Auto'


@dataclass(frozen=True)
class ClosedFormLinear(Strategy):
    name: ClassVar[str] = 'ClosedFormLinear'


@dataclass(frozen=True)
class ProjectedFixedPoint(Strategy):
    """``step=None`` uses γ = μ/L², half the contraction window."""

    step: float | None = None
    max_iter: int = DEFAULT_INNER_MAX_ITER
    tol: float = DEFAULT_INNER_TOL
    name: ClassVar[str] = 'ProjectedFixedPoint'


@dataclass(frozen=True)
class ProxGradient(Strategy):
    """``step=None`` uses 1/(L_g + 1/r)."""

    step: float | None = None
    max_iter: int = DEFAULT_INNER_MAX_ITER
    tol: float = DEFAULT_INNER_TOL
    name: ClassVar[str] = 'ProxGradient'


ZERO_PROJECTION: Final[str] = 'ZeroProjection'


@dataclass(frozen=True)
class ResolventRequest:
    f: Bifunction
    E: ConvexSet
    r: float
    x: Vector
    strategy: Strategy = field(default_factory=Auto)
    start: Vector | None = None

    def __post_init__(self) -> None:
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ConfigError(f'resolvent parameter r must be finite and > 0, got {self.r}')
        x = as_vector(self.x, 'x')
        if x.shape[0] != self.E.dim or self.f.dim != self.E.dim:
            raise DimensionError(
                f'resolvent dimensions disagree: x in R^{x.shape[0]}, '
                f'E in R^{self.E.dim}, f on R^{self.f.dim}'
            )
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'r', float(self.r))
        if self.start is not None:
            object.__setattr__(self, 'start', as_vector(self.start, 'start'))


@dataclass(frozen=True)
class ResolventResult:
    """``achieved_residual`` is None when the result was not spot-checked."""

    z: Vector
    achieved_residual: float | None
    inner_iterations: int
    strategy_used: str
    converged: bool = True


# --------------------------------------------------------------------------
# Solvers
# --------------------------------------------------------------------------


def _resolve_strategy(req: ResolventRequest) -> Strategy | str:
    f, strategy = req.f, req.strategy
    if isinstance(strategy, Auto):
        if isinstance(f, ZeroBifunction):
            return ZERO_PROJECTION
        if isinstance(f, AffineVI):
            return ClosedFormLinear() if isinstance(req.E, WholeSpace) else ProjectedFixedPoint()
        if isinstance(f, ConvexGap):
            return ProxGradient()
        raise StrategyMismatchError(
            f'{f.family} bifunctions are verification-only; no resolvent strategy applies'
        )
    if isinstance(strategy, ClosedFormLinear):
        if not isinstance(f, AffineVI | ZeroBifunction):
            raise StrategyMismatchError(f'ClosedFormLinear needs an AffineVI bifunction, got {f.family}')
        if not isinstance(req.E, WholeSpace):
            raise StrategyMismatchError(
                f'ClosedFormLinear needs E = WholeSpace, got {req.E.kind}'
            )
        return strategy
    if isinstance(strategy, ProjectedFixedPoint):
        if not isinstance(f, AffineVI | ZeroBifunction):
            raise StrategyMismatchError(
                f'ProjectedFixedPoint needs an AffineVI bifunction, got {f.family}'
            )
        return strategy
    if isinstance(strategy, ProxGradient):
        if not isinstance(f, ConvexGap | ZeroBifunction):
            raise StrategyMismatchError(f'ProxGradient needs a ConvexGap bifunction, got {f.family}')
        return strategy
    raise StrategyMismatchError(f'unknown resolvent strategy {strategy!r}')


def _affine_parts(f: Bifunction, n: int) -> tuple[Vector, Vector]:
    if isinstance(f, AffineVI):
        return np.asarray(f.matrix), np.asarray(f.offset)
    return np.zeros((n, n)), np.zeros(n)


def _closed_form_linear(req: ResolventRequest) -> tuple[Vector, int, bool]:
    n = req.E.dim
    a, b = _affine_parts(req.f, n)
    system = req.r * a + np.eye(n)
    try:
        z = scipy.linalg.solve(system, req.x - req.r * b)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSystemError(
            'rA + I is singular, so A is not positive semidefinite', original=e
        ) from e
    if not np.all(np.isfinite(z)):
        raise SingularSystemError('rA + I is numerically singular; A is not positive semidefinite')
    return z, 0, True


def _iterate_contraction(
    step_map: StepMap,
    z: Vector,
    contraction: float,
    max_iter: int,
    tol: float,
) -> tuple[Vector, int, bool]:
    # stop on the a-posteriori bound ||z_k − z*|| <= c/(1 − c)·||z_k − z_{k−1}||
    factor = contraction / (1.0 - contraction) if contraction < 1.0 else math.inf
    for k in range(1, max_iter + 1):
        z_next = step_map(z)
        gap = norm(z_next - z)
        z = z_next
        if gap == 0.0 or gap * max(factor, 1.0) <= tol:
            return z, k, True
    return z, max_iter, False


def _projected_fixed_point(req: ResolventRequest, strategy: ProjectedFixedPoint) -> tuple[Vector, int, bool]:
    n = req.E.dim
    a, b = _affine_parts(req.f, n)
    mu = 1.0 / req.r
    lip = float(scipy.linalg.norm(a, 2)) + mu
    gamma = strategy.step if strategy.step is not None else mu / lip**2
    if not 0 < gamma < 2 * mu / lip**2:
        raise ConfigError(
            f'ProjectedFixedPoint step {gamma} is outside the contraction window '
            f'(0, {2 * mu / lip**2})'
        )
    contraction = math.sqrt(max(0.0, 1.0 - 2 * gamma * mu + gamma**2 * lip**2))
    x, E = req.x, req.E

    def step_map(z: Vector) -> Vector:
        return np.asarray(E.project(z - gamma * (a @ z + b + (z - x) / req.r)))

    start = req.start if req.start is not None else E.project(x)
    return _iterate_contraction(step_map, np.asarray(start), contraction, strategy.max_iter, strategy.tol)


def _prox_gradient(req: ResolventRequest, strategy: ProxGradient) -> tuple[Vector, int, bool]:
    f = req.f
    mu = 1.0 / req.r
    if isinstance(f, ConvexGap):
        grad, lip_g = f.g.gradient, f.g.lipschitz
    else:
        def grad(z: Vector) -> Vector:
            return np.zeros_like(z)

        lip_g = 0.0
    lip = lip_g + mu
    step = strategy.step if strategy.step is not None else 1.0 / lip
    if not 0 < step <= 1.0 / lip:
        raise ConfigError(f'ProxGradient step {step} must lie in (0, {1.0 / lip}]')
    contraction = max(abs(1.0 - step * mu), abs(1.0 - step * lip))
    x, E = req.x, req.E

    def step_map(z: Vector) -> Vector:
        return np.asarray(E.project(z - step * (grad(z) + (z - x) / req.r)))

    start = req.start if req.start is not None else E.project(x)
    return _iterate_contraction(step_map, np.asarray(start), contraction, strategy.max_iter, strategy.tol)


def resolvent(
    req: ResolventRequest,
    verify_samples: int = DEFAULT_VERIFY_SAMPLES,
    verify_seed: int = 0,
) -> ResolventResult:
    """Compute T_r(x).

    A non-converged inner solver does not raise: the last iterate comes back
    with ``converged=False``. ``verify_samples=0`` skips the sampled residual.

    Raises:
        StrategyMismatchError: the strategy cannot handle the family / set.
        SingularSystemError: the closed-form system is singular.
    """
    chosen = _resolve_strategy(req)
    if chosen == ZERO_PROJECTION:
        z, iterations, converged, used = req.E.project(req.x), 0, True, ZERO_PROJECTION
    elif isinstance(chosen, ClosedFormLinear):
        z, iterations, converged = _closed_form_linear(req)
        used = chosen.name
    elif isinstance(chosen, ProjectedFixedPoint):
        z, iterations, converged = _projected_fixed_point(req, chosen)
        used = chosen.name
    elif isinstance(chosen, ProxGradient):
        z, iterations, converged = _prox_gradient(req, chosen)
        used = chosen.name
    else:  # pragma: no cover - _resolve_strategy is exhaustive
        raise StrategyMismatchError(f'unhandled strategy {chosen!r}')

    z = _frozen(z)
    if not converged:
        log.warning(
            'resolvent %s did not converge within %d iterations (r=%g)', used, iterations, req.r
        )
    else:
        log.debug('resolvent %s: %d inner iterations', used, iterations)
    achieved = (
        resolvent_residual(req.f, req.E, req.r, req.x, z, verify_seed, verify_samples)
        if verify_samples > 0
        else None
    )
    return ResolventResult(
        z=z,
        achieved_residual=achieved,
        inner_iterations=iterations,
        strategy_used=used,
        converged=converged,
    )


def resolvent_residual(
    f: Bifunction,
    E: ConvexSet,
    r: float,
    x: Vector,
    z: Vector,
    sampler_seed: int = 0,
    n_samples: int = DEFAULT_VERIFY_SAMPLES,
) -> float:
    """min over sampled y in E of f(z, y) + (1/r)<y − z, z − x>.

    A certified resolvent value has a result >= −tol.
    """
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if not E.contains(z):
        raise DomainError(f'z={z.tolist()} is not in {E.kind} (distance {E.distance(z):.3e})')
    ys = sample_points(E, n_samples, sampler_seed)
    shift = (z - x) / r
    values = [f._value(z, y) + float(np.dot(y - z, shift)) for y in ys]
    return float(min(values))


def ep_membership(
    f: Bifunction,
    E: ConvexSet,
    z: Vector,
    sampler_seed: int = 0,
    n_samples: int = DEFAULT_VERIFY_SAMPLES,
    tol: float = DEFAULT_VERIFY_TOL,
) -> bool:
    """True iff min over sampled y of f(z, y) >= −tol, i.e. z looks like a point of EP(f).

    This is the resolvent residual at x = z, where T_r z = z.
    """
    return resolvent_residual(f, E, 1.0, z, z, sampler_seed, n_samples) >= -tol
