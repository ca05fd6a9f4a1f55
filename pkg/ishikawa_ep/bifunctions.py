"""Bifunctions f: E × E -> R and sampled checks of the standing conditions.

The four conditions checked by :func:`check_axioms` are the usual ones for
equilibrium problems: f vanishes on the diagonal, f is monotone, f is upper
hemicontinuous along segments in its first argument, and f is convex in its
second argument.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, ClassVar, Final

import numpy as np
import scipy.linalg

from ishikawa_ep.exceptions import ConfigError, DimensionError, DomainError
from ishikawa_ep.hilbert import Tolerance, Vector, as_matrix, as_vector
from ishikawa_ep.mappings import AffineMap, Identity, Mapping
from ishikawa_ep.reports import CertificateReport, CheckResult
from ishikawa_ep.sampling import sample_points
from ishikawa_ep.sets import ConvexSet

log = logging.getLogger(__name__)

DEFAULT_AXIOM_SAMPLES: Final[int] = 256
DEFAULT_AXIOM_TOL: Final[float] = 1e-8
DEFAULT_T_GRID: Final[tuple[float, ...]] = tuple(10.0**-k for k in range(1, 13))
_PSD_SLACK: Final[float] = 1e-12

DIAGONAL: Final[str] = 'diagonal'
MONOTONE: Final[str] = 'monotone'
HEMICONTINUOUS: Final[str] = 'upper-hemicontinuous'
CONVEX_SECOND: Final[str] = 'convex-in-second-argument'


def _frozen(arr: Any) -> Vector:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# Convex function catalog for the convex-gap family
# --------------------------------------------------------------------------


class ConvexFunction(ABC):
    """A smooth convex g with a known gradient Lipschitz constant."""

    kind: ClassVar[str] = ''

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def value(self, x: Vector) -> float: ...

    @abstractmethod
    def gradient(self, x: Vector) -> Vector: ...

    @property
    @abstractmethod
    def lipschitz(self) -> float:
        """Lipschitz constant of the gradient."""

    @abstractmethod
    def _key(self) -> tuple[Any, ...]: ...

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConvexFunction):
            return NotImplemented
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._key()))


@dataclass(frozen=True, eq=False)
class QuadraticFunction(ConvexFunction):
    """g(x) = ½<Qx, x> + <c, x> with symmetric part of Q positive semidefinite."""

    matrix: Vector
    linear: Vector
    kind: ClassVar[str] = 'quadratic'
    _sym: Vector = field(init=False, repr=False)

    def __post_init__(self) -> None:
        matrix = as_matrix(self.matrix, 'quadratic.matrix')
        linear = as_vector(self.linear, 'quadratic.linear')
        n = linear.shape[0]
        if matrix.shape != (n, n):
            raise DimensionError(f'quadratic needs an {n}x{n} matrix, got {matrix.shape}')
        sym = 0.5 * (matrix + matrix.T)
        if float(np.min(np.linalg.eigvalsh(sym))) < -_PSD_SLACK * max(1.0, float(np.abs(sym).max())):
            raise ConfigError('quadratic matrix is not positive semidefinite; g would not be convex')
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'linear', linear)
        object.__setattr__(self, '_sym', _frozen(sym))

    @property
    def dim(self) -> int:
        return int(self.linear.shape[0])

    def value(self, x: Vector) -> float:
        return 0.5 * float(x @ self.matrix @ x) + float(np.dot(self.linear, x))

    def gradient(self, x: Vector) -> Vector:
        return self._sym @ x + self.linear

    @property
    def lipschitz(self) -> float:
        return float(scipy.linalg.norm(self._sym, 2))

    def _key(self) -> tuple[Any, ...]:
        return (tuple(map(tuple, self.matrix)), tuple(self.linear))


@dataclass(frozen=True, eq=False)
class NormSquare(ConvexFunction):
    """g(x) = weight·||x||²; the default weight ½ gives g(x) = ||x||²/2."""

    n: int
    weight: float = 0.5
    kind: ClassVar[str] = 'norm-square'

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f'norm-square dimension must be >= 1, got {self.n}')
        if not self.weight >= 0:
            raise ConfigError(f'norm-square weight must be >= 0, got {self.weight}')
        object.__setattr__(self, 'weight', float(self.weight))

    @property
    def dim(self) -> int:
        return self.n

    def value(self, x: Vector) -> float:
        return self.weight * float(np.dot(x, x))

    def gradient(self, x: Vector) -> Vector:
        return 2.0 * self.weight * x

    @property
    def lipschitz(self) -> float:
        return 2.0 * self.weight

    def _key(self) -> tuple[Any, ...]:
        return (self.n, self.weight)


@dataclass(frozen=True, eq=False)
class FactoredQuadratic(ConvexFunction):
    """g(x) = ½||Lx||² + <c, x>; convex for any factor L."""

    factor: Vector
    linear: Vector
    kind: ClassVar[str] = 'custom-quadratic'

    def __post_init__(self) -> None:
        factor = as_matrix(self.factor, 'custom-quadratic.factor')
        linear = as_vector(self.linear, 'custom-quadratic.linear')
        if factor.shape[1] != linear.shape[0]:
            raise DimensionError('custom-quadratic factor columns must match the dimension')
        object.__setattr__(self, 'factor', factor)
        object.__setattr__(self, 'linear', linear)

    @property
    def dim(self) -> int:
        return int(self.linear.shape[0])

    def value(self, x: Vector) -> float:
        lx = self.factor @ x
        return 0.5 * float(np.dot(lx, lx)) + float(np.dot(self.linear, x))

    def gradient(self, x: Vector) -> Vector:
        return self.factor.T @ (self.factor @ x) + self.linear

    @property
    def lipschitz(self) -> float:
        return float(scipy.linalg.norm(self.factor, 2)) ** 2

    def _key(self) -> tuple[Any, ...]:
        return (tuple(map(tuple, self.factor)), tuple(self.linear))


# --------------------------------------------------------------------------
# Bifunction families
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False, kw_only=True)
class Bifunction(ABC):
    """f: E × E -> R on ``domain``."""

    domain: ConvexSet
    family: ClassVar[str] = ''

    @property
    def dim(self) -> int:
        return self.domain.dim

    @abstractmethod
    def _value(self, x: Vector, y: Vector) -> float: ...

    @abstractmethod
    def _params(self) -> tuple[Any, ...]: ...

    def eval(self, x: Vector, y: Vector, tol: Tolerance | None = None) -> float:
        for name, point in (('x', x), ('y', y)):
            p = np.asarray(point, dtype=np.float64)
            if p.shape != (self.dim,):
                raise DimensionError(f'{self.family}: {name} has shape {p.shape}, expected ({self.dim},)')
            if not self.domain.contains(p, tol):
                raise DomainError(
                    f'{self.family}: {name}={p.tolist()} lies outside {self.domain.kind}'
                )
        return self._value(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))

    __call__ = eval

    @classmethod
    def from_mapping(cls, mapping: Mapping, domain: ConvexSet | None = None) -> Bifunction:
        """The variational-inequality bifunction f(x, y) = <Sx, y − x>."""
        domain = domain or mapping.domain
        if isinstance(mapping, Identity):
            return AffineVI(domain=domain, matrix=np.eye(mapping.dim), offset=np.zeros(mapping.dim))
        if isinstance(mapping, AffineMap):
            return AffineVI(domain=domain, matrix=mapping.matrix, offset=mapping.offset)

        def evaluator(x: Vector, y: Vector) -> float:
            return float(np.dot(mapping._evaluate(x), y - x))

        return CustomBifunction(domain=domain, evaluator=evaluator, name=f'vi[{mapping.kind}]')

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Bifunction):
            return NotImplemented
        return (
            type(self) is type(other)
            and self._params() == other._params()
            and self.domain == other.domain
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._params(), self.domain))


@dataclass(frozen=True, eq=False, kw_only=True)
class ZeroBifunction(Bifunction):
    """f ≡ 0; every point of E is an equilibrium."""

    family: ClassVar[str] = 'Zero'

    def _value(self, x: Vector, y: Vector) -> float:
        return 0.0

    def _params(self) -> tuple[Any, ...]:
        return ()


@dataclass(frozen=True, eq=False, kw_only=True)
class AffineVI(Bifunction):
    """f(x, y) = <Ax + b, y − x>; monotone when A is positive semidefinite."""

    matrix: Vector
    offset: Vector
    family: ClassVar[str] = 'AffineVI'

    def __post_init__(self) -> None:
        matrix = as_matrix(self.matrix, 'AffineVI.matrix')
        offset = as_vector(self.offset, 'AffineVI.offset')
        n = self.domain.dim
        if matrix.shape != (n, n) or offset.shape != (n,):
            raise DimensionError(
                f'AffineVI needs an {n}x{n} matrix and length-{n} offset, '
                f'got {matrix.shape} and {offset.shape}'
            )
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'offset', offset)

    def operator(self, x: Vector) -> Vector:
        return self.matrix @ x + self.offset

    def _value(self, x: Vector, y: Vector) -> float:
        return float(np.dot(self.operator(x), y - x))

    def _params(self) -> tuple[Any, ...]:
        return (tuple(map(tuple, self.matrix)), tuple(self.offset))


@dataclass(frozen=True, eq=False, kw_only=True)
class ConvexGap(Bifunction):
    """f(x, y) = g(y) − g(x); antisymmetric, hence monotone."""

    g: ConvexFunction
    family: ClassVar[str] = 'ConvexGap'

    def __post_init__(self) -> None:
        if self.g.dim != self.domain.dim:
            raise DimensionError('ConvexGap function and domain dimensions differ')

    def _value(self, x: Vector, y: Vector) -> float:
        return self.g.value(y) - self.g.value(x)

    def _params(self) -> tuple[Any, ...]:
        return (self.g,)


@dataclass(frozen=True, eq=False, kw_only=True)
class CustomBifunction(Bifunction):
    """Black-box evaluator; usable for verification, not for solving."""

    evaluator: Callable[[Vector, Vector], float]
    name: str = 'custom'
    family: ClassVar[str] = 'Custom'

    def _value(self, x: Vector, y: Vector) -> float:
        return float(self.evaluator(x, y))

    def _params(self) -> tuple[Any, ...]:
        return (self.name, id(self.evaluator))


def evaluate(f: Bifunction, x: Vector, y: Vector) -> float:
    """f(x, y) with domain checks on both arguments."""
    return f.eval(x, y)


# --------------------------------------------------------------------------
# Sampled condition checks
# --------------------------------------------------------------------------


def _worst(
    name: str, margins: Sequence[float], witnesses: Sequence[Any], detail: str
) -> CheckResult:
    values = np.asarray(margins, dtype=np.float64)
    idx = int(np.argmax(values))
    passed = bool(values[idx] <= 0)
    return CheckResult(
        name=name,
        passed=passed,
        worst_index=idx,
        worst_margin=float(values[idx]),
        witness=None if passed else witnesses[idx],
        detail=detail,
    )


def check_axioms(
    f: Bifunction,
    sampler_seed: int = 0,
    n_samples: int = DEFAULT_AXIOM_SAMPLES,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    tol: float = DEFAULT_AXIOM_TOL,
) -> CertificateReport:
    """Spot-check the four standing conditions on sampled points of the domain.

    Tolerances are scaled by 1 + the magnitude of the right-hand side so the
    checks stay meaningful on large domains. Deterministic in ``sampler_seed``.
    """
    if n_samples < 1:
        raise ConfigError(f'n_samples must be >= 1, got {n_samples}')
    grid = [float(t) for t in t_grid]
    if not grid or any(not 0 < t <= 1 for t in grid):
        raise ConfigError('t_grid must be a non-empty sequence in (0, 1]')
    if any(b >= a for a, b in zip(grid, grid[1:], strict=False)):
        raise ConfigError('t_grid must be strictly decreasing toward 0')
    t_min = grid[-1]

    points = sample_points(f.domain, 3 * n_samples, sampler_seed)
    xs, ys, zs = points[:n_samples], points[n_samples : 2 * n_samples], points[2 * n_samples :]

    diag, mono, hemi, conv = [], [], [], []
    for x, y, z in zip(xs, ys, zs, strict=True):
        fxy = f._value(x, y)
        fyx = f._value(y, x)
        diag.append(abs(f._value(x, x)) - tol)
        mono.append(fxy + fyx - tol * (1.0 + abs(fxy) + abs(fyx)))
        path = t_min * z + (1.0 - t_min) * x
        hemi.append(f._value(path, y) - fxy - tol * (1.0 + abs(fxy)))
        mid = 0.5 * (y + z)
        fxz = f._value(x, z)
        rhs = 0.5 * (fxy + fxz)
        conv.append(f._value(x, mid) - rhs - tol * (1.0 + abs(fxy) + abs(fxz)))

    triples = [(_frozen(x), _frozen(y), _frozen(z)) for x, y, z in zip(xs, ys, zs, strict=True)]
    pairs = [(x, y) for x, y, _ in triples]
    report = CertificateReport(
        checks=(
            _worst(DIAGONAL, diag, [(x,) for x, _, _ in triples], '|f(x,x)| <= tol'),
            _worst(MONOTONE, mono, pairs, 'f(x,y) + f(y,x) <= tol'),
            _worst(
                HEMICONTINUOUS,
                hemi,
                triples,
                f'f(tz + (1-t)x, y) <= f(x,y) + tol at t={t_min:g}',
            ),
            _worst(
                CONVEX_SECOND,
                conv,
                triples,
                'f(x, (y+z)/2) <= (f(x,y) + f(x,z))/2 + tol',
            ),
        ),
        label='bifunction conditions (sampled)',
    )
    log.info('check_axioms %s: %s', f.family, report.verdict)
    return report
