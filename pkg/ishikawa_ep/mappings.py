"""Catalog of mappings S: E -> H and sampled operator-class checks.

Class membership is only ever refuted (by a witness pair) or supported
statistically (no violation over the sampled pairs). Residuals are written as
left side minus right side of the defining inequality, so a value <= 0 means
the inequality holds at that pair.
"""

from __future__ import annotations

import logging
import math
import re
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, ClassVar, Final

import numpy as np

from ishikawa_ep.exceptions import (
    ConfigError,
    DimensionError,
    DomainError,
    UncertifiedSolutionError,
)
from ishikawa_ep.hilbert import Tolerance, Vector, as_matrix, as_vector, norm, norm_sq
from ishikawa_ep.reports import ClassReport
from ishikawa_ep.sampling import sample_pairs, sample_points
from ishikawa_ep.sets import ConvexSet

log = logging.getLogger(__name__)

DEFAULT_CLASSIFY_PAIRS: Final[int] = 1000
DEFAULT_CLASSIFY_TOL: Final[float] = 1e-8


def _frozen(arr: Any) -> Vector:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False, kw_only=True)
class Mapping(ABC):
    """A mapping S defined on ``domain`` with an optional (alpha, beta) class claim."""

    domain: ConvexSet
    claimed_class: tuple[float, float] | None = None
    kind: ClassVar[str] = ''

    def __post_init__(self) -> None:
        if self.claimed_class is not None:
            alpha, beta = self.claimed_class
            object.__setattr__(self, 'claimed_class', (float(alpha), float(beta)))

    @property
    def dim(self) -> int:
        return self.domain.dim

    @abstractmethod
    def _evaluate(self, x: Vector) -> Vector:
        """Sx without the domain check."""

    @abstractmethod
    def _params(self) -> tuple[Any, ...]: ...

    def known_fixed_point(self) -> Vector | None:
        """A point of F(S) if the mapping knows one in closed form."""
        return None

    def apply(self, x: Vector, tol: Tolerance | None = None) -> Vector:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionError(f'{self.kind} acts on R^{self.dim}, got shape {x.shape}')
        if not self.domain.contains(x, tol):
            raise DomainError(
                f'{self.kind}: point {x.tolist()} lies outside the domain '
                f'{self.domain.kind} (distance {self.domain.distance(x):.3e})'
            )
        out = self._evaluate(x)
        if not np.all(np.isfinite(out)):
            raise DomainError(f'{self.kind} produced a non-finite image at {x.tolist()}')
        return _frozen(out)

    __call__ = apply

    def _fixed_if_in_domain(self, p: Vector) -> Vector | None:
        return p if self.domain.contains(p) else None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mapping):
            return NotImplemented
        return (
            type(self) is type(other)
            and self._params() == other._params()
            and self.domain == other.domain
            and self.claimed_class == other.claimed_class
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._params(), self.domain))


@dataclass(frozen=True, eq=False, kw_only=True)
class Identity(Mapping):
    kind: ClassVar[str] = 'Identity'

    def _evaluate(self, x: Vector) -> Vector:
        return x

    def _params(self) -> tuple[Any, ...]:
        return ()

    def known_fixed_point(self) -> Vector | None:
        return self.domain.project(np.zeros(self.dim))


@dataclass(frozen=True, eq=False, kw_only=True)
class Projection(Mapping):
    """Metric projection onto ``target``."""

    target: ConvexSet
    kind: ClassVar[str] = 'Projection'

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.target.dim != self.domain.dim:
            raise DimensionError('Projection target and domain dimensions differ')

    def _evaluate(self, x: Vector) -> Vector:
        return self.target.project(x)

    def _params(self) -> tuple[Any, ...]:
        return (self.target,)

    def known_fixed_point(self) -> Vector | None:
        return self._fixed_if_in_domain(self.target.project(np.zeros(self.dim)))


@dataclass(frozen=True, eq=False, kw_only=True)
class Rotation(Mapping):
    """Planar rotation by ``angle`` radians about ``center``."""

    center: Vector
    angle: float
    kind: ClassVar[str] = 'Rotation'
    _matrix: Vector = field(init=False, repr=False)

    def __post_init__(self) -> None:
        super().__post_init__()
        center = as_vector(self.center, 'Rotation.center')
        if center.shape[0] != 2 or self.domain.dim != 2:
            raise DimensionError('Rotation is defined on R^2 only')
        c, s = math.cos(self.angle), math.sin(self.angle)
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'angle', float(self.angle))
        object.__setattr__(self, '_matrix', _frozen([[c, -s], [s, c]]))

    def _evaluate(self, x: Vector) -> Vector:
        return self.center + self._matrix @ (x - self.center)

    def _params(self) -> tuple[Any, ...]:
        return (tuple(self.center), self.angle)

    def known_fixed_point(self) -> Vector | None:
        return self._fixed_if_in_domain(self.center)


@dataclass(frozen=True, eq=False, kw_only=True)
class ScaledReflection(Mapping):
    """Sx = center − factor·(x − center), with |factor| <= 1."""

    center: Vector
    factor: float
    kind: ClassVar[str] = 'ScaledReflection'

    def __post_init__(self) -> None:
        super().__post_init__()
        center = as_vector(self.center, 'ScaledReflection.center')
        if center.shape[0] != self.domain.dim:
            raise DimensionError('ScaledReflection center and domain dimensions differ')
        if not -1.0 <= self.factor <= 1.0:
            raise ConfigError(f'ScaledReflection factor must lie in [-1, 1], got {self.factor}')
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'factor', float(self.factor))

    def _evaluate(self, x: Vector) -> Vector:
        return self.center - self.factor * (x - self.center)

    def _params(self) -> tuple[Any, ...]:
        return (tuple(self.center), self.factor)

    def known_fixed_point(self) -> Vector | None:
        return self._fixed_if_in_domain(self.center)


@dataclass(frozen=True, eq=False, kw_only=True)
class AffineMap(Mapping):
    """Sx = Mx + b."""

    matrix: Vector
    offset: Vector
    kind: ClassVar[str] = 'AffineMap'

    def __post_init__(self) -> None:
        super().__post_init__()
        matrix = as_matrix(self.matrix, 'AffineMap.matrix')
        offset = as_vector(self.offset, 'AffineMap.offset')
        n = self.domain.dim
        if matrix.shape != (n, n) or offset.shape != (n,):
            raise DimensionError(
                f'AffineMap needs an {n}x{n} matrix and length-{n} offset, '
                f'got {matrix.shape} and {offset.shape}'
            )
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'offset', offset)

    def _evaluate(self, x: Vector) -> Vector:
        return self.matrix @ x + self.offset

    def _params(self) -> tuple[Any, ...]:
        return (tuple(map(tuple, self.matrix)), tuple(self.offset))

    def known_fixed_point(self) -> Vector | None:
        system = np.eye(self.dim) - self.matrix
        p, *_ = np.linalg.lstsq(system, self.offset, rcond=None)
        if norm(system @ p - self.offset) > 1e-10 * max(1.0, norm(self.offset)):
            return None
        return self._fixed_if_in_domain(_frozen(p))


@dataclass(frozen=True, eq=False, kw_only=True)
class Composite(Mapping):
    """Apply ``mappings`` in order: the first element acts first."""

    mappings: Sequence[Mapping]
    kind: ClassVar[str] = 'Composite'

    def __post_init__(self) -> None:
        super().__post_init__()
        members = tuple(self.mappings)
        if not members:
            raise ConfigError('Composite needs at least one mapping')
        if any(m.dim != self.domain.dim for m in members):
            raise DimensionError('Composite members must share the domain dimension')
        object.__setattr__(self, 'mappings', members)

    def _evaluate(self, x: Vector) -> Vector:
        for m in self.mappings:
            x = m._evaluate(x)
        return x

    def _params(self) -> tuple[Any, ...]:
        return tuple(self.mappings)


def apply(mapping: Mapping, x: Vector, tol: Tolerance | None = None) -> Vector:
    """Sx, refusing points outside the domain beyond ``tol``."""
    return mapping.apply(x, tol)


def fixed_point_residual(mapping: Mapping, x: Vector) -> float:
    """||Sx − x||."""
    return norm(mapping.apply(x) - np.asarray(x, dtype=np.float64))


# Residuals of the defining inequalities, evaluated from (Sx, Sy, x, y).
def _ghyb(alpha: float, beta: float) -> Callable[[Vector, Vector, Vector, Vector], float]:
    def residual(sx: Vector, sy: Vector, x: Vector, y: Vector) -> float:
        lhs = alpha * norm_sq(sx - sy) + (1.0 - alpha) * norm_sq(x - sy)
        rhs = beta * norm_sq(sx - y) + (1.0 - beta) * norm_sq(x - y)
        return lhs - rhs

    return residual


def _firmly_nonexpansive(sx: Vector, sy: Vector, x: Vector, y: Vector) -> float:
    return norm_sq(sx - sy) - float(np.dot(x - y, sx - sy))


def _nonexpansive(sx: Vector, sy: Vector, x: Vector, y: Vector) -> float:
    return norm_sq(sx - sy) - norm_sq(x - y)


def _nonspreading(sx: Vector, sy: Vector, x: Vector, y: Vector) -> float:
    return 2.0 * norm_sq(sx - sy) - norm_sq(sx - y) - norm_sq(sy - x)


def _hybrid(sx: Vector, sy: Vector, x: Vector, y: Vector) -> float:
    return 3.0 * norm_sq(sx - sy) - norm_sq(x - y) - norm_sq(sx - y) - norm_sq(sy - x)


_PAIR_RESIDUALS: Final[dict[str, Callable[[Vector, Vector, Vector, Vector], float]]] = {
    'firmly-nonexpansive': _firmly_nonexpansive,
    'nonexpansive': _nonexpansive,
    'nonspreading': _nonspreading,
    'hybrid': _hybrid,
}

QUASI_NONEXPANSIVE: Final[str] = 'quasi-nonexpansive'
_GHYB_PATTERN: Final[re.Pattern[str]] = re.compile(
    r'^generalized-hybrid\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)$'
)


@dataclass(frozen=True)
class OperatorClass:
    """A named class of mappings; generalized-hybrid carries (alpha, beta)."""

    name: str
    alpha: float | None = None
    beta: float | None = None

    @classmethod
    def parse(cls, spec: str | OperatorClass) -> OperatorClass:
        if isinstance(spec, OperatorClass):
            return spec
        text = spec.strip()
        if text in _PAIR_RESIDUALS or text == QUASI_NONEXPANSIVE:
            return cls(text)
        match = _GHYB_PATTERN.match(text)
        if match:
            try:
                return cls.generalized_hybrid(float(match.group(1)), float(match.group(2)))
            except ValueError:
                pass
        raise ConfigError(
            f'Unknown operator class {spec!r}; expected one of '
            f'{sorted([*_PAIR_RESIDUALS, QUASI_NONEXPANSIVE])} or generalized-hybrid(a,b)'
        )

    @classmethod
    def generalized_hybrid(cls, alpha: float, beta: float) -> OperatorClass:
        return cls('generalized-hybrid', float(alpha), float(beta))

    @property
    def label(self) -> str:
        if self.name == 'generalized-hybrid':
            return f'generalized-hybrid({self.alpha:g},{self.beta:g})'
        return self.name

    def residual(self) -> Callable[[Vector, Vector, Vector, Vector], float]:
        if self.name == 'generalized-hybrid':
            assert self.alpha is not None and self.beta is not None
            return _ghyb(self.alpha, self.beta)
        if self.name == QUASI_NONEXPANSIVE:
            raise ConfigError('quasi-nonexpansiveness is checked against a fixed point')
        return _PAIR_RESIDUALS[self.name]


def ghyb_residual(
    mapping: Mapping, alpha: float, beta: float, x: Vector, y: Vector
) -> float:
    """[a||Sx−Sy||² + (1−a)||x−Sy||²] − [b||Sx−y||² + (1−b)||x−y||²]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return _ghyb(alpha, beta)(mapping.apply(x), mapping.apply(y), x, y)


def pair_residual(mapping: Mapping, op_class: str | OperatorClass, x: Vector, y: Vector) -> float:
    """Residual of a named class's defining inequality at (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    residual = OperatorClass.parse(op_class).residual()
    return residual(mapping.apply(x), mapping.apply(y), x, y)


def classify(
    mapping: Mapping,
    class_name: str | OperatorClass,
    sampler_seed: int = 0,
    n_pairs: int = DEFAULT_CLASSIFY_PAIRS,
    tol: float = DEFAULT_CLASSIFY_TOL,
    fixed_point: Vector | None = None,
) -> ClassReport:
    """Evaluate a class's defining inequality on ``n_pairs`` sampled pairs.

    Deterministic in ``sampler_seed``. The verdict is consistent iff the largest
    residual is <= ``tol``; a violated report carries the first maximising pair.
    """
    op_class = OperatorClass.parse(class_name)
    if n_pairs < 1:
        raise ConfigError(f'n_pairs must be >= 1, got {n_pairs}')
    if op_class.name == QUASI_NONEXPANSIVE:
        p = fixed_point if fixed_point is not None else mapping.known_fixed_point()
        if p is None:
            raise ConfigError(
                f'{mapping.kind} has no known fixed point; pass fixed_point to check '
                'quasi-nonexpansiveness'
            )
        return is_quasi_nonexpansive(mapping, p, sampler_seed, n_pairs, tol)

    residual = op_class.residual()
    xs, ys = sample_pairs(mapping.domain, n_pairs, sampler_seed)
    values = np.array(
        [
            residual(mapping._evaluate(x), mapping._evaluate(y), x, y)
            for x, y in zip(xs, ys, strict=True)
        ]
    )
    worst = int(np.argmax(values))
    report = ClassReport(
        class_name=op_class.label,
        pairs_tested=n_pairs,
        worst_residual=float(values[worst]),
        tol=tol,
        witness=(_frozen(xs[worst]), _frozen(ys[worst])),
    )
    log.info(
        'classify %s as %s: %s (worst residual %.3e over %d pairs)',
        mapping.kind,
        report.class_name,
        report.verdict,
        report.worst_residual,
        n_pairs,
    )
    return report


def is_quasi_nonexpansive(
    mapping: Mapping,
    p: Vector,
    sampler_seed: int = 0,
    n_points: int = DEFAULT_CLASSIFY_PAIRS,
    tol: float = DEFAULT_CLASSIFY_TOL,
) -> ClassReport:
    """Check ||p − Sy|| <= ||p − y|| on sampled y for a fixed point p.

    Raises:
        UncertifiedSolutionError: if ||Sp − p|| > tol.
    """
    p = np.asarray(p, dtype=np.float64)
    if fixed_point_residual(mapping, p) > tol:
        raise UncertifiedSolutionError(
            f'{p.tolist()} is not a fixed point of {mapping.kind} '
            f'(residual {fixed_point_residual(mapping, p):.3e} > {tol})'
        )
    ys = sample_points(mapping.domain, n_points, sampler_seed)
    values = np.array([norm(p - mapping._evaluate(y)) - norm(p - y) for y in ys])
    worst = int(np.argmax(values))
    return ClassReport(
        class_name=QUASI_NONEXPANSIVE,
        pairs_tested=n_points,
        worst_residual=float(values[worst]),
        tol=tol,
        witness=(_frozen(p), _frozen(ys[worst])),
    )
