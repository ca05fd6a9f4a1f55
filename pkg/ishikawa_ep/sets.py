"""Closed convex sets of R^n with their metric projections.

Every projection returns the unique z in the set with
<x − z, y − z> <= 0 for all y in the set. The closed-form kinds are exact; an
:class:`Intersection` is projected with Dykstra's alternating scheme.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, ClassVar, Final

import numpy as np

from ishikawa_ep.exceptions import ConfigError, DimensionError, ProjectionConvergenceError
from ishikawa_ep.hilbert import Tolerance, Vector, as_vector, norm

log = logging.getLogger(__name__)

DEFAULT_DYKSTRA_MAX_ITER: Final[int] = 10_000
DEFAULT_DYKSTRA_TOL: Final[float] = 1e-12


def _frozen(arr: Vector) -> Vector:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


class ConvexSet(ABC):
    """A nonempty closed convex subset of R^n."""

    kind: ClassVar[str] = ''

    @property
    @abstractmethod
    def dim(self) -> int:
        """Ambient dimension."""

    @abstractmethod
    def _project(self, x: Vector) -> Vector: ...

    @abstractmethod
    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        """Axis-aligned box containing the set, unbounded directions cut at ``radius``."""

    @abstractmethod
    def _key(self) -> tuple[Any, ...]: ...

    @property
    def is_flat(self) -> bool:
        """True when the set has empty interior, so rejection sampling cannot hit it."""
        return False

    def project(self, x: Vector) -> Vector:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionError(
                f'{self.kind} lives in R^{self.dim}, got a point of shape {x.shape}'
            )
        return _frozen(self._project(x))

    def distance(self, x: Vector) -> float:
        return norm(np.asarray(x, dtype=np.float64) - self.project(x))

    def contains(self, x: Vector, tol: Tolerance | None = None) -> bool:
        """Membership up to the absolute tolerance: distance(x) <= tol.abs."""
        tol = tol or Tolerance()
        return self.distance(x) <= tol.abs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConvexSet):
            return NotImplemented
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._key()))


@dataclass(frozen=True, eq=False)
class WholeSpace(ConvexSet):
    """E = H."""

    n: int
    kind: ClassVar[str] = 'WholeSpace'

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f'WholeSpace dimension must be >= 1, got {self.n}')

    @property
    def dim(self) -> int:
        return self.n

    def _project(self, x: Vector) -> Vector:
        return x

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        return np.full(self.n, -radius), np.full(self.n, radius)

    def _key(self) -> tuple[Any, ...]:
        return (self.n,)


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Componentwise bounds lower <= x <= upper."""

    lower: Vector
    upper: Vector
    kind: ClassVar[str] = 'Box'

    def __post_init__(self) -> None:
        lower = as_vector(self.lower, 'Box.lower')
        upper = as_vector(self.upper, 'Box.upper')
        if lower.shape != upper.shape:
            raise DimensionError('Box bounds must have the same dimension')
        if np.any(lower > upper):
            raise ConfigError('Box requires lower <= upper componentwise')
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def _project(self, x: Vector) -> Vector:
        return np.clip(x, self.lower, self.upper)

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        return self.lower.copy(), self.upper.copy()

    def _key(self) -> tuple[Any, ...]:
        return (tuple(self.lower), tuple(self.upper))


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Closed Euclidean ball ||x − center|| <= radius."""

    center: Vector
    radius: float
    kind: ClassVar[str] = 'Ball'

    def __post_init__(self) -> None:
        object.__setattr__(self, 'center', as_vector(self.center, 'Ball.center'))
        if not self.radius > 0 or not np.isfinite(self.radius):
            raise ConfigError(f'Ball radius must be finite and > 0, got {self.radius}')
        object.__setattr__(self, 'radius', float(self.radius))

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])

    def _project(self, x: Vector) -> Vector:
        d = x - self.center
        dist = norm(d)
        if dist <= self.radius:
            return x
        return self.center + d * (self.radius / dist)

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        return self.center - self.radius, self.center + self.radius

    def _key(self) -> tuple[Any, ...]:
        return (tuple(self.center), self.radius)


@dataclass(frozen=True, eq=False)
class _AffineConstraint(ConvexSet):
    normal: Vector
    offset: float

    def __post_init__(self) -> None:
        normal = as_vector(self.normal, f'{self.kind}.normal')
        if norm(normal) == 0:
            raise ConfigError(f'{self.kind} normal must be nonzero')
        object.__setattr__(self, 'normal', normal)
        object.__setattr__(self, 'offset', float(self.offset))

    @property
    def dim(self) -> int:
        return int(self.normal.shape[0])

    def _excess(self, x: Vector) -> float:
        return float(np.dot(self.normal, x)) - self.offset

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        anchor = self._project(np.zeros(self.dim))
        return anchor - radius, anchor + radius

    def _key(self) -> tuple[Any, ...]:
        return (tuple(self.normal), self.offset)


@dataclass(frozen=True, eq=False)
class Halfspace(_AffineConstraint):
    """<normal, x> <= offset."""

    kind: ClassVar[str] = 'Halfspace'

    def _project(self, x: Vector) -> Vector:
        excess = max(0.0, self._excess(x))
        if excess == 0.0:
            return x
        return x - excess * self.normal / float(np.dot(self.normal, self.normal))


@dataclass(frozen=True, eq=False)
class Hyperplane(_AffineConstraint):
    """<normal, x> = offset."""

    kind: ClassVar[str] = 'Hyperplane'

    @property
    def is_flat(self) -> bool:
        return True

    def _project(self, x: Vector) -> Vector:
        excess = self._excess(x)
        if excess == 0.0:
            return x
        return x - excess * self.normal / float(np.dot(self.normal, self.normal))


@dataclass(frozen=True, eq=False)
class Simplex(ConvexSet):
    """Scaled probability simplex {x >= 0, sum(x) = scale}."""

    n: int
    scale: float = 1.0
    kind: ClassVar[str] = 'Simplex'

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f'Simplex dimension must be >= 1, got {self.n}')
        if not self.scale > 0 or not np.isfinite(self.scale):
            raise ConfigError(f'Simplex scale must be finite and > 0, got {self.scale}')
        object.__setattr__(self, 'scale', float(self.scale))

    @property
    def dim(self) -> int:
        return self.n

    @property
    def is_flat(self) -> bool:
        return True

    def _project(self, x: Vector) -> Vector:
        if np.all(x >= 0) and float(np.sum(x)) == self.scale:
            return x
        # sort-and-threshold
        u = np.sort(x)[::-1]
        css = np.cumsum(u) - self.scale
        ks = np.arange(1, self.n + 1)
        rho = int(np.nonzero(u - css / ks > 0)[0][-1])
        theta = css[rho] / (rho + 1)
        return np.maximum(x - theta, 0.0)

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        return np.zeros(self.n), np.full(self.n, self.scale)

    def _key(self) -> tuple[Any, ...]:
        return (self.n, self.scale)


@dataclass(frozen=True, eq=False)
class Singleton(ConvexSet):
    """The one-point set {point}."""

    point: Vector
    kind: ClassVar[str] = 'Singleton'

    def __post_init__(self) -> None:
        object.__setattr__(self, 'point', as_vector(self.point, 'Singleton.point'))

    @property
    def dim(self) -> int:
        return int(self.point.shape[0])

    @property
    def is_flat(self) -> bool:
        return True

    def _project(self, x: Vector) -> Vector:
        return self.point.copy()

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        return self.point.copy(), self.point.copy()

    def _key(self) -> tuple[Any, ...]:
        return (tuple(self.point),)


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSet):
    """Intersection of convex sets; nonemptiness is the caller's responsibility."""

    sets: Sequence[ConvexSet]
    max_iter: int = DEFAULT_DYKSTRA_MAX_ITER
    tol: float = DEFAULT_DYKSTRA_TOL
    kind: ClassVar[str] = 'Intersection'
    _dim: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        members = tuple(self.sets)
        if not members:
            raise ConfigError('Intersection needs at least one set')
        dims = {s.dim for s in members}
        if len(dims) != 1:
            raise DimensionError(f'Intersection members disagree on dimension: {sorted(dims)}')
        if self.max_iter < 1 or not self.tol > 0:
            raise ConfigError('Intersection requires max_iter >= 1 and tol > 0')
        object.__setattr__(self, 'sets', members)
        object.__setattr__(self, '_dim', dims.pop())

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def is_flat(self) -> bool:
        return any(s.is_flat for s in self.sets)

    def _project(self, x: Vector) -> Vector:
        if len(self.sets) == 1:
            return self.sets[0].project(x)
        z = np.array(x, dtype=np.float64)
        increments = [np.zeros_like(z) for _ in self.sets]
        change = float('inf')
        for cycle in range(1, self.max_iter + 1):
            z_prev = z
            shift = 0.0
            for i, member in enumerate(self.sets):
                w = z + increments[i]
                z = np.asarray(member.project(w))
                new_increment = w - z
                shift += float(np.sum((new_increment - increments[i]) ** 2))
                increments[i] = new_increment
            change = norm(z - z_prev) + np.sqrt(shift)
            if change <= self.tol * max(1.0, norm(z_prev)):
                log.debug('Dykstra converged after %d cycles', cycle)
                return z
        raise ProjectionConvergenceError(
            f'Dykstra projection did not reach tol={self.tol} within '
            f'{self.max_iter} cycles (last change {change:.3e})',
            last_iterate=_frozen(z),
            residual=change,
        )

    def bounding_box(self, radius: float) -> tuple[Vector, Vector]:
        boxes = [s.bounding_box(radius) for s in self.sets]
        lower = np.max([b[0] for b in boxes], axis=0)
        upper = np.min([b[1] for b in boxes], axis=0)
        return lower, upper

    def _key(self) -> tuple[Any, ...]:
        return (tuple(self.sets), self.max_iter, self.tol)


def project(convex_set: ConvexSet, x: Vector) -> Vector:
    """Metric projection P_K(x)."""
    return convex_set.project(x)


def contains(convex_set: ConvexSet, x: Vector, tol: Tolerance | None = None) -> bool:
    """True iff dist(x, K) <= tol, computed through the projection."""
    return convex_set.contains(x, tol)
