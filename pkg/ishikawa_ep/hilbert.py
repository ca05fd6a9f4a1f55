"""Dense real vector kernel modelling the Hilbert space H = R^n."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Final, TypeAlias

import numpy as np
import numpy.typing as npt

from ishikawa_ep.exceptions import ConfigError, DimensionError

Vector: TypeAlias = npt.NDArray[np.float64]

DEFAULT_CONTAINMENT_ABS: Final[float] = 1e-8


@dataclass(frozen=True)
class Tolerance:
    """Absolute / relative tolerance pair."""

    abs: float = DEFAULT_CONTAINMENT_ABS
    rel: float = 0.0

    def __post_init__(self) -> None:
        if not (self.abs >= 0 and self.rel >= 0):
            raise ConfigError(
                f'Tolerance components must be >= 0, got abs={self.abs}, rel={self.rel}'
            )

    def as_stopping_rule(self) -> Tolerance:
        """Return self, refusing the degenerate all-zero rule."""
        if self.abs == 0 and self.rel == 0:
            raise ConfigError('A stopping tolerance needs abs > 0 or rel > 0')
        return self

    def bound(self, scale: float) -> float:
        """Admissible error for a quantity of magnitude ``scale``."""
        return self.abs + self.rel * abs(scale)


def as_vector(values: Iterable[float] | npt.ArrayLike, name: str = 'x') -> Vector:
    """Validate and freeze a point of H.

    Raises:
        ConfigError: if the input is not numeric, empty, not one-dimensional or
            not finite.
    """
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{name} must be a vector of numbers: {e}') from e
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size < 1:
        raise ConfigError(f'{name} must be a non-empty 1-D vector, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f'{name} has non-finite coordinates: {arr.tolist()}')
    arr.setflags(write=False)
    return arr


def as_matrix(values: npt.ArrayLike, name: str = 'matrix') -> npt.NDArray[np.float64]:
    """Validate and freeze a finite square or rectangular matrix."""
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{name} must be a matrix of numbers: {e}') from e
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ConfigError(f'{name} must be 2-D, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f'{name} has non-finite entries')
    arr.setflags(write=False)
    return arr


def check_same_dim(x: Vector, y: Vector) -> None:
    if x.shape != y.shape:
        raise DimensionError(f'dimension mismatch: {x.shape[0]} vs {y.shape[0]}')


def inner(x: Vector, y: Vector) -> float:
    """<x, y> = sum_i x_i y_i."""
    check_same_dim(x, y)
    return float(np.dot(x, y))


def norm(x: Vector) -> float:
    """Induced norm sqrt(<x, x>)."""
    return math.sqrt(max(float(np.dot(x, x)), 0.0))


def norm_sq(x: Vector) -> float:
    return float(np.dot(x, x))


def distance(x: Vector, y: Vector) -> float:
    check_same_dim(x, y)
    return norm(x - y)


def combine(t: float, x: Vector, y: Vector) -> Vector:
    """t·x + (1 − t)·y for any real t."""
    check_same_dim(x, y)
    out = t * x + (1.0 - t) * y
    out.setflags(write=False)
    return out
