"""Seeded samplers drawing points and pairs from a convex set.

Boxes, balls and singletons are sampled exactly. Other full-dimensional sets
use rejection inside their bounding box; flat sets (hyperplanes, simplices)
are reached by projecting bounding-box draws onto the set.
"""

from __future__ import annotations

import logging
from typing import Final

import numpy as np
import numpy.typing as npt

from ishikawa_ep.exceptions import SamplingError
from ishikawa_ep.sets import Ball, Box, ConvexSet, Singleton

log = logging.getLogger(__name__)

DEFAULT_SAMPLING_RADIUS: Final[float] = 10.0
DEFAULT_ATTEMPT_FACTOR: Final[int] = 100

Points = npt.NDArray[np.float64]


def make_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _uniform_ball(rng: np.random.Generator, ball: Ball, n: int) -> Points:
    d = ball.dim
    directions = rng.standard_normal((n, d))
    lengths = np.linalg.norm(directions, axis=1, keepdims=True)
    lengths[lengths == 0] = 1.0
    radii = ball.radius * rng.random((n, 1)) ** (1.0 / d)
    return ball.center + directions / lengths * radii


def sample_points(
    convex_set: ConvexSet,
    n: int,
    seed: int | np.random.Generator = 0,
    radius: float = DEFAULT_SAMPLING_RADIUS,
    attempt_factor: int = DEFAULT_ATTEMPT_FACTOR,
) -> Points:
    """Draw ``n`` points of ``convex_set`` as an (n, dim) array.

    Raises:
        SamplingError: when rejection sampling accepts fewer than ``n`` points
            within ``attempt_factor * n`` draws.
    """
    if n < 1:
        raise SamplingError(f'need at least one sample, got n={n}')
    rng = make_rng(seed)
    if isinstance(convex_set, Box):
        return rng.uniform(convex_set.lower, convex_set.upper, size=(n, convex_set.dim))
    if isinstance(convex_set, Ball):
        return _uniform_ball(rng, convex_set, n)
    if isinstance(convex_set, Singleton):
        return np.tile(convex_set.point, (n, 1))

    lower, upper = convex_set.bounding_box(radius)
    if np.any(lower > upper):
        raise SamplingError(
            f'{convex_set.kind} has an empty bounding region; the set may be empty'
        )

    if convex_set.is_flat:
        draws = rng.uniform(lower, upper, size=(n, convex_set.dim))
        return np.array([convex_set.project(p) for p in draws])

    accepted: list[npt.NDArray[np.float64]] = []
    attempts = 0
    cap = attempt_factor * n
    batch = max(n, 16)
    while len(accepted) < n and attempts < cap:
        size = min(batch, cap - attempts)
        draws = rng.uniform(lower, upper, size=(size, convex_set.dim))
        attempts += size
        accepted.extend(p for p in draws if convex_set.contains(p))
    if len(accepted) < n:
        raise SamplingError(
            f'rejection sampling in {convex_set.kind} accepted {len(accepted)} of '
            f'{n} points after {attempts} attempts'
        )
    log.debug('rejection sampler: %d accepted of %d drawn', n, attempts)
    return np.array(accepted[:n])


def sample_pairs(
    convex_set: ConvexSet,
    n_pairs: int,
    seed: int | np.random.Generator = 0,
    radius: float = DEFAULT_SAMPLING_RADIUS,
) -> tuple[Points, Points]:
    """Draw ``n_pairs`` pairs (x_k, y_k) from the set, deterministic in ``seed``."""
    points = sample_points(convex_set, 2 * n_pairs, seed, radius=radius)
    return points[:n_pairs], points[n_pairs:]
