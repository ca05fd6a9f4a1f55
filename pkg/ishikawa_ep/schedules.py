"""Parameter schedules αₙ, βₙ, rₙ and their validation against the convergence hypotheses.

The main scheme needs αₙ ∈ [alpha_low, 1] with alpha_low > 0,
βₙ ∈ [beta_low, beta_high] ⊂ (0, 1) so that liminf βₙ(1 − βₙ) > 0, and
rₙ >= r_low > 0. The box on βₙ is the sufficient condition the convergence
argument actually uses; it is enforced instead of the weaker-looking [b, 1].
"""

from __future__ import annotations

import dataclasses
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, ClassVar, Final

from ishikawa_ep.exceptions import ConfigError, ScheduleViolation

log = logging.getLogger(__name__)

# Condition names carried by ScheduleViolation
ALPHA_CONDITION: Final[str] = '0 < alpha_low <= alpha_n <= 1'
BETA_CONDITION: Final[str] = (
    'liminf beta_n(1 - beta_n) > 0 (beta_n must stay in [beta_low, beta_high] inside (0, 1))'
)
R_CONDITION: Final[str] = 'liminf r_n > 0 (r_n >= r_low > 0)'
MANN_CONDITION: Final[str] = '0 <= alpha_n <= 1'
ISHIKAWA_CONDITION: Final[str] = '0 <= beta_n <= alpha_n <= 1'
TADA_TAKAHASHI_CONDITION: Final[str] = 'alpha_n in [a, b] for some a, b in (0, 1)'

# Schedule hypotheses sets
MAIN: Final[str] = 'main'
MANN: Final[str] = 'mann'
ISHIKAWA: Final[str] = 'ishikawa'
TADA_TAKAHASHI: Final[str] = 'tada_takahashi'


class SequenceSpec(ABC):
    """A real sequence indexed from n = 1."""

    kind: ClassVar[str] = ''

    @abstractmethod
    def term(self, n: int) -> float: ...

    def terms(self, horizon: int) -> list[float]:
        return [self.term(n) for n in range(1, horizon + 1)]


@dataclass(frozen=True)
class Constant(SequenceSpec):
    value: float
    kind: ClassVar[str] = 'constant'

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ConfigError(f'constant sequence value must be finite, got {self.value}')
        object.__setattr__(self, 'value', float(self.value))

    def term(self, n: int) -> float:
        return self.value


_FORMULA_PARAMS: Final[dict[str, dict[str, Any]]] = {
    # scale / (n + shift)^power
    'inverse_power': {'scale': 1.0, 'shift': 0.0, 'power': 1.0},
    # limit + (start - limit) / n^power
    'approach': {'start': 0.5, 'limit': 1.0, 'power': 1.0},
    # limit + (start - limit) * ratio^(n - 1)
    'geometric': {'start': 0.5, 'limit': 1.0, 'ratio': 0.5},
    # values[(n - 1) mod len(values)]
    'cycle': {'values': (0.5,)},
}


@dataclass(frozen=True)
class Formula(SequenceSpec):
    """A closed-form sequence; ``formula`` is one of the keys of ``_FORMULA_PARAMS``."""

    formula: str
    params: Mapping[str, Any] = field(default_factory=dict)
    kind: ClassVar[str] = 'formula'

    def __post_init__(self) -> None:
        if self.formula not in _FORMULA_PARAMS:
            raise ConfigError(
                f'Unknown sequence formula {self.formula!r}; expected one of {sorted(_FORMULA_PARAMS)}'
            )
        allowed = _FORMULA_PARAMS[self.formula]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ConfigError(
                f'Unsupported parameter provided: {sorted(unknown)[0]} for formula {self.formula}'
            )
        merged = {**allowed, **self.params}
        if self.formula == 'cycle':
            values = tuple(float(v) for v in merged['values'])
            if not values:
                raise ConfigError('cycle formula needs at least one value')
            merged['values'] = values
        else:
            merged = {k: float(v) for k, v in merged.items()}
        object.__setattr__(self, 'params', dict(sorted(merged.items())))

    def term(self, n: int) -> float:
        p = self.params
        if self.formula == 'inverse_power':
            return float(p['scale'] / (n + p['shift']) ** p['power'])
        if self.formula == 'approach':
            return float(p['limit'] + (p['start'] - p['limit']) / n ** p['power'])
        if self.formula == 'geometric':
            return float(p['limit'] + (p['start'] - p['limit']) * p['ratio'] ** (n - 1))
        values = p['values']
        return float(values[(n - 1) % len(values)])

    def __hash__(self) -> int:
        return hash((self.formula, tuple(self.params.items())))


@dataclass(frozen=True)
class ScheduleBounds:
    alpha_low: float = 0.01
    beta_low: float = 0.01
    beta_high: float = 0.99
    r_low: float = 1e-3
    alpha_high: float = 1.0


@dataclass(frozen=True)
class Schedule:
    alpha: SequenceSpec = field(default_factory=lambda: Constant(0.5))
    beta: SequenceSpec = field(default_factory=lambda: Constant(0.5))
    r: SequenceSpec = field(default_factory=lambda: Constant(1.0))
    bounds: ScheduleBounds = field(default_factory=ScheduleBounds)

    def term(self, n: int) -> tuple[float, float, float]:
        return self.alpha.term(n), self.beta.term(n), self.r.term(n)

    def with_alpha(self, alpha: SequenceSpec) -> Schedule:
        return dataclasses.replace(self, alpha=alpha)

    def with_r(self, r: SequenceSpec) -> Schedule:
        return dataclasses.replace(self, r=r)


@dataclass(frozen=True)
class ValidatedSchedule:
    """A schedule whose first ``horizon`` terms passed ``hypotheses``."""

    schedule: Schedule
    horizon: int
    hypotheses: str = MAIN
    advisories: Sequence[str] = ()

    def term(self, n: int) -> tuple[float, float, float]:
        return self.schedule.term(n)


def _check_bounds(b: ScheduleBounds) -> None:
    if not 0 < b.alpha_low <= b.alpha_high <= 1:
        raise ScheduleViolation(
            f'{ALPHA_CONDITION}: bounds alpha_low={b.alpha_low}, alpha_high={b.alpha_high}'
        )
    if not 0 < b.beta_low <= b.beta_high < 1:
        raise ScheduleViolation(
            f'{BETA_CONDITION}: bounds beta_low={b.beta_low}, beta_high={b.beta_high}'
        )
    if not b.r_low > 0:
        raise ScheduleViolation(f'{R_CONDITION}: bound r_low={b.r_low}')


def _check_terms(
    name: str, values: Sequence[float], low: float, high: float, condition: str
) -> None:
    for n, v in enumerate(values, start=1):
        if not (math.isfinite(v) and low <= v <= high):
            raise ScheduleViolation(f'{condition} ({name}_n outside [{low}, {high}])', n, v)


def validate_schedule(
    s: Schedule, horizon: int, hypotheses: str = MAIN
) -> ValidatedSchedule:
    """Evaluate the first ``horizon`` terms and reject any hypothesis violation.

    ``hypotheses`` selects the rule set: ``main`` for the modified Ishikawa
    family, or one of the baselines ``mann``, ``ishikawa``, ``tada_takahashi``.

    Raises:
        ScheduleViolation: naming the condition and the first offending n.
    """
    if horizon < 1:
        raise ConfigError(f'horizon must be >= 1, got {horizon}')
    b = s.bounds
    alphas, betas, rs = s.alpha.terms(horizon), s.beta.terms(horizon), s.r.terms(horizon)
    advisories: list[str] = []

    if hypotheses == MAIN:
        _check_bounds(b)
        _check_terms('alpha', alphas, b.alpha_low, b.alpha_high, ALPHA_CONDITION)
        _check_terms('beta', betas, b.beta_low, b.beta_high, BETA_CONDITION)
        _check_terms('r', rs, b.r_low, math.inf, R_CONDITION)
    elif hypotheses == MANN:
        _check_terms('alpha', alphas, 0.0, 1.0, MANN_CONDITION)
    elif hypotheses == ISHIKAWA:
        _check_terms('alpha', alphas, 0.0, 1.0, ISHIKAWA_CONDITION)
        _check_terms('beta', betas, 0.0, 1.0, ISHIKAWA_CONDITION)
        for n, (a, bt) in enumerate(zip(alphas, betas, strict=True), start=1):
            if bt > a:
                raise ScheduleViolation(f'{ISHIKAWA_CONDITION} (beta_n > alpha_n)', n, bt)
        advisories = ishikawa_advisories(alphas, betas)
    elif hypotheses == TADA_TAKAHASHI:
        if not 0 < b.alpha_low <= b.alpha_high:
            raise ScheduleViolation(f'{TADA_TAKAHASHI_CONDITION}: alpha_low={b.alpha_low}')
        high = min(b.alpha_high, math.nextafter(1.0, 0.0))
        _check_terms('alpha', alphas, b.alpha_low, high, TADA_TAKAHASHI_CONDITION)
        if not b.r_low > 0:
            raise ScheduleViolation(f'{R_CONDITION}: bound r_low={b.r_low}')
        _check_terms('r', rs, b.r_low, math.inf, R_CONDITION)
    else:
        raise ConfigError(f'unknown schedule hypotheses {hypotheses!r}')

    for note in advisories:
        log.warning('advisory: %s', note)
    return ValidatedSchedule(s, horizon, hypotheses, tuple(advisories))


def ishikawa_advisories(alphas: Sequence[float], betas: Sequence[float]) -> list[str]:
    """Finite-horizon heuristics for the asymptotic Ishikawa conditions.

    These can only flag suspicious schedules; neither condition is decidable
    from finitely many terms.
    """
    notes: list[str] = []
    monotone = all(b2 >= b1 for b1, b2 in zip(betas, betas[1:], strict=False))
    if not monotone or (betas and betas[-1] < 0.99):
        notes.append(
            'lim beta_n = 1 is not evident over the horizon '
            f'(monotone={monotone}, last beta_n={betas[-1] if betas else float("nan"):.6g})'
        )
    weights = [(1 - a) * (1 - b) for a, b in zip(alphas, betas, strict=True)]
    half = len(weights) // 2
    head, tail = sum(weights[:half]), sum(weights[half:])
    if head > 0 and tail < 0.05 * head:
        notes.append(
            'sum (1 - alpha_n)(1 - beta_n) = inf looks doubtful: partial sums stall '
            f'(first half {head:.6g}, second half {tail:.6g})'
        )
    elif head == 0 and tail == 0:
        notes.append('sum (1 - alpha_n)(1 - beta_n) is zero over the horizon')
    return notes
