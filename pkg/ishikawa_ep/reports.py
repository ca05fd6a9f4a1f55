"""Report records shared by the checkers and the diagnostics suite."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Final

import numpy as np

from ishikawa_ep.hilbert import Vector

CONSISTENT: Final[str] = 'consistent'
VIOLATED: Final[str] = 'violated'
NORM_CONVERGENCE_LABEL: Final[str] = 'norm convergence (finite-dimensional specialization)'


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, tuple | list):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass(frozen=True)
class CheckResult:
    """One named check: pass/fail plus where it was closest to failing.

    ``worst_margin`` is the largest excess of left side over right side
    (positive means violated beyond the tolerance already subtracted).
    """

    name: str
    passed: bool
    worst_index: int | None = None
    worst_margin: float = 0.0
    witness: Any = None
    detail: str = ''

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'passed': self.passed,
            'worst_index': self.worst_index,
            'worst_margin': float(self.worst_margin),
            'witness': _jsonable(self.witness),
            'detail': self.detail,
        }


@dataclass(frozen=True)
class CertificateReport:
    """A bundle of checks; the verdict passes iff every check passes."""

    checks: Sequence[CheckResult] = field(default_factory=tuple)
    label: str = NORM_CONVERGENCE_LABEL

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return 'pass' if self.passed else 'fail'

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            'label': self.label,
            'verdict': self.verdict,
            'checks': [c.to_dict() for c in self.checks],
        }


@dataclass(frozen=True)
class ClassReport:
    """Outcome of a sampled operator-class check.

    ``worst_residual`` is the raw maximum of the defining residual over the
    sample; ``worst_violation`` is that maximum minus the tolerance, so it is
    <= 0 exactly when the verdict is consistent.
    """

    class_name: str
    pairs_tested: int
    worst_residual: float
    tol: float
    witness: tuple[Vector, Vector] | None = None

    @property
    def worst_violation(self) -> float:
        return self.worst_residual - self.tol

    @property
    def verdict(self) -> str:
        return CONSISTENT if self.worst_violation <= 0 else VIOLATED

    @property
    def consistent(self) -> bool:
        return self.verdict == CONSISTENT

    def to_dict(self) -> dict[str, Any]:
        return {
            'class_name': self.class_name,
            'pairs_tested': self.pairs_tested,
            'worst_residual': float(self.worst_residual),
            'worst_violation': float(self.worst_violation),
            'tol': self.tol,
            'verdict': self.verdict,
            'witness': _jsonable(self.witness) if not self.consistent else None,
        }
