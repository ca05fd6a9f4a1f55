"""Exception hierarchy for ishikawa-ep.

Configuration errors are raised before any numerical work starts and name the
offending parameter. Runtime errors wrap whatever went wrong underneath in
``original`` so callers can still inspect it.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    import numpy as np
    import numpy.typing as npt


class IshikawaEPError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(IshikawaEPError):
    """Invalid parameters, inconsistent inputs or a malformed spec file."""


class DimensionError(ConfigError):
    """Vectors, sets or matrices of incompatible dimension were combined."""


class UnsupportedParameterError(ConfigError):
    """A declarative spec contains a key that is not accepted for its kind."""


class StrategyMismatchError(ConfigError):
    """The requested resolvent strategy cannot solve the given bifunction family."""


class ScheduleViolation(ConfigError):
    """A schedule term breaks one of the convergence hypotheses."""

    def __init__(
        self, condition: str, n: int | None = None, value: float | None = None
    ) -> None:
        self.condition = condition
        self.n = n
        self.value = value
        where = f' at n={n} (value {value!r})' if n is not None else ''
        super().__init__(f'Schedule rejected: {condition}{where}')


class DomainError(IshikawaEPError):
    """A point lies outside the domain of a mapping or bifunction."""


class SamplingError(IshikawaEPError):
    """The sampler could not produce enough points inside a set."""


class UncertifiedSolutionError(IshikawaEPError):
    """A reference point was expected to lie in F(S) ∩ EP(f) but does not."""


class SolverRuntimeError(IshikawaEPError):
    """A numerical routine failed while running."""

    def __init__(self, message: str, original: BaseException | None = None) -> None:
        super().__init__(message)
        self.original = original


class ProjectionConvergenceError(SolverRuntimeError):
    """Dykstra's projection hit its cycle cap before reaching its tolerance."""

    def __init__(
        self,
        message: str,
        last_iterate: npt.NDArray[np.float64],
        residual: float,
    ) -> None:
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class ResolventError(SolverRuntimeError):
    """The resolvent could not be computed to the requested accuracy."""

    def __init__(
        self,
        message: str,
        result: Any = None,
        original: BaseException | None = None,
    ) -> None:
        super().__init__(message, original=original)
        self.result = result


class SingularSystemError(ResolventError):
    """The regularised linear system rA + I is singular, so A is not PSD."""


class SchemeRuntimeError(SolverRuntimeError):
    """An iteration scheme stopped on an error; ``trace`` holds what ran."""

    def __init__(
        self,
        message: str,
        trace: Any = None,
        original: BaseException | None = None,
    ) -> None:
        super().__init__(message, original=original)
        self.trace = trace
