"""Modified Ishikawa iteration for equilibrium and fixed-point problems in R^n."""

from ishikawa_ep.bifunctions import (
    AffineVI,
    Bifunction,
    ConvexGap,
    CustomBifunction,
    FactoredQuadratic,
    NormSquare,
    QuadraticFunction,
    ZeroBifunction,
    check_axioms,
    evaluate,
)
from ishikawa_ep.diagnostics import (
    ProjectionSeries,
    accumulation_points,
    certify,
    fejer_check,
    limit_existence_check,
    projection_series,
    residual_decay,
)
from ishikawa_ep.exceptions import (
    ConfigError,
    DimensionError,
    DomainError,
    IshikawaEPError,
    ProjectionConvergenceError,
    ResolventError,
    SamplingError,
    ScheduleViolation,
    SchemeRuntimeError,
    SingularSystemError,
    SolverRuntimeError,
    StrategyMismatchError,
    UncertifiedSolutionError,
    UnsupportedParameterError,
)
from ishikawa_ep.hilbert import (
    Tolerance,
    Vector,
    as_vector,
    combine,
    distance,
    inner,
    norm,
    norm_sq,
)
from ishikawa_ep.mappings import (
    AffineMap,
    Composite,
    Identity,
    Mapping,
    OperatorClass,
    Projection,
    Rotation,
    ScaledReflection,
    apply,
    classify,
    fixed_point_residual,
    ghyb_residual,
    is_quasi_nonexpansive,
    pair_residual,
)
from ishikawa_ep.reports import CertificateReport, CheckResult, ClassReport
from ishikawa_ep.resolvent import (
    Auto,
    ClosedFormLinear,
    ProjectedFixedPoint,
    ProxGradient,
    ResolventRequest,
    ResolventResult,
    ep_membership,
    resolvent,
    resolvent_residual,
)
from ishikawa_ep.schedules import (
    Constant,
    Formula,
    Schedule,
    ScheduleBounds,
    ValidatedSchedule,
    validate_schedule,
)
from ishikawa_ep.schemes import (
    ComparisonRow,
    IterState,
    Problem,
    Scheme,
    Status,
    StopRule,
    Trace,
    TraceRecord,
    compare,
    get_scheme,
    run,
    step_modified_ishikawa,
)
from ishikawa_ep.sets import (
    Ball,
    Box,
    ConvexSet,
    Halfspace,
    Hyperplane,
    Intersection,
    Simplex,
    Singleton,
    WholeSpace,
    contains,
    project,
)

__all__ = [
    'AffineMap',
    'AffineVI',
    'Auto',
    'Ball',
    'Bifunction',
    'Box',
    'CertificateReport',
    'CheckResult',
    'ClassReport',
    'ClosedFormLinear',
    'ComparisonRow',
    'Composite',
    'ConfigError',
    'Constant',
    'ConvexGap',
    'ConvexSet',
    'CustomBifunction',
    'DimensionError',
    'DomainError',
    'FactoredQuadratic',
    'Formula',
    'Halfspace',
    'Hyperplane',
    'Identity',
    'Intersection',
    'IshikawaEPError',
    'IterState',
    'Mapping',
    'NormSquare',
    'OperatorClass',
    'Problem',
    'ProjectedFixedPoint',
    'Projection',
    'ProjectionConvergenceError',
    'ProjectionSeries',
    'ProxGradient',
    'QuadraticFunction',
    'ResolventError',
    'ResolventRequest',
    'ResolventResult',
    'Rotation',
    'SamplingError',
    'ScaledReflection',
    'Schedule',
    'ScheduleBounds',
    'ScheduleViolation',
    'Scheme',
    'SchemeRuntimeError',
    'Simplex',
    'Singleton',
    'SingularSystemError',
    'SolverRuntimeError',
    'Status',
    'StopRule',
    'StrategyMismatchError',
    'Tolerance',
    'Trace',
    'TraceRecord',
    'UncertifiedSolutionError',
    'UnsupportedParameterError',
    'ValidatedSchedule',
    'Vector',
    'WholeSpace',
    'ZeroBifunction',
    'accumulation_points',
    'apply',
    'as_vector',
    'certify',
    'check_axioms',
    'classify',
    'combine',
    'compare',
    'contains',
    'distance',
    'ep_membership',
    'evaluate',
    'fejer_check',
    'fixed_point_residual',
    'get_scheme',
    'ghyb_residual',
    'inner',
    'is_quasi_nonexpansive',
    'limit_existence_check',
    'norm',
    'norm_sq',
    'pair_residual',
    'project',
    'projection_series',
    'residual_decay',
    'resolvent',
    'resolvent_residual',
    'run',
    'step_modified_ishikawa',
    'validate_schedule',
]
__version__ = "0.1.0"
