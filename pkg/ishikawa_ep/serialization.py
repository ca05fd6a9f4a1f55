"""Declarative JSON forms for sets, mappings, bifunctions, problems and schedules.

Every object is a JSON object whose keys match the field names of the type it
describes. Each kind has a whitelist of accepted keys; anything else is
rejected with :class:`UnsupportedParameterError` rather than silently ignored.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator, Sequence
from collections.abc import Mapping as MappingABC
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Final

import numpy as np

from ishikawa_ep.bifunctions import (
    AffineVI,
    Bifunction,
    ConvexFunction,
    ConvexGap,
    CustomBifunction,
    FactoredQuadratic,
    NormSquare,
    QuadraticFunction,
    ZeroBifunction,
)
from ishikawa_ep.exceptions import ConfigError, UnsupportedParameterError
from ishikawa_ep.hilbert import Vector, as_vector
from ishikawa_ep.mappings import (
    AffineMap,
    Composite,
    Identity,
    Mapping,
    OperatorClass,
    Projection,
    Rotation,
    ScaledReflection,
)
from ishikawa_ep.resolvent import (
    Auto,
    ClosedFormLinear,
    ProjectedFixedPoint,
    ProxGradient,
    Strategy,
)
from ishikawa_ep.schedules import (
    Constant,
    Formula,
    Schedule,
    ScheduleBounds,
    SequenceSpec,
)
from ishikawa_ep.schemes import Problem, StopRule
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
)

log = logging.getLogger(__name__)

# Accepted keys per kind, besides the discriminator itself
_SET_KEYS: Final[dict[str, set[str]]] = {
    'WholeSpace': {'dim'},
    'Box': {'lower', 'upper'},
    'Ball': {'center', 'radius'},
    'Halfspace': {'normal', 'offset'},
    'Hyperplane': {'normal', 'offset'},
    'Simplex': {'dim', 'scale'},
    'Singleton': {'point'},
    'Intersection': {'sets', 'max_iter', 'tol'},
}
_MAPPING_KEYS: Final[dict[str, set[str]]] = {
    'Identity': set(),
    'Projection': {'target'},
    'Rotation': {'center', 'angle'},
    'ScaledReflection': {'center', 'factor'},
    'AffineMap': {'matrix', 'offset'},
    'Composite': {'mappings'},
}
_MAPPING_COMMON_KEYS: Final[set[str]] = {'domain', 'claimed_class'}
_FUNCTION_KEYS: Final[dict[str, set[str]]] = {
    'quadratic': {'matrix', 'linear'},
    'norm-square': {'dim', 'weight'},
    'custom-quadratic': {'factor', 'linear'},
}
_BIFUNCTION_KEYS: Final[dict[str, set[str]]] = {
    'Zero': set(),
    'AffineVI': {'matrix', 'offset'},
    'ConvexGap': {'g'},
    'VariationalInequality': {'mapping'},
}
_STRATEGY_KEYS: Final[dict[str, set[str]]] = {
    'Auto': set(),
    'ClosedFormLinear': set(),
    'ProjectedFixedPoint': {'step', 'max_iter', 'tol'},
    'ProxGradient': {'step', 'max_iter', 'tol'},
}
_PROBLEM_KEYS: Final[set[str]] = {
    'E',
    'S',
    'f',
    'known_solution',
    'known_solution_set',
    'resolvent_strategy',
}
_SCHEDULE_KEYS: Final[set[str]] = {'alpha', 'beta', 'r', 'bounds'}
_BOUNDS_KEYS: Final[set[str]] = {'alpha_low', 'beta_low', 'beta_high', 'r_low', 'alpha_high'}
_SEQUENCE_KEYS: Final[set[str]] = {'constant', 'formula', 'params'}
_STOP_KEYS: Final[set[str]] = {'max_iter', 'residual_tol'}
_EXPERIMENT_KEYS: Final[set[str]] = {
    'problem',
    'scheme',
    'schemes',
    'schedule',
    'stop',
    'x1',
    'seed',
    'outputs',
    'strict',
    'thin',
}
_MAPPING_CHECK_KEYS: Final[set[str]] = {'mapping', 'classes', 'n_pairs', 'tol', 'seed', 'fixed_point'}
_BIFUNCTION_CHECK_KEYS: Final[set[str]] = {'bifunction', 'n_samples', 'tol', 'seed', 't_grid'}
_RESOLVENT_KEYS: Final[set[str]] = {'bifunction', 'E', 'strategy', 'r', 'x', 'verify_samples', 'seed'}

OUTPUT_KINDS: Final[tuple[str, ...]] = ('trace-csv', 'trace-json', 'report-json', 'plotdata-csv')


def _check_keys(
    what: str,
    data: Any,
    allowed: set[str],
    required: Sequence[str] = (),
) -> MappingABC[str, Any]:
    if not isinstance(data, MappingABC):
        raise ConfigError(f'{what} must be a JSON object, got {type(data).__name__}')
    for key in data:
        if key not in allowed:
            raise UnsupportedParameterError(
                f'Unsupported parameter provided: {key}. {what} accepts {sorted(allowed)}'
            )
    for key in required:
        if key not in data:
            raise ConfigError(f'{what} is missing required key {key!r}')
    return data


@contextmanager
def _reading(what: str) -> Iterator[None]:
    """Turn missing keys and mistyped values under ``what`` into ConfigError."""
    try:
        yield
    except KeyError as e:
        raise ConfigError(f'{what} is missing required key {e.args[0]!r}') from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{what} has an invalid value: {e}') from e


def _kind(what: str, data: Any, table: MappingABC[str, set[str]], key: str = 'kind') -> str:
    if not isinstance(data, MappingABC) or key not in data:
        raise ConfigError(f'{what} needs a {key!r} field, one of {sorted(table)}')
    kind = data[key]
    if kind not in table:
        raise ConfigError(f'Unknown {what} {key} {kind!r}; expected one of {sorted(table)}')
    _check_keys(f'{what} {kind}', data, table[kind] | {key})
    return str(kind)


def _floats(values: Vector | Sequence[float]) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def _rows(matrix: Any) -> list[list[float]]:
    return [_floats(row) for row in np.asarray(matrix, dtype=np.float64)]


# --------------------------------------------------------------------------
# Sets
# --------------------------------------------------------------------------


def set_from_config(data: Any) -> ConvexSet:
    kind = _kind('set', data, _SET_KEYS)
    with _reading(f'set {kind}'):
        if kind == 'WholeSpace':
            return WholeSpace(int(data['dim']))
        if kind == 'Box':
            return Box(data['lower'], data['upper'])
        if kind == 'Ball':
            return Ball(data['center'], float(data['radius']))
        if kind == 'Halfspace':
            return Halfspace(data['normal'], float(data['offset']))
        if kind == 'Hyperplane':
            return Hyperplane(data['normal'], float(data['offset']))
        if kind == 'Simplex':
            return Simplex(int(data['dim']), float(data.get('scale', 1.0)))
        if kind == 'Singleton':
            return Singleton(data['point'])
        extra = {k: data[k] for k in ('max_iter', 'tol') if k in data}
        return Intersection([set_from_config(s) for s in data['sets']], **extra)


def set_to_config(s: ConvexSet) -> dict[str, Any]:
    if isinstance(s, WholeSpace):
        return {'kind': s.kind, 'dim': s.n}
    if isinstance(s, Box):
        return {'kind': s.kind, 'lower': _floats(s.lower), 'upper': _floats(s.upper)}
    if isinstance(s, Ball):
        return {'kind': s.kind, 'center': _floats(s.center), 'radius': s.radius}
    if isinstance(s, Halfspace | Hyperplane):
        return {'kind': s.kind, 'normal': _floats(s.normal), 'offset': float(s.offset)}
    if isinstance(s, Simplex):
        return {'kind': s.kind, 'dim': s.n, 'scale': s.scale}
    if isinstance(s, Singleton):
        return {'kind': s.kind, 'point': _floats(s.point)}
    if isinstance(s, Intersection):
        return {
            'kind': s.kind,
            'sets': [set_to_config(m) for m in s.sets],
            'max_iter': s.max_iter,
            'tol': s.tol,
        }
    raise ConfigError(f'no declarative form for set {type(s).__name__}')


# --------------------------------------------------------------------------
# Mappings
# --------------------------------------------------------------------------


def mapping_from_config(data: Any, default_domain: ConvexSet | None = None) -> Mapping:
    table = {k: v | _MAPPING_COMMON_KEYS for k, v in _MAPPING_KEYS.items()}
    kind = _kind('mapping', data, table)
    if 'domain' in data:
        domain = set_from_config(data['domain'])
    elif default_domain is not None:
        domain = default_domain
    else:
        raise ConfigError(f'mapping {kind} needs a domain')
    common: dict[str, Any] = {'domain': domain}
    with _reading(f'mapping {kind}'):
        if data.get('claimed_class') is not None:
            alpha, beta = data['claimed_class']
            common['claimed_class'] = (float(alpha), float(beta))
        if kind == 'Identity':
            return Identity(**common)
        if kind == 'Projection':
            return Projection(target=set_from_config(data['target']), **common)
        if kind == 'Rotation':
            return Rotation(center=data['center'], angle=float(data['angle']), **common)
        if kind == 'ScaledReflection':
            return ScaledReflection(center=data['center'], factor=float(data['factor']), **common)
        if kind == 'AffineMap':
            return AffineMap(matrix=data['matrix'], offset=data['offset'], **common)
        members = [mapping_from_config(m, domain) for m in data['mappings']]
        return Composite(mappings=members, **common)


def mapping_to_config(m: Mapping) -> dict[str, Any]:
    out: dict[str, Any] = {'kind': m.kind, 'domain': set_to_config(m.domain)}
    if m.claimed_class is not None:
        out['claimed_class'] = list(m.claimed_class)
    if isinstance(m, Projection):
        out['target'] = set_to_config(m.target)
    elif isinstance(m, Rotation):
        out.update(center=_floats(m.center), angle=m.angle)
    elif isinstance(m, ScaledReflection):
        out.update(center=_floats(m.center), factor=m.factor)
    elif isinstance(m, AffineMap):
        out.update(matrix=_rows(m.matrix), offset=_floats(m.offset))
    elif isinstance(m, Composite):
        out['mappings'] = [mapping_to_config(member) for member in m.mappings]
    elif not isinstance(m, Identity):
        raise ConfigError(f'no declarative form for mapping {type(m).__name__}')
    return out


def operator_class_from_config(data: Any) -> OperatorClass:
    """A class name string, or an ``[alpha, beta]`` pair for generalized hybrid."""
    if isinstance(data, str):
        return OperatorClass.parse(data)
    if isinstance(data, Sequence) and len(data) == 2:
        with _reading('operator class'):
            return OperatorClass.generalized_hybrid(float(data[0]), float(data[1]))
    raise ConfigError(f'operator class must be a name or an [alpha, beta] pair, got {data!r}')


# --------------------------------------------------------------------------
# Bifunctions
# --------------------------------------------------------------------------


def function_from_config(data: Any) -> ConvexFunction:
    kind = _kind('convex function', data, _FUNCTION_KEYS)
    with _reading(f'convex function {kind}'):
        if kind == 'quadratic':
            return QuadraticFunction(data['matrix'], data['linear'])
        if kind == 'norm-square':
            return NormSquare(int(data['dim']), float(data.get('weight', 0.5)))
        return FactoredQuadratic(data['factor'], data['linear'])


def function_to_config(g: ConvexFunction) -> dict[str, Any]:
    if isinstance(g, QuadraticFunction):
        return {'kind': g.kind, 'matrix': _rows(g.matrix), 'linear': _floats(g.linear)}
    if isinstance(g, NormSquare):
        return {'kind': g.kind, 'dim': g.n, 'weight': g.weight}
    if isinstance(g, FactoredQuadratic):
        return {'kind': g.kind, 'factor': _rows(g.factor), 'linear': _floats(g.linear)}
    raise ConfigError(f'no declarative form for convex function {type(g).__name__}')


def bifunction_from_config(data: Any, default_domain: ConvexSet | None = None) -> Bifunction:
    table = {k: v | {'domain'} for k, v in _BIFUNCTION_KEYS.items()}
    family = _kind('bifunction', data, table, key='family')
    if 'domain' in data:
        domain = set_from_config(data['domain'])
    elif default_domain is not None:
        domain = default_domain
    else:
        raise ConfigError(f'bifunction {family} needs a domain')
    with _reading(f'bifunction {family}'):
        if family == 'Zero':
            return ZeroBifunction(domain=domain)
        if family == 'AffineVI':
            return AffineVI(domain=domain, matrix=data['matrix'], offset=data['offset'])
        if family == 'ConvexGap':
            return ConvexGap(domain=domain, g=function_from_config(data['g']))
        return Bifunction.from_mapping(mapping_from_config(data['mapping'], domain), domain)


def bifunction_to_config(f: Bifunction) -> dict[str, Any]:
    out: dict[str, Any] = {'family': f.family, 'domain': set_to_config(f.domain)}
    if isinstance(f, AffineVI):
        out.update(matrix=_rows(f.matrix), offset=_floats(f.offset))
    elif isinstance(f, ConvexGap):
        out['g'] = function_to_config(f.g)
    elif isinstance(f, CustomBifunction):
        raise ConfigError(f'custom bifunction {f.name!r} has no declarative form')
    return out


def strategy_from_config(data: Any) -> Strategy:
    if isinstance(data, str):
        data = {'name': data}
    name = _kind('resolvent strategy', data, _STRATEGY_KEYS, key='name')
    if name == 'Auto':
        return Auto()
    if name == 'ClosedFormLinear':
        return ClosedFormLinear()
    params: dict[str, Any] = {}
    with _reading(f'resolvent strategy {name}'):
        if data.get('step') is not None:
            params['step'] = float(data['step'])
        if 'max_iter' in data:
            params['max_iter'] = int(data['max_iter'])
        if 'tol' in data:
            params['tol'] = float(data['tol'])
    if name == 'ProjectedFixedPoint':
        return ProjectedFixedPoint(**params)
    return ProxGradient(**params)


def strategy_to_config(s: Strategy) -> dict[str, Any]:
    out: dict[str, Any] = {'name': s.name}
    if isinstance(s, ProjectedFixedPoint | ProxGradient):
        out.update(step=s.step, max_iter=s.max_iter, tol=s.tol)
    return out


# --------------------------------------------------------------------------
# Problems, schedules, stop rules
# --------------------------------------------------------------------------


def problem_from_config(data: Any) -> Problem:
    """Build a Problem; S and f default to E as their domain."""
    _check_keys('problem', data, _PROBLEM_KEYS, required=('E', 'S', 'f'))
    E = set_from_config(data['E'])
    known_set = data.get('known_solution_set')
    strategy = data.get('resolvent_strategy')
    return Problem(
        E=E,
        S=mapping_from_config(data['S'], E),
        f=bifunction_from_config(data['f'], E),
        known_solution=(
            as_vector(data['known_solution'], 'known_solution')
            if data.get('known_solution') is not None
            else None
        ),
        known_solution_set=set_from_config(known_set) if known_set is not None else None,
        resolvent_strategy=strategy_from_config(strategy) if strategy is not None else Auto(),
    )


def problem_to_config(p: Problem) -> dict[str, Any]:
    out: dict[str, Any] = {
        'E': set_to_config(p.E),
        'S': mapping_to_config(p.S),
        'f': bifunction_to_config(p.f),
    }
    if p.known_solution is not None:
        out['known_solution'] = _floats(p.known_solution)
    if p.known_solution_set is not None:
        out['known_solution_set'] = set_to_config(p.known_solution_set)
    if not isinstance(p.resolvent_strategy, Auto):
        out['resolvent_strategy'] = strategy_to_config(p.resolvent_strategy)
    return out


def sequence_from_config(data: Any) -> SequenceSpec:
    """A bare number, ``{"constant": v}`` or ``{"formula": kind, "params": {...}}``."""
    if isinstance(data, int | float) and not isinstance(data, bool):
        return Constant(float(data))
    _check_keys('sequence', data, _SEQUENCE_KEYS)
    if 'constant' in data:
        if len(data) != 1:
            raise ConfigError('a constant sequence takes no other keys')
        with _reading('constant sequence'):
            return Constant(float(data['constant']))
    if 'formula' not in data:
        raise ConfigError('a sequence needs "constant" or "formula"')
    with _reading(f'sequence formula {data["formula"]!r}'):
        return Formula(str(data['formula']), dict(data.get('params', {})))


def sequence_to_config(s: SequenceSpec) -> dict[str, Any]:
    if isinstance(s, Constant):
        return {'constant': s.value}
    if isinstance(s, Formula):
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in s.params.items()}
        return {'formula': s.formula, 'params': params}
    raise ConfigError(f'no declarative form for sequence {type(s).__name__}')


def schedule_from_config(data: Any) -> Schedule:
    _check_keys('schedule', data, _SCHEDULE_KEYS)
    kwargs: dict[str, Any] = {
        name: sequence_from_config(data[name]) for name in ('alpha', 'beta', 'r') if name in data
    }
    if 'bounds' in data:
        bounds = _check_keys('schedule bounds', data['bounds'], _BOUNDS_KEYS)
        with _reading('schedule bounds'):
            kwargs['bounds'] = ScheduleBounds(**{k: float(v) for k, v in bounds.items()})
    return Schedule(**kwargs)


def schedule_to_config(s: Schedule) -> dict[str, Any]:
    b = s.bounds
    return {
        'alpha': sequence_to_config(s.alpha),
        'beta': sequence_to_config(s.beta),
        'r': sequence_to_config(s.r),
        'bounds': {
            'alpha_low': b.alpha_low,
            'beta_low': b.beta_low,
            'beta_high': b.beta_high,
            'r_low': b.r_low,
            'alpha_high': b.alpha_high,
        },
    }


def stop_from_config(data: Any) -> StopRule:
    _check_keys('stop', data, _STOP_KEYS)
    kwargs: dict[str, Any] = {}
    with _reading('stop'):
        if 'max_iter' in data:
            kwargs['max_iter'] = int(data['max_iter'])
        if 'residual_tol' in data:
            kwargs['residual_tol'] = float(data['residual_tol'])
    return StopRule(**kwargs)


def stop_to_config(s: StopRule) -> dict[str, Any]:
    return {'max_iter': s.max_iter, 'residual_tol': s.residual_tol}


# --------------------------------------------------------------------------
# Experiment and checker specs
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """A run (``scheme``) or comparison (``schemes``) request."""

    problem: Problem
    schedule: Schedule
    stop: StopRule
    x1: Vector
    scheme: str | None = None
    schemes: tuple[str, ...] = ()
    seed: int = 0
    outputs: tuple[str, ...] = ('trace-csv',)
    strict: bool = False
    thin: bool = False

    def __post_init__(self) -> None:
        for out in self.outputs:
            if out not in OUTPUT_KINDS:
                raise ConfigError(f'unknown output {out!r}; expected one of {list(OUTPUT_KINDS)}')

    def with_overrides(
        self,
        seed: int | None = None,
        max_iter: int | None = None,
        tol: float | None = None,
    ) -> ExperimentSpec:
        stop = StopRule(
            max_iter if max_iter is not None else self.stop.max_iter,
            tol if tol is not None else self.stop.residual_tol,
        )
        return ExperimentSpec(
            problem=self.problem,
            schedule=self.schedule,
            stop=stop,
            x1=self.x1,
            scheme=self.scheme,
            schemes=self.schemes,
            seed=seed if seed is not None else self.seed,
            outputs=self.outputs,
            strict=self.strict,
            thin=self.thin,
        )


def experiment_from_config(data: Any) -> ExperimentSpec:
    _check_keys('experiment', data, _EXPERIMENT_KEYS, required=('problem', 'x1'))
    if 'scheme' not in data and 'schemes' not in data:
        raise ConfigError('experiment needs "scheme" or "schemes"')
    outputs = data.get('outputs', ['trace-csv'])
    with _reading('experiment'):
        return ExperimentSpec(
            problem=problem_from_config(data['problem']),
            schedule=schedule_from_config(data.get('schedule', {})),
            stop=stop_from_config(data.get('stop', {})),
            x1=as_vector(data['x1'], 'x1'),
            scheme=data.get('scheme'),
            schemes=tuple(data.get('schemes', ())),
            seed=int(data.get('seed', 0)),
            outputs=tuple(outputs),
            strict=bool(data.get('strict', False)),
            thin=bool(data.get('thin', False)),
        )


def experiment_to_config(e: ExperimentSpec) -> dict[str, Any]:
    out: dict[str, Any] = {'problem': problem_to_config(e.problem)}
    if e.scheme is not None:
        out['scheme'] = e.scheme
    if e.schemes:
        out['schemes'] = list(e.schemes)
    out.update(
        schedule=schedule_to_config(e.schedule),
        stop=stop_to_config(e.stop),
        x1=_floats(e.x1),
        seed=e.seed,
        outputs=list(e.outputs),
    )
    if e.strict:
        out['strict'] = True
    if e.thin:
        out['thin'] = True
    return out


@dataclass(frozen=True, eq=False)
class MappingCheckSpec:
    mapping: Mapping
    classes: tuple[OperatorClass, ...]
    n_pairs: int = 1000
    tol: float = 1e-8
    seed: int = 0
    fixed_point: Vector | None = None


def mapping_check_from_config(data: Any) -> MappingCheckSpec:
    _check_keys('mapping check', data, _MAPPING_CHECK_KEYS, required=('mapping', 'classes'))
    classes = data['classes']
    if isinstance(classes, str):
        classes = [classes]
    fixed = data.get('fixed_point')
    with _reading('mapping check'):
        return MappingCheckSpec(
            mapping=mapping_from_config(data['mapping']),
            classes=tuple(operator_class_from_config(c) for c in classes),
            n_pairs=int(data.get('n_pairs', 1000)),
            tol=float(data.get('tol', 1e-8)),
            seed=int(data.get('seed', 0)),
            fixed_point=as_vector(fixed, 'fixed_point') if fixed is not None else None,
        )


@dataclass(frozen=True, eq=False)
class BifunctionCheckSpec:
    bifunction: Bifunction
    n_samples: int = 256
    tol: float = 1e-8
    seed: int = 0
    t_grid: tuple[float, ...] | None = None


def bifunction_check_from_config(data: Any) -> BifunctionCheckSpec:
    _check_keys('bifunction check', data, _BIFUNCTION_CHECK_KEYS, required=('bifunction',))
    grid = data.get('t_grid')
    with _reading('bifunction check'):
        return BifunctionCheckSpec(
            bifunction=bifunction_from_config(data['bifunction']),
            n_samples=int(data.get('n_samples', 256)),
            tol=float(data.get('tol', 1e-8)),
            seed=int(data.get('seed', 0)),
            t_grid=tuple(float(t) for t in grid) if grid is not None else None,
        )


@dataclass(frozen=True, eq=False)
class ResolventSpec:
    bifunction: Bifunction
    E: ConvexSet
    strategy: Strategy = field(default_factory=Auto)
    r: float | None = None
    x: Vector | None = None
    verify_samples: int = 256
    seed: int = 0


def resolvent_spec_from_config(data: Any) -> ResolventSpec:
    _check_keys('resolvent', data, _RESOLVENT_KEYS, required=('bifunction', 'E'))
    E = set_from_config(data['E'])
    strategy = data.get('strategy')
    with _reading('resolvent'):
        return ResolventSpec(
            bifunction=bifunction_from_config(data['bifunction'], E),
            E=E,
            strategy=strategy_from_config(strategy) if strategy is not None else Auto(),
            r=float(data['r']) if 'r' in data else None,
            x=as_vector(data['x'], 'x') if 'x' in data else None,
            verify_samples=int(data.get('verify_samples', 256)),
            seed=int(data.get('seed', 0)),
        )


def load_json(path: str | Path) -> Any:
    """Read a spec file, turning I/O and syntax problems into ConfigError."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f'cannot read spec file {path}: {e}') from e
    log.debug('loaded spec file %s', path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f'{path}: invalid JSON at line {e.lineno}: {e.msg}') from e
