"""Command-line experiment runner.

Exit codes: 0 success, 1 spec or configuration error, 2 run hit max_iter,
3 solver failure, 4 a checker found a violation. Errors are reported on
stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, Final, NoReturn

from ishikawa_ep import __version__
from ishikawa_ep.bifunctions import DEFAULT_T_GRID, check_axioms
from ishikawa_ep.diagnostics import certify
from ishikawa_ep.exceptions import (
    ConfigError,
    IshikawaEPError,
    ScheduleViolation,
    SolverRuntimeError,
)
from ishikawa_ep.hilbert import as_vector
from ishikawa_ep.mappings import classify
from ishikawa_ep.resolvent import ResolventRequest, resolvent
from ishikawa_ep.schemes import Status, compare, run
from ishikawa_ep.serialization import (
    ExperimentSpec,
    bifunction_check_from_config,
    experiment_from_config,
    load_json,
    mapping_check_from_config,
    problem_from_config,
    resolvent_spec_from_config,
)
from ishikawa_ep.tracefiles import (
    dumps,
    read_trace_csv,
    write_comparison_csv,
    write_plotdata_csv,
    write_report_json,
    write_trace_csv,
    write_trace_json,
)

log = logging.getLogger(__name__)

EXIT_OK: Final[int] = 0
EXIT_SPEC_ERROR: Final[int] = 1
EXIT_MAX_ITER: Final[int] = 2
EXIT_SOLVER_FAILURE: Final[int] = 3
EXIT_VIOLATION: Final[int] = 4

LOG_LEVEL_ENV: Final[str] = 'ISHIKAWA_EP_LOG_LEVEL'

_STATUS_EXIT: Final[dict[Status, int]] = {
    Status.CONVERGED: EXIT_OK,
    Status.MAX_ITER: EXIT_MAX_ITER,
    Status.INNER_SOLVER_FAILURE: EXIT_SOLVER_FAILURE,
}
_OUTPUT_FILES: Final[dict[str, str]] = {
    'trace-csv': 'trace.csv',
    'trace-json': 'trace.json',
    'report-json': 'report.json',
    'plotdata-csv': 'plotdata.csv',
}


def _emit(data: Any) -> None:
    sys.stdout.write(dumps(data))


def _experiment(args: argparse.Namespace) -> ExperimentSpec:
    spec = experiment_from_config(load_json(args.spec))
    return spec.with_overrides(seed=args.seed, max_iter=args.max_iter, tol=args.tol)


def _outputs(spec: ExperimentSpec, fmt: str | None) -> list[str]:
    outputs = list(spec.outputs)
    if fmt is not None:
        outputs = [o for o in outputs if not o.startswith('trace-')]
        outputs.insert(0, f'trace-{fmt}')
    return outputs


def cmd_run(args: argparse.Namespace) -> int:
    spec = _experiment(args)
    if spec.scheme is None:
        raise ConfigError('run needs a single "scheme"; use compare for "schemes"')
    trace = run(
        spec.problem,
        spec.scheme,
        spec.schedule,
        spec.stop,
        spec.x1,
        seed=spec.seed,
        strict=spec.strict,
        thin=spec.thin,
    )
    out_dir = Path(args.out)
    written = []
    for kind in _outputs(spec, args.format):
        path = out_dir / _OUTPUT_FILES[kind]
        if kind == 'trace-csv':
            write_trace_csv(trace, path)
        elif kind == 'trace-json':
            write_trace_json(trace, path)
        elif kind == 'plotdata-csv':
            write_plotdata_csv(trace, path)
        else:
            report = certify(trace, spec.problem, residual_tol=spec.stop.residual_tol)
            write_report_json(report, path)
        written.append(str(path))
    assert trace.status is not None
    _emit(
        {
            'scheme': trace.scheme,
            'status': trace.status.value,
            'iterations': trace.iterations,
            'final_x': [float(v) for v in trace.final_x] if trace.final_x is not None else None,
            'violations': len(trace.violations),
            'outputs': written,
        }
    )
    return _STATUS_EXIT[trace.status]


def cmd_compare(args: argparse.Namespace) -> int:
    spec = _experiment(args)
    schemes = list(spec.schemes) or ([spec.scheme] if spec.scheme else [])
    rows = compare(spec.problem, schemes, spec.schedule, spec.stop, spec.x1, seed=spec.seed)
    out_dir = Path(args.out)
    table = write_comparison_csv(rows, out_dir / 'comparison.csv')
    for row in rows:
        if row.trace is not None and not row.trace.thin:
            write_trace_csv(row.trace, out_dir / f'trace_{row.scheme}.csv')
    _emit({'table': str(table), 'rows': [row.to_dict() for row in rows]})
    return EXIT_OK


def cmd_check_mapping(args: argparse.Namespace) -> int:
    spec = mapping_check_from_config(load_json(args.spec))
    seed = args.seed if args.seed is not None else spec.seed
    reports = [
        classify(spec.mapping, c, seed, spec.n_pairs, spec.tol, spec.fixed_point)
        for c in spec.classes
    ]
    _emit({'reports': [r.to_dict() for r in reports]})
    return EXIT_OK if all(r.consistent for r in reports) else EXIT_VIOLATION


def cmd_check_bifunction(args: argparse.Namespace) -> int:
    spec = bifunction_check_from_config(load_json(args.spec))
    seed = args.seed if args.seed is not None else spec.seed
    report = check_axioms(
        spec.bifunction, seed, spec.n_samples, spec.t_grid or DEFAULT_T_GRID, spec.tol
    )
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _parse_point(text: str) -> list[float]:
    text = text.strip()
    try:
        if text.startswith('['):
            return [float(v) for v in json.loads(text)]
        return [float(v) for v in text.split(',')]
    except (ValueError, TypeError) as e:
        raise ConfigError(f'--x must be comma separated numbers or a JSON list, got {text!r}') from e


def cmd_resolvent(args: argparse.Namespace) -> int:
    spec = resolvent_spec_from_config(load_json(args.spec))
    r = args.r if args.r is not None else spec.r
    x = as_vector(_parse_point(args.x), 'x') if args.x is not None else spec.x
    if r is None or x is None:
        raise ConfigError('resolvent needs r and x, from --r/--x or the spec file')
    seed = args.seed if args.seed is not None else spec.seed
    result = resolvent(
        ResolventRequest(spec.bifunction, spec.E, r, x, spec.strategy),
        verify_samples=spec.verify_samples,
        verify_seed=seed,
    )
    _emit(
        {
            'z': [float(v) for v in result.z],
            'achieved_residual': result.achieved_residual,
            'strategy': result.strategy_used,
            'inner_iterations': result.inner_iterations,
            'converged': result.converged,
        }
    )
    return EXIT_OK if result.converged else EXIT_SOLVER_FAILURE


def cmd_certify(args: argparse.Namespace) -> int:
    trace = read_trace_csv(args.trace)
    problem = None
    if args.spec is not None:
        data = load_json(args.spec)
        problem_data = data.get('problem', data) if isinstance(data, dict) else data
        problem = problem_from_config(problem_data)
    kwargs: dict[str, Any] = {}
    if args.tol is not None:
        kwargs.update(decay_tol=args.tol, residual_tol=args.tol)
    report = certify(trace, problem, **kwargs)
    if args.out is not None:
        write_report_json(report, Path(args.out) / 'report.json')
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _error_payload(e: BaseException) -> dict[str, Any]:
    payload: dict[str, Any] = {'error': type(e).__name__, 'message': str(e)}
    if isinstance(e, ScheduleViolation):
        payload.update(condition=e.condition, n=e.n, value=e.value)
    return payload


def _exit_code(e: IshikawaEPError) -> int:
    return EXIT_SOLVER_FAILURE if isinstance(e, SolverRuntimeError) else EXIT_SPEC_ERROR


class _Parser(argparse.ArgumentParser):
    """Raises ConfigError on usage errors instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(f'{self.prog}: {message}')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog='ishikawa-ep',
        description='Modified Ishikawa iteration for equilibrium and fixed-point problems.',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument(
        '--log-level',
        default=None,
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help=f'logging level (default: ${LOG_LEVEL_ENV} or WARNING)',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    def add(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument('--seed', type=int, default=None, help='override the spec seed')
        return p

    for name, handler, help_text in (
        ('run', cmd_run, 'run one scheme and write its trace'),
        ('compare', cmd_compare, 'run several schemes and write a comparison table'),
    ):
        p = add(name, handler, help_text)
        p.add_argument('--spec', required=True, help='experiment spec (JSON)')
        p.add_argument('--out', default='.', help='output directory')
        p.add_argument('--max-iter', type=int, default=None)
        p.add_argument('--tol', type=float, default=None, help='residual tolerance')
        p.add_argument('--format', choices=['csv', 'json'], default=None, help='trace format')

    p = add('check-mapping', cmd_check_mapping, 'sample a mapping against operator classes')
    p.add_argument('--spec', required=True)

    p = add('check-bifunction', cmd_check_bifunction, 'sample the bifunction conditions')
    p.add_argument('--spec', required=True)

    p = add('resolvent', cmd_resolvent, 'evaluate T_r(x)')
    p.add_argument('--spec', required=True)
    p.add_argument('--r', type=float, default=None)
    p.add_argument('--x', default=None, help='point, e.g. --x=3,-3')

    p = add('certify', cmd_certify, 'apply the diagnostics suite to a trace CSV')
    p.add_argument('--trace', required=True, help='trace CSV written by run')
    p.add_argument('--spec', default=None, help='problem or experiment spec (optional)')
    p.add_argument('--out', default=None, help='directory for report.json')
    p.add_argument('--tol', type=float, default=None, help='residual tolerance')
    return parser


def configure_logging(level: str | None) -> None:
    name = (level or os.environ.get(LOG_LEVEL_ENV) or 'WARNING').upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ConfigError(f'unknown log level {name!r}')
    logging.basicConfig(level=numeric, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.log_level)
        return int(args.handler(args))
    except IshikawaEPError as e:
        log.debug('command failed', exc_info=True)
        sys.stderr.write(json.dumps(_error_payload(e)) + '\n')
        return _exit_code(e)


if __name__ == '__main__':
    sys.exit(main())
