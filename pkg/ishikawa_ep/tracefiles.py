"""Trace, report and plot-data files.

Trace CSV columns, in order: ``n``, the coordinates of xₙ, uₙ and yₙ
(``x_1 .. x_d``, ``u_1 .. u_d``, ``y_1 .. y_d``), ``alpha_n``, ``beta_n``,
``r_n``, ``res_x_Su``, ``res_y_x``, ``res_x_u``, ``res_u_Su``, ``dist_q``.
Floats use 17 significant digits so a file reads back bit-for-bit; ``dist_q``
is empty without a known solution. Every file is written to a temporary
sibling and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Final

import numpy as np

from ishikawa_ep.exceptions import ConfigError
from ishikawa_ep.reports import CertificateReport, ClassReport
from ishikawa_ep.schemes import RESIDUAL_NAMES, ComparisonRow, Trace, TraceRecord

log = logging.getLogger(__name__)

SCHEDULE_COLUMNS: Final[tuple[str, ...]] = ('alpha_n', 'beta_n', 'r_n')
PLOT_COLUMNS: Final[tuple[str, ...]] = ('n', *RESIDUAL_NAMES, 'max_residual', 'dist_q')
COMPARISON_COLUMNS: Final[tuple[str, ...]] = (
    'scheme',
    'status',
    'iterations',
    *RESIDUAL_NAMES,
    'dist_q',
    'violations',
    'error',
)


def fmt(value: float | None) -> str:
    if value is None:
        return ''
    return format(float(value), '.17g')


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path``, then rename it over ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f'.{target.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    log.debug('wrote %s', target)
    return target


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# Trace CSV
# --------------------------------------------------------------------------


def trace_columns(dim: int) -> list[str]:
    coords = [f'{p}_{i}' for p in ('x', 'u', 'y') for i in range(1, dim + 1)]
    return ['n', *coords, *SCHEDULE_COLUMNS, *RESIDUAL_NAMES, 'dist_q']


def render_trace_csv(trace: Trace) -> str:
    if trace.thin:
        raise ConfigError('thin traces have no coordinates; write plot data instead')
    rows = []
    for rec in trace.records:
        assert rec.x is not None and rec.u is not None and rec.y is not None
        rows.append(
            [
                str(rec.n),
                *(fmt(v) for v in rec.x),
                *(fmt(v) for v in rec.u),
                *(fmt(v) for v in rec.y),
                fmt(rec.alpha),
                fmt(rec.beta),
                fmt(rec.r),
                *(fmt(v) for v in rec.residuals),
                fmt(rec.dist_q),
            ]
        )
    return _csv_text(trace_columns(trace.dim), rows)


def write_trace_csv(trace: Trace, path: str | Path) -> Path:
    return atomic_write_text(path, render_trace_csv(trace))


def _vector(row: dict[str, str], prefix: str, dim: int) -> np.ndarray:
    out = np.array([float(row[f'{prefix}_{i}']) for i in range(1, dim + 1)])
    out.setflags(write=False)
    return out


def read_trace_csv(path: str | Path, scheme: str = 'unknown') -> Trace:
    """Load a trace CSV back into a Trace with no terminal status.

    Raises:
        ConfigError: unreadable file, wrong column layout, short or malformed
            rows, or non-contiguous n.
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f'cannot read trace file {path}: {e}') from e
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    dim = sum(1 for col in header if col.startswith('x_'))
    if dim < 1 or list(header) != trace_columns(dim):
        raise ConfigError(f'{path}: not a trace CSV (columns {header})')
    trace = Trace(scheme=scheme, dim=dim)
    try:
        for expected, row in enumerate(reader, start=1):
            n = int(row['n'])
            if n != expected:
                raise ConfigError(f'{path}: records are not contiguous (n={n}, expected {expected})')
            trace.records.append(
                TraceRecord(
                    n=n,
                    x=_vector(row, 'x', dim),
                    u=_vector(row, 'u', dim),
                    y=_vector(row, 'y', dim),
                    alpha=float(row['alpha_n']),
                    beta=float(row['beta_n']),
                    r=float(row['r_n']),
                    res_x_Su=float(row['res_x_Su']),
                    res_y_x=float(row['res_y_x']),
                    res_x_u=float(row['res_x_u']),
                    res_u_Su=float(row['res_u_Su']),
                    dist_q=float(row['dist_q']) if row['dist_q'] else None,
                )
            )
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{path}: malformed number or short row: {e}') from e
    if trace.records:
        trace.final_x = trace.records[-1].x
    log.info('read %d records from %s', len(trace), path)
    return trace


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def _floats(values: Any) -> list[float] | None:
    if values is None:
        return None
    return [float(v) for v in values]


def trace_to_dict(trace: Trace) -> dict[str, Any]:
    return {
        'scheme': trace.scheme,
        'dim': trace.dim,
        'status': trace.status.value if trace.status else None,
        'iterations': trace.iterations,
        'thin': trace.thin,
        'message': trace.message,
        'advisories': list(trace.advisories),
        'violations': [
            {'n': v.n, 'invariant': v.invariant, 'lhs': v.lhs, 'rhs': v.rhs}
            for v in trace.violations
        ],
        'final_x': _floats(trace.final_x),
        'next_x': _floats(trace.next_x),
        'records': [
            {
                'n': rec.n,
                'x': _floats(rec.x),
                'u': _floats(rec.u),
                'y': _floats(rec.y),
                'alpha_n': rec.alpha,
                'beta_n': rec.beta,
                'r_n': rec.r,
                **dict(zip(RESIDUAL_NAMES, rec.residuals, strict=True)),
                'dist_q': rec.dist_q,
            }
            for rec in trace.records
        ],
    }


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2) + '\n'


def write_trace_json(trace: Trace, path: str | Path) -> Path:
    return atomic_write_text(path, dumps(trace_to_dict(trace)))


def write_report_json(report: CertificateReport | ClassReport, path: str | Path) -> Path:
    return atomic_write_text(path, dumps(report.to_dict()))


# --------------------------------------------------------------------------
# Plot data and comparison tables
# --------------------------------------------------------------------------


def render_plotdata_csv(trace: Trace) -> str:
    rows = [
        [str(rec.n), *(fmt(v) for v in rec.residuals), fmt(rec.max_residual), fmt(rec.dist_q)]
        for rec in trace.records
    ]
    return _csv_text(PLOT_COLUMNS, rows)


def write_plotdata_csv(trace: Trace, path: str | Path) -> Path:
    return atomic_write_text(path, render_plotdata_csv(trace))


def render_comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    body = []
    for row in rows:
        d = row.to_dict()
        body.append(
            [
                v if isinstance(v, str) else (str(v) if isinstance(v, int) else fmt(v))
                for v in (d[col] for col in COMPARISON_COLUMNS)
            ]
        )
    return _csv_text(COMPARISON_COLUMNS, body)


def write_comparison_csv(rows: Sequence[ComparisonRow], path: str | Path) -> Path:
    return atomic_write_text(path, render_comparison_csv(rows))
