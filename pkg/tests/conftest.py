"""Pytest configuration and shared problems for ishikawa-ep tests.

Three small problems cover the main code paths:

- ``rotation_problem``: E = Ball(0, 1), S a quarter turn about 0, f ≡ 0, q = 0.
- ``affine_vi_problem``: E = [0, 1], f(x, y) = (x − 0.3)(y − x), S = Identity, q = 0.3.
- ``combined_problem``: E = R, f(x, y) = x(y − x), Sx = −x/2, q = 0.
"""

import math

import numpy as np
import pytest

from ishikawa_ep import (
    AffineVI,
    Ball,
    Box,
    Constant,
    Identity,
    Problem,
    Rotation,
    ScaledReflection,
    Schedule,
    Singleton,
    StopRule,
    Trace,
    TraceRecord,
    WholeSpace,
    ZeroBifunction,
    registry,
)
from ishikawa_ep.registry import _reset_plugins_for_tests


@pytest.fixture(autouse=True)
def _no_scheme_plugins(monkeypatch):
    """Keep installed entry points out of scheme lookups."""
    monkeypatch.setattr(registry.metadata, 'entry_points', lambda **_: [])
    _reset_plugins_for_tests()
    yield
    _reset_plugins_for_tests()


@pytest.fixture
def rotation_problem():
    E = Ball([0.0, 0.0], 1.0)
    return Problem(
        E=E,
        S=Rotation(domain=WholeSpace(2), center=[0.0, 0.0], angle=math.pi / 2),
        f=ZeroBifunction(domain=E),
        known_solution=np.zeros(2),
        known_solution_set=Singleton([0.0, 0.0]),
    )


@pytest.fixture
def affine_vi_problem():
    E = Box([0.0], [1.0])
    return Problem(
        E=E,
        S=Identity(domain=E),
        f=AffineVI(domain=E, matrix=[[1.0]], offset=[-0.3]),
        known_solution=[0.3],
    )


@pytest.fixture
def combined_problem():
    E = WholeSpace(1)
    return Problem(
        E=E,
        S=ScaledReflection(domain=E, center=[0.0], factor=0.5),
        f=AffineVI(domain=E, matrix=[[1.0]], offset=[0.0]),
        known_solution=[0.0],
        known_solution_set=Singleton([0.0]),
    )


@pytest.fixture
def half_schedule():
    """αₙ = βₙ = 0.5, rₙ = 1."""
    return Schedule(alpha=Constant(0.5), beta=Constant(0.5), r=Constant(1.0))


@pytest.fixture
def tight_stop():
    return StopRule(max_iter=500, residual_tol=1e-8)


def make_trace(points, scheme='synthetic', residuals=None):
    """A trace whose xₙ = uₙ = yₙ are ``points``; residuals default to ||xₙ||."""
    pts = [np.asarray(p, dtype=np.float64).reshape(-1) for p in points]
    trace = Trace(scheme=scheme, dim=pts[0].shape[0])
    for n, x in enumerate(pts, start=1):
        x.setflags(write=False)
        res = residuals[n - 1] if residuals is not None else float(np.linalg.norm(x))
        trace.records.append(
            TraceRecord(
                n=n,
                x=x,
                u=x,
                y=x,
                alpha=0.5,
                beta=0.5,
                r=1.0,
                res_x_Su=res,
                res_y_x=res,
                res_x_u=res,
                res_u_Su=res,
                dist_q=float(np.linalg.norm(x)),
            )
        )
    trace.final_x = pts[-1]
    return trace


@pytest.fixture
def trace_factory():
    return make_trace
