"""Tests for the declarative JSON forms."""

import json
import math

import numpy as np
import pytest

from ishikawa_ep import (
    AffineVI,
    Ball,
    Box,
    Composite,
    ConfigError,
    Constant,
    ConvexGap,
    CustomBifunction,
    Formula,
    Intersection,
    NormSquare,
    OperatorClass,
    ProjectedFixedPoint,
    Rotation,
    UnsupportedParameterError,
    WholeSpace,
    ZeroBifunction,
)
from ishikawa_ep.serialization import (
    bifunction_check_from_config,
    bifunction_from_config,
    bifunction_to_config,
    experiment_from_config,
    experiment_to_config,
    load_json,
    mapping_check_from_config,
    mapping_from_config,
    operator_class_from_config,
    problem_from_config,
    resolvent_spec_from_config,
    schedule_from_config,
    sequence_from_config,
    set_from_config,
    set_to_config,
    strategy_from_config,
)

ROTATION_EXPERIMENT = {
    'problem': {
        'E': {'kind': 'Ball', 'center': [0, 0], 'radius': 1},
        'S': {
            'kind': 'Rotation',
            'domain': {'kind': 'WholeSpace', 'dim': 2},
            'center': [0, 0],
            'angle': math.pi / 2,
        },
        'f': {'family': 'Zero'},
        'known_solution': [0, 0],
        'known_solution_set': {'kind': 'Singleton', 'point': [0, 0]},
    },
    'scheme': 'modified_ishikawa',
    'schedule': {'alpha': 0.5, 'beta': {'constant': 0.5}, 'r': 1},
    'stop': {'max_iter': 500, 'residual_tol': 1e-8},
    'x1': [1, 0],
}


@pytest.mark.unit
class TestSets:
    """Set forms."""

    def test_ball(self):
        s = set_from_config({'kind': 'Ball', 'center': [1, 2], 'radius': 3})
        assert isinstance(s, Ball)
        np.testing.assert_array_equal(s.center, [1.0, 2.0])
        assert s.radius == 3.0

    def test_intersection_carries_solver_settings(self):
        s = set_from_config(
            {
                'kind': 'Intersection',
                'sets': [
                    {'kind': 'Box', 'lower': [0, 0], 'upper': [1, 1]},
                    {'kind': 'Halfspace', 'normal': [1, 1], 'offset': 1},
                ],
                'max_iter': 50,
            }
        )
        assert isinstance(s, Intersection)
        assert s.max_iter == 50
        assert isinstance(s.sets[0], Box)

    def test_to_config_is_json(self):
        s = Intersection([Box([0.0], [1.0]), Ball([0.5], 0.25)])
        data = set_to_config(s)
        assert json.loads(json.dumps(data)) == data
        assert data['sets'][1] == {'kind': 'Ball', 'center': [0.5], 'radius': 0.25}

    def test_unsupported_key(self):
        with pytest.raises(UnsupportedParameterError, match='Unsupported parameter provided: foo'):
            set_from_config({'kind': 'Ball', 'center': [0], 'radius': 1, 'foo': 1})

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match='Unknown set kind'):
            set_from_config({'kind': 'Torus'})

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="missing required key 'radius'"):
            set_from_config({'kind': 'Ball', 'center': [0]})

    def test_not_an_object(self):
        with pytest.raises(ConfigError, match="needs a 'kind' field"):
            set_from_config([1, 2])

    def test_mistyped_value(self):
        with pytest.raises(ConfigError, match='set Ball has an invalid value') as excinfo:
            set_from_config({'kind': 'Ball', 'center': [0], 'radius': 'abc'})
        assert isinstance(excinfo.value.__cause__, ValueError)


@pytest.mark.unit
class TestMappingsAndBifunctions:
    """Mapping and bifunction forms."""

    def test_domain_defaults_to_caller(self):
        E = WholeSpace(2)
        m = mapping_from_config({'kind': 'Rotation', 'center': [0, 0], 'angle': 1.0}, E)
        assert isinstance(m, Rotation)
        assert m.domain is E

    def test_domain_required_without_default(self):
        with pytest.raises(ConfigError, match='needs a domain'):
            mapping_from_config({'kind': 'Identity'})

    def test_composite_members_inherit_domain(self):
        m = mapping_from_config(
            {
                'kind': 'Composite',
                'domain': {'kind': 'WholeSpace', 'dim': 1},
                'mappings': [
                    {'kind': 'ScaledReflection', 'center': [0], 'factor': 0.5},
                    {'kind': 'Identity'},
                ],
            }
        )
        assert isinstance(m, Composite)
        assert all(member.domain == m.domain for member in m.mappings)

    def test_claimed_class_pair(self):
        m = mapping_from_config({'kind': 'Identity', 'claimed_class': [1, 0]}, WholeSpace(1))
        assert m.claimed_class == (1.0, 0.0)

    def test_bifunction_families(self):
        E = Box([0.0], [1.0])
        assert isinstance(bifunction_from_config({'family': 'Zero'}, E), ZeroBifunction)
        vi = bifunction_from_config({'family': 'AffineVI', 'matrix': [[1]], 'offset': [-0.3]}, E)
        assert isinstance(vi, AffineVI)
        gap = bifunction_from_config(
            {'family': 'ConvexGap', 'g': {'kind': 'norm-square', 'dim': 1}}, E
        )
        assert isinstance(gap, ConvexGap)
        assert isinstance(gap.g, NormSquare)
        assert gap.g.weight == 0.5

    def test_bifunction_to_config(self):
        E = Box([0.0], [1.0])
        data = bifunction_to_config(AffineVI(domain=E, matrix=[[1.0]], offset=[-0.3]))
        assert data == {
            'family': 'AffineVI',
            'domain': {'kind': 'Box', 'lower': [0.0], 'upper': [1.0]},
            'matrix': [[1.0]],
            'offset': [-0.3],
        }

    def test_custom_bifunction_has_no_form(self):
        f = CustomBifunction(domain=WholeSpace(1), evaluator=lambda x, y: 0.0, name='mine')
        with pytest.raises(ConfigError, match='mine'):
            bifunction_to_config(f)

    def test_bifunction_key_is_family(self):
        with pytest.raises(ConfigError, match="needs a 'family' field"):
            bifunction_from_config({'kind': 'Zero'}, WholeSpace(1))

    def test_strategy_forms(self):
        assert strategy_from_config('ClosedFormLinear').name == 'ClosedFormLinear'
        s = strategy_from_config({'name': 'ProjectedFixedPoint', 'max_iter': 5})
        assert isinstance(s, ProjectedFixedPoint)
        assert s.max_iter == 5
        with pytest.raises(UnsupportedParameterError, match='Unsupported parameter provided: gamma'):
            strategy_from_config({'name': 'ProxGradient', 'gamma': 1})
        with pytest.raises(ConfigError, match='invalid value'):
            strategy_from_config({'name': 'ProxGradient', 'step': [0.1]})

    def test_mistyped_mapping_value(self):
        with pytest.raises(ConfigError, match='mapping Rotation has an invalid value') as excinfo:
            mapping_from_config(
                {'kind': 'Rotation', 'domain': {'kind': 'WholeSpace', 'dim': 2}, 'center': [0, 0], 'angle': [1, 2]}
            )
        assert isinstance(excinfo.value.__cause__, TypeError)


@pytest.mark.unit
class TestSchedulesAndProblems:
    """Sequences, schedules, problems and experiments."""

    @pytest.mark.parametrize(
        ('data', 'expected'),
        [
            (0.25, Constant(0.25)),
            (1, Constant(1.0)),
            ({'constant': 0.5}, Constant(0.5)),
            ({'formula': 'inverse_power', 'params': {'power': 2}}, Formula('inverse_power', {'power': 2.0})),
        ],
    )
    def test_sequence_forms(self, data, expected):
        assert sequence_from_config(data) == expected

    def test_constant_takes_no_other_keys(self):
        with pytest.raises(ConfigError, match='no other keys'):
            sequence_from_config({'constant': 0.5, 'params': {}})

    def test_boolean_is_not_a_number(self):
        with pytest.raises(ConfigError):
            sequence_from_config(True)

    def test_schedule_bounds(self):
        s = schedule_from_config({'alpha': 0.5, 'bounds': {'r_low': 0.1}})
        assert s.bounds.r_low == 0.1
        assert s.bounds.beta_high == 0.99
        with pytest.raises(UnsupportedParameterError):
            schedule_from_config({'bounds': {'gamma_low': 0.1}})

    def test_problem(self, rotation_problem):
        problem = problem_from_config(ROTATION_EXPERIMENT['problem'])
        assert problem.dim == 2
        assert problem.S.domain == WholeSpace(2)
        assert problem.f.domain == problem.E
        np.testing.assert_array_equal(problem.known_solution, rotation_problem.known_solution)

    def test_problem_requires_S(self):
        with pytest.raises(ConfigError, match="missing required key 'S'"):
            problem_from_config({'E': {'kind': 'WholeSpace', 'dim': 1}, 'f': {'family': 'Zero'}})

    def test_experiment(self):
        spec = experiment_from_config(ROTATION_EXPERIMENT)
        assert spec.scheme == 'modified_ishikawa'
        assert spec.stop.max_iter == 500
        assert spec.outputs == ('trace-csv',)
        np.testing.assert_array_equal(spec.x1, [1.0, 0.0])

    def test_experiment_needs_a_scheme(self):
        data = {k: v for k, v in ROTATION_EXPERIMENT.items() if k != 'scheme'}
        with pytest.raises(ConfigError, match='"scheme" or "schemes"'):
            experiment_from_config(data)

    def test_unknown_output(self):
        with pytest.raises(ConfigError, match='unknown output'):
            experiment_from_config({**ROTATION_EXPERIMENT, 'outputs': ['trace-xml']})

    def test_with_overrides(self):
        spec = experiment_from_config(ROTATION_EXPERIMENT)
        changed = spec.with_overrides(seed=7, max_iter=3)
        assert changed.seed == 7
        assert changed.stop.max_iter == 3
        assert changed.stop.residual_tol == 1e-8
        assert spec.stop.max_iter == 500
        assert changed.with_overrides().seed == 7

    def test_experiment_to_config_reloads(self):
        spec = experiment_from_config({**ROTATION_EXPERIMENT, 'thin': True})
        data = json.loads(json.dumps(experiment_to_config(spec)))
        again = experiment_from_config(data)
        assert again.thin
        assert again.schedule == spec.schedule
        assert again.problem == spec.problem


@pytest.mark.unit
class TestCheckerSpecs:
    """Checker and resolvent request forms."""

    def test_mapping_check_classes(self):
        spec = mapping_check_from_config(
            {
                'mapping': {
                    'kind': 'Rotation',
                    'domain': {'kind': 'WholeSpace', 'dim': 2},
                    'center': [0, 0],
                    'angle': 1.0,
                },
                'classes': ['nonexpansive', [1, 0.5], 'generalized-hybrid(2, 1)'],
                'n_pairs': 10,
            }
        )
        assert spec.classes == (
            OperatorClass('nonexpansive'),
            OperatorClass.generalized_hybrid(1.0, 0.5),
            OperatorClass.generalized_hybrid(2.0, 1.0),
        )
        assert spec.n_pairs == 10

    def test_single_class_string(self):
        spec = mapping_check_from_config(
            {'mapping': {'kind': 'Identity', 'domain': {'kind': 'WholeSpace', 'dim': 1}}, 'classes': 'hybrid'}
        )
        assert spec.classes == (OperatorClass('hybrid'),)

    def test_bad_class(self):
        with pytest.raises(ConfigError, match='operator class'):
            operator_class_from_config([1, 2, 3])

    def test_bifunction_check(self):
        spec = bifunction_check_from_config(
            {'bifunction': {'family': 'Zero', 'domain': {'kind': 'WholeSpace', 'dim': 1}}, 't_grid': [0.5]}
        )
        assert spec.t_grid == (0.5,)
        assert spec.n_samples == 256

    def test_resolvent_spec(self):
        spec = resolvent_spec_from_config(
            {
                'bifunction': {'family': 'Zero'},
                'E': {'kind': 'Ball', 'center': [0, 0], 'radius': 1},
                'strategy': 'Auto',
            }
        )
        assert spec.bifunction.domain == spec.E
        assert spec.r is None
        assert spec.x is None


@pytest.mark.unit
class TestLoadJson:
    """Spec file loading."""

    def test_reads_object(self, tmp_path):
        path = tmp_path / 'spec.json'
        path.write_text(json.dumps(ROTATION_EXPERIMENT), encoding='utf-8')
        assert load_json(path) == ROTATION_EXPERIMENT

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match='cannot read spec file'):
            load_json(tmp_path / 'absent.json')

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"problem": ', encoding='utf-8')
        with pytest.raises(ConfigError, match='invalid JSON at line 1'):
            load_json(path)
