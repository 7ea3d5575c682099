# tests/test_scenario_runner.py
"""
🧪 اختبار منفذ السيناريوهات والتقارير: كل مهمة من الإعدادات حتى الفحوصات
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
import math

import pytest

from core import scenario_runner
from core.errors import ScenarioError
from core.functionals import RigidityReport
from core.scenario_runner import ScenarioRunner, build_immersion, build_invariant, run

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')


def _names(report):
    return {check.name for check in report.checks}


def test_verify_minimal_torus_runs_every_applicable_check():
    report = run({'task': 'verify', 'immersion': {'name': 'clifford_torus'}, 'grid': 8, 'seed': 1,
                  'verify': {'points': 6, 'expected': {'second_squared': 2.0, 'intrinsic_scalar': 0.0},
                             'probe': {'u': 'cos(u1)', 'w': -2}}})
    names = _names(report)
    assert 'gauss_weyl_residual' not in names
    for expected in ('gauss_residual', 'mean_curvature', 'expected_second_squared',
                     'expected_intrinsic_scalar', 'einstein_residual', 'pfaffian_decomposition',
                     'ambient_pullback', 'ambient_mean_curvature', 'ambient_ricci', 'tau_power_laplacian',
                     'ambient_laplacian'):
        assert expected in names, expected
    for check in report.checks:
        print(f"{'✅' if check.passed else '❌'} {check.name}: {check.residual}")
    assert report.passed


def test_verify_non_minimal_sphere_skips_ambient_checks():
    report = run({'task': 'verify', 'immersion': {'name': 'sphere_in_euclidean', 'params': {'k': 2}},
                  'verify': {'points': 4, 'expected': {'mean_curvature_squared': 1.0},
                             'upsilon': '0.2*x1'}})
    names = _names(report)
    assert 'ambient_pullback' not in names
    assert 'mean_curvature' not in names
    assert 'conformal_covariance' in names
    assert report.passed

    failing = run({'task': 'verify', 'immersion': {'name': 'sphere_in_euclidean', 'params': {'k': 2}},
                   'verify': {'points': 4, 'checks': ['mean_curvature']}})
    assert not failing.passed
    assert failing.failed[0].values['max_norm'] == pytest.approx(1.0)


def test_geometry_errors_become_failed_checks():
    report = run({'task': 'verify', 'immersion': {'name': 'no_such_immersion'}})
    assert not report.passed
    failure = report.failed[0]
    assert failure.name == 'build_immersion'
    assert failure.error['error'] == 'ImmersionError'

    unknown_field = run({'task': 'verify', 'immersion': {'name': 'clifford_torus'},
                         'verify': {'points': 2, 'checks': ['expected'], 'expected': {'colour': 1.0}}})
    assert unknown_field.failed[0].error['error'] == 'ScenarioError'


def test_expression_immersion_from_scenario():
    config = {'task': 'verify',
              'target': {'name': 'euclidean', 'params': {'n': 3}},
              'immersion': {'name': 'plane', 'coordinates': ['u', 'v'], 'components': ['u', 'v', '0'],
                            'box': [[0, 1], [0, 1]], 'info': {'minimal': True, 'einstein_lambda': 0.0}}}
    imm = build_immersion(config)
    assert imm.name == 'plane'
    assert imm.info.minimal
    with pytest.raises(ScenarioError):
        build_immersion({'task': 'verify'})
    report = run(dict(config, verify={'points': 4, 'checks': ['gauss', 'mean_curvature', 'einstein']}))
    assert report.passed


def test_invariant_block():
    assert build_invariant({'task': 'verify'}) is None
    spec = build_invariant({'task': 'verify', 'invariant': {'preset': 'L2ell', 'c': 1, 'ell': 2}})
    assert spec.weight == -4 and spec.c == 1


def test_compact_gbc_task():
    report = run({'task': 'gbc', 'immersion': {'name': 'clifford_torus'}, 'grid': 12})
    assert _names(report) == {'gbc_identity', 'gbc_euler_characteristic'}
    assert report.passed


def test_renorm_task_on_hyperbolic_plane():
    report = run({'task': 'renorm', 'immersion': {'name': 'totally_geodesic_hyperbolic', 'params': {'k': 2, 'n': 3}},
                  'grid': 24, 'tolerances': {'renorm': 1e-3},
                  'renorm': {'integrand': 'area', 'defining_fn': 'rho*(1 + rho^2/8)',
                             'expected': {'finite_part': -2.0 * math.pi}}})
    assert {'fit_reliable', 'finite_part', 'defining_function_parity'} <= _names(report)
    assert len(report.tables['renorm_samples']) == 8
    assert report.passed


def test_renorm_ladder_below_cutoff_floor_fails_cleanly():
    runner = ScenarioRunner({'task': 'renorm', 'grid': 8,
                             'immersion': {'name': 'totally_geodesic_hyperbolic', 'params': {'k': 2, 'n': 3}}},
                            settings={'min_cutoff_eps': 0.01})
    report = runner.run()
    assert not report.passed
    assert report.failed[0].error['error'] == 'CutoffError'


def test_expand_task():
    report = run({'task': 'expand', 'expand': {'k': 3, 'n': 4, 'boundary': ['0'], 'expected_obstruction_zero': True}})
    assert _names(report) == {'minimal_expansion', 'obstruction'}
    assert report.passed
    ansatz = report.checks[0].values['ansatz']
    assert ansatz['k'] == 3


def test_rigidity_task():
    report = run({'task': 'rigidity', 'immersion': {'name': 'clifford_torus'}, 'grid': 12})
    assert {'rigidity_identity', 'rigidity_inequalities', 'einstein_gap_pointwise'} <= _names(report)
    assert report.passed


def _shipped(name):
    path = os.path.join(SCENARIO_DIR, f"{name}.json")
    with open(path, encoding='utf-8') as fh:
        return json.load(fh)


def test_shipped_clifford_scenario_passes():
    report = run(_shipped('clifford_verify'))
    names = _names(report)
    assert 'gauss_weyl_residual' not in names
    assert 'gauss_residual' in names
    for check in report.checks:
        print(f"{'✅' if check.passed else '❌'} {check.name}: {check.residual}")
    assert report.passed


def test_shipped_s2xs2_rigidity_reports_gaps_without_judging_them():
    """λ = 1: الفجوات معلوماتية فقط، وفجوة totally_geodesic_l1 سالبة"""
    report = run(_shipped('s2xs2_rigidity'))
    inequalities = next(c for c in report.checks if c.name == 'rigidity_inequalities')
    assert inequalities.passed
    assert inequalities.values['assessed'] is False
    assert inequalities.values['violations'] == {}
    assert inequalities.values['gaps']['totally_geodesic_l1'] < 0
    assert report.passed


def test_negative_gap_fails_only_for_negative_lambda(monkeypatch):
    for lam, passed in ((-1.0, False), (1.0, True)):
        fake = RigidityReport(2, 3, lam, {1: -2.0}, {1: -2.0}, {1: 2.0}, gaps={'totally_geodesic_l1': -2.0})
        monkeypatch.setattr(scenario_runner, 'rigidity_functionals', lambda *args, rep=fake, **kwargs: rep)
        report = run({'task': 'rigidity', 'immersion': {'name': 'clifford_torus'}})
        inequalities = next(c for c in report.checks if c.name == 'rigidity_inequalities')
        assert inequalities.passed is passed, lam
        assert inequalities.values['assessed'] is (lam < 0)
        if not passed:
            assert inequalities.values['violations'] == {'totally_geodesic_l1': -2.0}


def test_unknown_task_raises():
    with pytest.raises(ScenarioError):
        ScenarioRunner({'task': 'bogus'}).run()


def test_report_serialisation(tmp_path):
    report = run({'task': 'expand', 'expand': {'k': 2, 'n': 3}})
    stable = report.to_dict(include_volatile=False)
    assert 'run' not in stable and 'timings' not in stable and 'generated_at' not in stable
    assert stable['summary'] == {'total': 1, 'passed': 1, 'failed': 0}
    path = report.write_json(str(tmp_path / 'out' / 'report.json'))
    with open(path, encoding='utf-8') as fh:
        data = json.load(fh)
    assert data['task'] == 'expand'
    assert 'total' in data['run']['timings']
    assert 'generated_at' in data['run'] and 'generated_at' not in data
    assert report.write_csv_tables(str(tmp_path / 'tables')) == []


def test_identical_runs_write_identical_stable_reports(tmp_path):
    config = {'task': 'expand', 'expand': {'k': 2, 'n': 3, 'boundary': ['x1^2/2']}}
    paths = [run(dict(config)).write_json(str(tmp_path / f"report_{i}.json"), include_volatile=False)
             for i in range(2)]
    contents = []
    for path in paths:
        with open(path, 'rb') as fh:
            contents.append(fh.read())
    assert contents[0] == contents[1]
    assert b'generated_at' not in contents[0]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
