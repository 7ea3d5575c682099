# tests/test_config.py
"""
🧪 اختبار التحقق من السيناريوهات ومدير الإعدادات
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json

import pytest

from config.config_manager import ConfigManager
from config.validators import ScenarioValidator, json_path
from core.errors import ScenarioError

ENV_KEYS = ('DEBUG', 'LOG_LEVEL', 'DEFAULT_GRID', 'DEFAULT_SEED', 'DEFAULT_THREADS', 'OUTPUT_DIR',
            'FIT_CONDITION_LIMIT', 'MIN_CUTOFF_EPS')


@pytest.fixture
def clean_env(monkeypatch):
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    return monkeypatch


def _errors(config):
    errors, _ = ScenarioValidator.validate_scenario(config)
    return errors


def test_valid_scenarios():
    test_cases = [
        {'task': 'verify', 'immersion': {'name': 'clifford_torus'}},
        {'task': 'gbc', 'immersion': {'name': 'generalized_clifford', 'params': {'p': 2, 'q': 2}}, 'grid': 12},
        {'task': 'renorm', 'immersion': {'name': 'totally_geodesic_hyperbolic', 'params': {'k': 2, 'n': 3}},
         'renorm': {'integrand': 'area', 'expected': {'finite_part': -6.283185307179586}}},
        {'task': 'expand', 'expand': {'k': 2, 'n': 3, 'boundary': ['x1^2/2'], 'order': 2}},
        {'task': 'verify', 'target': {'name': 'euclidean', 'params': {'n': 3}},
         'immersion': {'coordinates': ['u', 'v'], 'components': ['u', 'v', '0'], 'box': [[0, 1], [0, 1]]}},
    ]
    for config in test_cases:
        errors, warnings = ScenarioValidator.validate_scenario(config)
        print(f"{'✅' if not errors else '❌'} {config['task']}: {errors}")
        assert errors == [], config


def test_shipped_scenarios_validate(clean_env):
    folder = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')
    manager = ConfigManager()
    names = sorted(f for f in os.listdir(folder) if f.endswith('.json'))
    assert names
    for name in names:
        scenario = manager.load_scenario(os.path.join(folder, name))
        assert scenario['description'], name


def test_schema_errors_name_the_field():
    test_cases = [
        # (scenario, fragment expected in an error)
        ({'task': 'verfy'}, "$.task: 'verfy' is not one of"),
        ({'task': 'verify', 'immersion': {'name': 'clifford_torus'}, 'grdi': 8}, "unknown key(s) ['grdi']"),
        ({'task': 'verify', 'immersion': {'name': 'clifford_torus'}, 'seed': 'zero'}, '$.seed: expected integer'),
        ({'task': 'verify', 'immersion': {'name': 'clifford_torus'}, 'threads': 0}, '$.threads'),
        ({}, "'task' is a required property"),
    ]
    for config, fragment in test_cases:
        errors = _errors(config)
        assert any(fragment in e for e in errors), (fragment, errors)
    assert any('verify' in e for e in _errors({'task': 'verfy'}))
    assert any('grid' in e for e in _errors({'task': 'verify', 'immersion': {'name': 'clifford_torus'},
                                              'grdi': 8}))


def test_semantic_errors():
    test_cases = [
        ({'task': 'verify', 'immersion': {'name': 'cliford_torus'}}, 'clifford_torus'),
        ({'task': 'verify'}, '$.immersion: required'),
        ({'task': 'expand'}, '$.expand: required'),
        ({'task': 'expand', 'expand': {'k': 3, 'n': 3}}, '$.expand.n'),
        ({'task': 'verify', 'immersion': {'name': 'clifford_torus'}, 'verify': {'upsilon': '1 +'}},
         '$.verify.upsilon'),
        ({'task': 'verify', 'target': {'coordinates': ['x'], 'metric': [['1']], 'box': [[0, 1]]},
          'immersion': {'coordinates': ['u'], 'components': ['u', 'u'], 'box': [[0, 1]]}},
         '$.immersion.components'),
        ({'task': 'verify', 'immersion': {'coordinates': ['u'], 'components': ['u'], 'box': [[0, 1]]}},
         '$.target: required'),
        ({'task': 'renorm', 'immersion': {'name': 'clifford_torus'}, 'ladder': [0.2, 0.1, 0.1]}, '$.ladder'),
    ]
    for config, fragment in test_cases:
        errors = _errors(config)
        assert any(fragment in e for e in errors), (fragment, errors)


def test_warnings_do_not_block():
    config = {'task': 'verify', 'immersion': {'name': 'clifford_torus'},
              'target': {'name': 'round_sphere', 'params': {'n': 3}},
              'renorm': {'integrand': 'area'}, 'ladder': [0.1, 0.2, 0.05, 0.01]}
    errors, warnings = ScenarioValidator.validate_scenario(config)
    assert errors == []
    assert any('$.target' in w for w in warnings)
    assert any('$.renorm' in w for w in warnings)
    assert any('$.ladder' in w for w in warnings)
    report = ScenarioValidator.format_validation_report(errors, warnings)
    assert report.startswith('⚠️ WARNINGS:')
    assert ScenarioValidator.format_validation_report([], []) == "✅ All scenario validations passed"


def test_json_path():
    assert json_path([]) == '$'
    assert json_path(['target', 'metric', 0, 1]) == '$.target.metric[0][1]'


def test_environment_defaults(clean_env):
    manager = ConfigManager()
    assert manager.config['DEFAULT_GRID'] == 48
    assert manager.config['LOG_LEVEL'] == 'INFO'
    assert manager.config['DEBUG'] is False
    assert manager.numeric_settings() == {'condition_limit': 1e12, 'min_cutoff_eps': 1e-9}


def test_environment_overrides_and_errors(clean_env):
    clean_env.setenv('DEFAULT_GRID', '16')
    clean_env.setenv('DEBUG', 'yes')
    clean_env.setenv('LOG_LEVEL', 'warning')
    manager = ConfigManager()
    assert manager.config['DEFAULT_GRID'] == 16
    assert manager.config['DEBUG'] is True
    assert manager.config['LOG_LEVEL'] == 'WARNING'

    test_cases = [
        ('DEFAULT_GRID', 'many'),
        ('DEFAULT_GRID', '1'),
        ('DEBUG', 'perhaps'),
        ('LOG_LEVEL', 'LOUD'),
        ('DEFAULT_THREADS', '0'),
    ]
    for key, value in test_cases:
        clean_env.setenv(key, value)
        with pytest.raises(ValueError):
            ConfigManager()
        clean_env.delenv(key)


def test_load_scenario_errors(clean_env, tmp_path):
    manager = ConfigManager()
    with pytest.raises(ScenarioError):
        manager.load_scenario(str(tmp_path / 'missing.json'))
    broken = tmp_path / 'broken.json'
    broken.write_text('{"task": "verify",\n  "immersion": }', encoding='utf-8')
    with pytest.raises(ScenarioError) as info:
        manager.load_scenario(str(broken))
    assert info.value.details['line'] == 2
    invalid = tmp_path / 'invalid.json'
    invalid.write_text(json.dumps({'task': 'verify'}), encoding='utf-8')
    with pytest.raises(ScenarioError) as info:
        manager.load_scenario(str(invalid))
    assert info.value.details['errors']
    assert manager.get_error_log()
    manager.clear_error_log()
    assert manager.get_error_log() == []


def test_resolve_precedence(clean_env, tmp_path):
    clean_env.setenv('DEFAULT_GRID', '20')
    clean_env.setenv('OUTPUT_DIR', str(tmp_path))
    manager = ConfigManager()
    scenario = {'task': 'gbc', 'immersion': {'name': 'clifford_torus'}, 'grid': 12,
                'tolerances': {'gbc': 1e-3}}
    resolved = manager.resolve(scenario, {'grid': None, 'seed': 7, 'threads': 2})
    assert resolved['grid'] == 12
    assert resolved['seed'] == 7
    assert resolved['threads'] == 2
    assert resolved['output'] == os.path.join(str(tmp_path), 'gbc.json')
    assert resolved['tolerances']['gbc'] == 1e-3
    assert resolved['tolerances']['pointwise'] == 1e-6
    # the scenario itself is left untouched
    assert 'seed' not in scenario
    assert manager.resolve({'task': 'gbc', 'immersion': {'name': 'clifford_torus'}})['grid'] == 20
    with pytest.raises(ScenarioError):
        manager.resolve(scenario, {'grid': 1})


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
