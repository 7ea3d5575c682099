import difflib
import json
import os
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Tuple

from jsonschema import Draft7Validator
from jsonschema.exceptions import ValidationError, best_match

from core import catalog
from core import exprlang as ex
from core.errors import ExprError

SCHEMA_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'scenario_schema.json')

JSON_TYPES = {
    'str': 'string', 'int': 'integer', 'float': 'number', 'bool': 'boolean',
    'list': 'array', 'dict': 'object', 'NoneType': 'null',
}

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')

# مهام تعمل على غمر
IMMERSION_TASKS = ('verify', 'gbc', 'renorm', 'rigidity')


@lru_cache(maxsize=1)
def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH, encoding='utf-8') as fh:
        return json.load(fh)


def json_path(parts: Iterable[Any]) -> str:
    """$.a.b[0] من مسار jsonschema"""
    out = '$'
    for part in parts:
        out += f'[{part}]' if isinstance(part, int) else f'.{part}'
    return out


def _suggest(name: str, choices: Iterable[str]) -> str:
    close = difflib.get_close_matches(name, list(choices), n=3, cutoff=0.5)
    return f" - هل تقصد: {', '.join(close)}؟" if close else ''


class ScenarioValidator:
    """🎯 التحقق من ملفات السيناريو وإعدادات البيئة - يعيد (errors, warnings)"""

    @staticmethod
    def validate_scenario(config: Dict[str, Any]) -> Tuple[List[str], List[str]]:
        """Validate a scenario - RETURNS (errors, warnings)"""
        errors = ScenarioValidator.validate_schema(config)
        warnings: List[str] = []
        # لا فائدة من الفحوصات الدلالية على بنية مكسورة
        if errors:
            return errors, warnings

        catalog_errors, catalog_warnings = ScenarioValidator.validate_catalog_refs(config)
        errors.extend(catalog_errors)
        warnings.extend(catalog_warnings)

        task_errors, task_warnings = ScenarioValidator.validate_task_requirements(config)
        errors.extend(task_errors)
        warnings.extend(task_warnings)

        errors.extend(ScenarioValidator.validate_expressions(config))

        numeric_errors, numeric_warnings = ScenarioValidator.validate_numerics(config)
        errors.extend(numeric_errors)
        warnings.extend(numeric_warnings)
        return errors, warnings

    @staticmethod
    def validate_schema(config: Any) -> List[str]:
        """فحص البنية مقابل scenario_schema.json مع مسار الحقل"""
        validator = Draft7Validator(load_schema())
        found = sorted(validator.iter_errors(config), key=lambda e: [str(p) for p in e.absolute_path])
        return [ScenarioValidator._describe(error) for error in found]

    @staticmethod
    def _describe(error: ValidationError) -> str:
        if error.validator == 'oneOf' and error.context:
            error = best_match(error.context)
        path = json_path(error.absolute_path)
        if error.validator == 'type':
            expected = error.validator_value
            if isinstance(expected, list):
                expected = ' | '.join(expected)
            got = JSON_TYPES.get(type(error.instance).__name__, type(error.instance).__name__)
            return f"❌ {path}: expected {expected}, got {got}"
        if error.validator == 'additionalProperties':
            allowed = list(error.schema.get('properties', {}))
            unknown = sorted(set(error.instance) - set(allowed))
            hints = ''.join(_suggest(key, allowed) for key in unknown)
            return f"❌ {path}: unknown key(s) {unknown}{hints}"
        if error.validator == 'enum':
            hint = _suggest(str(error.instance), [str(v) for v in error.validator_value])
            return f"❌ {path}: '{error.instance}' is not one of {error.validator_value}{hint}"
        return f"❌ {path}: {error.message}"

    @staticmethod
    def validate_catalog_refs(config: Dict[str, Any]) -> Tuple[List[str], List[str]]:
        """أسماء الكتالوج مع اقتراحات عند الخطأ"""
        errors: List[str] = []
        warnings: List[str] = []
        chart_names = list(catalog.CHARTS) + ['canonical_ambient']
        target = config.get('target')
        if isinstance(target, dict) and 'metric' not in target:
            name = target['name']
            if name not in chart_names:
                errors.append(f"❌ $.target.name: unknown chart '{name}'{_suggest(name, chart_names)}")
        immersion = config.get('immersion')
        if isinstance(immersion, dict) and 'components' not in immersion:
            name = immersion['name']
            if name not in catalog.IMMERSIONS:
                errors.append(f"❌ $.immersion.name: unknown immersion '{name}'"
                              f"{_suggest(name, catalog.IMMERSIONS)}")
            if target is not None:
                warnings.append("⚠️ $.target: ignored for catalog immersions (they carry their own target)")
        return errors, warnings

    @staticmethod
    def validate_task_requirements(config: Dict[str, Any]) -> Tuple[List[str], List[str]]:
        errors: List[str] = []
        warnings: List[str] = []
        task = config['task']
        immersion = config.get('immersion')
        if task in IMMERSION_TASKS and immersion is None:
            errors.append(f"❌ $.immersion: required for task '{task}'")
        if task == 'expand' and 'expand' not in config:
            errors.append("❌ $.expand: required for task 'expand'")
        if isinstance(immersion, dict) and 'components' in immersion:
            target = config.get('target')
            if target is None:
                errors.append("❌ $.target: required when the immersion is given by expressions")
            elif 'metric' in target and len(target['metric']) != len(immersion['components']):
                errors.append(f"❌ $.immersion.components: expected {len(target['metric'])} components, "
                              f"got {len(immersion['components'])}")
            if len(immersion['box']) != len(immersion['coordinates']):
                errors.append("❌ $.immersion.box: one interval per coordinate")
            periodic = immersion.get('periodic')
            if periodic is not None and len(periodic) != len(immersion['coordinates']):
                errors.append("❌ $.immersion.periodic: one flag per coordinate")
        target = config.get('target')
        if isinstance(target, dict) and 'metric' in target:
            n = len(target['coordinates'])
            if len(target['metric']) != n or any(len(row) != n for row in target['metric']):
                errors.append(f"❌ $.target.metric: expected a {n}×{n} matrix")
            if len(target['box']) != n:
                errors.append("❌ $.target.box: one interval per coordinate")
        for block in ('verify', 'renorm', 'expand', 'rigidity'):
            if block in config and block != task and not (block == 'renorm' and task == 'gbc'):
                warnings.append(f"⚠️ $.{block}: not used by task '{task}'")
        expand = config.get('expand')
        if expand is not None and expand['n'] <= expand['k']:
            errors.append(f"❌ $.expand.n: must exceed k = {expand['k']}")
        return errors, warnings

    @staticmethod
    def _expressions(config: Dict[str, Any]) -> List[Tuple[str, Any]]:
        found: List[Tuple[str, Any]] = []
        target = config.get('target') or {}
        for i, row in enumerate(target.get('metric', [])):
            found += [(f"$.target.metric[{i}][{j}]", e) for j, e in enumerate(row)]
        immersion = config.get('immersion') or {}
        found += [(f"$.immersion.components[{i}]", e) for i, e in enumerate(immersion.get('components', []))]
        verify = config.get('verify') or {}
        if 'upsilon' in verify:
            found.append(('$.verify.upsilon', verify['upsilon']))
        if 'probe' in verify:
            found.append(('$.verify.probe.u', verify['probe']['u']))
        renorm = config.get('renorm') or {}
        for key in ('integrand', 'defining_fn'):
            if key in renorm and renorm[key] not in ('area', 'willmore'):
                found.append((f"$.renorm.{key}", renorm[key]))
        found += [(f"$.renorm.family[{i}]", e) for i, e in enumerate(renorm.get('family', []))]
        expand = config.get('expand') or {}
        for key in ('boundary', 'free'):
            found += [(f"$.expand.{key}[{i}]", e) for i, e in enumerate(expand.get(key, []))]
        return found

    @staticmethod
    def validate_expressions(config: Dict[str, Any]) -> List[str]:
        """كل تعبير يجب أن يُحلل"""
        errors = []
        for path, text in ScenarioValidator._expressions(config):
            try:
                ex.as_expr(text)
            except ExprError as e:
                errors.append(f"❌ {path}: {e}")
        return errors

    @staticmethod
    def validate_numerics(config: Dict[str, Any]) -> Tuple[List[str], List[str]]:
        errors: List[str] = []
        warnings: List[str] = []
        ladder = config.get('ladder')
        if ladder is not None:
            if len(set(ladder)) != len(ladder):
                errors.append("❌ $.ladder: duplicate cutoff values")
            if any(a <= b for a, b in zip(ladder, ladder[1:])):
                warnings.append("⚠️ $.ladder: not strictly decreasing, it will be sorted")
            if max(ladder) > 0.5:
                warnings.append("⚠️ $.ladder: cutoffs above 0.5 rarely sit in the asymptotic regime")
        for key, value in (config.get('tolerances') or {}).items():
            if value > 1e-1:
                warnings.append(f"⚠️ $.tolerances.{key}: {value} is loose")
        grid = config.get('grid')
        if isinstance(grid, list) and max(grid) > 512:
            warnings.append("⚠️ $.grid: very fine grids are slow")
        return errors, warnings

    @staticmethod
    def validate_environment(env: Dict[str, Any]) -> Tuple[List[str], List[str]]:
        """قيم البيئة الافتراضية"""
        errors: List[str] = []
        warnings: List[str] = []
        if str(env.get('LOG_LEVEL', '')).upper() not in LOG_LEVELS:
            errors.append(f"❌ LOG_LEVEL must be one of {list(LOG_LEVELS)}")
        if env.get('DEFAULT_GRID', 0) < 2:
            errors.append("❌ DEFAULT_GRID must be at least 2")
        if env.get('DEFAULT_THREADS', 0) < 1:
            errors.append("❌ DEFAULT_THREADS must be at least 1")
        if env.get('DEFAULT_SEED', -1) < 0:
            errors.append("❌ DEFAULT_SEED must be non-negative")
        if not 0 < env.get('MIN_CUTOFF_EPS', 0) < 1e-3:
            warnings.append("⚠️ MIN_CUTOFF_EPS outside (0, 1e-3): cut-off columns may not resolve small ε")
        if env.get('FIT_CONDITION_LIMIT', 0) < 1e6:
            warnings.append("⚠️ FIT_CONDITION_LIMIT below 1e6 flags most fits as unreliable")
        return errors, warnings

    @staticmethod
    def format_validation_report(errors: List[str], warnings: List[str]) -> str:
        """Format validation report"""
        if not errors and not warnings:
            return "✅ All scenario validations passed"

        report = []
        if errors:
            report.append("❌ ERRORS:")
            report.extend([f"   {error}" for error in errors])

        if warnings:
            report.append("⚠️ WARNINGS:")
            report.extend([f"   {warning}" for warning in warnings])

        return "\n".join(report)
