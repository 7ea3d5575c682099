"""
📊 تقرير السيناريو: فحوصات فردية مع القيم والبواقي والتسامحات
"""

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from core.errors import GeometryError
from utils.time_utils import report_clock

logger = logging.getLogger(__name__)


def jsonable(value: Any) -> Any:
    """تحويل قيم numpy والكسور والأعداد غير المنتهية إلى JSON صالح"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if hasattr(value, 'numerator') and hasattr(value, 'denominator') and not isinstance(value, int):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else int(value.numerator)
    if hasattr(value, 'to_dict'):
        return jsonable(value.to_dict())
    return value


@dataclass
class CheckResult:
    """✅/❌ فحص واحد"""

    name: str
    passed: bool
    values: Dict[str, Any] = field(default_factory=dict)
    residual: Optional[float] = None
    tolerance: Optional[float] = None
    error: Optional[Dict[str, Any]] = None

    @classmethod
    def against(cls, name: str, residual: float, tolerance: float, **values: Any) -> 'CheckResult':
        residual = float(residual)
        passed = math.isfinite(residual) and residual <= tolerance
        return cls(name, passed, values, residual, tolerance)

    @classmethod
    def failure(cls, name: str, exc: Exception) -> 'CheckResult':
        """فشل بوابة أو خطأ هندسي يصبح مدخلاً في التقرير"""
        if isinstance(exc, GeometryError):
            error = exc.to_dict()
        else:
            error = {'error': type(exc).__name__, 'message': str(exc), 'details': {}}
        return cls(name, False, error=error)

    def to_dict(self) -> Dict[str, Any]:
        data = {'name': self.name, 'passed': self.passed, 'values': jsonable(self.values),
                'residual': jsonable(self.residual), 'tolerance': self.tolerance}
        if self.error is not None:
            data['error'] = jsonable(self.error)
        return data


@dataclass
class Report:
    """📊 نتيجة تشغيل سيناريو واحد"""

    task: str
    config: Dict[str, Any]
    version: str
    checks: List[CheckResult] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, float]]] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    generated_at: str = field(default_factory=report_clock.isoformat)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        status = "✅" if check.passed else "❌"
        if check.residual is not None:
            logger.info(f"{status} {check.name}: residual={check.residual:.3e} (tol {check.tolerance:g})")
        elif check.error is not None:
            logger.warning(f"{status} {check.name}: {check.error.get('message')}")
        else:
            logger.info(f"{status} {check.name}")
        return check

    def add_table(self, name: str, rows: List[Dict[str, float]]) -> None:
        self.tables[name] = [dict(r) for r in rows]

    def summary(self) -> Dict[str, int]:
        return {'total': len(self.checks), 'passed': sum(c.passed for c in self.checks),
                'failed': len(self.failed)}

    def to_dict(self, include_volatile: bool = True) -> Dict[str, Any]:
        data = {
            'task': self.task,
            'version': self.version,
            'config': jsonable(self.config),
            'passed': self.passed,
            'summary': self.summary(),
            'checks': [c.to_dict() for c in self.checks],
            'tables': jsonable(self.tables),
        }
        if include_volatile:
            # everything that differs between identical runs lives under 'run'
            data['run'] = {'generated_at': self.generated_at, 'timings': dict(self.timings)}
        return data

    def to_json(self, include_volatile: bool = True) -> str:
        return json.dumps(self.to_dict(include_volatile), indent=2, sort_keys=True, ensure_ascii=False)

    def write_json(self, path: str, include_volatile: bool = True) -> str:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(self.to_json(include_volatile))
            fh.write('\n')
        logger.info(f"💾 تم حفظ التقرير: {path}")
        return path

    def write_csv_tables(self, directory: str) -> List[str]:
        """جداول (ε, value) بجانب التقرير، ملف لكل جدول"""
        written = []
        if not self.tables:
            return written
        os.makedirs(directory, exist_ok=True)
        for name, rows in self.tables.items():
            if not rows:
                continue
            path = os.path.join(directory, f"{name}.csv")
            with open(path, 'w', newline='', encoding='utf-8') as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
                writer.writeheader()
                writer.writerows(rows)
            written.append(path)
        if written:
            logger.info(f"💾 تم حفظ {len(written)} جدول CSV في {directory}")
        return written
