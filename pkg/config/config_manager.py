import copy
import json
import logging
import os
from collections import deque
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from core.errors import ScenarioError
from core.scenario_runner import DEFAULT_TOLERANCES
from .validators import ScenarioValidator

# تحميل متغيرات البيئة من ملف .env
load_dotenv()

logger = logging.getLogger(__name__)

ERROR_LOG_SIZE = 100


class ConfigManager:
    """🎯 مدير الإعدادات: قيم البيئة الافتراضية وملفات السيناريو"""

    def __init__(self, env_file: Optional[str] = None):
        if env_file:
            load_dotenv(env_file, override=True)
        self.config: Dict[str, Any] = {}
        self._error_log: deque = deque(maxlen=ERROR_LOG_SIZE)
        self.setup_config()

    def _handle_error(self, error_msg: str, exception: Optional[Exception] = None) -> None:
        """🎯 معالجة موحدة للأخطاء"""
        full_error = f"{error_msg}: {exception}" if exception else error_msg
        logger.error(full_error)
        self._error_log.append(full_error)

    def _get_env_str(self, key: str, default: Optional[str] = None) -> str:
        """قراءة قيمة نصية من البيئة"""
        value = os.getenv(key)
        if value is None or not value.strip():
            if default is not None:
                return default
            raise ValueError(f"❌ المتغير البيئي المطلوب '{key}' غير موجود")
        return value.strip()

    def _get_env_int(self, key: str, default: Optional[int] = None) -> int:
        """قراءة قيمة صحيحة من البيئة"""
        value = os.getenv(key)
        if value is None or not value.strip():
            if default is not None:
                return default
            raise ValueError(f"❌ المتغير البيئي المطلوب '{key}' غير موجود")
        try:
            return int(value.strip())
        except ValueError as e:
            raise ValueError(f"❌ قيمة غير صالحة للمتغير '{key}': {value}") from e

    def _get_env_float(self, key: str, default: Optional[float] = None) -> float:
        """قراءة قيمة عشرية من البيئة"""
        value = os.getenv(key)
        if value is None or not value.strip():
            if default is not None:
                return default
            raise ValueError(f"❌ المتغير البيئي المطلوب '{key}' غير موجود")
        try:
            return float(value.strip())
        except ValueError as e:
            raise ValueError(f"❌ قيمة غير صالحة للمتغير '{key}': {value}") from e

    def _get_env_bool(self, key: str, default: Optional[bool] = None) -> bool:
        """قراءة قيمة منطقية من البيئة"""
        value = os.getenv(key)
        if value is None or not value.strip():
            if default is not None:
                return default
            raise ValueError(f"❌ المتغير البيئي المطلوب '{key}' غير موجود")

        value_str = value.strip().lower()
        if value_str in ['true', '1', 'yes', 'y', 'on']:
            return True
        if value_str in ['false', '0', 'no', 'n', 'off']:
            return False
        raise ValueError(f"❌ قيمة غير صالحة للمتغير '{key}': {value}")

    def setup_config(self) -> None:
        """🎯 تحميل القيم الافتراضية من البيئة"""
        try:
            logger.debug("🔧 تحميل إعدادات البيئة...")
            self.config = {
                'DEBUG': self._get_env_bool('DEBUG', False),
                'LOG_LEVEL': self._get_env_str('LOG_LEVEL', 'INFO').upper(),
                'DEFAULT_GRID': self._get_env_int('DEFAULT_GRID', 48),
                'DEFAULT_SEED': self._get_env_int('DEFAULT_SEED', 0),
                'DEFAULT_THREADS': self._get_env_int('DEFAULT_THREADS', 1),
                'OUTPUT_DIR': self._get_env_str('OUTPUT_DIR', 'reports'),
                'FIT_CONDITION_LIMIT': self._get_env_float('FIT_CONDITION_LIMIT', 1e12),
                'MIN_CUTOFF_EPS': self._get_env_float('MIN_CUTOFF_EPS', 1e-9),
            }
            errors, warnings = ScenarioValidator.validate_environment(self.config)
            for warning in warnings:
                logger.warning(warning)
            if errors:
                raise ValueError(ScenarioValidator.format_validation_report(errors, []))
            logger.debug("✅ تم تحميل إعدادات البيئة")
        except Exception as e:
            self._handle_error("❌ فشل إعداد التكوين", e)
            raise

    def apply_logging_config(self) -> None:
        """🎯 تطبيق مستوى التسجيل المحدد في البيئة"""
        level = getattr(logging, self.config['LOG_LEVEL'], logging.INFO)
        if self.config['DEBUG']:
            level = logging.DEBUG
        logging.getLogger().setLevel(level)
        for name in ('core', 'config', 'reporting', '__main__'):
            logging.getLogger(name).setLevel(level)
        # مكتبات خارجية هادئة خارج وضع التصحيح
        quiet = logging.DEBUG if self.config['DEBUG'] else logging.WARNING
        for name in ('concurrent.futures', 'asyncio'):
            logging.getLogger(name).setLevel(quiet)
        logger.debug(f"✅ تم تطبيق إعدادات التسجيل: DEBUG={self.config['DEBUG']}, "
                     f"LOG_LEVEL={self.config['LOG_LEVEL']}")

    # ------------------------------------------------------------------
    # Scenarios
    # ------------------------------------------------------------------

    def load_scenario(self, path: str) -> Dict[str, Any]:
        """📥 قراءة ملف سيناريو JSON والتحقق منه"""
        try:
            with open(path, encoding='utf-8') as fh:
                scenario = json.load(fh)
        except FileNotFoundError as e:
            self._handle_error(f"❌ ملف السيناريو غير موجود: {path}", e)
            raise ScenarioError(f"❌ ملف السيناريو غير موجود: {path}", {'path': path}) from e
        except json.JSONDecodeError as e:
            self._handle_error(f"❌ JSON غير صالح في {path}", e)
            raise ScenarioError(f"❌ JSON غير صالح في {path}: {e.msg}",
                                {'path': path, 'line': e.lineno, 'column': e.colno}) from e
        self.validate_scenario(scenario, source=path)
        return scenario

    def validate_scenario(self, scenario: Any, source: str = '<memory>') -> None:
        errors, warnings = ScenarioValidator.validate_scenario(scenario)
        if errors or warnings:
            report = ScenarioValidator.format_validation_report(errors, warnings)
            logger.info(f"📋 Scenario Validation Report ({source}):\n{report}")
        if errors:
            for error in errors:
                self._error_log.append(error)
            raise ScenarioError(f"❌ سيناريو غير صالح: {source}", {'errors': errors, 'warnings': warnings})

    def resolve(self, scenario: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        أعلام سطر الأوامر > السيناريو > البيئة
        """
        resolved = copy.deepcopy(scenario)
        for key, value in (overrides or {}).items():
            if value is not None:
                resolved[key] = value
        resolved.setdefault('grid', self.config['DEFAULT_GRID'])
        resolved.setdefault('seed', self.config['DEFAULT_SEED'])
        resolved.setdefault('threads', self.config['DEFAULT_THREADS'])
        resolved.setdefault('output', os.path.join(self.config['OUTPUT_DIR'], f"{resolved['task']}.json"))
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(resolved.get('tolerances') or {})
        resolved['tolerances'] = tolerances
        # الأعلام قد تكسر البنية (مثلاً grid < 2)
        self.validate_scenario(resolved, source='resolved')
        return resolved

    def numeric_settings(self) -> Dict[str, float]:
        return {'condition_limit': self.config['FIT_CONDITION_LIMIT'],
                'min_cutoff_eps': self.config['MIN_CUTOFF_EPS']}

    def display_config(self) -> None:
        """عرض الإعدادات المحملة للتحقق"""
        logger.info("🔧 LOADED CONFIGURATION:")
        for key, value in self.config.items():
            logger.info(f"   • {key}: {value}")

    def get_error_log(self) -> List[str]:
        """الحصول على سجل الأخطاء"""
        return list(self._error_log)

    def clear_error_log(self) -> None:
        """مسح سجل الأخطاء"""
        self._error_log.clear()
