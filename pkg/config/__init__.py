# config/__init__.py
"""
📦 حزمة إعدادات السيناريوهات
"""

from .config_manager import DEFAULT_TOLERANCES, ConfigManager
from .validators import ScenarioValidator

__all__ = ['ConfigManager', 'ScenarioValidator', 'DEFAULT_TOLERANCES']
