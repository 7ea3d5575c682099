# core/__init__.py
"""
📦 الحزمة الأساسية: ثوابت المغمورات التطابقية والمحيط الممتد والتكاملات المنظمة
"""

__version__ = "0.3.0"
__author__ = "Conformal Submanifolds Team"

from .errors import GeometryError, GateError, RenormalizationError, ScenarioError

__all__ = [
    'GeometryError',
    'GateError',
    'RenormalizationError',
    'ScenarioError',
]
