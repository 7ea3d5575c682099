# reporting/__init__.py
"""
📦 حزمة تقارير السيناريوهات
"""

from .report import CheckResult, Report
from .report_formatter import ReportFormatter

__all__ = ['CheckResult', 'Report', 'ReportFormatter']
