#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from typing import Dict, List, Optional

from .report import CheckResult, Report


class ReportFormatter:
    """🎯 تنسيق التقارير للطرفية بنفس إطار الرسائل"""

    WIDTH = 20

    @staticmethod
    def _value(value) -> str:
        if isinstance(value, float):
            return f"{value:.10g}"
        if isinstance(value, dict):
            return ', '.join(f"{k}={ReportFormatter._value(v)}" for k, v in value.items())
        return str(value)

    @staticmethod
    def format_check(check: CheckResult) -> List[str]:
        icon = '✅' if check.passed else '❌'
        lines = [f"┃ {icon} {check.name}"]
        if check.residual is not None:
            lines.append(f"┃    • الباقي: {check.residual:.3e} (التسامح {check.tolerance:g})")
        for key, value in check.values.items():
            if isinstance(value, (list, dict)) and len(str(value)) > 120:
                continue
            lines.append(f"┃    • {key}: {ReportFormatter._value(value)}")
        if check.error is not None:
            lines.append(f"┃    ⚠️ {check.error.get('error')}: {check.error.get('message')}")
        return lines

    @staticmethod
    def format_report(report: Report, output_path: Optional[str] = None) -> str:
        """📊 ملخص نصي للتقرير"""
        summary = report.summary()
        status = '🟢 نجحت جميع الفحوصات' if report.passed else '🔴 توجد فحوصات فاشلة'
        bar = '━' * ReportFormatter.WIDTH
        lines = [
            f"✦✦✦ 📊 تقرير المهمة: {report.task} ✦✦✦",
            f"┏{bar}",
            f"┃ 🕐 الوقت: {report.generated_at}",
            f"┃ 📦 الإصدار: {report.version}",
            f"┃ 🎯 الحالة: {status}",
            f"┃ 📋 الفحوصات: {summary['passed']}/{summary['total']}",
            f"┣{bar}",
        ]
        for check in report.checks:
            lines.extend(ReportFormatter.format_check(check))
        if report.timings:
            lines.append(f"┣{bar}")
            total = sum(report.timings.values())
            lines.append(f"┃ ⏱️ الزمن الكلي: {total:.2f}s")
        if output_path:
            lines.append(f"┃ 💾 الملف: {output_path}")
        lines.append(f"┗{bar}")
        return '\n'.join(lines)

    @staticmethod
    def format_catalog(rows: List[Dict[str, str]]) -> str:
        """📚 قائمة الكتالوج"""
        bar = '━' * ReportFormatter.WIDTH
        lines = ["════ 📚 الكتالوج ════", f"┏{bar}"]
        for kind, icon in (('chart', '🗺️'), ('immersion', '🧩')):
            lines.append(f"┃ {icon} {kind}s:")
            for row in rows:
                if row['kind'] == kind:
                    lines.append(f"┃    • {row['name']}: {row['description']}")
        lines.append(f"┗{bar}")
        return '\n'.join(lines)
