# utils/__init__.py
"""
🧰 أدوات مساعدة: الطوابع الزمنية للتقارير
"""
