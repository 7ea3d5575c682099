#!/usr/bin/env python3
"""
🚀 واجهة سطر الأوامر: تشغيل سيناريو تحقق واحد وكتابة تقريره
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG_ERROR = 2

TASKS = ('verify', 'gbc', 'renorm', 'expand', 'rigidity')


# إعداد التسجيل قبل تحميل أي وحدات
def setup_initial_logging(level: int = logging.INFO) -> logging.Logger:
    """إعداد التسجيل الأولي لضمان ظهور الرسائل من البداية"""
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        force=True
    )
    return logging.getLogger(__name__)


logger = setup_initial_logging()

from config.config_manager import ConfigManager  # noqa: E402
from core import catalog  # noqa: E402
from core.errors import GeometryError, ScenarioError  # noqa: E402
from core.scenario_runner import run  # noqa: E402
from reporting.report_formatter import ReportFormatter  # noqa: E402


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='app.py',
        description='Numerical checks for conformal submanifold invariants, renormalized integrals '
                    'and Gauss-Bonnet-Chern identities.')
    sub = parser.add_subparsers(dest='command', required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run a '{task}' scenario")
        p.add_argument('--config', metavar='PATH', help='scenario JSON file')
        p.add_argument('--out', metavar='PATH', help='report JSON path')
        p.add_argument('--threads', type=int, metavar='N', help='worker cap for integrals')
        p.add_argument('--grid', type=int, metavar='N', help='quadrature nodes per axis')
        p.add_argument('--seed', type=int, metavar='N', help='sampling seed')
    p = sub.add_parser('catalog', help='list builtin charts and immersions')
    p.add_argument('--out', metavar='PATH', help='write the listing as JSON')
    return parser


def run_catalog(out: Optional[str]) -> int:
    rows = catalog.listing()
    print(ReportFormatter.format_catalog(rows))
    if out:
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        with open(out, 'w', encoding='utf-8') as fh:
            json.dump(rows, fh, indent=2, ensure_ascii=False)
    return EXIT_OK


def run_task(manager: ConfigManager, args: argparse.Namespace) -> int:
    scenario = manager.load_scenario(args.config) if args.config else {'task': args.command}
    if scenario.get('task') != args.command:
        raise ScenarioError(f"❌ المهمة في السيناريو '{scenario.get('task')}' لا تطابق الأمر '{args.command}'",
                            {'path': '$.task'})
    overrides = {'output': args.out, 'threads': args.threads, 'grid': args.grid, 'seed': args.seed}
    config = manager.resolve(scenario, overrides)

    report = run(config, manager.numeric_settings())
    output = config['output']
    report.write_json(output)
    report.write_csv_tables(os.path.splitext(output)[0] + '_tables')
    print(ReportFormatter.format_report(report, output))
    return EXIT_OK if report.passed else EXIT_CHECKS_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    """الدالة الرئيسية: 0 نجاح، 1 فحوصات فاشلة، 2 خطأ إعدادات"""
    args = build_parser().parse_args(argv)
    if args.command == 'catalog':
        return run_catalog(args.out)
    try:
        manager = ConfigManager()
    except ValueError as e:
        logger.error(f"❌ خطأ في إعدادات البيئة: {e}")
        return EXIT_CONFIG_ERROR
    manager.apply_logging_config()
    if manager.config['DEBUG']:
        manager.display_config()
    try:
        return run_task(manager, args)
    except ScenarioError as e:
        logger.error(f"{e}")
        for line in e.details.get('errors', []):
            logger.error(f"   {line}")
        return EXIT_CONFIG_ERROR
    except GeometryError as e:
        # أخطاء خارج الفحوصات (مثل كتالوج) تعامل كخطأ إعدادات
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == '__main__':
    sys.exit(main())
