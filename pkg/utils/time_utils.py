"""
📅 أدوات الوقت لطوابع التقارير (UTC)
"""

import time
from contextlib import contextmanager
from datetime import datetime
from typing import Dict, Iterator, Optional

import pytz


class ReportClock:
    """فئة إدارة الوقت بتوقيت UTC"""

    _timezone = pytz.utc

    @classmethod
    def now(cls) -> datetime:
        return datetime.now(cls._timezone)

    @classmethod
    def isoformat(cls, dt: Optional[datetime] = None) -> str:
        """تنسيق الوقت بتنسيق ISO"""
        if dt is None:
            dt = cls.now()
        return dt.isoformat(timespec='seconds')


@contextmanager
def timed(timings: Dict[str, float], key: str) -> Iterator[None]:
    """⏱️ يسجل زمن الكتلة بالثواني في timings[key]"""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[key] = round(time.perf_counter() - start, 6)


report_clock = ReportClock()
