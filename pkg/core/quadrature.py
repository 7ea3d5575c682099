# core/quadrature.py
"""
📏 شبكات التكامل على صناديق الخرائط

- جاوس-لوجندر على المحاور غير الدورية (scipy.special.roots_legendre)
- شبه المنحرف على المحاور الدورية (دقة طيفية للدوال الدورية الملساء)
- محور حدّي بإحداثي لوغاريتمي log ρ لتكاملات القطع
- تقييم مجزأ مع مجمع خيوط اختياري
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from .chartgeom import DomainBox
from .errors import ChartError

logger = logging.getLogger(__name__)

DEFAULT_GRID = 48
CHUNK_SIZE = 2048

GridSpec = Union[int, Sequence[int]]
FieldFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureGrid:
    """عقد (N, d) وأوزان (N,) لجداء موتري من قواعد أحادية البعد"""

    points: np.ndarray
    weights: np.ndarray
    shape: Tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def gauss_legendre_rule(lower: float, upper: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    if count < 1:
        raise ChartError(f"❌ عدد عقد غير صالح: {count}")
    nodes, weights = special.roots_legendre(count)
    half = 0.5 * (upper - lower)
    return lower + half * (nodes + 1.0), half * weights


def trapezoid_rule(lower: float, upper: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """شبه منحرف دوري: عقد متساوية بإزاحة نصف خطوة"""
    if count < 1:
        raise ChartError(f"❌ عدد عقد غير صالح: {count}")
    width = upper - lower
    nodes = lower + width * (np.arange(count) + 0.5) / count
    return nodes, np.full(count, width / count)


def log_rule(lower: float, upper: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """جاوس-لوجندر في s = log ρ على [log lower, log upper]؛ dρ = ρ ds"""
    if not 0 < lower < upper:
        raise ChartError(f"❌ المحور اللوغاريتمي يتطلب 0 < lower < upper، وصل ({lower}, {upper})")
    s, w = gauss_legendre_rule(np.log(lower), np.log(upper), count)
    rho = np.exp(s)
    return rho, w * rho


def axis_rule(lower: float, upper: float, count: int, periodic: bool) -> Tuple[np.ndarray, np.ndarray]:
    if periodic:
        return trapezoid_rule(lower, upper, count)
    return gauss_legendre_rule(lower, upper, count)


def _counts(grid: GridSpec, dim: int) -> Tuple[int, ...]:
    if isinstance(grid, (int, np.integer)):
        return (int(grid),) * dim
    counts = tuple(int(c) for c in grid)
    if len(counts) != dim:
        raise ChartError(f"❌ مواصفة الشبكة بطول {len(counts)} لصندوق ببعد {dim}")
    return counts


def _assemble(rules: Sequence[Tuple[np.ndarray, np.ndarray]]) -> QuadratureGrid:
    mesh = np.meshgrid(*[r[0] for r in rules], indexing='ij')
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing='ij')
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=-1), axis=-1)
    return QuadratureGrid(points, weights, tuple(len(r[0]) for r in rules))


def tensor_grid(box: DomainBox, grid: GridSpec = DEFAULT_GRID, log_axis: Optional[int] = None,
                lower: Optional[float] = None, upper: Optional[float] = None) -> QuadratureGrid:
    """شبكة الصندوق كله؛ محور log_axis (إن وجد) يُدمج لوغاريتمياً بين lower و upper"""
    counts = _counts(grid, box.dim)
    rules = []
    for i in range(box.dim):
        if i == log_axis:
            lo = box.lower[i] if lower is None else lower
            hi = box.upper[i] if upper is None else upper
            rules.append(log_rule(lo, hi, counts[i]))
        else:
            rules.append(axis_rule(box.lower[i], box.upper[i], counts[i], box.periodic[i]))
    return _assemble(rules)


def column_grid(box: DomainBox, axis: int, column_lower: Callable[[np.ndarray], np.ndarray],
                grid: GridSpec = DEFAULT_GRID, log_scale: bool = True) -> QuadratureGrid:
    """
    شبكة بأعمدة مقطوعة: لكل عقدة في المحاور الأخرى يبدأ المحور axis من
    column_lower(عقد الأعمدة) وينتهي عند الحد العلوي للصندوق
    """
    counts = _counts(grid, box.dim)
    others = [i for i in range(box.dim) if i != axis]
    base = _assemble([axis_rule(box.lower[i], box.upper[i], counts[i], box.periodic[i]) for i in others]) \
        if others else QuadratureGrid(np.zeros((1, 0)), np.ones(1), ())
    starts = np.asarray(column_lower(base.points), dtype=float).reshape(-1)
    upper = box.upper[axis]
    if np.any(starts >= upper):
        raise ChartError("❌ بداية عمود تتجاوز الحد العلوي للصندوق", {'axis': axis})
    if log_scale:
        unit_s, unit_w = special.roots_legendre(counts[axis])
        s_lo = np.log(starts)[:, None]
        half = 0.5 * (np.log(upper) - s_lo)
        rho = np.exp(s_lo + half * (unit_s[None, :] + 1.0))
        w_axis = half * unit_w[None, :] * rho
    else:
        unit_s, unit_w = special.roots_legendre(counts[axis])
        half = 0.5 * (upper - starts)[:, None]
        rho = starts[:, None] + half * (unit_s[None, :] + 1.0)
        w_axis = half * unit_w[None, :]
    m = counts[axis]
    points = np.empty((base.size * m, box.dim))
    points[:, axis] = rho.ravel()
    for j, i in enumerate(others):
        points[:, i] = np.repeat(base.points[:, j], m)
    weights = (base.weights[:, None] * w_axis).ravel()
    return QuadratureGrid(points, weights, (base.size, m))


def evaluate_chunked(fn: FieldFunction, points: np.ndarray, threads: int = 1,
                     chunk_size: int = CHUNK_SIZE) -> np.ndarray:
    """تقييم دالة متجهة على دفعات؛ الترتيب محفوظ بغض النظر عن عدد الخيوط"""
    points = np.asarray(points, dtype=float)
    total = points.shape[0]
    if total == 0:
        return np.zeros(0)
    chunks = [points[i:i + chunk_size] for i in range(0, total, chunk_size)]
    if threads <= 1 or len(chunks) == 1:
        parts = [np.asarray(fn(c)) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = [np.asarray(p) for p in pool.map(fn, chunks)]
    return np.concatenate(parts, axis=0)


def integrate_over(grid: QuadratureGrid, fn: FieldFunction, threads: int = 1) -> float:
    values = evaluate_chunked(fn, grid.points, threads)
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        logger.warning(f"⚠️ {bad} قيمة غير منتهية في التكامل")
    return grid.integrate(values)
