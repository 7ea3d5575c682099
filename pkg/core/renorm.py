# core/renorm.py
"""
✂️ التنظيم بطريقة هادامار: تكامل مقطوع على {r > ε} ثم ملاءمة مفكوك ε

    I(ε) = Σ a_i ε^{2i+1−k} + [𝓛 log ε إن كان k فردياً] + 𝓘 + o(1)

الجزء المنتهي 𝓘 هو التكامل المنظَّم. الحد الخارجي يُحل لكل عمود بالتنصيف،
ومحور الحد يُكامل بجاوس-لوجندر في log ρ.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import exprlang as ex
from .errors import CutoffError, ExprDomainError, FitError, RenormalizationError
from .quadrature import DEFAULT_GRID, GridSpec, column_grid, integrate_over, tensor_grid
from .submanifold import FieldLike, ImmersionChart, field_values

logger = logging.getLogger(__name__)

DEFAULT_LADDER = tuple(0.2 * 2.0 ** -j for j in range(8))
DEFAULT_TAIL_ORDER = 3
BISECTION_TOLERANCE = 1e-14
BISECTION_MAX_STEPS = 200
MIN_CUTOFF_EPS = 1e-9
CONVERGENT_FLOOR = 1e-8
FIT_CONDITION_LIMIT = 1e12
PARITY_PROBE = 1e-2


# ---------------------------------------------------------------------------
# Samples and fits
# ---------------------------------------------------------------------------

@dataclass
class CutoffIntegralSamples:
    """📦 أزواج (ε_j, I(ε_j)) بترتيب تنازلي صارم في ε"""

    eps: np.ndarray
    values: np.ndarray
    k: int

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.eps.shape != self.values.shape or self.eps.ndim != 1:
            raise FitError("❌ أطوال ε والقيم غير متطابقة")
        if np.any(self.eps <= 0):
            raise FitError("❌ قيم ε يجب أن تكون موجبة")
        if np.any(np.diff(self.eps) >= 0):
            raise FitError("❌ سلم ε يجب أن يكون تنازلياً صارماً", {'eps': self.eps.tolist()})

    @property
    def odd(self) -> bool:
        return self.k % 2 == 1

    def singular_powers(self) -> List[int]:
        """الأسس السالبة 2i+1−k لكل 0 ≤ i ≤ ⌈k/2⌉−1"""
        return [p for p in (2 * i + 1 - self.k for i in range(math.ceil(self.k / 2))) if p < 0]

    def rows(self) -> List[Dict[str, float]]:
        return [{'eps': float(e), 'value': float(v)} for e, v in zip(self.eps, self.values)]


@dataclass
class EpsilonFit:
    """📊 معاملات الملاءمة والجزء المنتهي مع الباقي ورقم الحالة"""

    k: int
    coefficients: Dict[str, float]
    finite_part: float
    log_coefficient: Optional[float]
    residual: float
    condition_number: float
    reliable: bool
    tail: Dict[str, float] = field(default_factory=dict)
    samples: Optional[CutoffIntegralSamples] = None

    def coefficient(self, power: int) -> float:
        return self.coefficients[_label(power)]

    def to_dict(self) -> Dict:
        return {
            'k': self.k,
            'coefficients': dict(self.coefficients),
            'finite_part': self.finite_part,
            'log_coefficient': self.log_coefficient,
            'residual': self.residual,
            'condition_number': self.condition_number,
            'reliable': self.reliable,
            'tail': dict(self.tail),
            'samples': self.samples.rows() if self.samples is not None else None,
        }


def _label(power: int) -> str:
    return f"eps^{power}"


def epsilon_fit(samples: CutoffIntegralSamples, tail_order: int = DEFAULT_TAIL_ORDER,
                condition_limit: float = FIT_CONDITION_LIMIT) -> EpsilonFit:
    """مربعات صغرى موزونة بـ ε^{k−1} في الأساس المحدد مع ذيل ε..ε^{tail_order}"""
    eps, values, k = samples.eps, samples.values, samples.k
    columns: List[np.ndarray] = []
    labels: List[str] = []
    for p in samples.singular_powers():
        columns.append(eps ** p)
        labels.append(_label(p))
    if samples.odd:
        columns.append(np.log(eps))
        labels.append('log')
    columns.append(np.ones_like(eps))
    labels.append('1')
    for p in range(1, tail_order + 1):
        columns.append(eps ** p)
        labels.append(f"tail^{p}")
    if len(eps) < len(columns) + 2:
        raise FitError(f"❌ المطلوب {len(columns) + 2} عينة على الأقل لأساس من {len(columns)} دالة، "
                       f"وصل {len(eps)}", {'basis': labels})

    weights = eps ** (k - 1)
    design = np.stack(columns, axis=-1) * weights[:, None]
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0):
        raise FitError("❌ عمود صفري في مصفوفة التصميم", {'basis': labels})
    normalized = design / norms
    solution, _, rank, singular = np.linalg.lstsq(normalized, values * weights, rcond=None)
    if rank < len(columns):
        raise FitError(f"❌ مصفوفة التصميم ناقصة الرتبة ({rank} < {len(columns)})", {'basis': labels})
    coeffs = solution / norms
    condition = float(singular[0] / singular[-1])
    fitted = np.stack(columns, axis=-1) @ coeffs
    residual = float(np.max(np.abs(fitted - values) * weights))
    reliable = condition <= condition_limit
    if not reliable:
        logger.warning(f"⚠️ رقم الحالة {condition:.3e} يتجاوز الحد {condition_limit:.1e}: الجزء المنتهي غير موثوق")

    named = dict(zip(labels, (float(c) for c in coeffs)))
    tail = {name: named.pop(name) for name in list(named) if name.startswith('tail^')}
    finite = named['1']
    log_coefficient = named.get('log')
    logger.debug(f"📊 ملاءمة ε: {named} residual={residual:.3e} cond={condition:.3e}")
    return EpsilonFit(k, named, finite, log_coefficient, residual, condition, reliable, tail, samples)


# ---------------------------------------------------------------------------
# Cut-off integrals
# ---------------------------------------------------------------------------

def _boundary_axis(imm: ImmersionChart) -> int:
    axis = imm.info.boundary_axis
    if axis is None:
        raise CutoffError(f"❌ '{imm.name}' ليس له محور حد (غير مضغوط تطابقياً)")
    return axis


def _defining_evaluator(imm: ImmersionChart, defining_fn: Optional[ex.ExprLike]):
    axis = _boundary_axis(imm)
    expr = ex.Var(imm.coordinates[axis]) if defining_fn is None else ex.as_expr(defining_fn)
    compiled = ex.compile_expr(expr)
    unknown = compiled.variables - set(imm.coordinates)
    if unknown:
        raise CutoffError(f"❌ متغيرات غير معرفة في دالة التعريف: {sorted(unknown)}")

    def evaluate(points: np.ndarray) -> np.ndarray:
        env = {c: points[..., i] for i, c in enumerate(imm.coordinates)}
        return compiled(env, points.shape[:-1])

    return expr, evaluate


def _column_points(base: np.ndarray, axis: int, rho: np.ndarray, dim: int) -> np.ndarray:
    points = np.empty((base.shape[0], dim))
    points[:, axis] = rho
    others = [i for i in range(dim) if i != axis]
    for j, i in enumerate(others):
        points[:, i] = base[:, j]
    return points


def solve_cutoff(imm: ImmersionChart, defining_fn: Optional[ex.ExprLike], eps: float,
                 base: np.ndarray) -> np.ndarray:
    """ρ على كل عمود مع r(ρ, x) = ε بالتنصيف"""
    axis = _boundary_axis(imm)
    if defining_fn is None:
        if eps >= imm.box.upper[axis]:
            raise CutoffError(f"❌ ε = {eps:g} خارج مجال ρ", {"eps": eps})
        return np.full(base.shape[0], float(eps))
    _, r = _defining_evaluator(imm, defining_fn)
    dim = imm.dim
    count = base.shape[0]
    upper = imm.box.upper[axis]
    lo = np.full(count, eps * 1e-6)
    hi = np.full(count, upper)
    r_lo = r(_column_points(base, axis, lo, dim))
    r_hi = r(_column_points(base, axis, hi, dim))
    if np.any(r_lo >= eps) or np.any(r_hi <= eps):
        raise CutoffError(f"❌ لا يمكن عزل الحد r = {eps:g} على كل الأعمدة",
                          {'eps': eps, 'min_r_upper': float(np.min(r_hi))})
    for _ in range(BISECTION_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        above = r(_column_points(base, axis, mid, dim)) > eps
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) < BISECTION_TOLERANCE * eps:
            break
    root = 0.5 * (lo + hi)
    probes = np.stack([r(_column_points(base, axis, root * f, dim)) for f in (0.25, 0.5, 0.75, 1.0)])
    if np.any(np.diff(probes, axis=0) <= 0):
        raise CutoffError("❌ دالة التعريف ليست رتيبة في ρ قرب الحد", {'eps': eps})
    return root


def cutoff_integral(imm: ImmersionChart, integrand: FieldLike, defining_fn: Optional[ex.ExprLike],
                    eps: float, grid: GridSpec = DEFAULT_GRID, threads: int = 1) -> float:
    """∫_{r > ε} I darea"""
    if eps < MIN_CUTOFF_EPS:
        raise CutoffError(f"❌ ε = {eps:g} أصغر من دقة الشبكة {MIN_CUTOFF_EPS:g}", {'eps': eps})
    axis = _boundary_axis(imm)
    quad = column_grid(imm.box, axis, lambda base: solve_cutoff(imm, defining_fn, eps, base), grid)

    def density(points: np.ndarray) -> np.ndarray:
        h = imm.induced_chart.metric(points)
        return field_values(imm, integrand, points) * np.sqrt(np.abs(np.linalg.det(h)))

    return integrate_over(quad, density, threads)


def renormalized_integral(imm: ImmersionChart, integrand: FieldLike = 1.0,
                          defining_fn: Optional[ex.ExprLike] = None,
                          ladder: Sequence[float] = DEFAULT_LADDER, grid: GridSpec = DEFAULT_GRID,
                          threads: int = 1, tail_order: int = DEFAULT_TAIL_ORDER,
                          condition_limit: float = FIT_CONDITION_LIMIT) -> EpsilonFit:
    """^R∫ I darea: سلم ε ثم ملاءمة"""
    ladder = sorted((float(e) for e in ladder), reverse=True)

    def one(eps: float) -> float:
        return cutoff_integral(imm, integrand, defining_fn, eps, grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, ladder))
    else:
        values = [one(e) for e in ladder]
    samples = CutoffIntegralSamples(np.asarray(ladder), np.asarray(values), imm.dim)
    fit = epsilon_fit(samples, tail_order, condition_limit)
    logger.info(f"📊 ^R∫ على '{imm.name}': الجزء المنتهي = {fit.finite_part:.10g}"
                + (f"، معامل log = {fit.log_coefficient:.10g}" if fit.log_coefficient is not None else ''))
    return fit


def convergent_integral(imm: ImmersionChart, integrand: FieldLike, grid: GridSpec = DEFAULT_GRID,
                        threads: int = 1, floor: float = CONVERGENT_FLOOR) -> float:
    """تكامل بلا قطع لتكاملات الوزن −k (محور الحد لوغاريتمي حتى floor)"""
    axis = _boundary_axis(imm)
    quad = tensor_grid(imm.box, grid, log_axis=axis, lower=floor, upper=imm.box.upper[axis])

    def density(points: np.ndarray) -> np.ndarray:
        h = imm.induced_chart.metric(points)
        return field_values(imm, integrand, points) * np.sqrt(np.abs(np.linalg.det(h)))

    return integrate_over(quad, density, threads)


# ---------------------------------------------------------------------------
# Defining-function independence
# ---------------------------------------------------------------------------

@dataclass
class ParityReport:
    defining_fn: str
    even: bool
    positive: bool
    odd_part: float
    odd_order: Optional[float]

    def to_dict(self) -> Dict:
        return {'defining_fn': self.defining_fn, 'even': self.even, 'positive': self.positive,
                'odd_part': self.odd_part, 'odd_order': self.odd_order}


@dataclass
class InvarianceReport:
    finite_parts: Dict[str, float]
    spread: float
    parity: List[ParityReport]
    rejected: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {'finite_parts': dict(self.finite_parts), 'spread': self.spread,
                'parity': [p.to_dict() for p in self.parity], 'rejected': list(self.rejected)}


def parity_report(imm: ImmersionChart, defining_fn: ex.ExprLike, probe: float = PARITY_PROBE,
                  seed: int = 0) -> ParityReport:
    """
    r/ρ زوجي حتى رتبة k: الجزء الفردي d(ρ) = (q(ρ) − q(−ρ))/2 إما يكاد ينعدم
    أو يتصرف كـ ρ^p مع p > k
    """
    axis = _boundary_axis(imm)
    expr, r = _defining_evaluator(imm, defining_fn)
    text = ex.to_text(expr)
    base = np.delete(imm.box.samples(4, seed), axis, axis=-1)
    dim = imm.dim

    def quotient(rho: float) -> np.ndarray:
        values = r(_column_points(base, axis, np.full(base.shape[0], rho), dim))
        return values / rho

    try:
        positive = bool(np.all(quotient(probe) > 0))
        odd = [np.max(np.abs(quotient(s) - quotient(-s))) / 2.0 for s in (probe, 2 * probe)]
    except ExprDomainError:
        return ParityReport(text, False, False, math.inf, None)
    if odd[0] < 1e-12:
        return ParityReport(text, True, positive, float(odd[0]), None)
    order = math.log2(odd[1] / odd[0]) if odd[1] > 0 else math.inf
    even = order > imm.dim - 0.5
    return ParityReport(text, bool(even), positive, float(odd[0]), float(order))


def defining_function_invariance(imm: ImmersionChart, integrand: FieldLike, family: Sequence[ex.ExprLike],
                                 ladder: Sequence[float] = DEFAULT_LADDER, grid: GridSpec = DEFAULT_GRID,
                                 threads: int = 1, strict: bool = True,
                                 tail_order: int = DEFAULT_TAIL_ORDER) -> InvarianceReport:
    """أقصى فرق زوجي بين الأجزاء المنتهية عبر عائلة دوال تعريف"""
    reports = [parity_report(imm, fn) for fn in family]
    bad = [p.defining_fn for p in reports if not (p.even and p.positive)]
    if bad and strict:
        raise RenormalizationError(f"❌ دوال تعريف غير زوجية: {bad}",
                                   {'parity': [p.to_dict() for p in reports]})
    for name in bad:
        logger.warning(f"⚠️ دالة التعريف '{name}' ليست زوجية: الفرق متوقع")
    finite: Dict[str, float] = {}
    for fn, report in zip(family, reports):
        fit = renormalized_integral(imm, integrand, fn, ladder, grid, threads, tail_order)
        finite[report.defining_fn] = fit.finite_part
    values = list(finite.values())
    spread = max((abs(a - b) for a, b in combinations(values, 2)), default=0.0)
    logger.info(f"📊 تشتت الأجزاء المنتهية عبر {len(values)} دالة تعريف: {spread:.3e}")
    return InvarianceReport(finite, float(spread), reports, bad)
