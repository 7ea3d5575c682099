# core/chartgeom.py
"""
📐 الهندسة الريمانية النقطية لمقياس معطى على خريطة إحداثية:
رموز كريستوفل، ريمان/ريتشي/الانحناء القياسي، شاوتن، فايل، والفافيان
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from . import exprlang as ex
from .errors import ChartError, SingularMetricError
from .tensor import DenseTensor, Variance, kulkarni_nomizu_array, mixed_from_covariant, pfaffian_field

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_COUNT = 64
SAMPLE_MARGIN = 0.05


class DerivativeBackend(Enum):
    EXACT_SYMBOLIC = 'exact-symbolic'
    CENTRAL_DIFFERENCE = 'central-difference'
    COMPLEX_STEP = 'complex-step'


@dataclass(frozen=True)
class DomainBox:
    """صندوق المجال: فترات لكل إحداثي مع أعلام الدورية"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    periodic: Tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.periodic)):
            raise ChartError("❌ أطوال غير متسقة في صندوق المجال")
        for lo, hi in zip(self.lower, self.upper):
            if not hi > lo:
                raise ChartError(f"❌ فترة فارغة في صندوق المجال: ({lo}, {hi})")

    @classmethod
    def from_intervals(cls, intervals: Sequence[Tuple[float, float]],
                       periodic: Optional[Sequence[bool]] = None) -> 'DomainBox':
        periodic = tuple(periodic) if periodic is not None else (False,) * len(intervals)
        return cls(tuple(float(a) for a, _ in intervals), tuple(float(b) for _, b in intervals), periodic)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def scale(self) -> float:
        return float(np.max(self.widths))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=-1)

    def samples(self, count: int = DEFAULT_SAMPLE_COUNT, seed: int = 0,
                margin: float = SAMPLE_MARGIN) -> np.ndarray:
        """نقاط داخلية منخفضة التباين (هالتون مبعثر ومبذور) بعيدة عن الحواف"""
        sampler = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        unit = sampler.random(count)
        lo = np.asarray(self.lower) + margin * self.widths
        hi = np.asarray(self.upper) - margin * self.widths
        return lo + unit * (hi - lo)

    def to_dict(self) -> Dict:
        return {'lower': list(self.lower), 'upper': list(self.upper), 'periodic': list(self.periodic)}


MetricFunction = Callable[[np.ndarray], np.ndarray]


class MetricChart:
    """🎯 خريطة إحداثية تحمل g_{ab}(x) مع واجهة اشتقاق"""

    def __init__(self, name: str, coordinates: Sequence[str], box: DomainBox,
                 metric_fn: MetricFunction, backend: DerivativeBackend,
                 components: Optional[List[List[ex.Expr]]] = None,
                 step: float = 1e-5, riemannian: bool = True):
        if len(coordinates) != box.dim:
            raise ChartError(f"❌ عدد الإحداثيات {len(coordinates)} لا يطابق بعد الصندوق {box.dim}")
        if len(set(coordinates)) != len(coordinates):
            raise ChartError(f"❌ أسماء إحداثيات مكررة: {list(coordinates)}")
        self.name = name
        self.coordinates = tuple(coordinates)
        self.box = box
        self.backend = backend
        self.components = components
        self.step = step
        self.riemannian = riemannian
        self._metric_fn = metric_fn

    # ------------------------------------------------------------------
    @classmethod
    def from_expressions(cls, name: str, coordinates: Sequence[str],
                         components: Sequence[Sequence[ex.ExprLike]], box: DomainBox,
                         riemannian: bool = True) -> 'MetricChart':
        n = len(coordinates)
        if len(components) != n or any(len(row) != n for row in components):
            raise ChartError(f"❌ مصفوفة المقياس يجب أن تكون {n}×{n}")
        exprs = [[ex.as_expr(c) for c in row] for row in components]
        for a in range(n):
            for b in range(a + 1, n):
                if exprs[a][b] != exprs[b][a]:
                    raise ChartError(f"❌ مكونات المقياس غير متناظرة عند ({a}, {b})")
        unknown = set().union(*(ex.free_variables(e) for row in exprs for e in row)) - set(coordinates)
        if unknown:
            raise ChartError(f"❌ متغيرات غير معرفة في المقياس: {sorted(unknown)}", {'unknown': sorted(unknown)})
        compiled = [[ex.CompiledExpr(e) for e in row] for row in exprs]
        names = tuple(coordinates)

        def metric_fn(points: np.ndarray) -> np.ndarray:
            env = {c: points[..., i] for i, c in enumerate(names)}
            shape = points.shape[:-1]
            out = np.empty(shape + (n, n))
            for a in range(n):
                for b in range(a, n):
                    out[..., a, b] = compiled[a][b](env, shape)
                    out[..., b, a] = out[..., a, b]
            return out

        return cls(name, coordinates, box, metric_fn, DerivativeBackend.EXACT_SYMBOLIC,
                   components=exprs, riemannian=riemannian)

    @classmethod
    def from_callable(cls, name: str, coordinates: Sequence[str], metric_fn: MetricFunction,
                      box: DomainBox, backend: DerivativeBackend = DerivativeBackend.CENTRAL_DIFFERENCE,
                      step: float = 1e-5, riemannian: bool = True) -> 'MetricChart':
        if backend is DerivativeBackend.EXACT_SYMBOLIC:
            raise ChartError("❌ الاشتقاق الرمزي يتطلب مكونات تعبيرية")
        return cls(name, coordinates, box, metric_fn, backend, step=step, riemannian=riemannian)

    # ------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def is_symbolic(self) -> bool:
        return self.components is not None

    def with_backend(self, backend: DerivativeBackend, step: float = 1e-5) -> 'MetricChart':
        """نسخة بواجهة اشتقاق أخرى (لاختبار اتفاق الواجهات)"""
        if backend is DerivativeBackend.EXACT_SYMBOLIC and not self.is_symbolic:
            raise ChartError("❌ لا توجد مكونات تعبيرية لهذه الخريطة")
        return MetricChart(self.name, self.coordinates, self.box, self._metric_fn, backend,
                           components=self.components if backend is DerivativeBackend.EXACT_SYMBOLIC else None,
                           step=step, riemannian=self.riemannian)

    def metric(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points)
        return self._metric_fn(points)

    @cached_property
    def _first_derivative_exprs(self) -> Dict[Tuple[int, int, int], ex.Expr]:
        n = self.dim
        return {(c, a, b): ex.differentiate(self.components[a][b], self.coordinates[c])
                for a in range(n) for b in range(a, n) for c in range(n)}

    @cached_property
    def _symbolic_first(self) -> Dict[Tuple[int, int, int], ex.CompiledExpr]:
        return {key: ex.CompiledExpr(e) for key, e in self._first_derivative_exprs.items()}

    @cached_property
    def _symbolic_second(self) -> Dict[Tuple[int, int, int, int], ex.CompiledExpr]:
        n = self.dim
        out = {}
        for (c, a, b), d_c in self._first_derivative_exprs.items():
            for d in range(c, n):
                out[(c, d, a, b)] = ex.CompiledExpr(ex.differentiate(d_c, self.coordinates[d]))
        return out

    def metric_derivatives(self, points: np.ndarray, second: bool = True):
        """(g, ∂g, ∂²g) مع dg[..., c, a, b] = ∂_c g_ab و ddg[..., c, d, a, b]؛ ddg = None إذا second=False"""
        points = np.asarray(points, dtype=float)
        if self.backend is DerivativeBackend.EXACT_SYMBOLIC:
            return self._symbolic_metric_derivatives(points, second)
        if self.backend is DerivativeBackend.COMPLEX_STEP:
            return self._complex_step_derivatives(points, second)
        return self._finite_difference_derivatives(points, second)

    def _symbolic_metric_derivatives(self, points: np.ndarray, want_second: bool = True):
        n = self.dim
        shape = points.shape[:-1]
        env = {c: points[..., i] for i, c in enumerate(self.coordinates)}
        g = self.metric(points)
        first = self._symbolic_first
        dg = np.empty(shape + (n, n, n))
        for a in range(n):
            for b in range(a, n):
                for c in range(n):
                    dg[..., c, a, b] = first[(c, a, b)](env, shape)
                    dg[..., c, b, a] = dg[..., c, a, b]
        if not want_second:
            return g, dg, None
        second = self._symbolic_second
        ddg = np.empty(shape + (n, n, n, n))
        for a in range(n):
            for b in range(a, n):
                for c in range(n):
                    for d in range(c, n):
                        value = second[(c, d, a, b)](env, shape)
                        ddg[..., c, d, a, b] = value
                        ddg[..., c, d, b, a] = value
                        ddg[..., d, c, a, b] = value
                        ddg[..., d, c, b, a] = value
        return g, dg, ddg

    def _shift(self, points: np.ndarray, axis: int, amount: float) -> np.ndarray:
        shifted = np.array(points, copy=True)
        shifted[..., axis] += amount
        return shifted

    def _central_first(self, fn: MetricFunction, points: np.ndarray, h: float) -> np.ndarray:
        n = self.dim
        parts = []
        for c in range(n):
            def diff(step):
                return (fn(self._shift(points, c, step)) - fn(self._shift(points, c, -step))) / (2 * step)
            # one Richardson level
            parts.append((4.0 * diff(h / 2) - diff(h)) / 3.0)
        return np.stack(parts, axis=-3)

    def _finite_difference_derivatives(self, points: np.ndarray, want_second: bool = True):
        h1 = self.step * self.box.scale
        h2 = np.sqrt(self.step) * self.box.scale
        fn = self.metric
        g = fn(points)
        dg = self._central_first(fn, points, h1)
        if not want_second:
            return g, dg, None
        ddg = np.stack([self._central_first(
            lambda p, c=c: self._central_first(fn, p, h1)[..., c, :, :], points, h2)
            for c in range(self.dim)], axis=-4)
        ddg = 0.5 * (ddg + np.swapaxes(ddg, -4, -3))
        return g, dg, ddg

    def _complex_step_derivatives(self, points: np.ndarray, want_second: bool = True):
        n = self.dim
        h = 1e-20
        h2 = np.sqrt(self.step) * self.box.scale

        def first(p: np.ndarray) -> np.ndarray:
            parts = []
            for c in range(n):
                shifted = np.array(p, dtype=complex, copy=True)
                shifted[..., c] += 1j * h
                parts.append(np.imag(self._metric_fn(shifted)) / h)
            return np.stack(parts, axis=-3)

        g = self.metric(points)
        dg = first(points)
        if not want_second:
            return g, dg, None
        ddg = np.stack([self._central_first(lambda p, c=c: first(p)[..., c, :, :], points, h2)
                        for c in range(n)], axis=-4)
        ddg = 0.5 * (ddg + np.swapaxes(ddg, -4, -3))
        return g, dg, ddg

    def volume_element(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(np.abs(np.linalg.det(self.metric(points))))

    def __repr__(self) -> str:
        return f"MetricChart('{self.name}', dim={self.dim}, backend={self.backend.value})"


@dataclass
class CurvatureData:
    """📊 الانحناء على دفعة من النقاط - كل المصفوفات بمحاور دفعة أولية"""

    chart: MetricChart
    points: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    christoffel: np.ndarray      # [..., c, a, b] = Γ^c_{ab}
    riemann: np.ndarray          # [..., a, b, c, d] = R_{abcd}
    ricci: np.ndarray
    scalar: np.ndarray
    _cache: Dict = field(default_factory=dict, repr=False)

    @classmethod
    def at(cls, chart: MetricChart, points: np.ndarray) -> 'CurvatureData':
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != chart.dim:
            raise ChartError(f"❌ نقاط ببعد {points.shape[-1]} لخريطة ببعد {chart.dim}")
        g, dg, ddg = chart.metric_derivatives(points)
        g_inv = invert_metric(g, chart)
        gamma_l = 0.5 * (np.einsum('...abd->...dab', dg) + np.einsum('...bad->...dab', dg) - dg)
        gamma = np.einsum('...cd,...dab->...cab', g_inv, gamma_l)
        d_gamma_l = 0.5 * (np.einsum('...eabd->...edab', ddg) + np.einsum('...ebad->...edab', ddg) - ddg)
        d_ginv = -np.einsum('...cp,...epq,...qd->...ecd', g_inv, dg, g_inv, optimize=True)
        d_gamma = (np.einsum('...ecd,...dab->...ecab', d_ginv, gamma_l, optimize=True)
                   + np.einsum('...cd,...edab->...ecab', g_inv, d_gamma_l, optimize=True))
        # R^e_{bcd} = ∂_cΓ^e_{db} − ∂_dΓ^e_{cb} + Γ^e_{cf}Γ^f_{db} − Γ^e_{df}Γ^f_{cb}
        r_up = (np.einsum('...cedb->...ebcd', d_gamma)
                - np.einsum('...decb->...ebcd', d_gamma)
                + np.einsum('...ecf,...fdb->...ebcd', gamma, gamma, optimize=True)
                - np.einsum('...edf,...fcb->...ebcd', gamma, gamma, optimize=True))
        riemann = np.einsum('...ae,...ebcd->...abcd', g, r_up, optimize=True)
        ricci = np.einsum('...ac,...abcd->...bd', g_inv, riemann, optimize=True)
        scalar = np.einsum('...bd,...bd->...', g_inv, ricci)
        return cls(chart, points, g, g_inv, dg, gamma, riemann, ricci, scalar)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def schouten(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.dim
        if n < 3:
            raise ChartError(f"❌ موتر شاوتن يتطلب n ≥ 3، وصل {n}")
        if 'schouten' not in self._cache:
            J = self.scalar / (2.0 * (n - 1))
            P = (self.ricci - J[..., None, None] * self.g) / (n - 2)
            self._cache['schouten'] = (P, J)
        return self._cache['schouten']

    def weyl(self) -> np.ndarray:
        if 'weyl' not in self._cache:
            P, _ = self.schouten()
            self._cache['weyl'] = self.riemann - kulkarni_nomizu_array(P, self.g)
        return self._cache['weyl']

    def mixed_riemann(self) -> np.ndarray:
        return mixed_from_covariant(self.riemann, self.g_inv)

    def pfaffian(self) -> np.ndarray:
        n = self.dim
        if n % 2:
            raise ChartError(f"❌ الفافيان يتطلب بعداً زوجياً، وصل {n}")
        return pfaffian_field(n // 2, self.mixed_riemann())

    def volume_element(self) -> np.ndarray:
        return np.sqrt(np.abs(np.linalg.det(self.g)))


def connection(chart: MetricChart, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(g, g⁻¹, Γ^c_{ab}) بالمشتقات الأولى فقط - يكفي للابلاسيان والانحناء الخارجي"""
    points = np.asarray(points, dtype=float)
    g, dg, _ = chart.metric_derivatives(points, second=False)
    g_inv = invert_metric(g, chart)
    gamma_l = 0.5 * (np.einsum('...abd->...dab', dg) + np.einsum('...bad->...dab', dg) - dg)
    return g, g_inv, np.einsum('...cd,...dab->...cab', g_inv, gamma_l)


def invert_metric(g: np.ndarray, chart: Optional[MetricChart] = None, condition_limit: float = 1e12) -> np.ndarray:
    """مقلوب المقياس مع فحص التفرد والتحديد الموجب عند الطلب"""
    name = chart.name if chart is not None else 'metric'
    cond = np.linalg.cond(g)
    if not np.all(np.isfinite(cond)) or np.any(cond > condition_limit):
        worst = float(np.max(np.where(np.isfinite(cond), cond, np.inf)))
        raise SingularMetricError(f"❌ مقياس منفرد في '{name}'", {'condition_number': worst})
    if chart is not None and chart.riemannian:
        eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
        if np.any(eig <= 0):
            raise ChartError(f"❌ المقياس في '{name}' ليس موجب التحديد",
                             {'smallest_eigenvalue': float(np.min(eig))})
    return np.linalg.inv(g)


# ---------------------------------------------------------------------------
# Pointwise API
# ---------------------------------------------------------------------------

def _at_point(chart: MetricChart, x: Sequence[float]) -> CurvatureData:
    point = np.asarray(x, dtype=float).reshape(1, chart.dim)
    return CurvatureData.at(chart, point)


def _lower(arr: np.ndarray, n: int, rank: int) -> DenseTensor:
    return DenseTensor(n, (Variance.COVARIANT,) * rank, arr)


def christoffel(chart: MetricChart, x: Sequence[float]) -> DenseTensor:
    data = _at_point(chart, x)
    return DenseTensor(chart.dim, (Variance.CONTRAVARIANT, Variance.COVARIANT, Variance.COVARIANT),
                       data.christoffel[0])


def riemann(chart: MetricChart, x: Sequence[float]) -> DenseTensor:
    return _lower(_at_point(chart, x).riemann[0], chart.dim, 4)


def ricci(chart: MetricChart, x: Sequence[float]) -> DenseTensor:
    return _lower(_at_point(chart, x).ricci[0], chart.dim, 2)


def scalar(chart: MetricChart, x: Sequence[float]) -> float:
    return float(_at_point(chart, x).scalar[0])


def schouten(chart: MetricChart, x: Sequence[float]) -> Tuple[DenseTensor, float]:
    P, J = _at_point(chart, x).schouten()
    return _lower(P[0], chart.dim, 2), float(J[0])


def weyl(chart: MetricChart, x: Sequence[float]) -> DenseTensor:
    return _lower(_at_point(chart, x).weyl()[0], chart.dim, 4)


def pfaffian_scalar(chart: MetricChart, x: Sequence[float]) -> float:
    return float(_at_point(chart, x).pfaffian()[0])


# ---------------------------------------------------------------------------
# Conformal rescaling and identity residuals
# ---------------------------------------------------------------------------

def conformal_rescale(chart: MetricChart, upsilon: ex.ExprLike) -> MetricChart:
    """خريطة للمقياس e^{2Υ}g"""
    ups = ex.as_expr(upsilon)
    unknown = ex.free_variables(ups) - set(chart.coordinates)
    if unknown:
        raise ChartError(f"❌ Υ يحتوي متغيرات غير معرفة: {sorted(unknown)}")
    factor = ex.call('exp', ex.mul(ex.Num(2.0), ups))
    name = f"e^(2Υ)·{chart.name}"
    if chart.is_symbolic:
        comps = [[ex.mul(factor, g_ab) for g_ab in row] for row in chart.components]
        return MetricChart.from_expressions(name, chart.coordinates, comps, chart.box, chart.riemannian)
    compiled = ex.CompiledExpr(factor)
    names = chart.coordinates

    def metric_fn(points: np.ndarray) -> np.ndarray:
        env = {c: points[..., i] for i, c in enumerate(names)}
        scale = compiled(env, points.shape[:-1])
        return scale[..., None, None] * chart.metric(points)

    return MetricChart.from_callable(name, chart.coordinates, metric_fn, chart.box,
                                     backend=chart.backend if chart.backend is not DerivativeBackend.EXACT_SYMBOLIC
                                     else DerivativeBackend.CENTRAL_DIFFERENCE,
                                     step=chart.step, riemannian=chart.riemannian)


def metric_compatibility_residual(chart: MetricChart, points: np.ndarray) -> float:
    """max|∇_c g_ab|"""
    data = CurvatureData.at(chart, points)
    nabla_g = (data.dg
               - np.einsum('...dca,...db->...cab', data.christoffel, data.g)
               - np.einsum('...dcb,...ad->...cab', data.christoffel, data.g))
    return float(np.max(np.abs(nabla_g)))


def bianchi_residual(chart: MetricChart, points: np.ndarray) -> float:
    """max|R_{abcd} + R_{bcad} + R_{cabd}|"""
    R = CurvatureData.at(chart, points).riemann
    cyclic = R + np.einsum('...bcad->...abcd', R) + np.einsum('...cabd->...abcd', R)
    return float(np.max(np.abs(cyclic)))


def weyl_trace_residual(chart: MetricChart, points: np.ndarray) -> float:
    data = CurvatureData.at(chart, points)
    W = data.weyl()
    traces = [np.einsum('...ac,...abcd->...bd', data.g_inv, W),
              np.einsum('...ab,...abcd->...cd', data.g_inv, W),
              np.einsum('...bd,...abcd->...ac', data.g_inv, W)]
    return float(max(np.max(np.abs(t)) for t in traces))


def einstein_residual(chart: MetricChart, points: np.ndarray, lam: float) -> float:
    """max|Ric − (n−1)λg|"""
    data = CurvatureData.at(chart, points)
    return float(np.max(np.abs(data.ricci - (chart.dim - 1) * lam * data.g)))
