# core/ambient.py
"""
🌌 الفضاء المحيط الخارجي القانوني لغمر أصغري في هدف أينشتاين

    g̃ = 2ρ dt² + 2t dt dρ + τ²g ،  τ = t(1 + λρ/2)
    j̃(t, x, ρ) = (t, j(x), ρ)

- CanonicalAmbient: المخطط المحيط والغمر المحيط مع بواقي السحب و H̃ و R̃ic
- StraightInvariantSpec: ثوابت قابلة للتقويم بإعدادات مسبقة (L2, L2ell, L2sq, Pfr, Wtrace)
- معامل التقويم ∏(Δ̄ + (a+2b+2s)(k−a−2b−2s−1)λ) ومقارنته بلابلاسيان المحيط مباشرة
- تكاملات GBC: 𝒫_{r,k} عبر Pf_r(Ŵ) مع Ŵ = j*W + ½L̊∧L̊
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from . import exprlang as ex
from .catalog import _fresh, canonical_ambient
from .chartgeom import CurvatureData, DomainBox, MetricChart, connection, einstein_residual
from .errors import GateError, ImmersionError, NotEinsteinError, NotMinimalError
from .jets import to_fraction
from .submanifold import (FD_RELATIVE_STEP, ImmersionChart, ImmersionInfo, SubmanifoldGeometry,
                          laplacian_field)
from .tensor import double_factorial, factorial

logger = logging.getLogger(__name__)

MINIMAL_TOLERANCE = 1e-6
EINSTEIN_TOLERANCE = 1e-6
GATE_SAMPLES = 16

Field = Callable[[np.ndarray], np.ndarray]


def einstein_constant(imm: ImmersionChart, lam: Optional[float] = None) -> float:
    """λ من المعامل، ثم من بيانات الكتالوج، وإلا من الانحناء العددي للهدف"""
    if lam is not None:
        return float(lam)
    if imm.info.einstein_lambda is not None:
        return float(imm.info.einstein_lambda)
    target = imm.target
    points = target.box.samples(4)
    n = target.dim
    estimate = float(np.mean(CurvatureData.at(target, points).scalar)) / (n * (n - 1))
    logger.info(f"🔧 λ غير معطى: تقدير من الانحناء القياسي للهدف λ ≈ {estimate:.6g}")
    return estimate


# ---------------------------------------------------------------------------
# Canonical ambient space
# ---------------------------------------------------------------------------

class CanonicalAmbient:
    """🎯 (G̃, g̃) والغمر j̃ فوق غمر أصغري في هدف أينشتاين"""

    def __init__(self, imm: ImmersionChart, lam: Optional[float] = None, eps: Optional[float] = None):
        self.imm = imm
        self.lam = einstein_constant(imm, lam)
        self.eps = min(0.1, 1.0 / (2.0 * abs(self.lam) + 1.0)) if eps is None else float(eps)
        self.ambient_chart = canonical_ambient(imm.target, self.lam, self.eps)
        self.t_name = _fresh('t', imm.coordinates)
        self.r_name = _fresh('r', imm.coordinates)

    @property
    def k(self) -> int:
        return self.imm.dim

    @cached_property
    def source_box(self) -> DomainBox:
        box = self.imm.box
        return DomainBox.from_intervals([(0.5, 1.5)] + list(zip(box.lower, box.upper)) + [(-self.eps, self.eps)],
                                        [False] + list(box.periodic) + [False])

    @cached_property
    def ambient_immersion(self) -> ImmersionChart:
        imm = self.imm
        coords = [self.t_name] + list(imm.coordinates) + [self.r_name]
        info = ImmersionInfo(compact=False, minimal=True, description=f"canonical ambient over {imm.name}")
        name = f"ambient[{imm.name}]"
        if imm.is_symbolic:
            comps = [ex.Var(self.t_name)] + list(imm.components) + [ex.Var(self.r_name)]
            return ImmersionChart.from_expressions(name, self.ambient_chart, coords, comps, self.source_box, info)
        k = imm.dim

        def map_fn(points: np.ndarray) -> np.ndarray:
            inner = imm.map(points[..., 1:k + 1])
            return np.concatenate([points[..., :1], inner, points[..., k + 1:]], axis=-1)

        return ImmersionChart.from_callable(name, self.ambient_chart, coords, map_fn, self.source_box, info)

    def expected_pullback(self, points: np.ndarray) -> np.ndarray:
        """2ρ dt² + 2t dt dρ + τ²(j*g)"""
        points = np.asarray(points, dtype=float).reshape(-1, self.k + 2)
        t, rho = points[:, 0], points[:, -1]
        tau = t * (1.0 + 0.5 * self.lam * rho)
        h = self.imm.induced_chart.metric(points[:, 1:-1])
        size = self.k + 2
        out = np.zeros((points.shape[0], size, size))
        out[:, 0, 0] = 2.0 * rho
        out[:, 0, -1] = out[:, -1, 0] = t
        out[:, 1:-1, 1:-1] = (tau ** 2)[:, None, None] * h
        return out

    def samples(self, count: int = 32, seed: int = 0) -> np.ndarray:
        return self.source_box.samples(count, seed)

    def pullback_residual(self, points: np.ndarray) -> float:
        amb = self.ambient_immersion
        points = np.asarray(points, dtype=float).reshape(-1, self.k + 2)
        dj = amb.jacobian(points)
        G = self.ambient_chart.metric(amb.map(points))
        pulled = np.einsum('...Aa,...AB,...Bb->...ab', dj, G, dj)
        return float(np.max(np.abs(pulled - self.expected_pullback(points))))

    def mean_curvature_residual(self, points: np.ndarray) -> float:
        """max |H̃| بالمقياس المحيط (الحزمة العمودية ريمانية)"""
        geo = SubmanifoldGeometry.at(self.ambient_immersion, points)
        return float(np.max(np.sqrt(np.abs(geo.mean_curvature_squared))))

    def ricci_residual(self, points: np.ndarray) -> float:
        """max|R̃ic| على نقاط G̃ (بإحداثيات المخطط المحيط)"""
        data = CurvatureData.at(self.ambient_chart, points)
        return float(np.max(np.abs(data.ricci)))

    def ambient_samples(self, count: int = 32, seed: int = 0) -> np.ndarray:
        return self.ambient_chart.box.samples(count, seed)

    def to_dict(self) -> Dict:
        return {'base': self.imm.name, 'lambda': self.lam, 'eps': self.eps, 'chart': self.ambient_chart.name}


# ---------------------------------------------------------------------------
# Hypothesis gate
# ---------------------------------------------------------------------------

def check_minimal_einstein(imm: ImmersionChart, lam: Optional[float] = None,
                           points: Optional[np.ndarray] = None, seed: int = 0) -> Dict[str, float]:
    """يرفع NotMinimalError أو NotEinsteinError مع البواقي المقاسة"""
    lam = einstein_constant(imm, lam)
    if points is None:
        points = imm.box.samples(GATE_SAMPLES, seed)
    geo = SubmanifoldGeometry.at(imm, points)
    h_residual = float(np.max(np.sqrt(np.abs(geo.mean_curvature_squared))))
    e_residual = einstein_residual(imm.target, geo.y, lam)
    measured = {'mean_curvature': h_residual, 'einstein': e_residual, 'lambda': lam}
    if h_residual > MINIMAL_TOLERANCE:
        raise NotMinimalError(f"❌ '{imm.name}' ليس أصغرياً: |H| = {h_residual:.3e}", measured)
    if e_residual > EINSTEIN_TOLERANCE:
        raise NotEinsteinError(f"❌ هدف '{imm.name}' ليس أينشتاين بالثابت λ = {lam:g}: "
                               f"|Ric − (n−1)λg| = {e_residual:.3e}", measured)
    return measured


# ---------------------------------------------------------------------------
# Straightenable invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StraightInvariantSpec:
    """📦 متعدد حدود انقباضي بدرجة a في L̊ ودرجة b في الانحناء، وقوة لابلاسيان c"""

    name: str
    a: int
    b: int
    c: int = 0
    ell: Optional[int] = None
    r: Optional[int] = None

    @property
    def weight(self) -> int:
        return -self.a - 2 * self.b

    def descends(self, k: int) -> bool:
        """w − 2c ≥ −k"""
        return self.weight - 2 * self.c >= -k

    def values(self, geo: SubmanifoldGeometry) -> np.ndarray:
        if self.name == 'L2':
            return geo.trace_free_squared
        if self.name == 'L2ell':
            return geo.trace_free_squared ** self.ell
        if self.name == 'L2sq':
            return geo.trace_free_square_norm
        if self.name == 'Pfr':
            return geo.hat_weyl_pfaffian(self.r)
        if self.name == 'Wtrace':
            return geo.weyl_full_trace
        raise GateError(f"❌ ثابت غير معروف: '{self.name}'", {'presets': sorted(PRESETS)})

    @classmethod
    def preset(cls, name: str, c: int = 0, ell: Optional[int] = None,
               r: Optional[int] = None) -> 'StraightInvariantSpec':
        if name not in PRESETS:
            raise GateError(f"❌ إعداد مسبق غير معروف: '{name}'", {'presets': sorted(PRESETS)})
        return PRESETS[name](c, ell, r)

    def to_dict(self) -> Dict:
        return {'name': self.name, 'a': self.a, 'b': self.b, 'c': self.c, 'ell': self.ell, 'r': self.r,
                'weight': self.weight}


def _l2ell(c: int, ell: Optional[int], r: Optional[int]) -> StraightInvariantSpec:
    if ell is None or ell < 1:
        raise GateError("❌ L2ell يتطلب ell ≥ 1")
    return StraightInvariantSpec('L2ell', 2 * ell, 0, c, ell=ell)


def _pfr(c: int, ell: Optional[int], r: Optional[int]) -> StraightInvariantSpec:
    if r is None or r < 0:
        raise GateError("❌ Pfr يتطلب r ≥ 0")
    return StraightInvariantSpec('Pfr', 0, r, c, r=r)


PRESETS: Dict[str, Callable[[int, Optional[int], Optional[int]], StraightInvariantSpec]] = {
    'L2': lambda c, ell, r: StraightInvariantSpec('L2', 2, 0, c),
    'L2ell': _l2ell,
    'L2sq': lambda c, ell, r: StraightInvariantSpec('L2sq', 4, 0, c),
    'Pfr': _pfr,
    'Wtrace': lambda c, ell, r: StraightInvariantSpec('Wtrace', 0, 1, c),
}


def straightenable_field(spec: StraightInvariantSpec, imm: ImmersionChart) -> Field:
    """الحقل x ↦ I(x) بعد فحص الفرضيات مرة واحدة"""

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
        return spec.values(SubmanifoldGeometry.at(imm, points))

    return fn


def evaluate_straightenable(spec: StraightInvariantSpec, imm: ImmersionChart, x: Sequence[float],
                            lam: Optional[float] = None) -> float:
    if spec.c != 0:
        raise GateError(f"❌ evaluate_straightenable يتطلب c = 0، وصل {spec.c}: استخدم straightened_value")
    check_minimal_einstein(imm, lam)
    point = np.asarray(x, dtype=float).reshape(1, imm.dim)
    return float(straightenable_field(spec, imm)(point)[0])


def straightening_shift(spec: StraightInvariantSpec, k: int, s: int, lam: float) -> float:
    """(a+2b+2s)(k−a−2b−2s−1)λ"""
    d = spec.a + 2 * spec.b + 2 * s
    return d * (k - d - 1) * lam


def straightened_field(spec: StraightInvariantSpec, imm: ImmersionChart, lam: Optional[float] = None,
                       relative_step: float = FD_RELATIVE_STEP) -> Field:
    """∏_{s<c}(Δ̄ + (a+2b+2s)(k−a−2b−2s−1)λ) مطبقاً على حقل c = 0"""
    lam = einstein_constant(imm, lam)
    k = imm.dim
    if not spec.descends(k):
        logger.debug(f"⚠️ {spec.name}: w − 2c = {spec.weight - 2 * spec.c} < −k، القيمة لا تنزل لثابت تطابقي")
    fn = straightenable_field(spec, imm)
    for s in range(spec.c):
        shift = straightening_shift(spec, k, s, lam)
        fn = _shifted_laplacian(imm, fn, shift, relative_step * (s + 1))
    return fn


def _shifted_laplacian(imm: ImmersionChart, fn: Field, shift: float, step: float) -> Field:
    def stepped(points: np.ndarray) -> np.ndarray:
        return laplacian_field(imm, fn, points, step) + shift * fn(points)

    return stepped


def straightened_value(spec: StraightInvariantSpec, imm: ImmersionChart, x: Sequence[float],
                       lam: Optional[float] = None) -> float:
    check_minimal_einstein(imm, lam)
    point = np.asarray(x, dtype=float).reshape(1, imm.dim)
    return float(straightened_field(spec, imm, lam)(point)[0])


def tau_power_laplacian(k: int, w: float, lam: float) -> float:
    """Δ̃τ^w = −wλ(k+w−1)τ^{w−2}"""
    return -w * lam * (k + w - 1)


# ---------------------------------------------------------------------------
# Direct ambient Laplacian on S̃
# ---------------------------------------------------------------------------

def ambient_pullback_chart(imm: ImmersionChart, lam: float, eps: float) -> MetricChart:
    """المقياس 2ρ dt² + 2t dt dρ + τ²(j*g) على إحداثيات (t, x, ρ)"""
    base = imm.induced_chart
    if base.is_symbolic:
        return canonical_ambient(base, lam, eps)
    coords = [_fresh('t', imm.coordinates)] + list(imm.coordinates) + [_fresh('r', imm.coordinates)]
    box = DomainBox.from_intervals([(0.5, 1.5)] + list(zip(imm.box.lower, imm.box.upper)) + [(-eps, eps)],
                                   [False] + list(imm.box.periodic) + [False])
    k = imm.dim

    def metric_fn(points: np.ndarray) -> np.ndarray:
        t, rho = points[..., 0], points[..., -1]
        tau = t * (1.0 + 0.5 * lam * rho)
        out = np.zeros(points.shape[:-1] + (k + 2, k + 2))
        out[..., 0, 0] = 2.0 * rho
        out[..., 0, -1] = out[..., -1, 0] = t
        out[..., 1:-1, 1:-1] = (tau ** 2)[..., None, None] * base.metric(points[..., 1:-1])
        return out

    return MetricChart.from_callable(f"ambient_pullback({imm.name})", coords, metric_fn, box, riemannian=False)


def ambient_laplacian_direct(imm: ImmersionChart, u: ex.ExprLike, w: float, x: Sequence[float],
                             lam: Optional[float] = None, eps: Optional[float] = None) -> float:
    """Δ̃(τ^w u) = −G^{AB}(∂_A∂_B F − Γ^C_{AB}∂_C F) عند t = 1 و ρ = 0"""
    values = ambient_laplacian_field(imm, u, w, np.asarray(x, dtype=float).reshape(1, imm.dim), lam, eps)
    return float(values[0])


def ambient_laplacian_field(imm: ImmersionChart, u: ex.ExprLike, w: float, points: np.ndarray,
                            lam: Optional[float] = None, eps: Optional[float] = None) -> np.ndarray:
    lam = einstein_constant(imm, lam)
    eps = min(0.1, 1.0 / (2.0 * abs(lam) + 1.0)) if eps is None else float(eps)
    chart = ambient_pullback_chart(imm, lam, eps)
    t_name, r_name = chart.coordinates[0], chart.coordinates[-1]
    u_expr = ex.as_expr(u)
    unknown = ex.free_variables(u_expr) - set(imm.coordinates)
    if unknown:
        raise ImmersionError(f"❌ متغيرات غير معرفة في u: {sorted(unknown)}")
    tau = ex.mul(ex.Var(t_name), ex.add(ex.Num(1.0), ex.mul(ex.Num(0.5 * lam), ex.Var(r_name))))
    F = ex.mul(ex.power(tau, ex.Num(float(w))), u_expr)

    points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
    N = points.shape[0]
    lifted = np.concatenate([np.ones((N, 1)), points, np.zeros((N, 1))], axis=-1)
    env = {c: lifted[:, i] for i, c in enumerate(chart.coordinates)}
    size = chart.dim
    d1 = [ex.differentiate(F, c) for c in chart.coordinates]
    first = np.stack([ex.CompiledExpr(e)(env, (N,)) for e in d1], axis=-1)
    second = np.empty((N, size, size))
    for A in range(size):
        for B in range(A, size):
            value = ex.CompiledExpr(ex.differentiate(d1[A], chart.coordinates[B]))(env, (N,))
            second[:, A, B] = second[:, B, A] = value
    _, G_inv, gamma = connection(chart, lifted)
    hess = second - np.einsum('...CAB,...C->...AB', gamma, first)
    return -np.einsum('...AB,...AB->...', G_inv, hess)


def intrinsic_straightening(imm: ImmersionChart, u: ex.ExprLike, w: float, points: np.ndarray,
                            lam: Optional[float] = None) -> np.ndarray:
    """(Δ̄ − w(k+w−1)λ)u بالمقياس المستحث"""
    lam = einstein_constant(imm, lam)
    k = imm.dim
    points = np.asarray(points, dtype=float).reshape(-1, k)
    u_expr = ex.as_expr(u)
    env = {c: points[:, i] for i, c in enumerate(imm.coordinates)}
    return laplacian_field(imm, u_expr, points) - w * (k + w - 1) * lam * ex.CompiledExpr(u_expr)(env, (len(points),))


# ---------------------------------------------------------------------------
# Gauss–Bonnet–Chern integrands
# ---------------------------------------------------------------------------

def gbc_coefficient(k: int, r: int) -> Fraction:
    """(k/2−1)!(k−2r−1)!!/(r−1)! بدون العامل (2λ)^{k/2−r}"""
    _check_gbc_degree(k, r)
    return Fraction(factorial(k // 2 - 1) * double_factorial(k - 2 * r - 1), factorial(r - 1))


def _check_gbc_degree(k: int, r: int) -> None:
    if k % 2:
        raise GateError(f"❌ تكاملات GBC تتطلب k زوجياً، وصل {k}")
    if not 1 <= r <= k // 2:
        raise GateError(f"❌ الدرجة r = {r} خارج المدى 1 ≤ r ≤ {k // 2}")


def gbc_integrand(imm: ImmersionChart, r: int, lam: Optional[float] = None) -> Field:
    """x ↦ (2λ)^{k/2−r}(k/2−1)!(k−2r−1)!!/(r−1)!·Pf_r(Ŵ)(x)"""
    k = imm.dim
    coefficient = float(gbc_coefficient(k, r))
    lam = einstein_constant(imm, lam)
    power = k // 2 - r
    scale = coefficient * ((2.0 * lam) ** power if power else 1.0)

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, k)
        if scale == 0.0:
            return np.zeros(points.shape[0])
        return scale * SubmanifoldGeometry.at(imm, points).hat_weyl_pfaffian(r)

    return fn


def pfaffian_decomposition(geo: SubmanifoldGeometry, lam: float) -> np.ndarray:
    """Σ_{r=0}^{k/2}(k−2r−1)!!λ^{k/2−r}Pf_r(Ŵ)"""
    k = geo.k
    half = k // 2
    total = np.zeros(geo.points.shape[0])
    for r in range(half + 1):
        weight = double_factorial(k - 2 * r - 1) * (lam ** (half - r) if half - r else 1.0)
        total = total + weight * geo.hat_weyl_pfaffian(r)
    return total


def intrinsic_pfaffian_decomposition_check(imm: ImmersionChart, x: Sequence[float],
                                           lam: Optional[float] = None) -> float:
    points = np.asarray(x, dtype=float).reshape(-1, imm.dim)
    return pfaffian_decomposition_residual(imm, points, lam)


def pfaffian_decomposition_residual(imm: ImmersionChart, points: np.ndarray, lam: Optional[float] = None) -> float:
    k = imm.dim
    if k % 2:
        raise GateError(f"❌ تفكيك الفافيان يتطلب k زوجياً، وصل {k}")
    lam = einstein_constant(imm, lam)
    geo = SubmanifoldGeometry.at(imm, points)
    intrinsic = geo.intrinsic.pfaffian()
    return float(np.max(np.abs(intrinsic - pfaffian_decomposition(geo, lam))))


def straight_mod_divergence_coefficient(w: int, c: int, k: int, lam: float) -> Fraction:
    """(2λ)^c(−w/2+c−1)!(k+w−1)!!/((−w/2−1)!(k+w−2c−1)!!)"""
    if w % 2 or w > -2:
        raise GateError(f"❌ الوزن w = {w} يجب أن يكون زوجياً و ≤ −2")
    if k + w - 2 * c - 1 < -1:
        raise GateError(f"❌ w − 2c = {w - 2 * c} < −k = {-k}: المعامل غير معرف")
    half = -w // 2
    ratio = Fraction(factorial(half + c - 1) * double_factorial(k + w - 1),
                     factorial(half - 1) * double_factorial(k + w - 2 * c - 1))
    return (2 * to_fraction(lam)) ** c * ratio


def willmore_field(imm: ImmersionChart, lam: Optional[float] = None) -> Field:
    """λ + |H|²"""
    lam = einstein_constant(imm, lam)

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
        return lam + SubmanifoldGeometry.at(imm, points).mean_curvature_squared

    return fn
