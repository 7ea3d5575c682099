# core/catalog.py
"""
📚 الكتالوج المدمج: خرائط مقاييس وغمرات نموذجية مع بياناتها الطوبولوجية

كل مدخل مصنع (factory) يأخذ معاملات مسماة ويرجع MetricChart أو ImmersionChart.
البحث بالاسم يقترح أقرب الأسماء عند الخطأ (difflib).
"""

import difflib
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from . import exprlang as ex
from .chartgeom import DomainBox, MetricChart
from .errors import ChartError, ImmersionError, NonPolynomialError
from .submanifold import ImmersionChart, ImmersionInfo

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


# ---------------------------------------------------------------------------
# Coordinate helpers
# ---------------------------------------------------------------------------

def sphere_angles(prefix: str, m: int) -> List[str]:
    """إحداثيات S^m: زوايا قطبية ثم زاوية سمتية دورية أخيرة"""
    return [f"{prefix}{i + 1}" for i in range(m)]


def sphere_intervals(m: int) -> Tuple[List[Tuple[float, float]], List[bool]]:
    intervals = [(0.0, math.pi)] * (m - 1) + [(0.0, TWO_PI)]
    periodic = [False] * (m - 1) + [True]
    return intervals, periodic


def sphere_diagonal(angles: Sequence[str], scale: ex.Expr) -> List[ex.Expr]:
    """مركبات قطرية للمقياس scale·g_{S^m} بالإحداثيات الكروية الفائقة"""
    diag = []
    factor: ex.Expr = scale
    for i, name in enumerate(angles):
        diag.append(factor)
        if i < len(angles) - 1:
            factor = ex.mul(factor, ex.power(ex.call('sin', ex.Var(name)), ex.Num(2.0)))
    return diag


def _diagonal(entries: Sequence[ex.ExprLike]) -> List[List[ex.Expr]]:
    n = len(entries)
    return [[ex.as_expr(entries[a]) if a == b else ex.Num(0.0) for b in range(n)] for a in range(n)]


def _fresh(name: str, taken: Sequence[str]) -> str:
    while name in taken:
        name += '_'
    return name


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------

def euclidean(n: int, periodic: bool = False) -> MetricChart:
    coords = [f"x{i + 1}" for i in range(n)]
    box = DomainBox.from_intervals([(0.0, 1.0)] * n, [periodic] * n)
    return MetricChart.from_expressions(f"euclidean({n})", coords, _diagonal([1.0] * n), box)


def round_sphere(n: int, radius: float = 1.0) -> MetricChart:
    if n < 2:
        raise ChartError(f"❌ round_sphere يتطلب n ≥ 2، وصل {n}")
    coords = sphere_angles('th', n)
    intervals, periodic = sphere_intervals(n)
    diag = sphere_diagonal(coords, ex.Num(float(radius) ** 2))
    return MetricChart.from_expressions(f"round_sphere({n},{radius:g})", coords, _diagonal(diag),
                                        DomainBox.from_intervals(intervals, periodic))


def hyperbolic_half_space(n: int, periodic: int = 0) -> MetricChart:
    """ρ⁻²(dρ² + dx²) على ρ ∈ (0, 1)؛ أول `periodic` محاور x دورية بدور 1 (نموذج القمع)"""
    coords = ['rho'] + [f"x{i + 1}" for i in range(n - 1)]
    entry = ex.parse('1/rho^2')
    box = DomainBox.from_intervals([(0.0, 1.0)] + [(0.0, 1.0)] * (n - 1),
                                   [False] + [i < periodic for i in range(n - 1)])
    return MetricChart.from_expressions(f"hyperbolic_half_space({n})", coords, _diagonal([entry] * n), box)


def hyperbolic_ball(n: int) -> MetricChart:
    """ρ⁻²(dρ² + (1−ρ²/4)² g_{S^{n−1}}) مع دالة التعريف الجيوديسية ρ ∈ (0, 2)"""
    if n < 2:
        raise ChartError(f"❌ hyperbolic_ball يتطلب n ≥ 2، وصل {n}")
    angles = sphere_angles('th', n - 1)
    intervals, periodic = sphere_intervals(n - 1)
    warp = ex.parse('(1 - rho^2/4)^2/rho^2')
    diag = [ex.parse('1/rho^2')] + sphere_diagonal(angles, warp)
    box = DomainBox.from_intervals([(0.0, 2.0)] + intervals, [False] + periodic)
    return MetricChart.from_expressions(f"hyperbolic_ball({n})", ['rho'] + angles, _diagonal(diag), box)


def product_spheres(p: int, r1: float, q: int, r2: float) -> MetricChart:
    a, b = sphere_angles('u', p), sphere_angles('v', q)
    ia, pa = sphere_intervals(p)
    ib, pb = sphere_intervals(q)
    diag = sphere_diagonal(a, ex.Num(r1 ** 2)) + sphere_diagonal(b, ex.Num(r2 ** 2))
    return MetricChart.from_expressions(f"product_spheres({p},{r1:g},{q},{r2:g})", a + b, _diagonal(diag),
                                        DomainBox.from_intervals(ia + ib, pa + pb))


def sphere_join(p: int, q: int) -> MetricChart:
    """S^{p+q+1} بالصيغة ds² + cos²s g_{S^p} + sin²s g_{S^q} على s ∈ (0, π/2)"""
    a, b = sphere_angles('u', p), sphere_angles('v', q)
    ia, pa = sphere_intervals(p)
    ib, pb = sphere_intervals(q)
    diag = ([ex.Num(1.0)] + sphere_diagonal(a, ex.parse('cos(s)^2'))
            + sphere_diagonal(b, ex.parse('sin(s)^2')))
    box = DomainBox.from_intervals([(0.0, HALF_PI)] + ia + ib, [False] + pa + pb)
    return MetricChart.from_expressions(f"sphere_join({p},{q})", ['s'] + a + b, _diagonal(diag), box)


def canonical_ambient(base: MetricChart, lam: float, eps: Optional[float] = None) -> MetricChart:
    """
    g̃ = 2ρ dt² + 2t dt dρ + τ²g مع τ = t(1 + λρ/2)، إحداثيات (t, base…, ρ)
    المقياس لورنتزي: riemannian=False
    """
    if not base.is_symbolic:
        raise ChartError("❌ الفضاء المحيط القانوني يتطلب خريطة قاعدة تعبيرية")
    if eps is None:
        eps = min(0.1, 1.0 / (2.0 * abs(lam) + 1.0))
    t_name = _fresh('t', base.coordinates)
    r_name = _fresh('r', base.coordinates)
    t, r = ex.Var(t_name), ex.Var(r_name)
    tau = ex.mul(t, ex.add(ex.Num(1.0), ex.mul(ex.Num(0.5 * lam), r)))
    tau2 = ex.power(tau, ex.Num(2.0))
    n = base.dim
    size = n + 2
    zero = ex.Num(0.0)
    comps = [[zero] * size for _ in range(size)]
    comps[0][0] = ex.mul(ex.Num(2.0), r)
    comps[0][size - 1] = comps[size - 1][0] = t
    for a in range(n):
        for b in range(n):
            g_ab = base.components[a][b]
            comps[a + 1][b + 1] = zero if (isinstance(g_ab, ex.Num) and g_ab.value == 0.0) else ex.mul(tau2, g_ab)
    box = DomainBox.from_intervals([(0.5, 1.5)] + list(zip(base.box.lower, base.box.upper)) + [(-eps, eps)],
                                   [False] + list(base.box.periodic) + [False])
    return MetricChart.from_expressions(f"canonical_ambient({base.name},{lam:g})",
                                        [t_name] + list(base.coordinates) + [r_name],
                                        comps, box, riemannian=False)


# ---------------------------------------------------------------------------
# Immersions
# ---------------------------------------------------------------------------

def affine_plane(k: int, n: int) -> ImmersionChart:
    target = euclidean(n)
    coords = target.coordinates[:k]
    comps = list(coords) + [0.0] * (n - k)
    info = ImmersionInfo(compact=False, einstein_lambda=0.0, minimal=True, description='totally geodesic k-plane')
    return ImmersionChart.from_expressions(f"affine_plane({k},{n})", target, coords, comps,
                                           DomainBox.from_intervals([(0.0, 1.0)] * k), info)


def equator_sphere(k: int, n: int) -> ImmersionChart:
    """S^k ⊂ S^n بتثبيت أول n−k زوايا قطبية عند π/2"""
    if not 1 <= k < n:
        raise ImmersionError(f"❌ equator_sphere يتطلب 1 ≤ k < n، وصل ({k}, {n})")
    target = round_sphere(n)
    fixed = n - k
    coords = list(target.coordinates[fixed:])
    comps = [HALF_PI] * fixed + coords
    intervals, periodic = sphere_intervals(k)
    info = ImmersionInfo(euler_characteristic=1 + (-1) ** k, compact=True, einstein_lambda=1.0, minimal=True,
                         description='totally geodesic great sphere')
    return ImmersionChart.from_expressions(f"equator_sphere({k},{n})", target, coords, comps,
                                           DomainBox.from_intervals(intervals, periodic), info)


def sphere_in_euclidean(k: int, radius: float = 1.0) -> ImmersionChart:
    """S^k بنصف قطر r في الفضاء الإقليدي: |H| = 1/r"""
    target = euclidean(k + 1)
    coords = sphere_angles('th', k)
    comps: List[ex.Expr] = []
    prefix: ex.Expr = ex.Num(float(radius))
    for name in coords[:-1]:
        comps.append(ex.mul(prefix, ex.call('cos', ex.Var(name))))
        prefix = ex.mul(prefix, ex.call('sin', ex.Var(name)))
    last = ex.Var(coords[-1])
    comps.append(ex.mul(prefix, ex.call('cos', last)))
    comps.append(ex.mul(prefix, ex.call('sin', last)))
    intervals, periodic = sphere_intervals(k)
    info = ImmersionInfo(euler_characteristic=1 + (-1) ** k, compact=True, einstein_lambda=0.0, minimal=False,
                         description='round sphere, totally umbilic')
    return ImmersionChart.from_expressions(f"sphere_in_euclidean({k},{radius:g})", target, coords, comps,
                                           DomainBox.from_intervals(intervals, periodic), info)


def generalized_clifford(p: int, q: int) -> ImmersionChart:
    """S^p(√(p/(p+q))) × S^q(√(q/(p+q))) ⊂ S^{p+q+1}: أصغري"""
    target = sphere_join(p, q)
    s0 = math.acos(math.sqrt(p / (p + q)))
    coords = list(target.coordinates[1:])
    ia, pa = sphere_intervals(p)
    ib, pb = sphere_intervals(q)
    chi = (1 + (-1) ** p) * (1 + (-1) ** q)
    info = ImmersionInfo(euler_characteristic=chi, compact=True, einstein_lambda=1.0, minimal=True,
                         description='minimal product of spheres')
    return ImmersionChart.from_expressions(f"generalized_clifford({p},{q})", target, coords, [s0] + coords,
                                           DomainBox.from_intervals(ia + ib, pa + pb), info)


def clifford_torus() -> ImmersionChart:
    imm = generalized_clifford(1, 1)
    imm.name = 'clifford_torus'
    return imm


def totally_geodesic_hyperbolic(k: int, n: int, model: str = 'ball') -> ImmersionChart:
    """Hᵏ ⊂ Hⁿ: نموذج الكرة (χ = 1) أو نموذج القمع الدوري المقطوع عند ρ = 1 (χ = 0)"""
    if not 2 <= k < n:
        raise ImmersionError(f"❌ يتطلب 2 ≤ k < n، وصل ({k}, {n})")
    if model == 'ball':
        target = hyperbolic_ball(n)
        fixed = n - k
        angles = list(target.coordinates[1 + fixed:])
        coords = ['rho'] + angles
        comps = ['rho'] + [HALF_PI] * fixed + angles
        intervals, periodic = sphere_intervals(k - 1)
        box = DomainBox.from_intervals([(0.0, 2.0)] + intervals, [False] + periodic)
        info = ImmersionInfo(euler_characteristic=1, compact=False, einstein_lambda=-1.0, minimal=True,
                             boundary_axis=0, description='totally geodesic hyperbolic subspace, ball model')
    elif model in ('half_space', 'cusp'):
        target = hyperbolic_half_space(n, periodic=k - 1)
        coords = list(target.coordinates[:k])
        comps = coords + [0.0] * (n - k)
        box = DomainBox.from_intervals([(0.0, 1.0)] * k, [False] + [True] * (k - 1))
        info = ImmersionInfo(euler_characteristic=0, compact=False, einstein_lambda=-1.0, minimal=True,
                             boundary_axis=0, edge={'axis': 0, 'value': 1.0},
                             description='periodic cusp truncated at rho = 1')
    else:
        raise ImmersionError(f"❌ نموذج غير معروف: '{model}'", {'suggestions': ['ball', 'half_space']})
    return ImmersionChart.from_expressions(f"totally_geodesic_hyperbolic({k},{n},{model})", target, coords,
                                           comps, box, info)


def _hyperbolic_graph(k: int = 2, n: int = 3, boundary: Optional[Sequence[str]] = None,
                      order: Optional[int] = None, free: Optional[Sequence[str]] = None,
                      period: float = 1.0) -> ImmersionChart:
    from .expansion import boundary_variables, solve_minimal_expansion
    from .jets import Poly

    seeded = None
    if free is not None:
        try:
            for item in free:
                Poly.from_expr(item, boundary_variables(k))
        except NonPolynomialError:
            # معامل حر غير كثير حدود: يضاف للغمر العددي فقط
            seeded, free = list(free), None
    ansatz = solve_minimal_expansion(boundary or ['0'] * (n - k), k, n, order=order, free=free)
    return ansatz.to_immersion(period=period, free=seeded)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

CHARTS: Dict[str, Tuple[Callable[..., MetricChart], str]] = {
    'euclidean': (euclidean, 'flat R^n on the unit box (periodic=true gives a flat torus)'),
    'round_sphere': (round_sphere, 'S^n of given radius, hyperspherical coordinates'),
    'hyperbolic_half_space': (hyperbolic_half_space, 'upper half space rho^-2(drho^2 + dx^2)'),
    'hyperbolic_ball': (hyperbolic_ball, 'ball model with geodesic defining function rho in (0, 2)'),
    'product_spheres': (product_spheres, 'S^p(r1) x S^q(r2)'),
    'sphere_join': (sphere_join, 'S^(p+q+1) as ds^2 + cos^2 s g_Sp + sin^2 s g_Sq'),
}

IMMERSIONS: Dict[str, Tuple[Callable[..., ImmersionChart], str]] = {
    'affine_plane': (affine_plane, 'R^k in R^n'),
    'equator_sphere': (equator_sphere, 'great S^k in S^n'),
    'sphere_in_euclidean': (sphere_in_euclidean, 'round S^k of radius r in R^(k+1)'),
    'clifford_torus': (clifford_torus, 'S^1(1/sqrt2) x S^1(1/sqrt2) in S^3'),
    'generalized_clifford': (generalized_clifford, 'minimal S^p x S^q in S^(p+q+1)'),
    'totally_geodesic_hyperbolic': (totally_geodesic_hyperbolic, 'H^k in H^n (ball or cusp model)'),
    'hyperbolic_graph': (_hyperbolic_graph, 'asymptotically minimal graph over the cusp H^k in H^n'),
}


def _miss(kind: str, name: str, names: Sequence[str], error_cls):
    suggestions = difflib.get_close_matches(name, names, n=3, cutoff=0.5)
    hint = f" - هل تقصد: {', '.join(suggestions)}؟" if suggestions else ''
    raise error_cls(f"❌ {kind} غير موجود في الكتالوج: '{name}'{hint}",
                    {'name': name, 'suggestions': suggestions})


def get_chart(name: str, **params: Any) -> MetricChart:
    if name == 'canonical_ambient':
        base = params.pop('base')
        if isinstance(base, dict):
            base = get_chart(base['name'], **base.get('params', {}))
        return canonical_ambient(base, **params)
    if name not in CHARTS:
        _miss('الخريطة', name, list(CHARTS) + ['canonical_ambient'], ChartError)
    try:
        return CHARTS[name][0](**params)
    except TypeError as e:
        raise ChartError(f"❌ معاملات غير صالحة للخريطة '{name}': {e}", {'params': params}) from e


def get_immersion(name: str, **params: Any) -> ImmersionChart:
    if name not in IMMERSIONS:
        _miss('الغمر', name, list(IMMERSIONS), ImmersionError)
    try:
        return IMMERSIONS[name][0](**params)
    except TypeError as e:
        raise ImmersionError(f"❌ معاملات غير صالحة للغمر '{name}': {e}", {'params': params}) from e


def listing() -> List[Dict[str, str]]:
    """قائمة المداخل لأمر catalog"""
    rows = [{'kind': 'chart', 'name': name, 'description': desc} for name, (_, desc) in CHARTS.items()]
    rows.append({'kind': 'chart', 'name': 'canonical_ambient',
                 'description': 'Lorentzian 2rho dt^2 + 2t dt drho + tau^2 g over an Einstein base'})
    rows += [{'kind': 'immersion', 'name': name, 'description': desc} for name, (_, desc) in IMMERSIONS.items()]
    return rows
