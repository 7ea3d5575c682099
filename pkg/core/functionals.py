# core/functionals.py
"""
🧮 تجميع المتطابقات الرئيسية: GBC المضغوط والمنظَّم، المساحة المنظَّمة،
وتكاملات الصلابة مع فجوات المتباينات
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import exprlang as ex
from .ambient import (StraightInvariantSpec, check_minimal_einstein, einstein_constant,
                      gbc_integrand, straight_mod_divergence_coefficient, straightened_field, willmore_field)
from .chartgeom import DomainBox
from .errors import GateError, NotMinimalError
from .quadrature import DEFAULT_GRID, GridSpec, integrate_over, tensor_grid
from .renorm import (DEFAULT_LADDER, DEFAULT_TAIL_ORDER, EpsilonFit, convergent_integral,
                     renormalized_integral)
from .submanifold import FieldLike, ImmersionChart, SubmanifoldGeometry, divergence_field, integrate
from .tensor import double_factorial, factorial

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class GBCReport:
    """📊 طرفا متطابقة GBC محسوبان بشكل مستقل مع الباقي"""

    kind: str
    k: int
    n: int
    lam: float
    chi: Optional[int]
    chi_recovered: Optional[float]
    area: float
    pfaffian_integrals: Dict[int, float]
    lhs: float
    rhs: float
    residual: float
    relative_residual: float
    willmore_defect: float = 0.0
    edge_term: float = 0.0
    fit: Optional[Dict] = None
    refinement: Optional[Dict] = None

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['pfaffian_integrals'] = {str(r): v for r, v in self.pfaffian_integrals.items()}
        return data


@dataclass
class RigidityReport:
    """📊 طرفا معادلات |L|^{2ℓ} و |L²|² مع فجوات المتباينات والبواقي النقطية"""

    k: int
    n: int
    lam: float
    straightened: Dict[int, float]
    reduced: Dict[int, float]
    direct: Dict[int, float]
    square_straightened: Optional[float] = None
    square_reduced: Optional[float] = None
    square_direct: Optional[float] = None
    gaps: Dict[str, float] = field(default_factory=dict)
    einstein_gap_residual: Optional[float] = None
    codim_one_weyl_residual: Optional[float] = None

    def max_relative_mismatch(self) -> float:
        pairs = [(self.straightened[ell], self.reduced[ell]) for ell in self.straightened]
        if self.square_straightened is not None:
            pairs.append((self.square_straightened, self.square_reduced))
        return max((abs(a - b) / max(1.0, abs(b)) for a, b in pairs), default=0.0)

    def to_dict(self) -> Dict:
        data = asdict(self)
        for key in ('straightened', 'reduced', 'direct'):
            data[key] = {str(ell): v for ell, v in getattr(self, key).items()}
        data['max_relative_mismatch'] = self.max_relative_mismatch()
        return data


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _require_even(k: int) -> None:
    if k % 2:
        raise GateError(f"❌ متطابقة GBC تتطلب k زوجياً، وصل {k}")


def gbc_weight(k: int, r: int) -> float:
    """2^{r−k/2}(r−1)!/(k/2−1)!"""
    return 2.0 ** (r - k // 2) * factorial(r - 1) / factorial(k // 2 - 1)


def _lam_power(lam: float, p: int) -> float:
    return lam ** p if p else 1.0


def intrinsic_pfaffian_field(imm: ImmersionChart):
    def fn(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
        return SubmanifoldGeometry.at(imm, points).intrinsic.pfaffian()

    return fn


def edge_term(imm: ImmersionChart, grid: GridSpec = DEFAULT_GRID) -> float:
    """∮ κ_g ds عند الحافة المصطنعة: κ_g = div ν مع ν العمودي الخارجي"""
    edge = imm.info.edge
    if not edge:
        return 0.0
    axis, value = int(edge['axis']), float(edge['value'])
    outward = 1.0 if math.isclose(value, imm.box.upper[axis]) else -1.0
    chart = imm.induced_chart
    k = imm.dim
    others = [i for i in range(k) if i != axis]
    if not others:
        raise GateError("❌ حافة على منحنى أحادي البعد غير مدعومة")

    def normal_component(points: np.ndarray) -> np.ndarray:
        h_inv = np.linalg.inv(chart.metric(points))
        return outward / np.sqrt(h_inv[..., axis, axis])

    zero = 0.0
    one_form: List[FieldLike] = [normal_component if a == axis else zero for a in range(k)]
    sub_box = DomainBox.from_intervals([(imm.box.lower[i], imm.box.upper[i]) for i in others],
                                       [imm.box.periodic[i] for i in others])
    counts = [grid] * len(others) if isinstance(grid, int) else [list(grid)[i] for i in others]
    quad = tensor_grid(sub_box, counts)

    def density(base: np.ndarray) -> np.ndarray:
        points = np.empty((base.shape[0], k))
        points[:, axis] = value
        points[:, others] = base
        h = chart.metric(points)[:, others][:, :, others]
        return divergence_field(imm, one_form, points) * np.sqrt(np.abs(np.linalg.det(h)))

    return integrate_over(quad, density)


def _double(grid: GridSpec) -> GridSpec:
    if isinstance(grid, int):
        return 2 * grid
    return [2 * g for g in grid]


# ---------------------------------------------------------------------------
# Gauss–Bonnet–Chern
# ---------------------------------------------------------------------------

def compact_gbc_check(imm: ImmersionChart, lam: Optional[float] = None, grid: GridSpec = DEFAULT_GRID,
                      threads: int = 1, refine: bool = False, gate: bool = True) -> GBCReport:
    """(2π)^{k/2}χ = (k−1)!!λ^{k/2}Area + Σ_r 2^{r−k/2}((r−1)!/(k/2−1)!)∫𝒫_{r,k}"""
    k, n = imm.dim, imm.target.dim
    _require_even(k)
    if not imm.info.compact:
        raise GateError(f"❌ '{imm.name}' ليس مضغوطاً: استخدم renormalized_gbc_check")
    lam = einstein_constant(imm, lam)
    if gate:
        check_minimal_einstein(imm, lam)
    half = k // 2
    area = integrate(imm, 1.0, grid, threads)
    integrals = {r: integrate(imm, gbc_integrand(imm, r, lam), grid, threads) for r in range(1, half + 1)}
    pf_bar = integrate(imm, intrinsic_pfaffian_field(imm), grid, threads)
    chi_recovered = pf_bar / (2.0 * math.pi) ** half
    chi = imm.info.euler_characteristic
    if chi is None:
        chi = int(round(chi_recovered))
        logger.warning(f"⚠️ χ غير معروف في الكتالوج: استخدام القيمة المستعادة {chi}")
    lhs = (2.0 * math.pi) ** half * chi
    rhs = double_factorial(k - 1) * _lam_power(lam, half) * area \
        + sum(gbc_weight(k, r) * v for r, v in integrals.items())
    residual = abs(lhs - rhs)
    relative = residual / max(1.0, abs(lhs), abs(area))
    report = GBCReport('compact', k, n, lam, chi, chi_recovered, area, integrals, lhs, rhs, residual, relative)
    if refine:
        finer = compact_gbc_check(imm, lam, _double(grid), threads, refine=False, gate=False)
        ratio = residual / finer.residual if finer.residual > 0 else None
        report.refinement = {'grid': _double(grid), 'residual': finer.residual, 'ratio': ratio}
    logger.info(f"📊 GBC مضغوط '{imm.name}': LHS={lhs:.10g} RHS={rhs:.10g} residual={residual:.3e}")
    return report


def renormalized_gbc_check(imm: ImmersionChart, lam: Optional[float] = None,
                           defining_fn: Optional[ex.ExprLike] = None,
                           ladder: Sequence[float] = DEFAULT_LADDER, grid: GridSpec = DEFAULT_GRID,
                           threads: int = 1, tail_order: int = DEFAULT_TAIL_ORDER,
                           recover_chi: bool = True) -> GBCReport:
    """(2π)^{k/2}χ = (k−1)!!λ^{k/2}𝒜 + Σ_r 2^{r−k/2}((r−1)!/(k/2−1)!)∫𝒫_{r,k} [+ ∫|H|² + ∮κ_g]"""
    k, n = imm.dim, imm.target.dim
    _require_even(k)
    if not imm.info.conformally_compact:
        raise GateError(f"❌ '{imm.name}' ليس مضغوطاً تطابقياً")
    lam = einstein_constant(imm, lam)
    minimal = imm.info.minimal
    if minimal:
        check_minimal_einstein(imm, lam)
    elif k != 2:
        raise NotMinimalError(f"❌ '{imm.name}' غير أصغري و k = {k}: الصيغة المنظمة تتطلب الأصغرية")
    half = k // 2

    fit = renormalized_integral(imm, 1.0, defining_fn, ladder, grid, threads, tail_order)
    renormalized_area = fit.finite_part
    integrals = {r: renormalized_integral(imm, gbc_integrand(imm, r, lam), defining_fn, ladder, grid, threads,
                                          tail_order).finite_part
                 for r in range(1, half + 1)}
    willmore_defect = 0.0
    if not minimal:
        willmore_defect = convergent_integral(
            imm, lambda p: SubmanifoldGeometry.at(imm, p).mean_curvature_squared, grid, threads)
    edge = edge_term(imm, grid)

    chi_recovered = None
    if recover_chi:
        pf_fit = renormalized_integral(imm, intrinsic_pfaffian_field(imm), defining_fn, ladder, grid,
                                       threads, tail_order)
        chi_recovered = (pf_fit.finite_part + edge) / (2.0 * math.pi) ** half
    chi = imm.info.euler_characteristic
    if chi is None:
        if chi_recovered is None:
            raise GateError(f"❌ χ غير معروف لـ '{imm.name}' ولم يُطلب استرجاعه")
        chi = int(round(chi_recovered))

    lhs = (2.0 * math.pi) ** half * chi
    rhs = (double_factorial(k - 1) * _lam_power(lam, half) * renormalized_area
           + sum(gbc_weight(k, r) * v for r, v in integrals.items()) + willmore_defect + edge)
    residual = abs(lhs - rhs)
    relative = residual / max(1.0, abs(lhs), abs(renormalized_area))
    logger.info(f"📊 GBC منظم '{imm.name}': 𝒜={renormalized_area:.10g} LHS={lhs:.10g} "
                f"RHS={rhs:.10g} residual={residual:.3e}")
    return GBCReport('renormalized', k, n, lam, chi, chi_recovered, renormalized_area, integrals, lhs, rhs,
                     residual, relative, willmore_defect, edge, fit.to_dict())


def renormalized_area(imm: ImmersionChart, defining_fn: Optional[ex.ExprLike] = None,
                      ladder: Sequence[float] = DEFAULT_LADDER, grid: GridSpec = DEFAULT_GRID,
                      threads: int = 1, tail_order: int = DEFAULT_TAIL_ORDER) -> EpsilonFit:
    return renormalized_integral(imm, 1.0, defining_fn, ladder, grid, threads, tail_order)


def renormalized_willmore_energy(imm: ImmersionChart, lam: Optional[float] = None,
                                 defining_fn: Optional[ex.ExprLike] = None,
                                 ladder: Sequence[float] = DEFAULT_LADDER, grid: GridSpec = DEFAULT_GRID,
                                 threads: int = 1, tail_order: int = DEFAULT_TAIL_ORDER) -> EpsilonFit:
    """^R∫(λ + |H|²)؛ يساوي λ𝒜 على الأسطح الأصغرية"""
    if imm.dim != 2:
        raise GateError(f"❌ طاقة ويلمور المنظمة معرفة للأسطح، وصل k = {imm.dim}")
    return renormalized_integral(imm, willmore_field(imm, lam), defining_fn, ladder, grid, threads, tail_order)


# ---------------------------------------------------------------------------
# Rigidity integrals
# ---------------------------------------------------------------------------

def rigidity_coefficient(k: int, ell: int, lam: float) -> float:
    """(−1)^c × معامل الاختزال بعد التكامل، c = k/2 − ℓ؛ مع λ = −1 يصبح 2^{k/2−ℓ}(k/2−1)!(k−2ℓ−1)!!/(ℓ−1)!"""
    c = k // 2 - ell
    return (-1) ** c * float(straight_mod_divergence_coefficient(-2 * ell, c, k, lam))


def square_coefficient(k: int, lam: float) -> float:
    """(−1)^c × معامل |L²|² مع c = k/2 − 2"""
    c = k // 2 - 2
    return (-1) ** c * float(straight_mod_divergence_coefficient(-4, c, k, lam))


def einstein_gap_residual(imm: ImmersionChart, points: np.ndarray) -> float:
    """max| |Ē|² − (|L²|² − |L|⁴/k) |"""
    geo = SubmanifoldGeometry.at(imm, points)
    k = geo.k
    intrinsic = geo.intrinsic
    E = intrinsic.ricci - (intrinsic.scalar / k)[..., None, None] * geo.h
    lhs = np.einsum('...ac,...bd,...ab,...cd->...', geo.h_inv, geo.h_inv, E, E, optimize=True)
    rhs = geo.second_square_norm - geo.second_squared ** 2 / k
    return float(np.max(np.abs(lhs - rhs)))


def codim_one_weyl_residual(imm: ImmersionChart, points: np.ndarray) -> float:
    """((k−2)/2)|W̄|² = −k|L²|² + ((k²−3k+3)/(k−1))|L|⁴ للسطوح الفائقة"""
    k, n = imm.dim, imm.target.dim
    if n != k + 1:
        raise GateError(f"❌ متطابقة فايل تتطلب بعداً مرافقاً 1، وصل {n - k}")
    if k < 3:
        raise GateError(f"❌ متطابقة فايل تتطلب k ≥ 3، وصل {k}")
    geo = SubmanifoldGeometry.at(imm, points)
    W = geo.intrinsic.weyl()
    norm = np.einsum('...ae,...bf,...cg,...dh,...abcd,...efgh->...', geo.h_inv, geo.h_inv, geo.h_inv, geo.h_inv,
                     W, W, optimize=True)
    lhs = 0.5 * (k - 2) * norm
    rhs = -k * geo.second_square_norm + (k * k - 3 * k + 3) / (k - 1) * geo.second_squared ** 2
    return float(np.max(np.abs(lhs - rhs)))


def rigidity_functionals(imm: ImmersionChart, ells: Optional[Sequence[int]] = None,
                         lam: Optional[float] = None, grid: GridSpec = DEFAULT_GRID, threads: int = 1,
                         points: Optional[np.ndarray] = None, seed: int = 0) -> RigidityReport:
    """
    ∫ι*((−Δ̃)^{k/2−ℓ}|L̃|^{2ℓ}) من قيم التقويم مقابل معامله × ∫|L|^{2ℓ}، ومثله لـ |L̃²|²
    """
    k, n = imm.dim, imm.target.dim
    _require_even(k)
    lam = einstein_constant(imm, lam)
    check_minimal_einstein(imm, lam)
    half = k // 2
    ells = list(range(1, half + 1)) if ells is None else [int(e) for e in ells]
    for ell in ells:
        if not 1 <= ell <= half:
            raise GateError(f"❌ ℓ = {ell} خارج المدى 1 ≤ ℓ ≤ {half}: w − 2(k/2−ℓ) < −k")
    if imm.info.compact:
        def total(fn):
            return integrate(imm, fn, grid, threads)
    elif imm.info.conformally_compact:
        def total(fn):
            return convergent_integral(imm, fn, grid, threads)
    else:
        raise GateError(f"❌ '{imm.name}' ليس مضغوطاً ولا مضغوطاً تطابقياً")

    straightened: Dict[int, float] = {}
    reduced: Dict[int, float] = {}
    direct: Dict[int, float] = {}
    for ell in ells:
        c = half - ell
        spec = StraightInvariantSpec.preset('L2ell', c=c, ell=ell)
        sign = (-1) ** c
        left = straightened_field(spec, imm, lam)
        straightened[ell] = sign * total(left)
        direct[ell] = total(lambda p, e=ell: SubmanifoldGeometry.at(imm, p).second_squared ** e)
        reduced[ell] = rigidity_coefficient(k, ell, lam) * direct[ell]
        logger.info(f"📊 ℓ={ell}: straightened={straightened[ell]:.10g} reduced={reduced[ell]:.10g}")

    report = RigidityReport(k, n, lam, straightened, reduced, direct)
    for ell, value in straightened.items():
        report.gaps[f"totally_geodesic_l{ell}"] = value

    if k >= 4:
        c = half - 2
        spec = StraightInvariantSpec.preset('L2sq', c=c)
        report.square_straightened = (-1) ** c * total(straightened_field(spec, imm, lam))
        report.square_direct = total(lambda p: SubmanifoldGeometry.at(imm, p).second_square_norm)
        report.square_reduced = square_coefficient(k, lam) * report.square_direct
        fourth = straightened.get(2)
        if fourth is None:
            fourth = (-1) ** c * total(straightened_field(StraightInvariantSpec.preset('L2ell', c=c, ell=2), imm, lam))
        report.gaps['einstein'] = report.square_straightened - fourth / k
        if n == k + 1:
            report.gaps['locally_conformally_flat'] = \
                (k * k - 3 * k + 3) / (k * (k - 1)) * fourth - report.square_straightened

    if points is None:
        points = imm.box.samples(16, seed)
    report.einstein_gap_residual = einstein_gap_residual(imm, points)
    if n == k + 1 and k >= 3:
        report.codim_one_weyl_residual = codim_one_weyl_residual(imm, points)
    return report
