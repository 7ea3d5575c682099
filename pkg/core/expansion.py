# core/expansion.py
"""
🌀 الحل الصوري رتبة برتبة لرسوم بيانية أصغرية تقاربياً في نصف الفضاء الزائدي

الهدف ρ⁻²(dρ² + dx² + dy²) والرسم y = u(ρ, x). نعمل بالإطار المتعامد
Z_A = ρ∂_A ومع Y_a = Z_a + u_{,a}·Z_{β'}:
    h_ab   = δ_ab + u_{,a}·u_{,b}
    f^a_γ  = h^{ab} u^γ_{,b}
    N_βγ   = δ_βγ − f^c_γ u^β_{,c}
    L_abγ  = −h_ab f^0_γ + ρ u^β_{,ab} N_βγ
    kH_γ   = h^{ab} L_abγ
حيث الفهرس 0 هو ρ والاشتقاق جزئي عادي. u_ℓ يدخل معامل ρ^{ℓ−1} من kH خطياً
بالعامل ℓ(ℓ−1−k)P مع P⁻¹ = I + (∂u₀)(∂u₀)ᵀ.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import exprlang as ex
from .chartgeom import DomainBox
from .errors import JetError
from .jets import EVEN, Jet, JetMatrix, Poly, jet_diff_rho, jet_diff_x, jet_matrix_invert
from .tensor import factorial

logger = logging.getLogger(__name__)

DEFAULT_X_ORDER = 2
EXTRA_RHO_ORDERS = 2


def boundary_variables(k: int) -> List[str]:
    return [f"x{i + 1}" for i in range(k - 1)]


def obstruction_constant(m: int) -> int:
    """c_q = 2^{q−1}(q−1)!q! مع q = m/2 (m بعد الحد)"""
    q = m // 2
    return 2 ** (q - 1) * factorial(q - 1) * factorial(q)


def obstruction_scale(m: int) -> int:
    """ℋ = (−1)^{q+1}2^{q+1}(q+1)c_q·ψ"""
    q = m // 2
    return (-1) ** (q + 1) * 2 ** (q + 1) * (q + 1) * obstruction_constant(m)


@dataclass
class GraphAnsatz:
    """🎯 بيانات الحد والمعاملات المحلولة لرسم u^{β}(ρ, x)"""

    k: int
    n: int
    boundary: List[Poly]
    solution: List[Jet]
    order: int
    x_order: Optional[int] = None
    free: List[Poly] = field(default_factory=list)
    log_coefficient: List[Poly] = field(default_factory=list)
    jet_order: int = 0

    @property
    def codim(self) -> int:
        return self.n - self.k

    @property
    def nvars(self) -> int:
        return self.k - 1

    @property
    def boundary_dimension(self) -> int:
        return self.k - 1

    @property
    def has_log_slot(self) -> bool:
        return self.order >= self.k + 1

    def coefficient(self, power: int) -> List[Poly]:
        return [u.coefficient(power) for u in self.solution]

    def obstruction(self) -> List[Poly]:
        """ℋ_{β}: صفر عندما يكون بعد الحد فردياً"""
        m = self.boundary_dimension
        if not self.log_coefficient or m % 2 or m == 0:
            return [Poly.zero(self.nvars, self.x_order) for _ in range(self.codim)]
        scale = obstruction_scale(m)
        return [psi * scale for psi in self.log_coefficient]

    def to_dict(self) -> Dict:
        names = boundary_variables(self.k)
        return {
            'k': self.k,
            'n': self.n,
            'order': self.order,
            'x_order': self.x_order,
            'boundary': [p.to_text(names) for p in self.boundary],
            'coefficients': {
                str(power): [u.coefficient(power).to_text(names) for u in self.solution]
                for power in range(min(self.order, self.jet_order) + 1)
            },
            'free': [p.to_text(names) for p in self.free],
            'log_coefficient': [p.to_text(names) for p in self.log_coefficient],
            'obstruction': [p.to_text(names) for p in self.obstruction()],
        }

    def to_immersion(self, period: float = 1.0, free: Optional[Sequence[ex.ExprLike]] = None):
        """
        غمر عددي فوق القمع الدوري: المكونات (ρ, x, u(ρ, x)) مع معامل حر
        اختياري كتعبير عام عند ρ^{k+1}
        """
        from .catalog import hyperbolic_half_space
        from .submanifold import ImmersionChart, ImmersionInfo

        k, n = self.k, self.n
        xs = boundary_variables(k)
        target = hyperbolic_half_space(n, periodic=k - 1)
        if any(p.degree > 0 for p in self.boundary):
            logger.warning("⚠️ بيانات حد غير ثابتة على صندوق دوري: الرسم ليس دورياً")
        rho = ex.Var('rho')
        last = min(self.order, self.jet_order, k) if free is not None else min(self.order, self.jet_order)
        comps: List[ex.Expr] = [rho] + [ex.Var(x) for x in xs]
        for beta, u in enumerate(self.solution):
            expr = u.truncate(last).to_expr('rho', xs)
            if free is not None:
                expr = ex.add(expr, ex.mul(ex.as_expr(free[beta]), ex.power(rho, ex.Num(float(k + 1)))))
            if self.log_coefficient and not self.log_coefficient[beta].is_zero():
                log_term = ex.mul(ex.power(rho, ex.Num(float(k + 1))), ex.call('log', rho))
                expr = ex.add(expr, ex.mul(self.log_coefficient[beta].to_expr(xs), log_term))
            comps.append(expr)
        box = DomainBox.from_intervals([(0.0, 1.0)] + [(0.0, period)] * (k - 1), [False] + [True] * (k - 1))
        info = ImmersionInfo(euler_characteristic=0, compact=False, einstein_lambda=-1.0, minimal=False,
                             boundary_axis=0, edge={'axis': 0, 'value': 1.0},
                             description='asymptotically minimal graph over the periodic cusp')
        return ImmersionChart.from_expressions(f"hyperbolic_graph({k},{n})", target, ['rho'] + xs, comps, box, info)


# ---------------------------------------------------------------------------
# Geometry of the graph as jets
# ---------------------------------------------------------------------------

@dataclass
class GraphGeometryJets:
    h: JetMatrix
    h_inv: JetMatrix
    normal_gram: JetMatrix
    L: Dict[Tuple[int, int, int], Jet]
    frame_mean_curvature: List[Jet]


def _one(jet: Jet) -> Jet:
    return Jet.constant(1, jet.nvars, jet.order, jet.coeffs[0].order)


def _zero(jet: Jet) -> Jet:
    return Jet.zero(jet.nvars, jet.order, jet.coeffs[0].order)


def _sum(jets: Sequence[Jet], like: Jet) -> Jet:
    total = _zero(like)
    for j in jets:
        total = total + j
    return total


def graph_geometry(k: int, solution: Sequence[Jet]) -> GraphGeometryJets:
    """h، مقلوبه، مصفوفة جرام العمودية N و L_abγ بالإطار، و kH_γ"""
    codim = len(solution)
    if codim == 0:
        raise JetError("❌ لا توجد مركبات عمودية")
    first = []
    for u in solution:
        row = [jet_diff_rho(u)] + [jet_diff_x(u, i).truncate(u.order - 1) for i in range(k - 1)]
        first.append(row)
    second = []
    for beta, u in enumerate(solution):
        block = {}
        for a in range(k):
            for b in range(a, k):
                d = first[beta][a]
                d = jet_diff_rho(d) if b == 0 else jet_diff_x(d, b - 1).truncate(d.order - 1)
                block[(a, b)] = block[(b, a)] = d
        second.append(block)
    like = second[0][(0, 0)]
    one, zero = _one(like), _zero(like)

    h_rows = []
    for a in range(k):
        row = []
        for b in range(k):
            entry = one if a == b else zero
            for beta in range(codim):
                entry = entry + first[beta][a] * first[beta][b]
            row.append(entry.truncate(like.order))
        h_rows.append(row)
    h = JetMatrix(h_rows)
    h_inv = jet_matrix_invert(h)

    f = [[_sum([h_inv[a, b] * first[gamma][b] for b in range(k)], like) for gamma in range(codim)]
         for a in range(k)]
    gram_rows = []
    for beta in range(codim):
        row = []
        for gamma in range(codim):
            entry = (one if beta == gamma else zero) - _sum([f[c][gamma] * first[beta][c] for c in range(k)], like)
            row.append(entry)
        gram_rows.append(row)
    gram = JetMatrix(gram_rows)

    L: Dict[Tuple[int, int, int], Jet] = {}
    for a in range(k):
        for b in range(a, k):
            for gamma in range(codim):
                bend = _sum([second[beta][(a, b)] * gram[beta, gamma] for beta in range(codim)], like)
                value = -(h[a, b] * f[0][gamma]) + bend.shift(1)
                L[(a, b, gamma)] = L[(b, a, gamma)] = value
    kH = [_sum([h_inv[a, b] * L[(a, b, gamma)] for a in range(k) for b in range(k)], like)
          for gamma in range(codim)]
    return GraphGeometryJets(h, h_inv, gram, L, kH)


def graph_mean_curvature_jet(ansatz: GraphAnsatz, frame: bool = False) -> List[Jet]:
    """
    مركبات kH: بالإحداثيات ρ⁻¹h^{ab}L_abγ افتراضياً (معامل ρ^{ℓ−2} يُصفَّر في الخطوة ℓ)،
    أو بالإطار عند frame=True
    """
    geo = graph_geometry(ansatz.k, ansatz.solution)
    if frame:
        return geo.frame_mean_curvature
    out = []
    for jet in geo.frame_mean_curvature:
        if jet.coeffs[0].is_zero():
            out.append(jet.lower(1))
        else:
            raise JetError("❌ معامل ρ⁰ من kH بالإطار غير صفري: لا يمكن التحويل إلى مركبات إحداثية",
                           {'coefficient': jet.coeffs[0].to_text()})
    return out


def l_squared_jet_order(k: int) -> int:
    return 2 * k + 3


def _padded(jet: Jet, order: int, x_order: Optional[int]) -> Jet:
    if jet.order >= order:
        return jet
    extra = [Poly.zero(jet.nvars, x_order) for _ in range(order - jet.order)]
    return Jet(list(jet.coeffs) + extra, jet.parity, jet.horizon)

def second_fundamental_jets(ansatz: GraphAnsatz) -> Tuple[Dict[Tuple[int, int, int], Jet], Jet]:
    """L_abγ بالإطار و |L|² = h^{ac}h^{bd}L_abγ L_cdδ (N⁻¹)^{γδ}"""
    # |L|² starts at ρ^{2k}; above the free order the coefficients are zero
    solution = [_padded(u, l_squared_jet_order(ansatz.k), ansatz.x_order) for u in ansatz.solution]
    geo = graph_geometry(ansatz.k, solution)
    k, codim = ansatz.k, ansatz.codim
    gram_inv = jet_matrix_invert(geo.normal_gram)
    like = geo.frame_mean_curvature[0]
    raised = {}
    for a in range(k):
        for b in range(k):
            for gamma in range(codim):
                raised[(a, b, gamma)] = _sum([geo.h_inv[a, c] * geo.h_inv[b, d] * geo.L[(c, d, gamma)]
                                              for c in range(k) for d in range(k)], like)
    terms = []
    for a in range(k):
        for b in range(k):
            for gamma in range(codim):
                for delta in range(codim):
                    terms.append(raised[(a, b, gamma)] * geo.L[(a, b, delta)] * gram_inv[gamma, delta])
    return geo.L, _sum(terms, like)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

def _as_polys(values: Sequence, nvars: int, variables: Sequence[str], x_order: Optional[int]) -> List[Poly]:
    out = []
    for v in values:
        if isinstance(v, Poly):
            out.append(v.truncate(x_order) if x_order is not None else v)
        elif isinstance(v, (int, Fraction)):
            out.append(Poly.constant(v, nvars, x_order))
        else:
            out.append(Poly.from_expr(v, variables, x_order))
    return out


def _inverse_projection(boundary: Sequence[Poly]) -> List[List[Poly]]:
    """P⁻¹ = I + AAᵀ مع A_{βj} = ∂_j u₀^β"""
    codim = len(boundary)
    nvars = boundary[0].nvars
    order = boundary[0].order
    A = [[u.diff(j) for j in range(nvars)] for u in boundary]
    out = []
    for beta in range(codim):
        row = []
        for gamma in range(codim):
            entry = Poly.constant(1 if beta == gamma else 0, nvars, order)
            for j in range(nvars):
                entry = entry + A[beta][j] * A[gamma][j]
            row.append(entry)
        out.append(row)
    return out


def _apply(M: List[List[Poly]], v: Sequence[Poly]) -> List[Poly]:
    out = []
    for row in M:
        total = row[0] * v[0]
        for m, p in zip(row[1:], v[1:]):
            total = total + m * p
        out.append(total)
    return out


def solve_minimal_expansion(u0: Sequence, k: int, n: int, order: Optional[int] = None,
                            free: Optional[Sequence] = None, x_order: Optional[int] = None,
                            jet_order: Optional[int] = None) -> GraphAnsatz:
    """
    يحدد u_ℓ لكل 2 ≤ ℓ ≤ min(order, k) بتصفير معامل ρ^{ℓ−1} من kH بالإطار،
    ثم يسجل المعامل الحر عند ρ^{k+1} ومعامل اللوغاريتم المفروض ψ:
        (k+1)Pψ = −[ρ^k من kH]
    """
    if k < 2 or n <= k:
        raise JetError(f"❌ أبعاد غير صالحة: k={k}, n={n}")
    codim = n - k
    nvars = k - 1
    order = k + 1 if order is None else int(order)
    if order > k + 1:
        raise JetError(f"❌ الرتبة المطلوبة {order} تتجاوز k+1 = {k + 1}", {'order': order})
    if order < 0:
        raise JetError(f"❌ رتبة سالبة: {order}")
    if len(u0) != codim:
        raise JetError(f"❌ المطلوب {codim} مركبة لبيانات الحد، وصل {len(u0)}")
    variables = boundary_variables(k)
    exact = _as_polys(u0, nvars, variables, None)
    if all(p.degree <= 1 for p in exact):
        working = None
    else:
        working = (DEFAULT_X_ORDER if x_order is None else int(x_order)) + 2 * (k + 2)
        logger.debug(f"🔧 بيانات حد غير أفينية: قطع x عند الدرجة {working}")
    boundary = _as_polys(u0, nvars, variables, working)
    N = (k + 1 + EXTRA_RHO_ORDERS) if jet_order is None else int(jet_order)
    coeffs = [[b] + [Poly.zero(nvars, working) for _ in range(N)] for b in boundary]
    inverse_p = _inverse_projection(boundary)

    def current() -> List[Jet]:
        return [Jet(c) for c in coeffs]

    for ell in range(1, min(order, k) + 1):
        kH = graph_geometry(k, current()).frame_mean_curvature
        rhs = [jet.coefficient(ell - 1) for jet in kH]
        factor = Fraction(-1, ell * (ell - 1 - k))
        step = [p * factor for p in _apply(inverse_p, rhs)]
        for beta in range(codim):
            coeffs[beta][ell] = step[beta]
        logger.debug(f"📊 u_{ell} = {[p.to_text(variables) for p in step]}")

    free_polys: List[Poly] = []
    log_coefficient: List[Poly] = []
    if order >= k + 1:
        free_polys = _as_polys(free, nvars, variables, working) if free is not None \
            else [Poly.zero(nvars, working) for _ in range(codim)]
        if len(free_polys) != codim:
            raise JetError(f"❌ المطلوب {codim} مركبة للمعامل الحر، وصل {len(free_polys)}")
        for beta in range(codim):
            coeffs[beta][k + 1] = free_polys[beta]
        kH = graph_geometry(k, current()).frame_mean_curvature
        rhs = [jet.coefficient(k) for jet in kH]
        log_coefficient = [p * Fraction(-1, k + 1) for p in _apply(inverse_p, rhs)]
        if any(not p.is_zero() for p in log_coefficient):
            logger.info(f"📊 معامل لوغاريتمي مفروض عند ρ^{k + 1}: "
                        f"{[p.to_text(variables) for p in log_coefficient]}")

    solution = [Jet(c) for c in coeffs]
    ansatz = GraphAnsatz(k, n, boundary, solution, order, working, free_polys, log_coefficient, N)
    check_parity(ansatz)
    return ansatz


def check_parity(ansatz: GraphAnsatz) -> None:
    """المعاملات الفردية تحت ρ^{k+1} تنعدم"""
    horizon = min(ansatz.order, ansatz.k)
    for u in ansatz.solution:
        Jet(u.coeffs, None, horizon).assert_parity(EVEN)


def minimality_order(ansatz: GraphAnsatz) -> int:
    """أصغر قوة ρ بمعامل غير صفري في kH بالإحداثيات (أو رتبة القطع +1)"""
    jets = graph_mean_curvature_jet(ansatz)
    order = min(j.order for j in jets)
    for p in range(order + 1):
        if any(not j.coefficient(p).is_zero() for j in jets):
            return p
    return order + 1

