# core/submanifold.py
"""
🧭 الهندسة الخارجية لغمر j: Σᵏ → (Mⁿ, g) على خريطة إحداثية

- ImmersionChart: الخريطة j مع مشتقاتها (رمزية أو فروق مركزية)
- SubmanifoldGeometry: حزمة موجّهة تحسب الإطار العمودي، الشكل الأساسي الثاني
  L، الانحناء المتوسط H، الجزء عديم الأثر L̊، وسحب انحناء الهدف
- متطابقات جاوس وجاوس-فايل، فيالكوف، شاوتن الخارجي، طاقة ويلمور
- لابلاسيان وتباعد على Σ بالمقياس المستحث
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import exprlang as ex
from .chartgeom import (CurvatureData, DerivativeBackend, DomainBox, MetricChart, connection,
                        conformal_rescale, invert_metric)
from .errors import ImmersionError, RankDeficiencyError
from .quadrature import DEFAULT_GRID, GridSpec, integrate_over, tensor_grid
from .tensor import DenseTensor, kulkarni_nomizu_array, mixed_from_covariant, pfaffian_field

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
NORMAL_ACCEPT_TOLERANCE = 1e-6
FD_RELATIVE_STEP = 1e-3
FD_BOUNDARY_STEP = 1e-2

MapFunction = Callable[[np.ndarray], np.ndarray]
FieldLike = Union[ex.ExprLike, Callable[[np.ndarray], np.ndarray]]


def _is_zero(e: ex.Expr) -> bool:
    return isinstance(e, ex.Num) and e.value == 0.0


@dataclass(frozen=True)
class ImmersionInfo:
    """بيانات وصفية للكتالوج: الطوبولوجيا وفرضيات الاختبارات"""

    euler_characteristic: Optional[int] = None
    compact: bool = True
    einstein_lambda: Optional[float] = None
    minimal: bool = False
    boundary_axis: Optional[int] = None
    edge: Optional[Dict] = None
    description: str = ''

    @property
    def conformally_compact(self) -> bool:
        return self.boundary_axis is not None

    def to_dict(self) -> Dict:
        return {
            'euler_characteristic': self.euler_characteristic,
            'compact': self.compact,
            'einstein_lambda': self.einstein_lambda,
            'minimal': self.minimal,
            'boundary_axis': self.boundary_axis,
            'edge': self.edge,
            'description': self.description,
        }


class ImmersionChart:
    """🎯 غمر من صندوق مصدر إلى خريطة هدف"""

    def __init__(self, name: str, target: MetricChart, coordinates: Sequence[str], box: DomainBox,
                 map_fn: MapFunction, backend: DerivativeBackend,
                 components: Optional[List[ex.Expr]] = None,
                 info: Optional[ImmersionInfo] = None, step: float = 1e-5):
        if len(coordinates) != box.dim:
            raise ImmersionError(f"❌ عدد إحداثيات المصدر {len(coordinates)} لا يطابق الصندوق {box.dim}")
        if box.dim >= target.dim:
            raise ImmersionError(f"❌ بعد المصدر {box.dim} يجب أن يقل عن بعد الهدف {target.dim}")
        self.name = name
        self.target = target
        self.coordinates = tuple(coordinates)
        self.box = box
        self.backend = backend
        self.components = components
        self.info = info or ImmersionInfo()
        self.step = step
        self._map_fn = map_fn

    @classmethod
    def from_expressions(cls, name: str, target: MetricChart, coordinates: Sequence[str],
                         components: Sequence[ex.ExprLike], box: DomainBox,
                         info: Optional[ImmersionInfo] = None) -> 'ImmersionChart':
        if len(components) != target.dim:
            raise ImmersionError(f"❌ المطلوب {target.dim} مركبة للغمر، وصل {len(components)}")
        exprs = [ex.as_expr(c) for c in components]
        unknown = set().union(*(ex.free_variables(e) for e in exprs)) - set(coordinates)
        if unknown:
            raise ImmersionError(f"❌ متغيرات غير معرفة في الغمر: {sorted(unknown)}", {'unknown': sorted(unknown)})
        compiled = [ex.CompiledExpr(e) for e in exprs]
        names = tuple(coordinates)

        def map_fn(points: np.ndarray) -> np.ndarray:
            env = {c: points[..., i] for i, c in enumerate(names)}
            shape = points.shape[:-1]
            return np.stack([f(env, shape) for f in compiled], axis=-1)

        return cls(name, target, coordinates, box, map_fn, DerivativeBackend.EXACT_SYMBOLIC,
                   components=exprs, info=info)

    @classmethod
    def from_callable(cls, name: str, target: MetricChart, coordinates: Sequence[str], map_fn: MapFunction,
                      box: DomainBox, info: Optional[ImmersionInfo] = None,
                      step: float = 1e-5) -> 'ImmersionChart':
        return cls(name, target, coordinates, box, map_fn, DerivativeBackend.CENTRAL_DIFFERENCE,
                   info=info, step=step)

    # ------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def codim(self) -> int:
        return self.target.dim - self.dim

    @property
    def is_symbolic(self) -> bool:
        return self.components is not None

    def map(self, points: np.ndarray) -> np.ndarray:
        return self._map_fn(np.asarray(points, dtype=float))

    @cached_property
    def _jacobian_exprs(self) -> List[List[ex.Expr]]:
        return [[ex.differentiate(c, x) for x in self.coordinates] for c in self.components]

    @cached_property
    def _compiled_jacobian(self) -> List[List[ex.CompiledExpr]]:
        return [[ex.CompiledExpr(e) for e in row] for row in self._jacobian_exprs]

    @cached_property
    def _compiled_hessian(self) -> List[List[List[ex.CompiledExpr]]]:
        return [[[ex.CompiledExpr(ex.differentiate(e, y)) for y in self.coordinates] for e in row]
                for row in self._jacobian_exprs]

    def _env(self, points: np.ndarray) -> Dict[str, np.ndarray]:
        return {c: points[..., i] for i, c in enumerate(self.coordinates)}

    def _fd_first(self, fn: MapFunction, points: np.ndarray, h: float) -> np.ndarray:
        parts = []
        for a in range(self.dim):
            def diff(step):
                plus, minus = np.array(points, copy=True), np.array(points, copy=True)
                plus[..., a] += step
                minus[..., a] -= step
                return (fn(plus) - fn(minus)) / (2 * step)
            parts.append((4.0 * diff(h / 2) - diff(h)) / 3.0)
        return np.stack(parts, axis=-1)

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """dj[..., A, a] = ∂_a j^A"""
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        if self.is_symbolic:
            env = self._env(points)
            return np.stack([np.stack([f(env, shape) for f in row], axis=-1)
                             for row in self._compiled_jacobian], axis=-2)
        return self._fd_first(self.map, points, self.step * self.box.scale)

    def hessian(self, points: np.ndarray) -> np.ndarray:
        """ddj[..., A, a, b] = ∂_a∂_b j^A"""
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        if self.is_symbolic:
            env = self._env(points)
            return np.stack([np.stack([np.stack([f(env, shape) for f in col], axis=-1) for col in row], axis=-2)
                             for row in self._compiled_hessian], axis=-3)
        h2 = np.sqrt(self.step) * self.box.scale
        ddj = self._fd_first(self.jacobian, points, h2)
        return 0.5 * (ddj + np.swapaxes(ddj, -1, -2))

    @cached_property
    def induced_chart(self) -> MetricChart:
        """خريطة المقياس المستحث j*g على صندوق المصدر"""
        name = f"{self.name}*g"
        riemannian = self.target.riemannian
        if self.is_symbolic and self.target.is_symbolic:
            subst = dict(zip(self.target.coordinates, self.components))
            g = [[ex.substitute(c, subst) for c in row] for row in self.target.components]
            dj = self._jacobian_exprs
            n, k = self.target.dim, self.dim
            comps = []
            for a in range(k):
                row = []
                for b in range(k):
                    total: ex.Expr = ex.Num(0.0)
                    for A in range(n):
                        if _is_zero(dj[A][a]):
                            continue
                        for B in range(n):
                            if _is_zero(dj[B][b]) or _is_zero(g[A][B]):
                                continue
                            total = ex.add(total, ex.mul(ex.mul(dj[A][a], dj[B][b]), g[A][B]))
                    row.append(total)
                comps.append(row)
            for a in range(k):
                for b in range(a):
                    comps[a][b] = comps[b][a]
            return MetricChart.from_expressions(name, self.coordinates, comps, self.box, riemannian)

        def metric_fn(points: np.ndarray) -> np.ndarray:
            dj = self.jacobian(points)
            g = self.target.metric(self.map(points))
            return np.einsum('...Aa,...AB,...Bb->...ab', dj, g, dj)

        return MetricChart.from_callable(name, self.coordinates, metric_fn, self.box,
                                         step=self.step, riemannian=riemannian)

    def __repr__(self) -> str:
        return f"ImmersionChart('{self.name}', {self.dim} → {self.target.name})"


# ---------------------------------------------------------------------------
# Batched extrinsic geometry
# ---------------------------------------------------------------------------

def _normal_frame(dj: np.ndarray, g: np.ndarray, codim: int) -> np.ndarray:
    """
    جرام-شميدت على أعمدة dj ثم على متجهات الأساس الإحداثي بترتيب تصاعدي،
    مع تثبيت الإشارة: أول مركبة غير صفرية موجبة. النتيجة (N, n−k, n)
    """
    N, n, k = dj.shape

    def inner(u, v):
        return np.einsum('...A,...AB,...B->...', u, g, v)

    basis: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for a in range(k):
        v = dj[:, :, a].copy()
        for q, w in zip(basis, weights):
            v = v - (w * inner(v, q))[:, None] * q
        norm = np.sqrt(np.maximum(inner(v, v), 0.0))
        basis.append(v / norm[:, None])
        weights.append(np.ones(N))
    normals = np.zeros((N, codim, n))
    count = np.zeros(N, dtype=int)
    for A in range(n):
        v = np.zeros((N, n))
        v[:, A] = 1.0
        scale = np.sqrt(g[:, A, A])
        for q, w in zip(basis, weights):
            v = v - (w * inner(v, q))[:, None] * q
        norm = np.sqrt(np.maximum(inner(v, v), 0.0))
        accept = (norm > NORMAL_ACCEPT_TOLERANCE * scale) & (count < codim)
        safe = np.where(accept, norm, 1.0)
        q = v / safe[:, None]
        rows = np.nonzero(accept)[0]
        normals[rows, count[rows], :] = q[rows]
        basis.append(q)
        weights.append(accept.astype(float))
        count = count + accept
    if np.any(count < codim):
        raise ImmersionError("❌ تعذر إكمال الإطار العمودي")
    tol = 1e-12
    for i in range(codim):
        vec = normals[:, i, :]
        first = np.argmax(np.abs(vec) > tol * np.max(np.abs(vec), axis=-1, keepdims=True), axis=-1)
        sign = np.sign(vec[np.arange(N), first])
        normals[:, i, :] = vec * np.where(sign == 0, 1.0, sign)[:, None]
    return normals


class SubmanifoldGeometry:
    """📊 الهندسة الخارجية على دفعة نقاط مسطحة (N, k)"""

    def __init__(self, imm: ImmersionChart, points: np.ndarray):
        points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
        self.imm = imm
        self.points = points
        self.k = imm.dim
        self.n = imm.target.dim
        self.y = imm.map(points)
        self.dj = imm.jacobian(points)
        self.ddj = imm.hessian(points)
        singular = np.linalg.svd(self.dj, compute_uv=False)
        smallest = singular[..., -1] / np.maximum(singular[..., 0], 1e-300)
        if np.any(smallest < RANK_TOLERANCE):
            worst = float(np.min(singular[..., -1]))
            raise RankDeficiencyError(f"❌ dj ليس بالرتبة {self.k} في '{imm.name}'", worst)
        self.g, self.g_inv, self.gamma = connection(imm.target, self.y)
        self.h = np.einsum('...Aa,...AB,...Bb->...ab', self.dj, self.g, self.dj)
        if imm.target.riemannian:
            eig = np.linalg.eigvalsh(self.h)
            if np.any(eig <= 0):
                raise ImmersionError(f"❌ المقياس المستحث في '{imm.name}' ليس موجب التحديد",
                                     {'smallest_eigenvalue': float(np.min(eig))})
        self.h_inv = invert_metric(self.h)
        # ∇_{∂a}∂_b j = ∂_a∂_b j^C + Γ^C_{AB} ∂_a j^A ∂_b j^B ثم الإسقاط العمودي
        accel = self.ddj + np.einsum('...CAB,...Aa,...Bb->...Cab', self.gamma, self.dj, self.dj, optimize=True)
        accel = np.moveaxis(accel, -3, -1)
        tangent_part = np.einsum('...abD,...DE,...Ec,...cd,...Fd->...abF', accel, self.g, self.dj,
                                 self.h_inv, self.dj, optimize=True)
        self.second = accel - tangent_part                       # [..., a, b, C]
        self.second_lower = np.einsum('...abC,...CD->...abD', self.second, self.g)
        self.mean_curvature = np.einsum('...ab,...abC->...C', self.h_inv, self.second) / self.k
        self.trace_free = self.second - self.h[..., None] * self.mean_curvature[..., None, None, :]
        self.trace_free_lower = np.einsum('...abC,...CD->...abD', self.trace_free, self.g)

    @classmethod
    def at(cls, imm: ImmersionChart, points: np.ndarray) -> 'SubmanifoldGeometry':
        return cls(imm, points)

    # ------------------------------------------------------------------
    # Frame (Riemannian targets only)
    # ------------------------------------------------------------------
    @cached_property
    def normals(self) -> np.ndarray:
        if not self.imm.target.riemannian:
            raise ImmersionError("❌ الإطار العمودي المتعامد معرف للأهداف الريمانية فقط")
        return _normal_frame(self.dj, self.g, self.n - self.k)

    @cached_property
    def L(self) -> np.ndarray:
        """L[..., a, b, α'] = g(∇_a∂_b, e_α')"""
        return np.einsum('...abC,...iC->...abi', self.second_lower, self.normals)

    @cached_property
    def H(self) -> np.ndarray:
        return np.einsum('...ab,...abi->...i', self.h_inv, self.L) / self.k

    @cached_property
    def L_trace_free(self) -> np.ndarray:
        return self.L - self.h[..., None] * self.H[..., None, None, :]

    # ------------------------------------------------------------------
    # Frame-free scalars
    # ------------------------------------------------------------------
    def _pair(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """Q[a,b,c,d] = g(X_ab, Y_cd)"""
        return np.einsum('...abC,...cdC->...abcd', lower, upper, optimize=True)

    @cached_property
    def mean_curvature_squared(self) -> np.ndarray:
        return np.einsum('...C,...CD,...D->...', self.mean_curvature, self.g, self.mean_curvature)

    @cached_property
    def second_squared(self) -> np.ndarray:
        """|L|²"""
        return np.einsum('...ac,...bd,...abC,...cdC->...', self.h_inv, self.h_inv,
                         self.second_lower, self.second, optimize=True)

    @cached_property
    def trace_free_squared(self) -> np.ndarray:
        """|L̊|²"""
        return np.einsum('...ac,...bd,...abC,...cdC->...', self.h_inv, self.h_inv,
                         self.trace_free_lower, self.trace_free, optimize=True)

    @cached_property
    def second_square_tensor(self) -> np.ndarray:
        """L²_{ab} = L_{acγ'}L_b{}^{cγ'}"""
        return np.einsum('...cd,...acC,...bdC->...ab', self.h_inv, self.second_lower, self.second, optimize=True)

    @cached_property
    def trace_free_square_tensor(self) -> np.ndarray:
        return np.einsum('...cd,...acC,...bdC->...ab', self.h_inv, self.trace_free_lower, self.trace_free,
                         optimize=True)

    def _norm2(self, S: np.ndarray) -> np.ndarray:
        return np.einsum('...ac,...bd,...ab,...cd->...', self.h_inv, self.h_inv, S, S, optimize=True)

    @cached_property
    def second_square_norm(self) -> np.ndarray:
        """|L²|²"""
        return self._norm2(self.second_square_tensor)

    @cached_property
    def trace_free_square_norm(self) -> np.ndarray:
        """|L̊²|²"""
        return self._norm2(self.trace_free_square_tensor)

    @cached_property
    def trace_free_wedge(self) -> np.ndarray:
        """(L̊∧L̊)_{abcd} مجموعاً على الاتجاهات العمودية"""
        Q = self._pair(self.trace_free_lower, self.trace_free)
        return 2.0 * (np.einsum('...acbd->...abcd', Q) - np.einsum('...adbc->...abcd', Q))

    @cached_property
    def second_wedge(self) -> np.ndarray:
        Q = self._pair(self.second_lower, self.second)
        return 2.0 * (np.einsum('...acbd->...abcd', Q) - np.einsum('...adbc->...abcd', Q))

    def area_element(self) -> np.ndarray:
        return np.sqrt(np.abs(np.linalg.det(self.h)))

    # ------------------------------------------------------------------
    # Target curvature pulled back to Σ
    # ------------------------------------------------------------------
    @cached_property
    def target_curvature(self) -> CurvatureData:
        return CurvatureData.at(self.imm.target, self.y)

    def pullback2(self, T: np.ndarray) -> np.ndarray:
        return np.einsum('...AB,...Aa,...Bb->...ab', T, self.dj, self.dj, optimize=True)

    def pullback4(self, T: np.ndarray) -> np.ndarray:
        return np.einsum('...ABCD,...Aa,...Bb,...Cc,...Dd->...abcd', T, self.dj, self.dj, self.dj, self.dj,
                         optimize=True)

    @cached_property
    def pullback_riemann(self) -> np.ndarray:
        return self.pullback4(self.target_curvature.riemann)

    @cached_property
    def pullback_weyl(self) -> np.ndarray:
        return self.pullback4(self.target_curvature.weyl())

    @cached_property
    def pullback_schouten(self) -> np.ndarray:
        P, _ = self.target_curvature.schouten()
        return self.pullback2(P)

    @cached_property
    def weyl_full_trace(self) -> np.ndarray:
        """W_{αβ}{}^{αβ} بالمقياس المستحث"""
        return np.einsum('...ac,...bd,...abcd->...', self.h_inv, self.h_inv, self.pullback_weyl, optimize=True)

    @cached_property
    def weyl_partial_trace(self) -> np.ndarray:
        """W_{αγβ}{}^γ"""
        return np.einsum('...cd,...acbd->...ab', self.h_inv, self.pullback_weyl, optimize=True)

    @cached_property
    def hat_weyl(self) -> np.ndarray:
        """Ŵ = j*W + ½L̊∧L̊"""
        return self.pullback_weyl + 0.5 * self.trace_free_wedge

    def hat_weyl_pfaffian(self, r: int) -> np.ndarray:
        return pfaffian_field(r, mixed_from_covariant(self.hat_weyl, self.h_inv))

    # ------------------------------------------------------------------
    # Intrinsic curvature of j*g
    # ------------------------------------------------------------------
    @cached_property
    def intrinsic(self) -> CurvatureData:
        return CurvatureData.at(self.imm.induced_chart, self.points)

    # ------------------------------------------------------------------
    # Conformal submanifold tensors
    # ------------------------------------------------------------------
    def fialkow_scalar(self) -> np.ndarray:
        k = self.k
        if k < 2:
            raise ImmersionError("❌ مقياس فيالكوف يتطلب k ≥ 2")
        return (self.trace_free_squared - self.weyl_full_trace) / (2.0 * (k - 1))

    def fialkow_tensor(self) -> np.ndarray:
        k = self.k
        if k < 3:
            raise ImmersionError(f"❌ موتر فيالكوف يتطلب k ≥ 3، وصل {k}")
        G = self.fialkow_scalar()
        return (self.trace_free_square_tensor - self.weyl_partial_trace - G[..., None, None] * self.h) / (k - 2)

    def extrinsic_schouten(self) -> np.ndarray:
        """𝒫 = P|Σ + H·L̊ + ½|H|²h"""
        if self.n < 3:
            raise ImmersionError("❌ شاوتن الخارجي يتطلب n ≥ 3")
        HL = np.einsum('...C,...abC->...ab', np.einsum('...CD,...D->...C', self.g, self.mean_curvature),
                       self.trace_free)
        return self.pullback_schouten + HL + 0.5 * self.mean_curvature_squared[..., None, None] * self.h

    def gauss_residual(self) -> float:
        """max|Rm|Σ − (R̄ − ½L∧L)|"""
        rhs = self.intrinsic.riemann - 0.5 * self.second_wedge
        return float(np.max(np.abs(self.pullback_riemann - rhs)))

    def gauss_weyl_residual(self) -> float:
        """max|W|Σ − (W̄ − ½L̊∧L̊ − F∧h)|"""
        F = self.fialkow_tensor()
        rhs = self.intrinsic.weyl() - 0.5 * self.trace_free_wedge - kulkarni_nomizu_array(F, self.h)
        return float(np.max(np.abs(self.pullback_weyl - rhs)))


# ---------------------------------------------------------------------------
# Pointwise API
# ---------------------------------------------------------------------------

@dataclass
class ExtrinsicFrame:
    point: np.ndarray
    tangent: np.ndarray          # (n, k)
    normals: np.ndarray          # (n−k, n)
    induced_metric: np.ndarray
    induced_inverse: np.ndarray

    def orthonormality_residual(self, g: np.ndarray) -> float:
        gram = np.einsum('iA,AB,jB->ij', self.normals, g, self.normals)
        tang = np.einsum('iA,AB,Ba->ia', self.normals, g, self.tangent)
        return float(max(np.max(np.abs(gram - np.eye(len(self.normals)))), np.max(np.abs(tang))))


@dataclass
class SecondFundamentalData:
    """L و L̊ بالشكل (k, k, n−k): فهرسان مماسيان وفهرس إطار عمودي"""

    L: np.ndarray
    H: np.ndarray
    trace_free: np.ndarray
    trace_free_squared: float
    trace_free_square_tensor: DenseTensor
    trace_free_square_norm: float
    second_squared: float
    induced_inverse: np.ndarray = field(repr=False, default=None)

    def normal_component(self, index: int) -> DenseTensor:
        return DenseTensor.from_array(self.L[..., index], 'll')


def _single(imm: ImmersionChart, x: Sequence[float]) -> SubmanifoldGeometry:
    return SubmanifoldGeometry.at(imm, np.asarray(x, dtype=float).reshape(1, imm.dim))


def frame_at(imm: ImmersionChart, x: Sequence[float]) -> ExtrinsicFrame:
    geo = _single(imm, x)
    return ExtrinsicFrame(geo.points[0], geo.dj[0], geo.normals[0], geo.h[0], geo.h_inv[0])


def second_fundamental_form(imm: ImmersionChart, x: Sequence[float]) -> SecondFundamentalData:
    geo = _single(imm, x)
    return SecondFundamentalData(
        L=geo.L[0],
        H=geo.H[0],
        trace_free=geo.L_trace_free[0],
        trace_free_squared=float(geo.trace_free_squared[0]),
        trace_free_square_tensor=DenseTensor.from_array(geo.trace_free_square_tensor[0], 'll'),
        trace_free_square_norm=float(geo.trace_free_square_norm[0]),
        second_squared=float(geo.second_squared[0]),
        induced_inverse=geo.h_inv[0],
    )


def gauss_residual(imm: ImmersionChart, x: Sequence[float]) -> float:
    if imm.dim < 2:
        raise ImmersionError("❌ معادلة جاوس تتطلب k ≥ 2")
    return _single(imm, x).gauss_residual()


def fialkow(imm: ImmersionChart, x: Sequence[float]) -> Tuple[float, Optional[DenseTensor]]:
    geo = _single(imm, x)
    G = float(geo.fialkow_scalar()[0])
    F = DenseTensor.from_array(geo.fialkow_tensor()[0], 'll') if imm.dim >= 3 else None
    return G, F


def extrinsic_schouten(imm: ImmersionChart, x: Sequence[float]) -> DenseTensor:
    return DenseTensor.from_array(_single(imm, x).extrinsic_schouten()[0], 'll')


def gauss_weyl_residual(imm: ImmersionChart, x: Sequence[float]) -> float:
    return _single(imm, x).gauss_weyl_residual()


def residual_over(imm: ImmersionChart, points: np.ndarray, which: str) -> float:
    """أقصى باقي متطابقة على دفعة نقاط"""
    geo = SubmanifoldGeometry.at(imm, points)
    if which == 'gauss':
        return geo.gauss_residual()
    if which == 'gauss_weyl':
        return geo.gauss_weyl_residual()
    raise ImmersionError(f"❌ متطابقة غير معروفة: {which}")


# ---------------------------------------------------------------------------
# Fields, integration and differential operators on Σ
# ---------------------------------------------------------------------------

def field_values(imm: ImmersionChart, field_: FieldLike, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if callable(field_):
        return np.asarray(field_(points), dtype=float)
    compiled = ex.compile_expr(field_)
    unknown = compiled.variables - set(imm.coordinates)
    if unknown:
        raise ImmersionError(f"❌ متغيرات غير معرفة في الحقل: {sorted(unknown)}")
    env = {c: points[..., i] for i, c in enumerate(imm.coordinates)}
    return compiled(env, points.shape[:-1])


def integrate(imm: ImmersionChart, field_: FieldLike, grid: GridSpec = DEFAULT_GRID, threads: int = 1) -> float:
    """∫_Σ f darea بشبكة الصندوق"""
    quad = tensor_grid(imm.box, grid)

    def integrand(points: np.ndarray) -> np.ndarray:
        h = imm.induced_chart.metric(points)
        return field_values(imm, field_, points) * np.sqrt(np.abs(np.linalg.det(h)))

    return integrate_over(quad, integrand, threads)


def area(imm: ImmersionChart, grid: GridSpec = DEFAULT_GRID, threads: int = 1) -> float:
    return integrate(imm, 1.0, grid, threads)


def _steps(imm: ImmersionChart, points: np.ndarray, scale: float) -> np.ndarray:
    """خطوة لكل نقطة ولكل محور: نسبة من عرض المحور، ونسبة من ρ على محور الحد"""
    steps = np.broadcast_to(scale * imm.box.widths, points.shape).copy()
    axis = imm.info.boundary_axis
    if axis is not None:
        steps[..., axis] = FD_BOUNDARY_STEP * np.abs(points[..., axis])
    return steps


def _fd_derivatives(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray,
                    steps: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """قيم ومشتقات أولى وثانية بفروق مركزية من الرتبة الرابعة"""
    N, k = points.shape
    f0 = fn(points)

    def shifted(offsets: Dict[int, float]) -> np.ndarray:
        p = points.copy()
        for axis, mult in offsets.items():
            p[:, axis] += mult * steps[:, axis]
        return fn(p)

    first = np.empty((N, k))
    second = np.empty((N, k, k))
    for a in range(k):
        h = steps[:, a]
        fp1, fm1 = shifted({a: 1}), shifted({a: -1})
        fp2, fm2 = shifted({a: 2}), shifted({a: -2})
        first[:, a] = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
        second[:, a, a] = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    for a in range(k):
        for b in range(a + 1, k):
            def d_a(p_shift: int) -> np.ndarray:
                return (-shifted({a: 2, b: p_shift}) + 8 * shifted({a: 1, b: p_shift})
                        - 8 * shifted({a: -1, b: p_shift}) + shifted({a: -2, b: p_shift})) / (12 * steps[:, a])
            mixed = (-d_a(2) + 8 * d_a(1) - 8 * d_a(-1) + d_a(-2)) / (12 * steps[:, b])
            second[:, a, b] = second[:, b, a] = mixed
    return f0, first, second


def _symbolic_derivatives(imm: ImmersionChart, expr: ex.Expr, points: np.ndarray):
    env = {c: points[..., i] for i, c in enumerate(imm.coordinates)}
    shape = points.shape[:-1]
    k = imm.dim
    d1 = [ex.differentiate(expr, c) for c in imm.coordinates]
    f0 = ex.CompiledExpr(expr)(env, shape)
    first = np.stack([ex.CompiledExpr(e)(env, shape) for e in d1], axis=-1)
    second = np.empty(shape + (k, k))
    for a in range(k):
        for b in range(a, k):
            value = ex.CompiledExpr(ex.differentiate(d1[a], imm.coordinates[b]))(env, shape)
            second[..., a, b] = second[..., b, a] = value
    return f0, first, second


def laplacian_field(imm: ImmersionChart, field_: FieldLike, points: np.ndarray,
                    relative_step: float = FD_RELATIVE_STEP) -> np.ndarray:
    """Δ̄f = −h^{ab}(∂_a∂_b f − Γ̄^c_{ab}∂_c f)"""
    points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
    if callable(field_):
        _, first, second = _fd_derivatives(lambda p: field_values(imm, field_, p), points,
                                           _steps(imm, points, relative_step))
    else:
        _, first, second = _symbolic_derivatives(imm, ex.as_expr(field_), points)
    _, h_inv, gamma = connection(imm.induced_chart, points)
    hess = second - np.einsum('...cab,...c->...ab', gamma, first)
    return -np.einsum('...ab,...ab->...', h_inv, hess)


def divergence_field(imm: ImmersionChart, one_form: Sequence[FieldLike], points: np.ndarray,
                     relative_step: float = FD_RELATIVE_STEP) -> np.ndarray:
    """∇̄^a ω_a = (1/√h) ∂_a(√h h^{ab} ω_b)"""
    points = np.asarray(points, dtype=float).reshape(-1, imm.dim)
    k = imm.dim
    if len(one_form) != k:
        raise ImmersionError(f"❌ الشكل التفاضلي يحتاج {k} مركبة، وصل {len(one_form)}")
    chart = imm.induced_chart

    def density(p: np.ndarray, a: int) -> np.ndarray:
        h = chart.metric(p)
        h_inv = np.linalg.inv(h)
        omega = np.stack([field_values(imm, w, p) for w in one_form], axis=-1)
        return np.sqrt(np.abs(np.linalg.det(h))) * np.einsum('...b,...b->...', h_inv[..., a, :], omega)

    steps = _steps(imm, points, relative_step)
    total = np.zeros(points.shape[0])
    for a in range(k):
        h_a = steps[:, a]

        def at(mult: int) -> np.ndarray:
            p = points.copy()
            p[:, a] += mult * h_a
            return density(p, a)

        total += (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h_a)
    return total / np.sqrt(np.abs(np.linalg.det(chart.metric(points))))


def willmore_energy(imm: ImmersionChart, grid: GridSpec = DEFAULT_GRID, threads: int = 1) -> float:
    """∫(λ + |H|²) darea لسطح مغلق في هدف أينشتاين"""
    if imm.dim != 2:
        raise ImmersionError(f"❌ طاقة ويلمور معرفة للسطوح (k = 2)، وصل {imm.dim}")
    lam = imm.info.einstein_lambda
    if lam is None:
        raise ImmersionError("❌ ثابت أينشتاين λ للهدف غير معروف")
    if not imm.info.compact:
        raise ImmersionError("❌ مصدر غير مضغوط: استخدم renormalized_willmore_energy")

    def density(points: np.ndarray) -> np.ndarray:
        geo = SubmanifoldGeometry.at(imm, points)
        return (lam + geo.mean_curvature_squared) * geo.area_element()

    return integrate_over(tensor_grid(imm.box, grid), density, threads)


def rescaled_immersion(imm: ImmersionChart, upsilon: ex.ExprLike) -> ImmersionChart:
    """نفس الخريطة j داخل الهدف e^{2Υ}g"""
    target = conformal_rescale(imm.target, upsilon)
    return ImmersionChart(f"{imm.name}[e^(2Υ)]", target, imm.coordinates, imm.box, imm._map_fn,
                          imm.backend, components=imm.components, info=imm.info, step=imm.step)


def conformal_covariance_residual(imm: ImmersionChart, upsilon: ex.ExprLike, points: np.ndarray) -> float:
    """أقصى فرق نسبي بين L̊ بعد إعادة القياس و e^{Υ∘j}L̊ في الإطار العمودي"""
    base = SubmanifoldGeometry.at(imm, points)
    scaled = SubmanifoldGeometry.at(rescaled_immersion(imm, upsilon), points)
    ups = ex.compile_expr(upsilon)
    env = {c: base.y[..., i] for i, c in enumerate(imm.target.coordinates)}
    factor = np.exp(ups(env, base.y.shape[:-1]))
    # the Gram-Schmidt gauge rescales each normal by e^{−Υ}, so frame components pick up e^{Υ}
    expected = factor[:, None, None, None] * base.L_trace_free
    diff = np.max(np.abs(scaled.L_trace_free - expected))
    scale = max(1.0, float(np.max(np.abs(expected))))
    return float(diff / scale)
