# core/tensor.py
"""
🧮 الجبر المتعدد الخطي الكثيف: الانكماش، الرفع والخفض، ضرب كولكارني-نوميزو،
دلتا كرونيكر المعممة، ومتعددات حدود Pf_ℓ
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import TensorError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float]]


class Variance(Enum):
    COVARIANT = 'l'
    CONTRAVARIANT = 'u'


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """🎯 موتر كثيف بعلامات تغاير لكل فتحة - غير قابل للتعديل بعد الإنشاء"""

    dim: int
    slots: Tuple[Variance, ...]
    components: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise TensorError(f"❌ بعد الليف يجب أن يكون موجباً: {self.dim}")
        slots = tuple(self.slots)
        comps = np.array(self.components, dtype=float)
        expected = (self.dim,) * len(slots)
        if comps.shape != expected:
            raise TensorError(
                f"❌ شكل المكونات {comps.shape} لا يطابق {expected}",
                {'shape': comps.shape, 'expected': expected},
            )
        comps.setflags(write=False)
        object.__setattr__(self, 'slots', slots)
        object.__setattr__(self, 'components', comps)

    @classmethod
    def from_array(cls, components: ArrayLike, variance: str) -> 'DenseTensor':
        """variance نص من 'l' (متغاير) و'u' (متضاد التغاير) لكل فتحة"""
        arr = np.asarray(components, dtype=float)
        dim = arr.shape[0] if arr.ndim else 1
        return cls(dim, tuple(Variance(v) for v in variance), arr)

    @property
    def rank(self) -> int:
        return len(self.slots)

    @property
    def variance(self) -> str:
        return ''.join(v.value for v in self.slots)

    def component(self, *index: int) -> float:
        return float(self.components[tuple(index)])

    def scalar(self) -> float:
        if self.rank != 0:
            raise TensorError(f"❌ الموتر من الرتبة {self.rank} وليس قياسياً")
        return float(self.components)

    def _check_compatible(self, other: 'DenseTensor') -> None:
        if self.dim != other.dim or self.slots != other.slots:
            raise TensorError("❌ موتران غير متوافقين في البعد أو التغاير")

    def __add__(self, other: 'DenseTensor') -> 'DenseTensor':
        self._check_compatible(other)
        return DenseTensor(self.dim, self.slots, self.components + other.components)

    def __sub__(self, other: 'DenseTensor') -> 'DenseTensor':
        self._check_compatible(other)
        return DenseTensor(self.dim, self.slots, self.components - other.components)

    def scale(self, factor: float) -> 'DenseTensor':
        return DenseTensor(self.dim, self.slots, factor * self.components)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0

    def allclose(self, other: 'DenseTensor', atol: float = 1e-10) -> bool:
        self._check_compatible(other)
        return bool(np.allclose(self.components, other.components, atol=atol, rtol=0.0))

    def __repr__(self) -> str:
        return f"DenseTensor(dim={self.dim}, variance='{self.variance}')"


def _check_slot(T: DenseTensor, slot: int) -> None:
    if not 0 <= slot < T.rank:
        raise TensorError(f"❌ الفتحة {slot} خارج النطاق للرتبة {T.rank}", {'slot': slot})


def contract(T: DenseTensor, slot_a: int, slot_b: int) -> DenseTensor:
    """انكماش فتحة متغايرة مع فتحة متضادة التغاير"""
    _check_slot(T, slot_a)
    _check_slot(T, slot_b)
    if slot_a == slot_b:
        raise TensorError("❌ لا يمكن انكماش الفتحة مع نفسها")
    if T.slots[slot_a] == T.slots[slot_b]:
        raise TensorError(
            f"❌ عدم تطابق التغاير: الفتحتان {slot_a} و{slot_b} من النوع نفسه",
            {'variance': T.variance},
        )
    comps = np.trace(T.components, axis1=slot_a, axis2=slot_b)
    slots = tuple(v for i, v in enumerate(T.slots) if i not in (slot_a, slot_b))
    return DenseTensor(T.dim, slots, comps)


def tensor_product(S: DenseTensor, T: DenseTensor) -> DenseTensor:
    if S.dim != T.dim:
        raise TensorError("❌ أبعاد مختلفة في الضرب الموتري")
    return DenseTensor(S.dim, S.slots + T.slots, np.multiply.outer(S.components, T.components))


def _metric_array(metric: Union[DenseTensor, np.ndarray]) -> np.ndarray:
    return metric.components if isinstance(metric, DenseTensor) else np.asarray(metric, dtype=float)


def raise_index(T: DenseTensor, slot: int, inverse_metric: Union[DenseTensor, np.ndarray]) -> DenseTensor:
    _check_slot(T, slot)
    if T.slots[slot] is not Variance.COVARIANT:
        raise TensorError(f"❌ الفتحة {slot} ليست متغايرة")
    ginv = _metric_array(inverse_metric)
    comps = np.moveaxis(np.tensordot(ginv, T.components, axes=([1], [slot])), 0, slot)
    slots = T.slots[:slot] + (Variance.CONTRAVARIANT,) + T.slots[slot + 1:]
    return DenseTensor(T.dim, slots, comps)


def lower_index(T: DenseTensor, slot: int, metric: Union[DenseTensor, np.ndarray]) -> DenseTensor:
    _check_slot(T, slot)
    if T.slots[slot] is not Variance.CONTRAVARIANT:
        raise TensorError(f"❌ الفتحة {slot} ليست متضادة التغاير")
    g = _metric_array(metric)
    comps = np.moveaxis(np.tensordot(g, T.components, axes=([1], [slot])), 0, slot)
    slots = T.slots[:slot] + (Variance.COVARIANT,) + T.slots[slot + 1:]
    return DenseTensor(T.dim, slots, comps)


def permutation_sign(seq: Sequence[int]) -> int:
    """إشارة التبديل الذي يرتب المتتالية (بعدّ الانقلابات)"""
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def _permuted_sum(T: DenseTensor, slots: Sequence[int], signed: bool) -> DenseTensor:
    slots = list(slots)
    for s in slots:
        _check_slot(T, s)
    if len(set(T.slots[s] for s in slots)) > 1:
        raise TensorError("❌ التناظر يتطلب فتحات من التغاير نفسه")
    total = np.zeros_like(T.components)
    count = 0
    for perm in itertools.permutations(range(len(slots))):
        axes = list(range(T.rank))
        for src, dst in zip(slots, (slots[p] for p in perm)):
            axes[src] = dst
        sign = permutation_sign(perm) if signed else 1
        total += sign * np.transpose(T.components, axes)
        count += 1
    return DenseTensor(T.dim, T.slots, total / count)


def symmetrize(T: DenseTensor, slots: Sequence[int]) -> DenseTensor:
    return _permuted_sum(T, slots, signed=False)


def antisymmetrize(T: DenseTensor, slots: Sequence[int]) -> DenseTensor:
    """تضاد تناظري مع القسمة على k! كما في اصطلاح الأقواس"""
    return _permuted_sum(T, slots, signed=True)


def is_symmetric(T: DenseTensor, atol: float = 1e-12) -> bool:
    if T.rank != 2:
        return False
    scale = max(1.0, T.max_abs())
    return bool(np.allclose(T.components, T.components.T, atol=atol * scale, rtol=0.0))


def factorial(m: int) -> int:
    return math.factorial(m)


def double_factorial(m: int) -> int:
    """m!! بالحساب الصحيح مع الاصطلاح (−1)!! = 1"""
    if m < -1:
        raise TensorError(f"❌ المضروب المزدوج غير معرف للقيمة {m}")
    result = 1
    while m > 1:
        result *= m
        m -= 2
    return result


@lru_cache(maxsize=32)
def scaled_generalized_kronecker(k: int, n: int) -> np.ndarray:
    """k!·δ^{a₁…a_k}_{b₁…b_k} كمصفوفة أعداد صحيحة دقيقة"""
    if k < 0:
        raise TensorError(f"❌ رتبة سالبة: {k}")
    if k == 0:
        return np.ones((), dtype=np.int64)
    out = np.zeros((n,) * (2 * k), dtype=np.int64)
    if k > n:
        return out
    for combo in itertools.combinations(range(n), k):
        perms = [(p, permutation_sign(p)) for p in itertools.permutations(combo)]
        for upper, s_up in perms:
            for lower, s_low in perms:
                out[upper + lower] = s_up * s_low
    out.setflags(write=False)
    return out


def generalized_kronecker(k: int, n: int) -> DenseTensor:
    """δ^{a₁…a_k}_{b₁…b_k}: k فتحات علوية ثم k فتحات سفلية"""
    if k > n:
        logger.warning(f"⚠️ generalized_kronecker: k={k} > n={n}، النتيجة الموتر الصفري")
    comps = scaled_generalized_kronecker(k, n).astype(float) / math.factorial(k)
    return DenseTensor(n, (Variance.CONTRAVARIANT,) * k + (Variance.COVARIANT,) * k, comps)


def kulkarni_nomizu_array(S: np.ndarray, T: np.ndarray) -> np.ndarray:
    """(S∧T)_{abcd} على دفعات (..., n, n)"""
    return (np.einsum('...ac,...bd->...abcd', S, T)
            - np.einsum('...ad,...bc->...abcd', S, T)
            + np.einsum('...bd,...ac->...abcd', S, T)
            - np.einsum('...bc,...ad->...abcd', S, T))


def kulkarni_nomizu(S: DenseTensor, T: DenseTensor) -> DenseTensor:
    for name, X in (('S', S), ('T', T)):
        if X.rank != 2 or X.variance != 'll':
            raise TensorError(f"❌ {name} يجب أن يكون موتراً متغايراً من الرتبة 2")
        if not is_symmetric(X):
            raise TensorError(f"❌ {name} غير متناظر")
    if S.dim != T.dim:
        raise TensorError("❌ أبعاد مختلفة في ضرب كولكارني-نوميزو")
    comps = kulkarni_nomizu_array(S.components, T.components)
    return DenseTensor(S.dim, (Variance.COVARIANT,) * 4, comps)


# ---------------------------------------------------------------------------
# Pfaffian polynomials
# ---------------------------------------------------------------------------

def _check_pfaffian_input(T: DenseTensor) -> None:
    if T.rank != 4 or T.variance != 'lluu':
        raise TensorError(f"❌ Pf يتطلب موتراً من النوع (2,2) بالترتيب 'lluu'، وصل '{T.variance}'")
    c = T.components
    scale = max(1.0, T.max_abs())
    if not (np.allclose(c, -np.swapaxes(c, 0, 1), atol=1e-10 * scale)
            and np.allclose(c, -np.swapaxes(c, 2, 3), atol=1e-10 * scale)):
        raise TensorError("❌ Pf يتطلب تضاد التناظر في كل زوج من الفتحات")


def _perfect_matchings(items: Tuple[int, ...]) -> List[Tuple[Tuple[int, int], ...]]:
    if not items:
        return [()]
    first, rest = items[0], items[1:]
    out = []
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _perfect_matchings(remaining):
            out.append(((first, partner),) + tail)
    return out


@lru_cache(maxsize=64)
def matching_terms(ell: int, n: int) -> Tuple[Tuple[int, Tuple[Tuple[int, int, int, int], ...]], ...]:
    """حدود المسار السريع: مجموعات جزئية بحجم 2ℓ × توافقات تامة بمعامل واحد"""
    terms = []
    for subset in itertools.combinations(range(n), 2 * ell):
        matchings = [(m, permutation_sign([i for pair in m for i in pair])) for m in _perfect_matchings(subset)]
        for lower, s_low in matchings:
            for upper, s_up in matchings:
                for order in itertools.permutations(range(ell)):
                    quads = tuple(lower[i] + upper[order[i]] for i in range(ell))
                    terms.append((s_low * s_up, quads))
    return tuple(terms)


def _explicit_pfaffian(ell: int, factors: Sequence[np.ndarray], n: int) -> float:
    coefficient = double_factorial(2 * ell - 1) / (2 ** ell * math.factorial(2 * ell))
    sigmas = [(s, permutation_sign(s)) for s in itertools.permutations(range(2 * ell))]
    total = 0.0
    for a in itertools.permutations(range(n), 2 * ell):
        for sigma, sign in sigmas:
            prod = float(sign)
            for i, F in enumerate(factors):
                prod *= F[a[2 * i], a[2 * i + 1], a[sigma[2 * i]], a[sigma[2 * i + 1]]]
                if prod == 0.0:
                    break
            total += prod
    return coefficient * total


def _matching_pfaffian(ell: int, factors: Sequence[np.ndarray], n: int) -> float:
    total = 0.0
    assignments = list(itertools.permutations(range(ell)))
    for sign, quads in matching_terms(ell, n):
        for assign in assignments:
            prod = float(sign)
            for j, q in enumerate(quads):
                prod *= factors[assign[j]][q]
            total += prod
    return total / len(assignments)


def pfaffian_multilinear(ell: int, factors: Sequence[DenseTensor], method: str = 'matching') -> float:
    """الامتداد المتعدد الخطي المتناظر لـ Pf_ℓ"""
    if len(factors) != ell:
        raise TensorError(f"❌ المطلوب {ell} عوامل، وصل {len(factors)}")
    if ell == 0:
        return 1.0
    n = factors[0].dim
    for F in factors:
        _check_pfaffian_input(F)
        if F.dim != n:
            raise TensorError("❌ عوامل بأبعاد مختلفة")
    if 2 * ell > n:
        logger.warning(f"⚠️ Pf_{ell} في البعد {n}: 2ℓ > n، النتيجة صفر")
        return 0.0
    arrays = [F.components for F in factors]
    if method == 'explicit':
        return _explicit_pfaffian(ell, arrays, n)
    if method == 'matching':
        return _matching_pfaffian(ell, arrays, n)
    raise TensorError(f"❌ طريقة غير معروفة: {method}")


def pfaffian_poly(ell: int, T: DenseTensor, method: str = 'explicit') -> float:
    """Pf_ℓ(T) = 2^{−ℓ}(2ℓ−1)!! δ T⋯T مع Pf_0 = 1"""
    if ell < 0:
        raise TensorError(f"❌ ℓ سالب: {ell}")
    return pfaffian_multilinear(ell, [T] * ell, method=method)


def pfaffian_field(ell: int, arrays: np.ndarray) -> np.ndarray:
    """Pf_ℓ على دفعة من موترات (2,2) بالشكل (..., n, n, n, n)"""
    arrays = np.asarray(arrays, dtype=float)
    batch = arrays.shape[:-4]
    n = arrays.shape[-1]
    if ell == 0:
        return np.ones(batch)
    if 2 * ell > n:
        return np.zeros(batch)
    total = np.zeros(batch)
    for sign, quads in matching_terms(ell, n):
        prod = np.full(batch, float(sign))
        for q in quads:
            prod = prod * arrays[(Ellipsis,) + q]
        total += prod
    return total


def mixed_from_covariant(R: np.ndarray, inverse_metric: np.ndarray) -> np.ndarray:
    """R_{ab}{}^{cd} من R_{abcd} على دفعات"""
    return np.einsum('...abef,...ec,...fd->...abcd', R, inverse_metric, inverse_metric)


def max_norm(values: Iterable[float]) -> float:
    arr = np.abs(np.asarray(values, dtype=float))
    return float(np.max(arr)) if arr.size else 0.0