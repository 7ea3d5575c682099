# core/jets.py
"""
📈 متسلسلات القوى المقطوعة في المتغير المميز ρ بمعاملات كثيرات حدود في إحداثيات الحد

- Poly: كثيرة حدود متفرقة بمعاملات كسرية دقيقة، مع قطع اختياري للدرجة الكلية
  (order) يحولها إلى متسلسلة تايلور مقطوعة حول x = 0
- Jet: معاملات c_0..c_N مع وسم التماثل (زوجي/فردي)
- JetMatrix: مصفوفة مربعة من Jets مع المقلوب المتسلسل
"""

import logging
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import exprlang as ex
from .errors import JetError, NonInvertibleError, NonPolynomialError, ParityError

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]

EVEN = 'even'
ODD = 'odd'


def to_fraction(value: Union[int, float, Fraction, str]) -> Fraction:
    """تحويل دقيق: العشري يمر عبر repr حتى 0.1 تصبح 1/10"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise JetError("❌ قيمة منطقية ليست معاملاً")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise JetError(f"❌ معامل غير منته: {value}")
        return Fraction(repr(value))
    return Fraction(value)


def _merge_order(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class Poly:
    """كثيرة حدود في nvars متغيرات - الشكل القانوني لا يخزن معاملات صفرية"""

    __slots__ = ('nvars', 'terms', 'order')

    def __init__(self, nvars: int, terms: Optional[Mapping[Exponent, Scalar]] = None,
                 order: Optional[int] = None):
        if nvars < 0:
            raise JetError(f"❌ عدد متغيرات سالب: {nvars}")
        if order is not None and order < 0:
            raise JetError(f"❌ رتبة قطع سالبة: {order}")
        self.nvars = nvars
        self.order = order
        clean: Dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars or any(e < 0 for e in exp):
                raise JetError(f"❌ أس غير صالح {exp} لـ {nvars} متغيرات")
            if order is not None and sum(exp) > order:
                continue
            c = to_fraction(coeff)
            if c != 0:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if clean[exp] == 0:
                    del clean[exp]
        self.terms = clean

    # ------------------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int, order: Optional[int] = None) -> 'Poly':
        return cls(nvars, {}, order)

    @classmethod
    def constant(cls, value: Scalar, nvars: int, order: Optional[int] = None) -> 'Poly':
        return cls(nvars, {(0,) * nvars: value}, order)

    @classmethod
    def variable(cls, index: int, nvars: int, order: Optional[int] = None) -> 'Poly':
        exp = tuple(1 if i == index else 0 for i in range(nvars))
        return cls(nvars, {exp: 1}, order)

    @classmethod
    def from_expr(cls, expr: ex.ExprLike, variables: Sequence[str], order: Optional[int] = None) -> 'Poly':
        """تحويل تعبير كثير حدود؛ أي دالة أو قسمة على متغير أو أس غير صحيح ترفع NonPolynomialError"""
        nvars = len(variables)
        index = {v: i for i, v in enumerate(variables)}

        def walk(e: ex.Expr) -> 'Poly':
            if isinstance(e, ex.Num):
                return cls.constant(to_fraction(e.value), nvars, order)
            if isinstance(e, ex.Var):
                if e.name not in index:
                    raise NonPolynomialError(f"❌ متغير غير معرف في بيانات الحد: '{e.name}'")
                return cls.variable(index[e.name], nvars, order)
            if isinstance(e, ex.Neg):
                return -walk(e.operand)
            if isinstance(e, ex.BinOp):
                if e.op == '+':
                    return walk(e.left) + walk(e.right)
                if e.op == '-':
                    return walk(e.left) - walk(e.right)
                if e.op == '*':
                    return walk(e.left) * walk(e.right)
                if e.op == '/':
                    if not isinstance(e.right, ex.Num) or e.right.value == 0:
                        raise NonPolynomialError(f"❌ قسمة غير متعددة الحدود: {ex.to_text(e)}")
                    return walk(e.left) * (Fraction(1) / to_fraction(e.right.value))
                if e.op == '^':
                    if not isinstance(e.right, ex.Num) or e.right.value != int(e.right.value) or e.right.value < 0:
                        raise NonPolynomialError(f"❌ أس غير صحيح موجب: {ex.to_text(e)}")
                    return walk(e.left) ** int(e.right.value)
            raise NonPolynomialError(f"❌ تعبير غير متعدد الحدود: {ex.to_text(e)}")

        return walk(ex.as_expr(expr))

    def to_expr(self, variables: Sequence[str]) -> ex.Expr:
        if len(variables) != self.nvars:
            raise JetError("❌ عدد أسماء المتغيرات لا يطابق")
        result: ex.Expr = ex.Num(0.0)
        for exp, coeff in sorted(self.terms.items()):
            term: ex.Expr = ex.Num(float(coeff))
            for name, e in zip(variables, exp):
                if e:
                    term = ex.mul(term, ex.power(ex.Var(name), ex.Num(float(e))))
            result = ex.add(result, term)
        return result

    # ------------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def _coerce(self, other) -> 'Poly':
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise JetError(f"❌ كثيرات حدود بعدد متغيرات مختلف: {self.nvars} و {other.nvars}")
            return other
        return Poly.constant(to_fraction(other), self.nvars)

    def truncate(self, order: Optional[int]) -> 'Poly':
        return Poly(self.nvars, self.terms, _merge_order(self.order, order))

    def __add__(self, other) -> 'Poly':
        other = self._coerce(other)
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            terms[exp] = terms.get(exp, Fraction(0)) + c
        return Poly(self.nvars, terms, _merge_order(self.order, other.order))

    __radd__ = __add__

    def __neg__(self) -> 'Poly':
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()}, self.order)

    def __sub__(self, other) -> 'Poly':
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> 'Poly':
        return self._coerce(other) - self

    def __mul__(self, other) -> 'Poly':
        if not isinstance(other, Poly):
            c = to_fraction(other)
            return Poly(self.nvars, {e: c * v for e, v in self.terms.items()}, self.order)
        other = self._coerce(other)
        order = _merge_order(self.order, other.order)
        terms: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if order is not None and d1 + sum(e2) > order:
                    continue
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, Fraction(0)) + c1 * c2
        return Poly(self.nvars, terms, order)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> 'Poly':
        if power < 0:
            raise JetError("❌ أس سالب")
        result = Poly.constant(1, self.nvars, self.order)
        for _ in range(power):
            result = result * self
        return result

    def inverse(self) -> 'Poly':
        """مقلوب المتسلسلة: متاح للثابت، أو في النمط المقطوع عند ثابت غير صفري"""
        c = self.constant_term
        if c == 0:
            raise NonInvertibleError("❌ الحد الثابت صفري - المقلوب غير موجود")
        if self.degree <= 0:
            return Poly.constant(1 / c, self.nvars, self.order)
        if self.order is None:
            raise NonInvertibleError("❌ مقلوب كثيرة حدود غير ثابتة يتطلب نمط القطع (order)")
        q = (self - c) * (1 / c)
        result = Poly.constant(1, self.nvars, self.order)
        term = Poly.constant(1, self.nvars, self.order)
        for _ in range(self.order):
            term = term * (-q)
            if term.is_zero():
                break
            result = result + term
        return result * (1 / c)

    def diff(self, index: int) -> 'Poly':
        """الاشتقاق الجزئي - في النمط المقطوع تنقص دقة الرتبة بواحد"""
        if not 0 <= index < self.nvars:
            raise JetError(f"❌ فهرس متغير خارج المدى: {index}")
        terms = {}
        for exp, c in self.terms.items():
            if exp[index]:
                new = list(exp)
                new[index] -= 1
                terms[tuple(new)] = c * exp[index]
        order = None if self.order is None else max(self.order - 1, 0)
        return Poly(self.nvars, terms, order)

    def laplacian(self) -> 'Poly':
        result = Poly.zero(self.nvars, self.order)
        for i in range(self.nvars):
            result = result + self.diff(i).diff(i)
        return result

    def evaluate(self, point: Sequence[float]) -> float:
        return float(self.evaluate_array(np.asarray(point, dtype=float)))

    def evaluate_exact(self, point: Sequence[Scalar]) -> Fraction:
        total = Fraction(0)
        pt = [to_fraction(p) for p in point]
        for exp, c in self.terms.items():
            term = c
            for x, e in zip(pt, exp):
                term *= x ** e
            total += term
        return total

    def evaluate_array(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = np.zeros(values.shape[:-1])
        for exp, c in self.terms.items():
            term = np.full(values.shape[:-1], float(c))
            for i, e in enumerate(exp):
                if e:
                    term = term * values[..., i] ** e
            out = out + term
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            try:
                other = self._coerce(other)
            except (JetError, TypeError, ValueError):
                return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.terms.items()))))

    def to_text(self, variables: Optional[Sequence[str]] = None) -> str:
        names = list(variables) if variables else [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return '0'
        parts = []
        for exp, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            mono = '*'.join(f"{n}^{e}" if e > 1 else n for n, e in zip(names, exp) if e)
            coeff = str(c)
            parts.append(coeff if not mono else (mono if c == 1 else f"{coeff}*{mono}"))
        return ' + '.join(parts)

    def __repr__(self) -> str:
        suffix = f", order={self.order}" if self.order is not None else ''
        return f"Poly({self.to_text()}{suffix})"


CoeffLike = Union[Poly, Scalar]


class Jet:
    """🎯 متسلسلة مقطوعة Σ_{i≤N} c_i(x) ρ^i مع وسم التماثل"""

    __slots__ = ('coeffs', 'parity', 'horizon')

    def __init__(self, coeffs: Sequence[Poly], parity: Optional[str] = None, horizon: Optional[int] = None):
        if not coeffs:
            raise JetError("❌ Jet يحتاج معاملاً واحداً على الأقل")
        nvars = coeffs[0].nvars
        if any(c.nvars != nvars for c in coeffs):
            raise JetError("❌ معاملات Jet بعدد متغيرات مختلف")
        if parity not in (None, EVEN, ODD):
            raise JetError(f"❌ وسم تماثل غير معروف: {parity}")
        self.coeffs: Tuple[Poly, ...] = tuple(coeffs)
        self.parity = parity
        self.horizon = horizon

    @classmethod
    def zero(cls, nvars: int, order: int, x_order: Optional[int] = None) -> 'Jet':
        return cls([Poly.zero(nvars, x_order) for _ in range(order + 1)])

    @classmethod
    def constant(cls, value: CoeffLike, nvars: int, order: int, x_order: Optional[int] = None) -> 'Jet':
        first = value if isinstance(value, Poly) else Poly.constant(value, nvars, x_order)
        return cls([first] + [Poly.zero(nvars, x_order) for _ in range(order)], parity=EVEN)

    @classmethod
    def monomial(cls, coeff: CoeffLike, power: int, nvars: int, order: int,
                 x_order: Optional[int] = None) -> 'Jet':
        c = coeff if isinstance(coeff, Poly) else Poly.constant(coeff, nvars, x_order)
        coeffs = [Poly.zero(nvars, x_order) for _ in range(order + 1)]
        if power <= order:
            coeffs[power] = c
        return cls(coeffs, parity=EVEN if power % 2 == 0 else ODD)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def nvars(self) -> int:
        return self.coeffs[0].nvars

    def coefficient(self, i: int) -> Poly:
        if i > self.order:
            raise JetError(f"❌ المعامل ρ^{i} خارج رتبة القطع {self.order}")
        return self.coeffs[i]

    def truncate(self, order: int) -> 'Jet':
        return Jet(self.coeffs[:order + 1], self.parity, self.horizon)

    def is_zero(self, through: Optional[int] = None) -> bool:
        last = self.order if through is None else min(through, self.order)
        return all(c.is_zero() for c in self.coeffs[:last + 1])

    # ------------------------------------------------------------------
    def _check(self, other: 'Jet') -> int:
        if other.nvars != self.nvars:
            raise JetError("❌ Jets بعدد متغيرات مختلف")
        return min(self.order, other.order)

    def _lift(self, other) -> 'Jet':
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.nvars, self.order)

    def __add__(self, other) -> 'Jet':
        other = self._lift(other)
        n = self._check(other)
        parity = self.parity if self.parity == other.parity else None
        return Jet([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], parity,
                   _merge_order(self.horizon, other.horizon))

    __radd__ = __add__

    def __neg__(self) -> 'Jet':
        return Jet([-c for c in self.coeffs], self.parity, self.horizon)

    def __sub__(self, other) -> 'Jet':
        return self + (-self._lift(other))

    def __rsub__(self, other) -> 'Jet':
        return self._lift(other) - self

    def __mul__(self, other) -> 'Jet':
        if isinstance(other, Jet):
            return jet_mul(self, other)
        if isinstance(other, Poly):
            return Jet([c * other for c in self.coeffs], self.parity, self.horizon)
        return Jet([c * to_fraction(other) for c in self.coeffs], self.parity, self.horizon)

    __rmul__ = __mul__

    def shift(self, power: int) -> 'Jet':
        """الضرب في ρ^power مع الإبقاء على رتبة القطع"""
        zeros = [Poly.zero(self.nvars, self.coeffs[0].order) for _ in range(power)]
        coeffs = (zeros + list(self.coeffs))[:self.order + 1]
        parity = _flip(self.parity) if power % 2 else self.parity
        return Jet(coeffs, parity, self.horizon)

    def lower(self, power: int) -> 'Jet':
        """القسمة على ρ^power - تتطلب انعدام المعاملات الأولى"""
        if not self.is_zero(power - 1):
            raise JetError(f"❌ لا يمكن القسمة على ρ^{power}: معاملات دنيا غير صفرية")
        parity = _flip(self.parity) if power % 2 else self.parity
        return Jet(self.coeffs[power:], parity, self.horizon)

    def with_parity(self, parity: str, horizon: Optional[int] = None) -> 'Jet':
        jet = Jet(self.coeffs, None, horizon)
        jet.assert_parity(parity)
        return Jet(self.coeffs, parity, horizon)

    def assert_parity(self, parity: str) -> None:
        """فحص التماثل: الوسم المعاكس أو معامل مخالف حتى الأفق يرفع ParityError"""
        if self.parity is not None and self.parity != parity:
            raise ParityError(f"❌ Jet موسوم '{self.parity}' وليس '{parity}'")
        last = self.order if self.horizon is None else min(self.horizon, self.order)
        start = 1 if parity == EVEN else 0
        for i in range(start, last + 1, 2):
            if not self.coeffs[i].is_zero():
                raise ParityError(f"❌ المعامل ρ^{i} غير صفري في Jet {parity}", {'power': i})

    def evaluate(self, rho: float, point: Sequence[float]) -> float:
        return float(sum(c.evaluate(point) * rho ** i for i, c in enumerate(self.coeffs)))

    def to_expr(self, rho: str, variables: Sequence[str]) -> ex.Expr:
        result: ex.Expr = ex.Num(0.0)
        for i, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            term = c.to_expr(variables)
            if i:
                term = ex.mul(term, ex.power(ex.Var(rho), ex.Num(float(i))))
            result = ex.add(result, term)
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Jet):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self) -> str:
        body = ' + '.join(f"({c.to_text()})ρ^{i}" for i, c in enumerate(self.coeffs) if not c.is_zero()) or '0'
        return f"Jet[{body} + O(ρ^{self.order + 1}), parity={self.parity}]"


def _flip(parity: Optional[str]) -> Optional[str]:
    return {EVEN: ODD, ODD: EVEN}.get(parity)


def _product_parity(a: Optional[str], b: Optional[str]) -> Optional[str]:
    if a is None or b is None:
        return None
    return EVEN if a == b else ODD


# ---------------------------------------------------------------------------
# Jet operations
# ---------------------------------------------------------------------------

def jet_mul(a: Jet, b: Jet) -> Jet:
    n = a._check(b)
    coeffs = []
    for k in range(n + 1):
        total = a.coeffs[0] * b.coeffs[k]
        for i in range(1, k + 1):
            total = total + a.coeffs[i] * b.coeffs[k - i]
        coeffs.append(total)
    return Jet(coeffs, _product_parity(a.parity, b.parity), _merge_order(a.horizon, b.horizon))


def jet_invert(a: Jet) -> Jet:
    """b_0 = a_0⁻¹ و b_k = −b_0 Σ_{i=1..k} a_i b_{k−i}"""
    try:
        b0 = a.coeffs[0].inverse()
    except NonInvertibleError as e:
        raise NonInvertibleError(f"❌ Jet غير قابل للقلب: {e}") from e
    coeffs = [b0]
    for k in range(1, a.order + 1):
        acc = Poly.zero(a.nvars, b0.order)
        for i in range(1, k + 1):
            acc = acc + a.coeffs[i] * coeffs[k - i]
        coeffs.append(-(b0 * acc))
    parity = EVEN if a.parity == EVEN else None
    return Jet(coeffs, parity, a.horizon)


def jet_diff_rho(a: Jet) -> Jet:
    if a.order == 0:
        return Jet([Poly.zero(a.nvars, a.coeffs[0].order)], _flip(a.parity), a.horizon)
    coeffs = [a.coeffs[i + 1] * (i + 1) for i in range(a.order)]
    horizon = None if a.horizon is None else a.horizon - 1
    return Jet(coeffs, _flip(a.parity), horizon)


def jet_diff_x(a: Jet, index: int) -> Jet:
    return Jet([c.diff(index) for c in a.coeffs], a.parity, a.horizon)


class JetMatrix:
    """مصفوفة مربعة من Jets"""

    def __init__(self, rows: Sequence[Sequence[Jet]]):
        size = len(rows)
        if size == 0 or any(len(r) != size for r in rows):
            raise JetError("❌ JetMatrix يجب أن تكون مربعة وغير فارغة")
        self.rows: Tuple[Tuple[Jet, ...], ...] = tuple(tuple(r) for r in rows)

    @classmethod
    def identity(cls, size: int, nvars: int, order: int, x_order: Optional[int] = None) -> 'JetMatrix':
        return cls([[Jet.constant(1 if i == j else 0, nvars, order, x_order) for j in range(size)]
                    for i in range(size)])

    @classmethod
    def diagonal(cls, jets: Sequence[Jet]) -> 'JetMatrix':
        size = len(jets)
        nvars, order = jets[0].nvars, jets[0].order
        return cls([[jets[i] if i == j else Jet.zero(nvars, order) for j in range(size)] for i in range(size)])

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def order(self) -> int:
        return min(j.order for r in self.rows for j in r)

    def __getitem__(self, index: Tuple[int, int]) -> Jet:
        i, j = index
        return self.rows[i][j]

    def __matmul__(self, other: 'JetMatrix') -> 'JetMatrix':
        if other.size != self.size:
            raise JetError("❌ أحجام مصفوفات غير متوافقة")
        n = self.size
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = jet_mul(self.rows[i][0], other.rows[0][j])
                for m in range(1, n):
                    acc = acc + jet_mul(self.rows[i][m], other.rows[m][j])
                row.append(acc)
            out.append(row)
        return JetMatrix(out)

    def coefficient_matrix(self, power: int) -> List[List[Poly]]:
        return [[jet.coefficient(power) for jet in row] for row in self.rows]

    def equals_identity(self, through: Optional[int] = None) -> bool:
        n = self.size
        last = self.order if through is None else through
        for i in range(n):
            for j in range(n):
                coeffs = self.rows[i][j].coeffs[:last + 1]
                for p, c in enumerate(coeffs):
                    expected = 1 if (i == j and p == 0) else 0
                    if c != expected:
                        return False
        return True


def _poly_matrix_inverse(M: List[List[Poly]]) -> List[List[Poly]]:
    """جاوس-جوردان على حلقة المعاملات: المحور بحد ثابت غير صفري"""
    n = len(M)
    nvars = M[0][0].nvars
    order = None
    for row in M:
        for p in row:
            order = _merge_order(order, p.order)
    A = [[M[i][j] for j in range(n)] + [Poly.constant(1 if i == j else 0, nvars, order) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if A[r][col].constant_term != 0), None)
        if pivot is None:
            raise NonInvertibleError("❌ المصفوفة الثابتة غير قابلة للقلب", {'column': col})
        A[col], A[pivot] = A[pivot], A[col]
        inv = A[col][col].inverse()
        A[col] = [p * inv for p in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                factor = A[r][col]
                A[r] = [A[r][j] - factor * A[col][j] for j in range(2 * n)]
    return [row[n:] for row in A]


def jet_matrix_invert(M: JetMatrix) -> JetMatrix:
    """B_0 = M_0⁻¹ و B_p = −B_0 Σ_{i=1..p} M_i B_{p−i}"""
    n, order = M.size, M.order
    B0 = _poly_matrix_inverse(M.coefficient_matrix(0))
    blocks = [B0]
    for p in range(1, order + 1):
        acc = [[None] * n for _ in range(n)]
        for i in range(1, p + 1):
            Mi = M.coefficient_matrix(i)
            Bp = blocks[p - i]
            for r in range(n):
                for c in range(n):
                    term = Mi[r][0] * Bp[0][c]
                    for m in range(1, n):
                        term = term + Mi[r][m] * Bp[m][c]
                    acc[r][c] = term if acc[r][c] is None else acc[r][c] + term
        block = []
        for r in range(n):
            row = []
            for c in range(n):
                entry = B0[r][0] * acc[0][c]
                for m in range(1, n):
                    entry = entry + B0[r][m] * acc[m][c]
                row.append(-entry)
            block.append(row)
        blocks.append(block)
    rows = [[Jet([blocks[p][r][c] for p in range(order + 1)]) for c in range(n)] for r in range(n)]
    return JetMatrix(rows)
