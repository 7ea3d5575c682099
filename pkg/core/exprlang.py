# core/exprlang.py
"""
🔣 لغة تعابير حسابية صغيرة لمكونات المقاييس والغمرات في ملفات السيناريو،
مع اشتقاق رمزي دقيق وطي للثوابت فقط

Grammar:
    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import ExprDomainError, ExprError, ParseError

logger = logging.getLogger(__name__)

FUNCTIONS: Dict[str, Callable] = {
    'sin': np.sin, 'cos': np.cos, 'tan': np.tan,
    'exp': np.exp, 'log': np.log, 'sqrt': np.sqrt,
    'sinh': np.sinh, 'cosh': np.cosh, 'tanh': np.tanh,
}
CONSTANTS: Dict[str, float] = {'pi': math.pi}

# precedence used by the printer
_PREC = {'+': 1, '-': 1, '*': 2, '/': 2, 'neg': 3, '^': 4, 'atom': 5}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: 'Expr'


@dataclass(frozen=True)
class BinOp:
    op: str
    left: 'Expr'
    right: 'Expr'


@dataclass(frozen=True)
class Call:
    func: str
    arg: 'Expr'


Expr = Union[Num, Var, Neg, BinOp, Call]
ExprLike = Union[Expr, str, int, float]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r'\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))')


@dataclass(frozen=True)
class _Token:
    kind: str      # 'num' | 'ident' | 'op' | 'end'
    text: str
    offset: int    # byte offset


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            break
        number, ident, op = match.groups()
        start = match.start(1 if number else 2 if ident else 3)
        offset = len(text[:start].encode('utf-8'))
        if number:
            tokens.append(_Token('num', number, offset))
        elif ident:
            tokens.append(_Token('ident', ident, offset))
        else:
            if op not in '+-*/^()':
                raise ParseError(f"unexpected character '{op}'", offset)
            tokens.append(_Token('op', op, offset))
        pos = match.end()
    tokens.append(_Token('end', '', len(text.encode('utf-8'))))
    return tokens


class _Parser:
    """محلل تنازلي تعاودي"""

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def _accept(self, op: str) -> bool:
        tok = self.current
        if tok.kind == 'op' and tok.text == op:
            self.pos += 1
            return True
        return False

    def parse(self) -> Expr:
        expr = self._expr()
        if self.current.kind != 'end':
            raise ParseError(f"trailing token '{self.current.text}'", self.current.offset)
        return expr

    def _expr(self) -> Expr:
        node = self._term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self.current.text
            self.pos += 1
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._unary()
        while self.current.kind == 'op' and self.current.text in '*/':
            op = self.current.text
            self.pos += 1
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self._accept('-'):
            operand = self._unary()
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Neg(operand)
        if self._accept('+'):
            return self._unary()
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        if self._accept('^'):
            return BinOp('^', base, self._unary())
        return base

    def _atom(self) -> Expr:
        tok = self.current
        if tok.kind == 'num':
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == 'ident':
            self.pos += 1
            if self.current.kind == 'op' and self.current.text == '(':
                if tok.text not in FUNCTIONS:
                    raise ParseError(f"unknown function '{tok.text}'", tok.offset)
                self.pos += 1
                arg = self._expr()
                if not self._accept(')'):
                    raise ParseError("expected ')'", self.current.offset)
                return Call(tok.text, arg)
            if tok.text in CONSTANTS:
                return Num(CONSTANTS[tok.text])
            if tok.text in FUNCTIONS:
                raise ParseError(f"function '{tok.text}' used without argument", tok.offset)
            return Var(tok.text)
        if tok.kind == 'op' and tok.text == '(':
            self.pos += 1
            inner = self._expr()
            if not self._accept(')'):
                raise ParseError("expected ')'", self.current.offset)
            return inner
        if tok.kind == 'end':
            raise ParseError("unexpected end of expression", tok.offset)
        raise ParseError(f"unexpected token '{tok.text}'", tok.offset)


def parse(text: str) -> Expr:
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


def as_expr(value: ExprLike) -> Expr:
    """يقبل نصاً أو رقماً أو تعبيراً جاهزاً"""
    if isinstance(value, (Num, Var, Neg, BinOp, Call)):
        return value
    if isinstance(value, bool):
        raise ExprError(f"❌ قيمة منطقية لا تصلح تعبيراً: {value}")
    if isinstance(value, (int, float)):
        return Num(float(value))
    if isinstance(value, str):
        return parse(value)
    raise ExprError(f"❌ نوع غير مدعوم للتعبير: {type(value).__name__}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC['neg']
    if isinstance(e, Num) and e.value < 0:
        return _PREC['neg']
    return _PREC['atom']


def to_text(e: Expr) -> str:
    """طباعة بأقل عدد من الأقواس يحفظ البنية عند إعادة التحليل"""
    if isinstance(e, Num):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        # a negated literal would fold back into Num when re-parsed
        if _prec(e.operand) < _PREC['^'] or isinstance(e.operand, Num):
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[e.op]
    left, right = to_text(e.left), to_text(e.right)
    if e.op == '^':
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < _PREC['neg']:
            right = f"({right})"
    else:
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
    return f"{left}{e.op}{right}" if e.op in '*/^' else f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# Constant-folding constructors
# ---------------------------------------------------------------------------

ZERO = Num(0.0)
ONE = Num(1.0)


def _is_num(e: Expr, value: Optional[float] = None) -> bool:
    return isinstance(e, Num) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp('+', a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return BinOp('-', a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp('*', a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        raise ExprDomainError("❌ قسمة على صفر ثابت")
    if _is_num(a) and _is_num(b):
        return Num(a.value / b.value)
    if _is_num(a, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    return BinOp('/', a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return ONE
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        try:
            return Num(float(a.value ** b.value))
        except (ZeroDivisionError, OverflowError):
            pass
    return BinOp('^', a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def call(func: str, a: Expr) -> Expr:
    if _is_num(a):
        return Num(float(FUNCTIONS[func](a.value)))
    return Call(func, a)


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------

def free_variables(e: Expr) -> FrozenSet[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, Call):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """استبدال المتغيرات بتعابير (تركيب الدوال) مع طي الثوابت"""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return neg(substitute(e.operand, mapping))
    if isinstance(e, Call):
        return call(e.func, substitute(e.arg, mapping))
    left, right = substitute(e.left, mapping), substitute(e.right, mapping)
    return _BUILDERS[e.op](left, right)


_BUILDERS = {'+': add, '-': sub, '*': mul, '/': div, '^': power}


def differentiate(e: Expr, var: str) -> Expr:
    """مشتقة رمزية دقيقة بدون تبسيط سوى طي الثوابت"""
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(differentiate(e.operand, var))
    if isinstance(e, Call):
        inner = differentiate(e.arg, var)
        if _is_num(inner, 0.0):
            return ZERO
        u = e.arg
        outer = {
            'sin': lambda: call('cos', u),
            'cos': lambda: neg(call('sin', u)),
            'tan': lambda: div(ONE, power(call('cos', u), Num(2.0))),
            'exp': lambda: call('exp', u),
            'log': lambda: div(ONE, u),
            'sqrt': lambda: div(ONE, mul(Num(2.0), call('sqrt', u))),
            'sinh': lambda: call('cosh', u),
            'cosh': lambda: call('sinh', u),
            'tanh': lambda: div(ONE, power(call('cosh', u), Num(2.0))),
        }[e.func]()
        return mul(outer, inner)
    da, db = differentiate(e.left, var), differentiate(e.right, var)
    a, b = e.left, e.right
    if e.op == '+':
        return add(da, db)
    if e.op == '-':
        return sub(da, db)
    if e.op == '*':
        return add(mul(da, b), mul(a, db))
    if e.op == '/':
        return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
    # e.op == '^'
    if _is_num(db, 0.0):
        return mul(mul(b, power(a, sub(b, ONE))), da)
    return mul(e, add(mul(db, call('log', a)), div(mul(b, da), a)))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

Evaluator = Callable[[Mapping[str, np.ndarray]], np.ndarray]


def _compile(e: Expr) -> Evaluator:
    if isinstance(e, Num):
        value = e.value
        return lambda env: value
    if isinstance(e, Var):
        name = e.name

        def _lookup(env):
            try:
                return env[name]
            except KeyError:
                raise ExprError(f"❌ متغير غير معرف أثناء التقييم: '{name}'", {'variable': name}) from None
        return _lookup
    if isinstance(e, Neg):
        inner = _compile(e.operand)
        return lambda env: -inner(env)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        arg = _compile(e.arg)
        return lambda env: fn(arg(env))
    left, right = _compile(e.left), _compile(e.right)
    if e.op == '+':
        return lambda env: left(env) + right(env)
    if e.op == '-':
        return lambda env: left(env) - right(env)
    if e.op == '*':
        return lambda env: left(env) * right(env)
    if e.op == '/':
        return lambda env: np.divide(left(env), right(env))
    return lambda env: np.power(left(env), right(env))


class CompiledExpr:
    """🎯 مقيّم موجّه لتعبير ثابت - يقبل مصفوفات numpy ويبث الثوابت"""

    def __init__(self, expr: Expr):
        self.expr = expr
        self.variables = free_variables(expr)
        self._fn = _compile(expr)

    def __call__(self, env: Mapping[str, np.ndarray], shape: Optional[Tuple[int, ...]] = None) -> np.ndarray:
        with np.errstate(all='ignore'):
            value = np.asarray(self._fn(env), dtype=float)
        if shape is not None and value.shape != shape:
            value = np.broadcast_to(value, shape).copy()
        if not np.all(np.isfinite(value)):
            raise ExprDomainError(
                f"❌ خطأ مجال أثناء تقييم '{to_text(self.expr)}'",
                {'expression': to_text(self.expr)},
            )
        return value


def compile_expr(e: ExprLike) -> CompiledExpr:
    return CompiledExpr(as_expr(e))


def evaluate(e: ExprLike, env: Mapping[str, float]) -> float:
    """تقييم نقطي حتمي"""
    arrays = {k: np.asarray(v, dtype=float) for k, v in env.items()}
    return float(compile_expr(e)(arrays))
