"""Scalar expression language used in system config files.

Grammar (whitespace insignificant, no implicit multiplication):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' integer)?
    atom   := number | ident | ident '(' args ')' | '(' expr ')'

Identifiers are state variables ``x1..xn``, the time variable ``t``, named
parameters, or one of the functions sin, cos, exp, abs, sgn, sqrt, min, max.
Exponents are restricted to integer literals so differentiation stays exact.
``sgn(0)`` evaluates to 0; set-valued handling of the sign function is the
simulator's business, not the evaluator's.

ASTs are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence


class ParseError(ValueError):
    """Syntax or validation failure, carrying the byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ValueError):
    """Numerical failure during evaluation, carrying the node's source offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (node at offset {offset})")
        self.offset = offset


class DiffError(ValueError):
    """Raised when differentiation hits a non-smooth node (abs, sgn, min, max)."""


# function name -> (arity, evaluator)
_FUNCTIONS: dict = {
    "sin": (1, math.sin),
    "cos": (1, math.cos),
    "exp": (1, math.exp),
    "abs": (1, abs),
    "sgn": (1, lambda v: 0.0 if v == 0.0 else math.copysign(1.0, v)),
    "sqrt": (1, None),  # handled specially: domain check
    "min": (2, min),
    "max": (2, max),
}

_NONSMOOTH = frozenset({"abs", "sgn", "min", "max"})


@dataclass(frozen=True)
class Expr:
    # source offset, for error messages only; excluded from structural equality
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Num(Expr):
    value: float = 0.0


@dataclass(frozen=True)
class State(Expr):
    index: int = 0  # zero-based; x1 has index 0


@dataclass(frozen=True)
class Time(Expr):
    pass


@dataclass(frozen=True)
class Param(Expr):
    name: str = ""


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr = None


@dataclass(frozen=True)
class Bin(Expr):
    op: str = "+"
    left: Expr = None
    right: Expr = None


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr = None
    exponent: int = 1


@dataclass(frozen=True)
class Call(Expr):
    fn: str = ""
    args: tuple = ()


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_STATE_RE = re.compile(r"^x(\d+)$")


class _Lexer:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0
        self.tok_kind: Optional[str] = None
        self.tok_text = ""
        self.tok_pos = 0
        self.advance()

    def advance(self):
        src = self.src
        # skip trailing whitespace so EOF offset points past the last token
        m = _TOKEN_RE.match(src, self.pos)
        if m is None:
            rest = src[self.pos :]
            stripped = rest.lstrip()
            if not stripped:
                self.tok_kind = None
                self.tok_pos = len(src)
                return
            raise ParseError(
                f"unexpected character {stripped[0]!r}",
                self.pos + (len(rest) - len(stripped)),
            )
        self.tok_pos = m.end() - len(m.group(m.lastgroup))
        self.tok_kind = m.lastgroup
        self.tok_text = m.group(m.lastgroup)
        self.pos = m.end()


class _Parser:
    def __init__(self, src: str, n: int, params: Mapping[str, float]):
        if not src or not src.strip():
            raise ParseError("empty expression", 0)
        self.lex = _Lexer(src)
        self.n = n
        self.params = params

    def parse(self) -> Expr:
        e = self.expr()
        if self.lex.tok_kind is not None:
            raise ParseError(f"unexpected token {self.lex.tok_text!r}", self.lex.tok_pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.lex.tok_kind == "op" and self.lex.tok_text in "+-":
            op = self.lex.tok_text
            pos = self.lex.tok_pos
            self.lex.advance()
            e = Bin(pos, op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.lex.tok_kind == "op" and self.lex.tok_text in "*/":
            op = self.lex.tok_text
            pos = self.lex.tok_pos
            self.lex.advance()
            e = Bin(pos, op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.lex.tok_kind == "op" and self.lex.tok_text == "-":
            pos = self.lex.tok_pos
            self.lex.advance()
            return Neg(pos, self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.lex.tok_kind == "op" and self.lex.tok_text == "^":
            pos = self.lex.tok_pos
            self.lex.advance()
            sign = 1
            if self.lex.tok_kind == "op" and self.lex.tok_text == "-":
                sign = -1
                self.lex.advance()
            if self.lex.tok_kind != "num":
                raise ParseError("exponent must be an integer literal", self.lex.tok_pos)
            text = self.lex.tok_text
            value = float(text)
            if value != int(value) or "." in text or "e" in text or "E" in text:
                raise ParseError("exponent must be an integer literal", self.lex.tok_pos)
            self.lex.advance()
            return Pow(pos, base, sign * int(value))
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.lex.tok_kind, self.lex.tok_text, self.lex.tok_pos
        if kind == "num":
            self.lex.advance()
            return Num(pos, float(text))
        if kind == "ident":
            self.lex.advance()
            if self.lex.tok_kind == "op" and self.lex.tok_text == "(":
                return self.call(text, pos)
            return self.name(text, pos)
        if kind == "op" and text == "(":
            self.lex.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError("expected a number, name, or '('", pos)

    def call(self, name: str, pos: int) -> Expr:
        if name not in _FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", pos)
        arity = _FUNCTIONS[name][0]
        self.expect("(")
        args = [self.expr()]
        while self.lex.tok_kind == "op" and self.lex.tok_text == ",":
            self.lex.advance()
            args.append(self.expr())
        self.expect(")")
        if len(args) != arity:
            raise ParseError(
                f"{name} takes {arity} argument(s), got {len(args)}", pos
            )
        return Call(pos, name, tuple(args))

    def name(self, text: str, pos: int) -> Expr:
        if text == "t":
            return Time(pos)
        m = _STATE_RE.match(text)
        if m:
            idx = int(m.group(1))
            if 1 <= idx <= self.n:
                return State(pos, idx - 1)
            raise ParseError(
                f"state variable {text} exceeds state dimension {self.n}", pos
            )
        if text in self.params:
            return Param(pos, text)
        raise ParseError(f"unknown identifier {text!r}", pos)

    def expect(self, ch: str):
        if self.lex.tok_kind == "op" and self.lex.tok_text == ch:
            self.lex.advance()
            return
        raise ParseError(f"expected {ch!r}", self.lex.tok_pos)


def parse(src: str, n: int, params: Mapping[str, float] = None) -> Expr:
    """Parse `src` into an AST; state dimension `n` and `params` fix the namespace."""
    return _Parser(src, n, params or {}).parse()


def evaluate(e: Expr, x: Sequence[float], t: float, params: Mapping[str, float] = None) -> float:
    """Recursive evaluation with located numerical errors."""
    params = params or {}
    if isinstance(e, Num):
        return e.value
    if isinstance(e, State):
        if e.index >= len(x):
            raise EvalError(
                f"state vector of length {len(x)} has no component x{e.index + 1}", e.pos
            )
        return float(x[e.index])
    if isinstance(e, Time):
        return float(t)
    if isinstance(e, Param):
        try:
            return float(params[e.name])
        except KeyError:
            raise EvalError(f"parameter {e.name!r} not supplied", e.pos) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, t, params)
    if isinstance(e, Bin):
        a = evaluate(e.left, x, t, params)
        b = evaluate(e.right, x, t, params)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0.0:
            raise EvalError("division by zero", e.pos)
        return a / b
    if isinstance(e, Pow):
        base = evaluate(e.base, x, t, params)
        if e.exponent < 0 and base == 0.0:
            raise EvalError("zero raised to a negative power", e.pos)
        return float(base**e.exponent)
    if isinstance(e, Call):
        vals = [evaluate(a, x, t, params) for a in e.args]
        if e.fn == "sqrt":
            if vals[0] < 0.0:
                raise EvalError("sqrt of a negative value", e.pos)
            return math.sqrt(vals[0])
        fn = _FUNCTIONS[e.fn][1]
        try:
            return float(fn(*vals))
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{e.fn} failed: {exc}", e.pos) from None
    raise TypeError(f"not an expression node: {e!r}")


# -- light simplification used by the differentiator ------------------------

def _is_const(e: Expr, v=None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Num(a.pos, a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Bin(a.pos, "+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Num(a.pos, a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return Bin(a.pos, "-", a, b)


def _neg(a: Expr) -> Expr:
    if _is_const(a):
        return Num(a.pos, -a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a.pos, a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Num(a.pos, a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Num(a.pos, 0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    # fold nested constant products: c1 * (c2 * e) -> (c1*c2) * e
    if _is_const(a) and isinstance(b, Bin) and b.op == "*" and _is_const(b.left):
        return _mul(Num(a.pos, a.value * b.left.value), b.right)
    return Bin(a.pos, "*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return Num(a.pos, 0.0)
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Num(a.pos, a.value / b.value)
    return Bin(a.pos, "/", a, b)


def _pow(base: Expr, k: int, pos: int) -> Expr:
    if k == 0:
        return Num(pos, 1.0)
    if k == 1:
        return base
    if _is_const(base):
        return Num(pos, float(base.value**k))
    return Pow(pos, base, k)


def _contains_var(e: Expr, index: int) -> bool:
    if isinstance(e, State):
        return e.index == index
    if isinstance(e, Neg):
        return _contains_var(e.arg, index)
    if isinstance(e, Bin):
        return _contains_var(e.left, index) or _contains_var(e.right, index)
    if isinstance(e, Pow):
        return _contains_var(e.base, index)
    if isinstance(e, Call):
        return any(_contains_var(a, index) for a in e.args)
    return False


def diff(e: Expr, var: int) -> Expr:
    """Exact symbolic derivative with respect to state variable index `var` (0-based).

    Raises DiffError when abs/sgn/min/max actually depend on the variable;
    mode splitting is expected to have removed them beforehand.
    """
    if isinstance(e, (Num, Time, Param)):
        return Num(e.pos, 0.0)
    if isinstance(e, State):
        return Num(e.pos, 1.0 if e.index == var else 0.0)
    if isinstance(e, Neg):
        return _neg(diff(e.arg, var))
    if isinstance(e, Bin):
        da, db = diff(e.left, var), diff(e.right, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        num = _sub(_mul(da, e.right), _mul(e.left, db))
        return _div(num, _pow(e.right, 2, e.pos))
    if isinstance(e, Pow):
        inner = diff(e.base, var)
        return _mul(_mul(Num(e.pos, float(e.exponent)), _pow(e.base, e.exponent - 1, e.pos)), inner)
    if isinstance(e, Call):
        if not _contains_var(e, var):
            return Num(e.pos, 0.0)
        if e.fn in _NONSMOOTH:
            raise DiffError(
                f"cannot differentiate through {e.fn}; split modes before differentiating"
            )
        u = e.args[0]
        du = diff(u, var)
        if e.fn == "sin":
            return _mul(Call(e.pos, "cos", (u,)), du)
        if e.fn == "cos":
            return _neg(_mul(Call(e.pos, "sin", (u,)), du))
        if e.fn == "exp":
            return _mul(e, du)
        if e.fn == "sqrt":
            return _div(du, _mul(Num(e.pos, 2.0), e))
    raise TypeError(f"not an expression node: {e!r}")


def iter_nodes(e: Expr):
    """Yield every node of the AST, parents before children."""
    yield e
    if isinstance(e, Neg):
        yield from iter_nodes(e.arg)
    elif isinstance(e, Bin):
        yield from iter_nodes(e.left)
        yield from iter_nodes(e.right)
    elif isinstance(e, Pow):
        yield from iter_nodes(e.base)
    elif isinstance(e, Call):
        for a in e.args:
            yield from iter_nodes(a)


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 2, "pow": 3, "atom": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Pow):
        return _PREC["pow"]
    if isinstance(e, Num) and e.value < 0:
        return _PREC["neg"]
    return _PREC["atom"]


def _wrap(e: Expr, parent_prec: int, strict: bool = False) -> str:
    s = pretty(e)
    p = _prec(e)
    if p < parent_prec or (strict and p == parent_prec):
        return f"({s})"
    return s


def pretty(e: Expr) -> str:
    """Render an AST as expression-language source that reparses identically."""
    if isinstance(e, Num):
        v = e.value
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(e, State):
        return f"x{e.index + 1}"
    if isinstance(e, Time):
        return "t"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, _PREC['neg'])}"
    if isinstance(e, Bin):
        p = _PREC[e.op]
        left = _wrap(e.left, p)
        right = _wrap(e.right, p, strict=e.op in "-/")
        return f"{left} {e.op} {right}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _PREC['pow'], strict=True)}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(pretty(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- compilation to plain Python for the integration hot path ----------------

def _sgn(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


_COMPILE_NS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
    "min": min,
    "max": max,
    "sgn": _sgn,
    "__builtins__": {},
}


def _codegen(e: Expr, params: Mapping[str, float]) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, State):
        return f"x[{e.index}]"
    if isinstance(e, Time):
        return "t"
    if isinstance(e, Param):
        try:
            return repr(float(params[e.name]))
        except KeyError:
            raise EvalError(f"parameter {e.name!r} not supplied", e.pos) from None
    if isinstance(e, Neg):
        return f"(-{_codegen(e.arg, params)})"
    if isinstance(e, Bin):
        return f"({_codegen(e.left, params)} {e.op} {_codegen(e.right, params)})"
    if isinstance(e, Pow):
        return f"({_codegen(e.base, params)} ** {e.exponent})"
    if isinstance(e, Call):
        args = ", ".join(_codegen(a, params) for a in e.args)
        return f"{e.fn}({args})"
    raise TypeError(f"not an expression node: {e!r}")


def compile_scalar(e: Expr, params: Mapping[str, float] = None) -> Callable:
    """Compile a single expression to a fast ``f(x, t) -> float``.

    Parameter values are baked in as literals; rebuild after parameter changes.
    """
    src = f"lambda x, t: ({_codegen(e, params or {})})"
    return eval(compile(src, "<swobs-expr>", "eval"), dict(_COMPILE_NS))


def compile_vector(exprs: Sequence[Expr], params: Mapping[str, float] = None) -> Callable:
    """Compile a list of expressions to ``f(x, t) -> tuple`` evaluated jointly."""
    params = params or {}
    body = ", ".join(_codegen(e, params) for e in exprs)
    comma = "," if len(exprs) == 1 else ""
    src = f"lambda x, t: ({body}{comma})"
    return eval(compile(src, "<swobs-expr>", "eval"), dict(_COMPILE_NS))
