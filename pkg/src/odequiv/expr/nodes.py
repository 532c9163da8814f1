"""Expression tree nodes and the canonical printer.

Nodes are frozen dataclasses, so structural equality and hashing come for
free. Constants are always exact :class:`fractions.Fraction` values; a float
handed to :class:`Const` is converted through its shortest decimal repr, so
``Const(0.3)`` is exactly 3/10.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt", "abs")


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Sum((self, as_expr(other)))

    def __radd__(self, other):
        return Sum((as_expr(other), self))

    def __sub__(self, other):
        return Sum((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Sum((as_expr(other), Neg(self)))

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    def __rmul__(self, other):
        return Product((as_expr(other), self))

    def __truediv__(self, other):
        return Quotient(self, as_expr(other))

    def __rtruediv__(self, other):
        return Quotient(as_expr(other), self)

    def __pow__(self, other):
        return Power(self, as_expr(other))

    def __rpow__(self, other):
        return Power(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return to_str(self)


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expression constants")
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value!r}")
        return Fraction(repr(value))
    raise TypeError(f"cannot make a constant from {type(value).__name__}")


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", _to_fraction(self.value))

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class Sum(Expr):
    terms: tuple

    def __repr__(self):
        return f"Sum({', '.join(map(repr, self.terms))})"


@dataclass(frozen=True, repr=False)
class Product(Expr):
    factors: tuple

    def __repr__(self):
        return f"Product({', '.join(map(repr, self.factors))})"


@dataclass(frozen=True, repr=False)
class Quotient(Expr):
    num: Expr
    den: Expr

    def __repr__(self):
        return f"Quotient({self.num!r}, {self.den!r})"


@dataclass(frozen=True, repr=False)
class Power(Expr):
    base: Expr
    exponent: Expr

    def __repr__(self):
        return f"Power({self.base!r}, {self.exponent!r})"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function '{self.name}'")

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


def children(e: Expr) -> tuple:
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Quotient):
        return (e.num, e.den)
    if isinstance(e, Power):
        return (e.base, e.exponent)
    if isinstance(e, (Neg, Func)):
        return (e.arg,)
    return ()


def is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# ---------------------------------------------------------------------------
# Printing. The output always parses back to an expression that prints
# identically; unary minus sits at base level in the grammar, so anything
# that is not a plain base gets parenthesized under it and under "^".

def _fmt_const(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _is_plain_base(e: Expr) -> bool:
    if isinstance(e, (Var, Func)):
        return True
    return isinstance(e, Const) and e.value >= 0 and e.value.denominator == 1


def _base(e: Expr) -> str:
    s = _fmt(e)
    return s if _is_plain_base(e) else f"({s})"


def _quotient_like(e: Expr) -> bool:
    return isinstance(e, Quotient) or (isinstance(e, Const) and e.value.denominator != 1)


def _fmt(e: Expr) -> str:
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({_fmt(e.arg)})"
    if isinstance(e, Neg):
        a = e.arg
        if isinstance(a, (Const, Neg)):
            return "-" + _fmt(a)
        return "-" + _base(a)
    if isinstance(e, Power):
        return f"{_base(e.base)}^{_base(e.exponent)}"
    if isinstance(e, Product):
        if not e.factors:
            return "1"
        parts = []
        for i, f in enumerate(e.factors):
            s = _fmt(f)
            if isinstance(f, Sum) or (i > 0 and _quotient_like(f)):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts)
    if isinstance(e, Quotient):
        left = _fmt(e.num)
        if isinstance(e.num, Sum):
            left = f"({left})"
        right = _fmt(e.den)
        if isinstance(e.den, (Sum, Product)) or _quotient_like(e.den):
            right = f"({right})"
        return f"{left}/{right}"
    if isinstance(e, Sum):
        if not e.terms:
            return "0"
        out = []
        for i, t in enumerate(e.terms):
            if i == 0:
                s = _fmt(t)
                out.append(f"({s})" if isinstance(t, Sum) else s)
            elif isinstance(t, Neg):
                s = _fmt(t.arg)
                out.append(" - " + (f"({s})" if isinstance(t.arg, Sum) else s))
            elif isinstance(t, Const) and t.value < 0:
                out.append(" - " + _fmt_const(-t.value))
            else:
                s = _fmt(t)
                out.append(" + " + (f"({s})" if isinstance(t, Sum) else s))
        return "".join(out)
    raise TypeError(f"not an expression: {e!r}")


@lru_cache(maxsize=65536)
def to_str(e: Expr) -> str:
    return _fmt(e)
