"""Tree utilities: free variables, substitution, symbolic differentiation.

The ``add``/``mul``/... helpers are light smart constructors that only fold
exact zeros, ones and constant arithmetic, keeping derivative trees small
without committing to a canonical form (that is :func:`simplify`'s job).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .nodes import ONE, ZERO, Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var, as_expr, children


def free_vars(e: Expr) -> frozenset[str]:
    return _free_vars(e)


@lru_cache(maxsize=65536)
def _free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    out = frozenset()
    for c in children(e):
        out |= _free_vars(c)
    return out


def substitute(e: Expr, mapping: dict) -> Expr:
    """Simultaneously replace variables by expressions (names or Var keys)."""
    table = {(k.name if isinstance(k, Var) else k): as_expr(v) for k, v in mapping.items()}

    def walk(node):
        if isinstance(node, Var):
            return table.get(node.name, node)
        if isinstance(node, Const):
            return node
        if isinstance(node, Sum):
            return Sum(tuple(walk(t) for t in node.terms))
        if isinstance(node, Product):
            return Product(tuple(walk(f) for f in node.factors))
        if isinstance(node, Quotient):
            return Quotient(walk(node.num), walk(node.den))
        if isinstance(node, Power):
            return Power(walk(node.base), walk(node.exponent))
        if isinstance(node, Neg):
            return Neg(walk(node.arg))
        return Func(node.name, walk(node.arg))

    return walk(e)


# -- smart constructors ------------------------------------------------------

def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(*terms) -> Expr:
    flat = []
    const = Fraction(0)
    for t in map(as_expr, terms):
        parts = t.terms if isinstance(t, Sum) else (t,)
        for p in parts:
            if isinstance(p, Const):
                const += p.value
            else:
                flat.append(p)
    if const != 0:
        flat.append(Const(const))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors) -> Expr:
    flat = []
    const = Fraction(1)
    for f in map(as_expr, factors):
        parts = f.factors if isinstance(f, Product) else (f,)
        for p in parts:
            if isinstance(p, Const):
                const *= p.value
            elif isinstance(p, Neg):
                const = -const
                flat.append(p.arg)
            else:
                flat.append(p)
    if const == 0:
        return ZERO
    if not flat:
        return Const(const)
    if const != 1:
        flat.insert(0, Const(const))
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if isinstance(b, Const) and b.value != 0:
        return mul(Const(1 / b.value), a)
    if a == ZERO:
        return ZERO
    return Quotient(a, b)


def power(base, exponent) -> Expr:
    base, exponent = as_expr(base), as_expr(exponent)
    if exponent == ZERO:
        return ONE
    if exponent == ONE:
        return base
    if isinstance(base, Const) and isinstance(exponent, Const) and exponent.value.denominator == 1:
        if base.value != 0 or exponent.value > 0:
            return Const(base.value ** exponent.value.numerator)
    return Power(base, exponent)


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if arg == ZERO:
        if name in ("sin", "sqrt", "abs"):
            return ZERO
        if name in ("exp", "cos"):
            return ONE
    return Func(name, arg)


# -- differentiation -----------------------------------------------------------

def differentiate(e: Expr, var: str, order: int = 1) -> Expr:
    """Exact derivative of ``e`` with respect to the variable ``var``."""
    if isinstance(var, Var):
        var = var.name
    for _ in range(order):
        e = _diff(e, var)
    return e


@lru_cache(maxsize=65536)
def _diff(e: Expr, v: str) -> Expr:
    if v not in free_vars(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Sum):
        return add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, Neg):
        return neg(_diff(e.arg, v))
    if isinstance(e, Product):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = _diff(f, v)
            if df != ZERO:
                terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, Quotient):
        u, w = e.num, e.den
        du, dw = _diff(u, v), _diff(w, v)
        if dw == ZERO:
            return div(du, w)
        return div(add(mul(du, w), neg(mul(u, dw))), power(w, 2))
    if isinstance(e, Power):
        b, p = e.base, e.exponent
        db = _diff(b, v)
        if v not in free_vars(p):
            if isinstance(p, Const):
                return mul(p, power(b, Const(p.value - 1)), db)
            return mul(p, power(b, add(p, Const(-1))), db)
        dp = _diff(p, v)
        return mul(e, add(mul(dp, func("ln", b)), div(mul(p, db), b)))
    if isinstance(e, Func):
        u = e.arg
        du = _diff(u, v)
        name = e.name
        if name == "exp":
            outer = e
        elif name == "ln":
            return div(du, u)
        elif name == "sin":
            outer = Func("cos", u)
        elif name == "cos":
            outer = neg(Func("sin", u))
        elif name == "sqrt":
            return div(du, mul(2, e))
        else:  # abs
            return div(mul(u, du), e)
        return mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")
