"""Numeric evaluation with domain guards.

Expressions are compiled once into nested closures over a bindings dict;
:func:`lambdify` wraps that into a plain one-variable float function for the
integrators and root finders.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from ..errors import DomainError, UnboundVariableError
from .calculus import free_vars
from .nodes import Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var, to_str


def _guard(x: float, node: Expr) -> float:
    if not math.isfinite(x):
        raise DomainError("non-finite value", to_str(node))
    return x


def _compile(e: Expr) -> Callable[[Mapping[str, float]], float]:
    if isinstance(e, Const):
        value = float(e.value)
        return lambda env: value
    if isinstance(e, Var):
        name = e.name

        def var(env):
            try:
                return float(env[name])
            except KeyError:
                raise UnboundVariableError(name) from None

        return var
    if isinstance(e, Sum):
        parts = [_compiled(t) for t in e.terms]
        return lambda env: _guard(math.fsum(p(env) for p in parts), e)
    if isinstance(e, Product):
        parts = [_compiled(f) for f in e.factors]

        def prod(env):
            acc = 1.0
            for p in parts:
                acc *= p(env)
            return _guard(acc, e)

        return prod
    if isinstance(e, Neg):
        inner = _compiled(e.arg)
        return lambda env: -inner(env)
    if isinstance(e, Quotient):
        num, den = _compiled(e.num), _compiled(e.den)

        def quot(env):
            d = den(env)
            if d == 0.0:
                raise DomainError("division by zero", to_str(e))
            return _guard(num(env) / d, e)

        return quot
    if isinstance(e, Power):
        base, expo = _compiled(e.base), _compiled(e.exponent)
        int_exponent = isinstance(e.exponent, Const) and e.exponent.value.denominator == 1

        def pw(env):
            b, p = base(env), expo(env)
            if b == 0.0 and p < 0:
                raise DomainError("division by zero", to_str(e))
            if b < 0 and not (int_exponent or float(p).is_integer()):
                raise DomainError("fractional power of a negative number", to_str(e))
            try:
                return _guard(math.pow(b, p), e)
            except (OverflowError, ValueError):
                raise DomainError("power out of range", to_str(e)) from None

        return pw
    if isinstance(e, Func):
        inner = _compiled(e.arg)
        name = e.name
        if name == "exp":
            def fexp(env):
                try:
                    return math.exp(inner(env))
                except OverflowError:
                    raise DomainError("exp overflow", to_str(e)) from None
            return fexp
        if name == "ln":
            def fln(env):
                u = inner(env)
                if u <= 0:
                    raise DomainError("logarithm of a non-positive number", to_str(e))
                return math.log(u)
            return fln
        if name == "sqrt":
            def fsqrt(env):
                u = inner(env)
                if u < 0:
                    raise DomainError("square root of a negative number", to_str(e))
                return math.sqrt(u)
            return fsqrt
        fn = {"sin": math.sin, "cos": math.cos, "abs": abs}[name]
        return lambda env: fn(inner(env))
    raise TypeError(f"not an expression: {e!r}")


@lru_cache(maxsize=16384)
def _compiled(e: Expr):
    return _compile(e)


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e``; every free variable must be bound, extras are ignored."""
    return _compiled(e)(bindings)


def lambdify(e: Expr, var: str) -> Callable[[float], float]:
    extra = free_vars(e) - {var}
    if extra:
        raise UnboundVariableError(sorted(extra)[0])
    f = _compiled(e)
    return lambda value: f({var: value})


def evaluate_grid(e: Expr, var: str, grid: Iterable[float]) -> list[float]:
    f = lambdify(e, var)
    return [f(g) for g in grid]


def equal_numeric(e1: Expr, e2: Expr, grid, tol: float = 1e-10, var: str = "x") -> bool:
    """Compare two expressions on sample points.

    ``grid`` is a sequence of floats (bound to ``var``) or of binding dicts.
    Deviation is relative to ``e2`` when ``|e2| >= 1`` and absolute otherwise.
    """
    f1, f2 = _compiled(e1), _compiled(e2)
    for point in grid:
        env = point if isinstance(point, Mapping) else {var: point}
        v1, v2 = f1(env), f2(env)
        if abs(v1 - v2) > tol * max(1.0, abs(v2)):
            return False
    return True
