"""Differential invariants of y'' + a(x) y' + b(x) y = 0 in closed form.

Every function here takes concrete coefficients and returns an expression in
the equation's independent variable (plus ``y``/``yp`` for the gauge
invariant ω22).  The jet-space versions used for certification live in
:mod:`odequiv.prolongation`; :func:`on_equation` maps one onto the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError, UsageError
from .expr import (
    ZERO, Const, Expr, Func, Power, Quotient, Var, children, add, as_expr, differentiate, free_vars, func, mul,
    neg, parse, simplify, substitute, to_str,
)
from .expr.numeric import lambdify
from .numerics import bracketed_newton, uniform_grid
from .prolongation import jet_order

TRIVIAL_INVARIANTS = {"omega11": "y", "omega21": "x"}


@dataclass(frozen=True)
class Ode2:
    """y'' + a y' + b y = 0 on the open interval ``interval``."""

    a: Expr
    b: Expr
    var: str = "x"
    interval: tuple = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "a", as_expr(self.a))
        object.__setattr__(self, "b", as_expr(self.b))
        lo, hi = (float(v) for v in self.interval)
        if not lo < hi:
            raise UsageError(f"interval must satisfy lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "interval", (lo, hi))
        extra = (free_vars(self.a) | free_vars(self.b)) - {self.var}
        if extra:
            raise UsageError(f"coefficients may only depend on '{self.var}', found {sorted(extra)}")
        self._sample_guard()

    @classmethod
    def from_strings(cls, a: str, b: str, var: str = "x", interval=(0.0, 1.0)) -> Ode2:
        return cls(parse(a), parse(b), var, interval)

    def _sample_guard(self):
        grid = self.default_grid()
        dense = uniform_grid(*self.interval, n=257, trim=1e-6)
        for name, e in (("a", self.a), ("b", self.b)):
            for sub in _guarded_parts(e):
                f = lambdify(sub, self.var)
                try:
                    where = _first_zero(f, dense)
                except DomainError:
                    continue
                if where is not None:
                    raise SingularityError(f"coefficient {name} = {to_str(e)} is singular on the interval "
                                           f"('{to_str(sub)}' vanishes)", where)
        for name, e in (("a", self.a), ("b", self.b), ("a'", self.da), ("b'", self.db)):
            f = lambdify(e, self.var)
            for x in grid:
                try:
                    f(x)
                except DomainError as exc:
                    raise SingularityError(f"coefficient {name} = {to_str(e)} is singular on the interval ({exc})",
                                           float(x)) from None

    @property
    def da(self) -> Expr:
        return differentiate(self.a, self.var)

    @property
    def db(self) -> Expr:
        return differentiate(self.b, self.var)

    def default_grid(self, n: int = 64) -> np.ndarray:
        return uniform_grid(*self.interval, n=n)

    def with_interval(self, interval) -> Ode2:
        return Ode2(self.a, self.b, self.var, interval)


@dataclass
class InvariantChain:
    exprs: list
    grid: np.ndarray
    values: np.ndarray
    group_tag: str
    var: str = "x"
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.exprs)

    @classmethod
    def build(cls, exprs, grid, group_tag, var) -> InvariantChain:
        grid = np.asarray(grid, dtype=float)
        values = np.array([[lambdify(e, var)(x) for x in grid] for e in exprs], dtype=float)
        return cls(list(exprs), grid, values, group_tag, var)


def _guarded_parts(e: Expr):
    """Subexpressions that must keep one sign: denominators, ln and sqrt arguments."""
    out = []

    def walk(n):
        if isinstance(n, Quotient):
            out.append(n.den)
        elif isinstance(n, Power) and isinstance(n.exponent, Const) and n.exponent.value < 0:
            out.append(n.base)
        elif isinstance(n, Func) and n.name in ("ln", "sqrt"):
            out.append(n.arg)
        for c in children(n):
            walk(c)

    walk(e)
    return [p for p in out if free_vars(p)]


def _first_zero(f, grid):
    """Location of the first zero or sign change of ``f`` along ``grid``, else None."""
    prev_x, prev = None, None
    for x in grid:
        v = f(x)
        if v == 0:
            return float(x)
        if prev is not None and (v > 0) != (prev > 0):
            return bracketed_newton(f, None, prev_x, float(x))
        prev_x, prev = float(x), v
    return None


def _require_nonvanishing(e: Expr, ode: Ode2, what: str, grid=None):
    grid = ode.default_grid() if grid is None else grid
    f = lambdify(e, ode.var)
    where = _first_zero(f, grid)
    if where is not None:
        raise SingularityError(f"{what} = {to_str(e)} vanishes on the interval", where)
    return 1 if f(grid[0]) > 0 else -1


def b_sign(ode: Ode2, grid=None) -> int:
    """Sign of b on the interval; raises if b vanishes or changes sign."""
    return _require_nonvanishing(ode.b, ode, "b", grid)


def omega13(ode: Ode2) -> Expr:
    b_sign(ode)
    a, b, db = ode.a, ode.b, ode.db
    raw = add(mul(a, a) / b, mul(a, db) / b ** 2, mul(db, db) / (4 * b ** 3))
    return simplify(raw)


def q1_derive(ode: Ode2, e: Expr) -> Expr:
    """(1/sqrt|b|) de/dx on the sign-constant branch of b."""
    sign = b_sign(ode)
    root = ode.b if sign > 0 else neg(ode.b)
    return simplify(mul(differentiate(as_expr(e), ode.var), Power(root, Const(-0.5))))


def chain_x1(ode: Ode2, depth: int = 2, grid=None) -> InvariantChain:
    if depth < 0:
        raise UsageError("depth must be non-negative")
    exprs = [omega13(ode)]
    for _ in range(depth):
        exprs.append(q1_derive(ode, exprs[-1]))
    grid = ode.default_grid() if grid is None else grid
    return InvariantChain.build(exprs, grid, "X1", ode.var)


def omega23(ode: Ode2) -> Expr:
    a = ode.a
    return simplify(add(mul(a, a), mul(-4, ode.b), mul(2, ode.da)))


def chain_x2(ode: Ode2, depth: int = 2, grid=None) -> InvariantChain:
    if depth < 0:
        raise UsageError("depth must be non-negative")
    exprs = [omega23(ode)]
    for _ in range(depth):
        exprs.append(simplify(differentiate(exprs[-1], ode.var)))
    grid = ode.default_grid() if grid is None else grid
    return InvariantChain.build(exprs, grid, "X2", ode.var)


def omega12(ode: Ode2, xi) -> Expr:
    xi = as_expr(xi)
    return simplify(mul(ode.b, xi, xi))


def omega22(ode: Ode2, A, variant: str = "ln_y") -> Expr:
    """a + 2 (A'/A) ln(y) or, for ``variant="ln_yp"``, the ln(yp) form.

    Only the ln(y) form is annihilated by the prolonged gauge generator.
    """
    if variant not in ("ln_y", "ln_yp"):
        raise UsageError(f"unknown omega22 variant {variant!r}")
    A = as_expr(A)
    _require_nonvanishing(A, ode, "A")
    jet = Var("y" if variant == "ln_y" else "yp")
    return simplify(add(ode.a, mul(2, differentiate(A, ode.var) / A, func("ln", jet))))


def nf_omega1(V, xi, var: str = "x") -> Expr:
    V, xi = as_expr(V), as_expr(xi)
    d1, d2 = differentiate(xi, var), differentiate(xi, var, 2)
    return simplify(add(mul(V, xi, xi), mul(Const(0.5), xi, d2), mul(Const(-0.25), d1, d1)))


def nf_omega2(V, xi, var: str = "x") -> Expr:
    xi = as_expr(xi)
    return simplify(mul(xi, differentiate(nf_omega1(V, xi, var), var)))


def nf_chain(V, xi, grid, var: str = "x") -> InvariantChain:
    return InvariantChain.build([nf_omega1(V, xi, var), nf_omega2(V, xi, var)], grid, "NF", var)


def on_equation(jet_expr: Expr, ode: Ode2) -> Expr:
    """Evaluate a jet-space expression on the equation's coefficients.

    ``a``, ``ax``, ``axx``, ... become a and its derivatives; ``x`` becomes
    the equation's variable.  ``y``/``yp`` are left alone.
    """
    mapping = {}
    for name in free_vars(jet_expr):
        info = jet_order(name)
        if info is None:
            continue
        fam, order = info
        if fam == "a":
            mapping[name] = differentiate(ode.a, ode.var, order)
        elif fam == "b":
            mapping[name] = differentiate(ode.b, ode.var, order)
        elif fam == "x":
            mapping[name] = Var(ode.var)
    return simplify(substitute(jet_expr, mapping)) if mapping else jet_expr


def is_identically_zero(e: Expr, grid, var: str, tol: float = 1e-9) -> bool:
    """Symbolic zero, or numerically below ``tol`` on every grid point."""
    e = simplify(e)
    if e == ZERO:
        return True
    f = lambdify(e, var)
    return all(abs(f(x)) <= tol for x in grid)
