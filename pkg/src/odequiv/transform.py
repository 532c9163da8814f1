"""Finite equivalence transformations, normal form, quadrature solutions and
the Runge-Kutta transport oracle."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NonMonotoneError, SingularityError, UsageError
from .expr import (
    ONE, ZERO, Const, Expr, Func, Power, Product, Var, add, as_expr, constant_value, differentiate,
    div, func, is_zero, mul, neg, simplify, substitute, to_str,
)
from .expr.numeric import lambdify
from .invariants import Ode2, _first_zero, omega13, q1_derive
from .numerics import adaptive_simpson, bracketed_newton, rk4_linear2, uniform_grid

QUAD_TOL = 1e-12


# -- maps ----------------------------------------------------------------------

@dataclass
class PointMap:
    """A monotone tabulated map t -> x(t).

    Evaluation off the table goes through ``evaluator`` (an exact per-point
    solver) when present, then ``closed_form``, then a cubic spline.
    """

    t_grid: np.ndarray
    x_values: np.ndarray
    closed_form: Expr | None = None
    var: str = "t"
    evaluator: object = None

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.x_values = np.asarray(self.x_values, dtype=float)
        if self.t_grid.shape != self.x_values.shape:
            raise ValueError("t_grid and x_values differ in length")
        d = np.diff(self.x_values)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise NonMonotoneError("map table is not strictly monotone")
        self._spline = None

    def __call__(self, t):
        if self.evaluator is not None:
            return float(self.evaluator(float(t)))
        if self.closed_form is not None:
            return lambdify(self.closed_form, self.var)(float(t))
        if self._spline is None:
            self._spline = CubicSpline(self.t_grid, self.x_values)
        return float(self._spline(t))

    @property
    def increasing(self) -> bool:
        return len(self.x_values) < 2 or self.x_values[-1] > self.x_values[0]


def identity_map(grid, var: str = "t") -> PointMap:
    grid = np.asarray(grid, dtype=float)
    return PointMap(grid, grid.copy(), Var(var), var, evaluator=lambda t: t)


def _nice(value: float, tol: float = 1e-12) -> Const:
    """Short rational when ``value`` is one to within ``tol``, else the float."""
    frac = Fraction(value).limit_denominator(1000)
    if abs(float(frac) - value) <= tol * max(1.0, abs(value)):
        return Const(frac)
    return Const(value)


def fit_closed_form(t, x, var: str = "t", tol: float = 1e-9) -> Expr | None:
    """Match a table against c*t + d, c*exp(k*t) and c*t^k."""
    t, x = np.asarray(t, dtype=float), np.asarray(x, dtype=float)
    if len(t) < 3:
        return None
    T = Var(var)
    i, j = 0, len(t) - 1
    scale = max(1.0, float(np.max(np.abs(x))))

    def check(expr):
        f = lambdify(expr, var)
        try:
            dev = max(abs(f(ti) - xi) for ti, xi in zip(t, x))
        except DomainError:
            return False
        return dev <= tol * scale

    c = (x[j] - x[i]) / (t[j] - t[i])
    d = x[i] - c * t[i]
    cc, dd = _nice(c), _nice(d)
    if cc.value == 1:
        lin = T if dd.value == 0 else add(T, dd)
    else:
        lin = Product((cc, T)) if dd.value == 0 else add(Product((cc, T)), dd)
    if c != 0 and check(lin):
        return lin
    if np.all(x > 0) or np.all(x < 0):
        k = math.log(x[j] / x[i]) / (t[j] - t[i])
        c = x[i] / math.exp(k * t[i])
        kk, cc = _nice(k), _nice(c)
        e = Func("exp", Product((kk, T)))
        cand = e if cc.value == 1 else Product((cc, e))
        if k != 0 and check(cand):
            return cand
        if np.all(t > 0):
            k = math.log(x[j] / x[i]) / math.log(t[j] / t[i])
            c = x[i] / t[i] ** k
            kk, cc = _nice(k), _nice(c)
            p = Power(T, kk)
            cand = p if cc.value == 1 else Product((cc, p))
            if k not in (0, 1) and check(cand):
                return cand
    return None


# -- quadrature catalog ----------------------------------------------------------

def _term_antiderivative(t: Expr, var: str, mid: float):
    x = Var(var)
    dt = simplify(differentiate(t, var))
    if is_zero(dt):
        return mul(t, x)
    r = constant_value(div(dt, t))
    if r is not None and r != 0:
        return simplify(div(t, Const(r)))
    q = simplify(div(t, dt))
    dq = constant_value(differentiate(q, var))
    if dq is not None and dq != 0:
        k = 1 / dq
        s = simplify(mul(Const(k), q))  # x - x0
        if k != -1:
            return simplify(div(mul(t, s), Const(k + 1)))
        sign = 1 if lambdify(s, var)(mid) > 0 else -1
        return simplify(mul(t, s, func("ln", mul(Const(sign), s))))
    return None


def antiderivative(e, var: str = "x", interval=None) -> Expr | None:
    """Closed-form antiderivative for sums of c*(x-x0)^k and c*exp(r*x) terms.

    Returns None outside that catalog.  Every result is checked by
    differentiating it back.
    """
    e = simplify(as_expr(e))
    if e == ZERO:
        return ZERO
    mid = 0.5 * sum(interval) if interval is not None else 1.0
    terms = e.terms if e.__class__.__name__ == "Sum" else (e,)
    parts = []
    for t in terms:
        try:
            F = _term_antiderivative(t, var, mid)
        except (DomainError, ZeroDivisionError):
            F = None
        if F is None:
            return None
        parts.append(F)
    F = simplify(add(*parts))
    if not is_zero(add(differentiate(F, var), neg(e))):
        return None
    return F


# -- gauge factors -----------------------------------------------------------------

@dataclass
class GaugeFactor:
    """y_new = y * exp(exponent) (forward) or y * exp(-exponent) (inverse).

    When no closed form exists ``exponent`` is None and the exponent is the
    quadrature of ``integrand`` from ``x0``.
    """

    exponent: Expr | None
    var: str = "x"
    direction: str = "forward"
    integrand: Expr | None = None
    x0: float = 0.0

    def exponent_at(self, x: float) -> float:
        if self.exponent is not None:
            return lambdify(self.exponent, self.var)(x)
        f = lambdify(self.integrand, self.var)
        return adaptive_simpson(f, self.x0, x, tol=QUAD_TOL)

    def factor(self, x: float) -> float:
        s = 1.0 if self.direction == "forward" else -1.0
        return math.exp(s * self.exponent_at(x))

    def inverse(self) -> GaugeFactor:
        flip = "inverse" if self.direction == "forward" else "forward"
        return GaugeFactor(self.exponent, self.var, flip, self.integrand, self.x0)

    def apply(self, ode: Ode2) -> Ode2:
        """The coefficients satisfied by the rescaled solution."""
        if self.exponent is None:
            raise DomainError("gauge exponent is only known as a quadrature")
        s = 1 if self.direction == "forward" else -1
        out, _ = gauge(ode, self.exponent, s)
        return out

    @property
    def is_trivial(self) -> bool:
        return self.exponent is not None and is_zero(self.exponent)


def gauge(ode: Ode2, A, eps=1) -> tuple[Ode2, GaugeFactor]:
    """Rescale y -> y*exp(eps*A); returns the new equation and the factor."""
    A = as_expr(A)
    eps = as_expr(eps)
    v = ode.var
    d1, d2 = differentiate(A, v), differentiate(A, v, 2)
    a = simplify(add(ode.a, mul(-2, eps, d1)))
    b = simplify(add(ode.b, neg(mul(eps, add(d2, mul(ode.a, d1)))), mul(eps, eps, d1, d1)))
    return Ode2(a, b, v, ode.interval), GaugeFactor(simplify(mul(eps, A)), v)


def reduce_to_normal_form(ode: Ode2) -> tuple[Expr, GaugeFactor]:
    """Potential V = b - a^2/4 - a'/2 and the factor u = y * exp(int a/2)."""
    a, v = ode.a, ode.var
    V = simplify(add(ode.b, mul(Const(Fraction(-1, 4)), a, a), mul(Const(Fraction(-1, 2)), ode.da)))
    half = simplify(mul(Const(Fraction(1, 2)), a))
    if half == ZERO:
        return V, GaugeFactor(ZERO, v)
    g = antiderivative(half, v, ode.interval)
    if g is None:
        mid = 0.5 * sum(ode.interval)
        return V, GaugeFactor(None, v, integrand=half, x0=mid)
    return V, GaugeFactor(g, v)


# -- point transformations ---------------------------------------------------------

def _check_monotone(d_alpha: Expr, var: str, interval):
    f = lambdify(d_alpha, var)
    grid = uniform_grid(*interval, n=64, trim=0.0)
    try:
        where = _first_zero(f, grid)
    except DomainError as exc:
        raise NonMonotoneError(f"map derivative is not defined on the interval ({exc})") from None
    if where is not None:
        raise NonMonotoneError(f"map is not monotone: derivative {to_str(d_alpha)} vanishes", None)


def change_variable(ode: Ode2, phi, new_var: str, interval) -> Ode2:
    """Substitute x = phi(t): the equation satisfied by z(t) = y(phi(t))."""
    phi = as_expr(phi)
    d1, d2 = differentiate(phi, new_var), differentiate(phi, new_var, 2)
    _check_monotone(d1, new_var, interval)
    at = {ode.var: phi}
    a = substitute(ode.a, at)
    b = substitute(ode.b, at)
    na = simplify(add(mul(a, d1), neg(div(d2, d1))))
    nb = simplify(mul(b, d1, d1))
    return Ode2(na, nb, new_var, interval)


def invert_catalog(alpha, var: str, new_var: str, interval) -> Expr | None:
    """Symbolic inverse of alpha for c*x+d, c*exp(k*x), c*x^k and c*ln(x)+d."""
    alpha = simplify(as_expr(alpha))
    x, u = Var(var), Var(new_var)
    d1 = simplify(differentiate(alpha, var))
    cand = None
    c = constant_value(d1)
    if c is not None and c != 0:
        d = constant_value(add(alpha, neg(mul(Const(c), x))))
        if d is not None:
            cand = div(add(u, Const(-d)), Const(c))
    if cand is None:
        k = constant_value(div(d1, alpha))
        if k is not None and k != 0:
            c = constant_value(mul(alpha, func("exp", mul(Const(-k), x))))
            if c is not None and c != 0:
                cand = div(func("ln", div(u, Const(c))), Const(k))
    if cand is None:
        k = constant_value(mul(x, div(d1, alpha)))
        if k is not None and k != 0:
            c = constant_value(mul(alpha, Power(x, Const(-k))))
            if c is not None and c != 0:
                cand = Power(div(u, Const(c)), Const(1 / k))
    if cand is None:
        c = constant_value(mul(x, d1))
        if c is not None and c != 0:
            d = constant_value(add(alpha, neg(mul(Const(c), func("ln", x)))))
            if d is not None:
                cand = func("exp", div(add(u, Const(-d)), Const(c)))
    if cand is None:
        return None
    cand = simplify(cand)
    back = lambdify(simplify(substitute(cand, {new_var: alpha})), var)
    for p in uniform_grid(*interval, n=9):
        try:
            if abs(back(p) - p) > 1e-10 * max(1.0, abs(p)):
                return None
        except DomainError:
            return None
    return cand


def pushforward_values(ode: Ode2, alpha, points):
    """(alpha(x), a~(alpha(x)), b~(alpha(x))) for x~ = alpha(x) at source points."""
    alpha = as_expr(alpha)
    d1 = differentiate(alpha, ode.var)
    d2 = differentiate(alpha, ode.var, 2)
    na = simplify(div(add(mul(ode.a, d1), d2), mul(d1, d1)))
    nb = simplify(div(ode.b, mul(d1, d1)))
    fa, fna, fnb = (lambdify(e, ode.var) for e in (alpha, na, nb))
    pts = np.asarray(points, dtype=float)
    return (np.array([fa(p) for p in pts]), np.array([fna(p) for p in pts]),
            np.array([fnb(p) for p in pts]))


def pushforward(ode: Ode2, alpha, new_var: str | None = None) -> Ode2:
    """The equation in the new coordinate x~ = alpha(x).

    Needs a symbolic inverse of alpha from the catalog; otherwise use
    :func:`pushforward_values` or :func:`change_variable`.
    """
    alpha = as_expr(alpha)
    new_var = new_var or ode.var
    lo, hi = ode.interval
    d1 = differentiate(alpha, ode.var)
    _check_monotone(d1, ode.var, ode.interval)
    f = lambdify(alpha, ode.var)
    image = tuple(sorted((f(lo), f(hi))))
    inv = invert_catalog(alpha, ode.var, new_var, ode.interval)
    if inv is None:
        raise DomainError(f"no closed-form inverse for map {to_str(alpha)}")
    return change_variable(ode, inv, new_var, image)


# -- flows of X1 -------------------------------------------------------------------

@dataclass
class FlowTable:
    points: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    second: np.ndarray
    valid: tuple


def _xi_tilde(xi: Expr, var: str, interval):
    """s -> integral of 1/xi from the interval midpoint, closed form if possible."""
    mid = 0.5 * sum(interval)
    anti = antiderivative(div(ONE, xi), var, interval)
    if anti is not None:
        F = lambdify(anti, var)
        base = F(mid)
        return lambda s: F(s) - base
    inv = lambdify(div(ONE, xi), var)
    return lambda s: adaptive_simpson(inv, mid, s, tol=QUAD_TOL)


def x1_flow(xi, eps: float, interval, var: str = "x", points=None) -> FlowTable:
    xi = as_expr(xi)
    lo, hi = map(float, interval)
    fxi = lambdify(xi, var)
    dxi = lambdify(differentiate(xi, var), var)
    grid = uniform_grid(lo, hi, n=64, trim=0.0)
    if _first_zero(fxi, grid) is not None:
        raise SingularityError(f"xi = {to_str(xi)} vanishes on the interval", _first_zero(fxi, grid))
    pts = uniform_grid(lo, hi) if points is None else np.asarray(points, dtype=float)
    tilde = _xi_tilde(xi, var, (lo, hi))
    t_lo, t_hi = tilde(lo), tilde(hi)
    keep, vals = [], []
    for p in pts:
        target = eps + tilde(p)
        if not (min(t_lo, t_hi) <= target <= max(t_lo, t_hi)):
            continue
        if eps == 0:
            root = float(p)
        else:
            g = lambda s, target=target: tilde(s) - target  # noqa: E731
            root = bracketed_newton(g, lambda s: 1.0 / fxi(s), lo, hi, ftol=1e-13)
        keep.append(float(p))
        vals.append(root)
    if not keep:
        raise DomainError(f"flow of xi = {to_str(xi)} leaves the interval before time {eps}")
    keep, vals = np.array(keep), np.array(vals)
    if len(keep) < len(pts):
        warnings.warn(f"flow leaves the interval; valid sub-interval [{keep[0]:.6g}, {keep[-1]:.6g}]",
                      stacklevel=2)
    xs0 = np.array([fxi(p) for p in keep])
    xs1 = np.array([fxi(v) for v in vals])
    d1 = xs1 / xs0
    d2 = xs1 * (np.array([dxi(v) for v in vals]) - np.array([dxi(p) for p in keep])) / xs0 ** 2
    return FlowTable(keep, vals, d1, d2, (float(keep[0]), float(keep[-1])))


def x1_flow_map(xi, eps: float, interval, var: str = "x", points=None) -> PointMap:
    """Time-eps flow of xi d/dx as a table over ``points`` (default grid)."""
    ft = x1_flow(xi, eps, interval, var, points)
    xi_e = as_expr(xi)
    lo, hi = map(float, interval)
    tilde = _xi_tilde(xi_e, var, (lo, hi))
    fxi = lambdify(xi_e, var)

    def evaluator(p):
        if eps == 0:
            return p
        target = eps + tilde(p)
        return bracketed_newton(lambda s: tilde(s) - target, lambda s: 1.0 / fxi(s), lo, hi, ftol=1e-13)

    closed = fit_closed_form(ft.points, ft.values, var)
    return PointMap(ft.points, ft.values, closed, var, evaluator=evaluator)


def flow_pushforward(ode: Ode2, xi, eps: float, points=None):
    """Coefficients of the flowed equation at the flowed points.

    Returns (alpha(x), a~(alpha(x)), b~(alpha(x))) with a~ = (a alpha' +
    alpha'')/alpha'^2 and b~ = b/alpha'^2, using the exact flow derivatives.
    """
    ft = x1_flow(xi, eps, ode.interval, ode.var, points)
    fa, fb = lambdify(ode.a, ode.var), lambdify(ode.b, ode.var)
    a = np.array([fa(p) for p in ft.points])
    b = np.array([fb(p) for p in ft.points])
    na = (a * ft.derivative + ft.second) / ft.derivative ** 2
    nb = b / ft.derivative ** 2
    return ft.values, na, nb, ft.points


# -- integrable classes ------------------------------------------------------------

@dataclass
class IntegrableClass:
    tag: str
    parameters: dict = field(default_factory=dict)
    V: Expr | None = None
    gauge: GaugeFactor | None = None

    @property
    def center(self):
        return self.parameters.get("x0")


def _constant(e: Expr, grid, var: str, tol: float):
    c = constant_value(e)
    if c is not None:
        return c
    f = lambdify(e, var)
    vals = [f(p) for p in grid]
    ref = max(1.0, max(abs(v) for v in vals))
    if max(vals) - min(vals) <= tol * ref:
        return float(np.mean(vals))
    return None


def classify_integrable(ode: Ode2, grid=None, tol: float = 1e-9) -> IntegrableClass:
    """Constant potential, Euler potential mu/(x-x0)^2, or unknown."""
    grid = ode.default_grid() if grid is None else np.asarray(grid, dtype=float)
    V, g = reduce_to_normal_form(ode)
    k = _constant(V, grid, ode.var, tol)
    if k is not None:
        return IntegrableClass("constant", {"k": k}, V, g)
    try:
        nf = Ode2(ZERO, V, ode.var, ode.interval)
        w13 = omega13(nf)
        c = _constant(w13, grid, ode.var, tol)
        if c is None or c == 0:
            return IntegrableClass("unknown", {}, V, g)
        nxt = q1_derive(nf, w13)
        if _constant(nxt, grid, ode.var, tol) not in (0, 0.0) and not is_zero(nxt):
            if max(abs(lambdify(nxt, ode.var)(p)) for p in grid) > tol:
                return IntegrableClass("unknown", {}, V, g)
    except (SingularityError, DomainError):
        return IntegrableClass("unknown", {}, V, g)
    mu = 1 / c
    mu_v = float(mu)
    fV, fdV = lambdify(V, ode.var), lambdify(differentiate(V, ode.var), ode.var)
    centers = []
    for p in grid:
        sigma = 1.0 if -fdV(p) / mu_v > 0 else -1.0
        centers.append(p - sigma * math.sqrt(mu_v / fV(p)))
    x0 = float(np.median(centers))
    x0c = _nice(x0, 1e-9)
    x0 = x0c.value if isinstance(x0c.value, Fraction) and x0c.value.denominator <= 100 else x0
    model = div(Const(mu), Power(add(Var(ode.var), Const(-x0)), Const(2)))
    fm = lambdify(model, ode.var)
    if any(abs(fm(p) - fV(p)) > 1e-8 * max(1.0, abs(fV(p))) for p in grid):
        return IntegrableClass("unknown", {}, V, g)
    return IntegrableClass("euler", {"mu": mu, "x0": x0}, V, g)


# -- closed-form solutions ---------------------------------------------------------

@dataclass
class SolutionBasis:
    y1: Expr
    y2: Expr
    grid: np.ndarray
    wronskian_min: float
    klass: IntegrableClass | None = None
    gauge_exponent: Expr | None = None
    tables: tuple | None = None

    def values(self, var: str):
        if self.tables is not None:
            return self.tables
        f1, f2 = lambdify(self.y1, var), lambdify(self.y2, var)
        return (np.array([f1(p) for p in self.grid]), np.array([f2(p) for p in self.grid]))


def _sqrt_const(k) -> Expr:
    """Exact square root of a non-negative constant when rational, else sqrt(k)."""
    if isinstance(k, Fraction):
        n, d = k.numerator, k.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Const(Fraction(rn, rd))
        return Func("sqrt", Const(k))
    return Const(math.sqrt(k))


def _normal_basis(klass: IntegrableClass, var: str, interval):
    x = Var(var)
    if klass.tag == "constant":
        k = klass.parameters["k"]
        if k == 0:
            return ONE, x
        if k > 0:
            w = _sqrt_const(k)
            return func("cos", mul(w, x)), func("sin", mul(w, x))
        w = _sqrt_const(-k)
        return func("exp", mul(w, x)), func("exp", neg(mul(w, x)))
    mu, x0 = klass.parameters["mu"], klass.parameters["x0"]
    mid = 0.5 * sum(interval)
    side = 1 if mid > x0 else -1
    s = simplify(mul(Const(side), add(x, Const(-x0))))
    disc = 1 - 4 * mu
    half = Const(Fraction(1, 2))
    if disc > 0:
        r = _sqrt_const(disc)
        rp = simplify(mul(half, add(ONE, r)))
        rm = simplify(mul(half, add(ONE, neg(r))))
        return simplify(Power(s, rp)), simplify(Power(s, rm))
    root = simplify(Power(s, half))
    if disc == 0:
        return root, simplify(mul(root, func("ln", s)))
    beta = simplify(mul(half, _sqrt_const(-disc)))
    ls = func("ln", s)
    return simplify(mul(root, func("cos", mul(beta, ls)))), simplify(mul(root, func("sin", mul(beta, ls))))


def solve_closed_form(ode: Ode2, grid=None) -> SolutionBasis | None:
    """Two independent solutions for the constant and Euler classes, else None.

    The basis of the normal form is pulled back through the inverse gauge
    factor y = u * exp(-g).
    """
    grid = ode.default_grid() if grid is None else np.asarray(grid, dtype=float)
    klass = classify_integrable(ode, grid)
    if klass.tag == "unknown":
        return None
    u1, u2 = _normal_basis(klass, ode.var, ode.interval)
    g = klass.gauge
    if g.exponent is not None:
        back = func("exp", neg(g.exponent)) if not g.is_trivial else ONE
        y1, y2 = simplify(mul(u1, back)), simplify(mul(u2, back))
        tables = None
        wr = _wronskian(y1, y2, ode.var, grid)
        expo = g.exponent
    else:
        f1, f2 = lambdify(u1, ode.var), lambdify(u2, ode.var)
        fac = np.array([g.inverse().factor(p) for p in grid])
        tables = (fac * np.array([f1(p) for p in grid]), fac * np.array([f2(p) for p in grid]))
        y1, y2 = u1, u2
        wr = _wronskian(u1, u2, ode.var, grid) * float(np.min(fac ** 2))
        expo = None
    return SolutionBasis(y1, y2, grid, wr, klass, expo, tables)


def _wronskian(y1: Expr, y2: Expr, var: str, grid) -> float:
    w = simplify(add(mul(y1, differentiate(y2, var)), neg(mul(differentiate(y1, var), y2))))
    f = lambdify(w, var)
    return float(min(abs(f(p)) for p in grid))


def substitution_residual(ode: Ode2, y: Expr, grid) -> float:
    """max |y'' + a y' + b y| over the grid, relative to max(1, max|y|)."""
    v = ode.var
    r = simplify(add(differentiate(y, v, 2), mul(ode.a, differentiate(y, v)), mul(ode.b, y)))
    fr, fy = lambdify(r, v), lambdify(y, v)
    scale = max(1.0, max(abs(fy(p)) for p in grid))
    return max(abs(fr(p)) for p in grid) / scale


# -- numerical oracle --------------------------------------------------------------

def integrate_numeric(ode: Ode2, x0: float, y0: float, yp0: float, grid):
    """RK4 on the grid (which must start at x0); returns (y, y') arrays."""
    grid = np.asarray(grid, dtype=float)
    if abs(grid[0] - x0) > 1e-14 * max(1.0, abs(x0)):
        raise UsageError("grid must start at x0")
    fa, fb = lambdify(ode.a, ode.var), lambdify(ode.b, ode.var)
    return rk4_linear2(fa, fb, grid, y0, yp0)


def _fine_nodes(points, step):
    pts = np.unique(np.asarray(points, dtype=float))
    nodes = [pts[0]]
    for p, q in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((q - p) / step)))
        nodes.extend(np.linspace(p, q, n + 1)[1:])
    return np.array(nodes), pts


def transport_check(ode1: Ode2, ode2: Ode2, pmap: PointMap, gauge: GaugeFactor | None = None,
                    source_gauge: GaugeFactor | None = None, step: float = 1e-3,
                    delta: float = 1e-3, grid=None, initial=(1.0, 0.37)) -> float:
    """Push a numerical solution of ode1 through the map and measure how well
    it solves ode2.

    z(t) = y(x(t)) * source_gauge(x(t)) * gauge(t); the residual is the
    maximum of |z'' + a2 z' + b2 z| on the grid (5-point differences with
    spacing ``delta``), divided by max |z|.
    """
    tg = np.asarray(pmap.t_grid if grid is None else grid, dtype=float)
    offsets = np.arange(-2, 3) * delta
    stencil = tg[:, None] + offsets[None, :]
    xs = np.array([[pmap(t) for t in row] for row in stencil])
    lo, hi = ode1.interval
    if xs.min() < lo - 1e-12 or xs.max() > hi + 1e-12:
        raise DomainError("map leaves the source interval on the transport stencil")
    nodes, pts = _fine_nodes(xs.ravel(), step)
    start = len(nodes) // 2
    fa, fb = lambdify(ode1.a, ode1.var), lambdify(ode1.b, ode1.var)
    y0, p0 = initial
    fwd, _ = rk4_linear2(fa, fb, nodes[start:], y0, p0)
    bwd, _ = rk4_linear2(fa, fb, nodes[:start + 1][::-1], y0, p0)
    ys = np.concatenate([bwd[::-1][:-1], fwd])
    lookup = dict(zip(nodes.tolist(), ys.tolist()))
    z = np.array([[lookup[x] for x in row] for row in xs.tolist()])
    if source_gauge is not None:
        z = z * np.array([[source_gauge.factor(x) for x in row] for row in xs])
    if gauge is not None:
        z = z * np.array([[gauge.factor(t) for t in row] for row in stencil])
    dz = (-z[:, 4] + 8 * z[:, 3] - 8 * z[:, 1] + z[:, 0]) / (12 * delta)
    d2z = (-z[:, 4] + 16 * z[:, 3] - 30 * z[:, 2] + 16 * z[:, 1] - z[:, 0]) / (12 * delta ** 2)
    fa2, fb2 = lambdify(ode2.a, ode2.var), lambdify(ode2.b, ode2.var)
    a2 = np.array([fa2(t) for t in tg])
    b2 = np.array([fb2(t) for t in tg])
    res = np.abs(d2z + a2 * dz + b2 * z[:, 2])
    scale = float(np.max(np.abs(z[:, 2])))
    if scale == 0:
        raise DomainError("transported solution vanishes on the grid")
    return float(np.max(res) / scale)
