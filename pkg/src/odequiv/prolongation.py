"""Prolonged equivalence generators on jet space.

Jet coordinates are plain expression variables with reserved names:

    x                 independent variable
    y, yp, ypp        dependent variable and its first two derivatives
    a, ax, axx, ...   coefficient a(x) and its x-derivatives
    b, bx, bxx, ...   coefficient b(x) and its x-derivatives

Coefficients do not depend on y, so ``a_y = b_y = 0`` and every
mixed/pure y-derivative of a, b vanishes on the equation manifold; those
directions are still prolonged (``ay``, ``axy``, ...) so their vanishing
can be checked rather than assumed.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .errors import JetOrderError
from .expr import ZERO, Expr, Var, add, as_expr, differentiate, free_vars, func, is_zero, mul, neg, simplify, substitute
from .expr.numeric import evaluate

log = logging.getLogger(__name__)

Y_JETS = ("y", "yp", "ypp")
Y_DIRECTIONS = ("ay", "by", "axy", "ayy", "bxy", "byy")


def coeff_jet(base: str, order: int) -> str:
    return base + "x" * order


def jet_order(name: str) -> tuple[str, int] | None:
    """(family, order) of a reserved jet name, or None for non-jet names."""
    if name == "x":
        return ("x", 0)
    if name in Y_JETS:
        return ("y", Y_JETS.index(name))
    if name[0] in "ab" and set(name[1:]) <= {"x"}:
        return (name[0], len(name) - 1)
    return None


def is_jet_name(name: str) -> bool:
    return jet_order(name) is not None or name in Y_DIRECTIONS


def max_coeff_order(e: Expr) -> int:
    orders = [jet_order(n)[1] for n in free_vars(e) if jet_order(n) and jet_order(n)[0] in "ab"]
    return max(orders, default=0)


def _next_jet(name: str, ab_order: int) -> str:
    family, k = jet_order(name)
    if family == "y":
        if k + 1 >= len(Y_JETS):
            raise JetOrderError(f"total derivative of '{name}' exceeds y-jet order 2")
        return Y_JETS[k + 1]
    if k + 1 > ab_order:
        raise JetOrderError(f"total derivative of '{name}' exceeds coefficient jet order {ab_order}")
    return coeff_jet(family, k + 1)


def total_derivative_x(e: Expr, ab_order: int = 2) -> Expr:
    """Combined D_x on jet space: d/dx + yp d/dy + ... + ax d/da + bx d/db + ...

    ``ab_order`` caps the coefficient derivatives that may be produced.
    """
    e = simplify(as_expr(e))
    terms = []
    for name in sorted(free_vars(e)):
        if name in Y_DIRECTIONS:
            raise JetOrderError(f"'{name}' vanishes on the equation manifold; restrict first")
        if jet_order(name) is None:
            raise JetOrderError(f"'{name}' is not a jet coordinate")
        d = differentiate(e, name)
        if name == "x":
            terms.append(d)
        else:
            terms.append(mul(Var(_next_jet(name, ab_order)), d))
    return simplify(add(*terms))


@dataclass(frozen=True)
class Generator:
    """An element of the equivalence algebra.

    ``kind`` is ``"X1"`` (defining function ``xi``), ``"X2"`` (``A``),
    ``"NF"`` (the normal-form generator, ``xi``; the potential V is the
    coordinate ``b`` with ``a = 0``) or ``"general"`` (both).
    ``overrides`` replaces individual coefficient fields, which is how
    wrong coefficients are injected to test the checkers.
    """

    kind: str
    xi: Expr = ZERO
    A: Expr = ZERO
    overrides: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("X1", "X2", "NF", "general"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        object.__setattr__(self, "xi", as_expr(self.xi))
        object.__setattr__(self, "A", as_expr(self.A))
        for f in (self.xi, self.A):
            extra = free_vars(f) - {"x"}
            if extra:
                raise ValueError(f"defining functions depend on x only, got {sorted(extra)}")

    @classmethod
    def x1(cls, xi) -> Generator:
        return cls("X1", xi=xi)

    @classmethod
    def x2(cls, A) -> Generator:
        return cls("X2", A=A)

    @classmethod
    def normal_form(cls, xi) -> Generator:
        return cls("NF", xi=xi)

    @classmethod
    def general(cls, xi, A) -> Generator:
        return cls("general", xi=xi, A=A)

    def mutated(self, **coeffs) -> Generator:
        merged = dict(self.overrides)
        merged.update({k: as_expr(v) for k, v in coeffs.items()})
        return Generator(self.kind, self.xi, self.A, tuple(sorted(merged.items())))

    def coefficients(self) -> dict[str, Expr]:
        """Components along x, y, a, b as jet expressions."""
        x = "x"
        a, b, y = Var("a"), Var("b"), Var("y")
        xi, A = self.xi, self.A
        d = lambda f, n=1: differentiate(f, x, n)  # noqa: E731
        if self.kind == "NF":
            c = {"x": mul(2, xi), "y": mul(d(xi), y), "a": ZERO,
                 "b": neg(add(d(xi, 3), mul(4, d(xi), b)))}
        else:
            if self.kind == "X1":
                A = ZERO
            elif self.kind == "X2":
                xi = ZERO
            c = {"x": xi, "y": mul(A, y),
                 "a": add(d(xi, 2), neg(mul(a, d(xi))), mul(-2, d(A))),
                 "b": neg(add(d(A, 2), mul(a, d(A)), mul(2, b, d(xi))))}
        c.update(dict(self.overrides))
        return {k: simplify(v) for k, v in c.items()}


@dataclass
class Prolongation:
    """All prolonged coefficients, keyed by the jet coordinate they act on."""

    generator: Generator
    coeffs: dict
    ab_order: int

    @property
    def zeta1(self) -> Expr:
        return self.coeffs["yp"]

    @property
    def zeta11(self) -> Expr:
        return self.coeffs["ypp"]

    def nu(self, name: str) -> Expr:
        return self.coeffs[name]

    def apply(self, omega: Expr) -> Expr:
        """The prolonged generator acting on ``omega``."""
        omega = simplify(as_expr(omega))
        terms = []
        for name in sorted(free_vars(omega)):
            if name not in self.coeffs:
                raise JetOrderError(f"no prolonged coefficient for '{name}' (raise ab_order)")
            d = differentiate(omega, name)
            terms.append(mul(self.coeffs[name], d))
        return simplify(add(*terms))


def prolong(g: Generator, ab_order: int = 2) -> Prolongation:
    """Second y-prolongation and order-``ab_order`` coefficient prolongation of ``g``.

    Every coefficient is produced mechanically from the prolongation
    formulas; on the manifold a_y = b_y = 0 the y-total derivative of the
    coefficients is the plain partial d/dy.
    """
    base = g.coefficients()
    xi, eta = base["x"], base["y"]
    dxi = total_derivative_x(xi, ab_order)
    c = {"x": xi, "y": eta}
    zeta1 = simplify(add(total_derivative_x(eta, ab_order), neg(mul(Var("yp"), dxi))))
    zeta11 = simplify(add(total_derivative_x(zeta1, ab_order), neg(mul(Var("ypp"), dxi))))
    c["yp"], c["ypp"] = zeta1, zeta11
    dyxi = differentiate(xi, "y")
    for fam in "ab":
        nu = base[fam]
        c[fam] = nu
        for k in range(1, ab_order + 1):
            nu = simplify(add(total_derivative_x(nu, ab_order),
                              neg(mul(Var(coeff_jet(fam, k)), dxi))))
            c[coeff_jet(fam, k)] = nu
        first = simplify(add(differentiate(base[fam], "y"), neg(mul(Var(fam + "x"), dyxi))))
        c[fam + "y"] = first
        c[fam + "xy"] = simplify(add(differentiate(c[fam + "x"], "y"), neg(mul(Var(fam + "xx"), dyxi))))
        c[fam + "yy"] = simplify(differentiate(first, "y"))
    return Prolongation(g, c, ab_order)


def on_manifold(e: Expr) -> Expr:
    """Restrict to solutions: ypp = -a yp - b y (y-directions of a, b are 0)."""
    ypp = add(neg(mul(Var("a"), Var("yp"))), neg(mul(Var("b"), Var("y"))))
    zeros = {n: ZERO for n in Y_DIRECTIONS}
    return simplify(substitute(e, {"ypp": ypp, **zeros}))


def _numeric_zero(e: Expr, samples: int = 12, tol: float = 1e-9) -> bool:
    rng = random.Random(0)
    names = sorted(free_vars(e))
    for _ in range(samples):
        env = {n: rng.uniform(0.5, 1.5) for n in names}
        if abs(evaluate(e, env)) > tol:
            return False
    return True


def certify_zero(e: Expr) -> tuple[bool, str]:
    """(is zero, confidence) with confidence ``"symbolic"`` or ``"numeric-only"``."""
    if is_zero(e):
        return True, "symbolic"
    if _numeric_zero(e):
        log.warning("residual %s vanishes numerically but did not simplify to 0", e)
        return True, "numeric-only"
    return False, "nonzero"


def equation_action(g: Generator) -> Expr:
    """Prolonged ``g`` applied to y'' + a y' + b y, restricted to the manifold."""
    pr = prolong(g)
    a, b, y, yp = Var("a"), Var("b"), Var("y"), Var("yp")
    total = add(pr.coeffs["ypp"], mul(pr.coeffs["a"], yp), mul(a, pr.coeffs["yp"]),
                mul(pr.coeffs["b"], y), mul(b, pr.coeffs["y"]))
    return on_manifold(total)


def determining_residual(xi, A, mu1=None, mu2=None) -> Expr:
    """Residual of the determining equation for the general operator.

    With no overrides this is identically zero for every smooth xi(x), A(x).
    ``mu1``/``mu2`` replace the a- and b-components to probe the check.
    """
    g = Generator.general(xi, A)
    over = {}
    if mu1 is not None:
        over["a"] = mu1
    if mu2 is not None:
        over["b"] = mu2
    if over:
        g = g.mutated(**over)
    return equation_action(g)


def determining_conditions(g: Generator) -> dict[str, Expr]:
    """Every determining condition: the main residual plus the y-direction ones."""
    pr = prolong(g)
    out = {"equation": equation_action(g)}
    for name in Y_DIRECTIONS:
        out[name] = on_manifold(pr.coeffs[name])
    coeffs = g.coefficients()
    out["xi_y"] = simplify(differentiate(coeffs["x"], "y"))
    out["mu1_y"] = simplify(differentiate(coeffs["a"], "y"))
    out["mu2_y"] = simplify(differentiate(coeffs["b"], "y"))
    return out


def annihilation_check(g: Generator, omega) -> Expr:
    """Simplified action of the prolonged ``g`` on ``omega``; 0 certifies invariance."""
    omega = simplify(as_expr(omega))
    pr = prolong(g, ab_order=max(2, max_coeff_order(omega)))
    return pr.apply(omega)


# Jet forms of the subgroup invariants.

def jet_omega13() -> Expr:
    a, b, bx = Var("a"), Var("b"), Var("bx")
    return simplify(a ** 2 / b + a * bx / b ** 2 + bx ** 2 / (4 * b ** 3))


def jet_omega23() -> Expr:
    a, b, ax = Var("a"), Var("b"), Var("ax")
    return simplify(a ** 2 - 4 * b + 2 * ax)


def jet_q1(e: Expr, ab_order: int | None = None) -> Expr:
    """Invariant differentiation (1/sqrt(b)) D_x on the positive-b branch."""
    order = ab_order if ab_order is not None else max_coeff_order(e) + 1
    return simplify(total_derivative_x(e, max(2, order)) * Var("b") ** as_expr(-0.5))


def jet_chain_x1(depth: int) -> list[Expr]:
    chain = [jet_omega13()]
    for _ in range(depth):
        chain.append(jet_q1(chain[-1]))
    return chain


def jet_omega12(xi) -> Expr:
    return simplify(Var("b") * as_expr(xi) ** 2)


def jet_omega22(A, variant: str = "ln_y") -> Expr:
    A = as_expr(A)
    jet = {"ln_yp": "yp", "ln_y": "y"}[variant]
    return simplify(Var("a") + 2 * differentiate(A, "x") / A * func("ln", Var(jet)))


def jet_nf_omega1(xi) -> Expr:
    xi = as_expr(xi)
    d1, d2 = differentiate(xi, "x"), differentiate(xi, "x", 2)
    return simplify(Var("b") * xi ** 2 + xi * d2 / 2 - d1 ** 2 / 4)
