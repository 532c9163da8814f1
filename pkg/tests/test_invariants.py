import random

import numpy as np
import pytest

from odequiv.errors import SingularityError, UsageError
from odequiv.expr import ZERO, Const, evaluate, parse, simplify, to_str
from odequiv.expr.numeric import equal_numeric, lambdify
from odequiv.invariants import (
    Ode2, chain_x1, chain_x2, nf_omega1, nf_omega2, omega12, omega13, omega22, omega23, on_equation,
    q1_derive,
)
from odequiv.prolongation import jet_chain_x1, jet_omega23
from odequiv.transform import flow_pushforward, gauge, pushforward


def test_omega13_first_equation(eq_x):
    w = omega13(eq_x)
    assert to_str(w) == "9/(16*x^3)"
    for p in (0.5, 1.0, 2.0):
        assert evaluate(w, {"x": p}) == pytest.approx(9 / (16 * p ** 3), rel=1e-12)


def test_omega13_second_equation(eq_t):
    w = omega13(eq_t)
    assert to_str(w) == "9*exp(3*t)/16"


def test_omega13_constant_b():
    assert omega13(Ode2.from_strings("0", "7")) == ZERO


def test_omega13_reports_zero_of_b():
    with pytest.raises(SingularityError) as info:
        omega13(Ode2.from_strings("0", "x - 1", "x", (0, 3)))
    assert info.value.location == pytest.approx(1.0, abs=1e-9)


def test_q1_examples(eq_x, eq_t):
    w14 = q1_derive(eq_x, omega13(eq_x))
    # mechanical sign: d/dx(9/(16x^3)) / sqrt(4x) is negative
    assert equal_numeric(w14, parse("-27/(32*x^4*sqrt(x))"), [0.5, 1.0, 2.0], tol=1e-12)
    w24 = q1_derive(eq_t, omega13(eq_t))
    assert equal_numeric(w24, parse("27/32*exp(9/2*t)"), [-1.0, 0.0, 0.5], tol=1e-12, var="t")
    assert q1_derive(eq_x, Const(3)) == ZERO


def test_q1_negative_branch():
    ode = Ode2.from_strings("0", "-x", "x", (0.5, 3))
    assert equal_numeric(q1_derive(ode, parse("x")), parse("1/sqrt(x)"), [0.6, 1.5, 2.9])


def test_q1_needs_constant_sign():
    ode = Ode2.from_strings("0", "x - 1", "x", (0, 3))
    with pytest.raises(SingularityError):
        q1_derive(ode, parse("x"))


def test_chain_x1_values(eq_x):
    c = chain_x1(eq_x, 1, [1.0])
    assert c.values[0][0] == pytest.approx(0.5625, rel=1e-14)
    assert c.values[1][0] == pytest.approx(-0.84375, rel=1e-14)
    assert c.group_tag == "X1"


def test_chain_depth_zero(eq_x):
    c = chain_x1(eq_x, 0)
    assert len(c) == 1


def test_chain_euler_second_entry_vanishes():
    ode = Ode2.from_strings("0", "5/x^2", "x", (0.5, 3))
    c = chain_x1(ode, 2)
    assert to_str(c.exprs[0]) == "1/5"
    assert c.exprs[1] == ZERO and c.exprs[2] == ZERO


def test_chain_values_are_recomputable(eq_x):
    c = chain_x1(eq_x, 2)
    for e, row in zip(c.exprs, c.values):
        f = lambdify(e, "x")
        assert all(f(p) == v for p, v in zip(c.grid, row))


def test_chain_matches_jet_forms(eq_x, eq_t):
    for ode in (eq_x, eq_t):
        direct = chain_x1(ode, 2).exprs
        via_jets = [on_equation(j, ode) for j in jet_chain_x1(2)]
        grid = ode.default_grid(9)
        for d, j in zip(direct, via_jets):
            assert equal_numeric(d, j, grid, tol=1e-12, var=ode.var)


def test_omega23_examples(eq_x):
    assert omega23(Ode2.from_strings("0", "3*x^2")) == simplify(parse("-12*x^2"))
    assert to_str(omega23(eq_x)) == "-16*x - 1/x^2"
    assert omega23(Ode2.from_strings("2", "1")) == ZERO
    assert on_equation(jet_omega23(), eq_x) == omega23(eq_x)


def test_chain_x2_examples(eq_x):
    assert [to_str(e) for e in chain_x2(Ode2.from_strings("0", "5"), 2).exprs] == ["-20", "0", "0"]
    assert [to_str(e) for e in chain_x2(eq_x, 1).exprs] == ["-16*x - 1/x^2", "2/x^3 - 16"]
    assert chain_x2(Ode2.from_strings("2", "1"), 0).exprs == [ZERO]


def test_parameterized_invariants():
    assert to_str(omega12(Ode2.from_strings("0", "4*x"), parse("x"))) == "4*x^3"
    assert to_str(omega12(Ode2.from_strings("0", "3"), parse("1"))) == "3"
    assert to_str(omega22(Ode2.from_strings("0", "1"), parse("exp(x)"), "ln_y")) == "2*ln(y)"
    assert to_str(omega22(Ode2.from_strings("0", "1"), parse("exp(x)"), "ln_yp")) == "2*ln(yp)"


def test_omega22_needs_nonvanishing_A():
    with pytest.raises(SingularityError):
        omega22(Ode2.from_strings("0", "1", "x", (-1, 1)), parse("x"))


def test_nf_invariants():
    assert nf_omega1(parse("V"), Const(1)) == parse("V")
    assert to_str(nf_omega1(parse("mu/x^2"), parse("x"))) == "mu - 1/4"
    assert nf_omega2(parse("mu/x^2"), parse("x")) == ZERO


def test_ode_validation():
    with pytest.raises(UsageError):
        Ode2.from_strings("0", "1", "x", (1, 0))
    with pytest.raises(UsageError):
        Ode2.from_strings("0", "t", "x", (0, 1))
    with pytest.raises(SingularityError):
        Ode2.from_strings("1/x", "1", "x", (-1, 1))


def test_default_grid(eq_x):
    g = eq_x.default_grid()
    assert len(g) == 64
    assert g[0] == pytest.approx(0.4 + 0.024) and g[-1] == pytest.approx(2.8 - 0.024)


# -- transport identities -----------------------------------------------------------

CATALOG_MAPS = ["3*x + 1", "exp(x/2)", "x^3", "2*ln(x) + 1", "-x + 5", "x^(1/2)", "4*exp(-x)"]


@pytest.mark.parametrize("alpha", CATALOG_MAPS)
def test_omega13_transports_under_pushforward(eq_x, alpha):
    a = parse(alpha)
    new = pushforward(eq_x, a, "u")
    w_old, w_new = omega13(eq_x), omega13(new)
    fa = lambdify(a, "x")
    fo, fn = lambdify(w_old, "x"), lambdify(w_new, "u")
    for p in eq_x.default_grid(16):
        assert fn(fa(p)) == pytest.approx(fo(p), rel=1e-8, abs=1e-8)


def test_reference_pair_transport_identity(eq_x):
    w = lambdify(omega13(eq_x), "x")
    for t in np.linspace(-1, 0.9, 11):
        assert w(np.exp(-t)) == pytest.approx(9 / 16 * np.exp(3 * t), rel=1e-12)


def test_omega23_gauge_identity(eq_x):
    rng = random.Random(3)
    for _ in range(6):
        coeffs = [rng.randint(-3, 3) for _ in range(3)]
        A = parse(f"{coeffs[0]}*x^2 + {coeffs[1]}*x + {coeffs[2]}".replace("+ -", "- "))
        for eps in (0.5, -0.5, 1):
            new, _ = gauge(eq_x, A, eps)
            f0, f1 = lambdify(omega23(eq_x), "x"), lambdify(omega23(new), "x")
            for p in eq_x.default_grid(16):
                assert abs(f0(p) - f1(p)) < 1e-9


@pytest.mark.filterwarnings("ignore:flow leaves the interval")
@pytest.mark.parametrize("xi, eps", [("x", 0.2), ("x^2", 0.05), ("x + 1", -0.1)])
def test_omega12_flow_identity(eq_x, xi, eps):
    xi_e = parse(xi)
    images, _, nb, src = flow_pushforward(eq_x, xi_e, eps)
    fxi, fb = lambdify(xi_e, "x"), lambdify(eq_x.b, "x")
    for p, q, bq in zip(src, images, nb):
        assert bq * fxi(q) ** 2 == pytest.approx(fb(p) * fxi(p) ** 2, rel=1e-7)
