import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odequiv.errors import (
    AmbiguousMapError, DegenerateChainError, DomainError, NonMonotoneError, PartialOverlapError, SingularityError,
)
from odequiv.expr import Var, parse, substitute
from odequiv.invariants import InvariantChain, Ode2, chain_x1
from odequiv.transform import pushforward, transport_check
from odequiv.equivalence import equivalence_test, evaluate_H, find_monomial_H, fixed_xi_check, recover_map

MAPS = ["3*x + 1", "x^3", "2*ln(x) + 1", "exp(x/2)", "-x + 5", "x^(1/2)", "4*exp(-x)"]

NON_DEGENERATE = [
    ("1/x", "4*x", "x", (0.4, 2.8)),
    ("0", "4*exp(-3*t)", "t", (-1, 0.9)),
    ("0", "x^2 + 1", "x", (1, 3)),
    ("0", "exp(x)", "x", (0.5, 2)),
    ("x", "x^3 + 2", "x", (1.5, 3)),
]


# -- monomial H ------------------------------------------------------------------

def test_H_on_both_equations(eq_x, eq_t):
    for ode in (eq_x, eq_t):
        h = find_monomial_H(chain_x1(ode))
        assert h.exponents == (3, -2)
        assert h.normalization == 4
        assert h.lam == pytest.approx(1, abs=1e-8)


def test_H_degenerate_chain():
    chain = chain_x1(Ode2.from_strings("0", "5/x^2", "x", (0.5, 3)))
    with pytest.raises(DegenerateChainError):
        find_monomial_H(chain)
    with pytest.raises(DegenerateChainError):
        evaluate_H(chain, 3, -2)


def test_H_absent():
    assert find_monomial_H(chain_x1(Ode2.from_strings("0", "x^2 + 1", "x", (0.5, 2)))) is None


def test_H_other_exponents():
    # omega1 = x^2, omega2 = x^3 makes omega1^3/omega2^2 constant
    grid = np.linspace(0.5, 2, 16)
    ch = InvariantChain.build([parse("x^2"), parse("x^3 / 5")], grid, "X1", "x")
    h = find_monomial_H(ch)
    assert h.exponents == (3, -2)
    ch = InvariantChain.build([parse("x"), parse("x^2")], grid, "X1", "x")
    h = find_monomial_H(ch)
    assert h.exponents == (2, -1) and h.normalization == 1 and h.lam == pytest.approx(1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 63), min_size=8, max_size=30, unique=True))
def test_H_is_robust_on_sub_grids(idx):
    eq = Ode2.from_strings("1/x", "4*x", "x", (0.4, 2.8))
    grid = eq.default_grid()[sorted(idx)]
    h = find_monomial_H(chain_x1(eq, 2, grid))
    assert h is not None and h.exponents == (3, -2)


def test_non_monotone_omega13_is_reported():
    # x^2/(x^2 + 1)^3 peaks at x = 1/sqrt(2)
    ode = Ode2.from_strings("0", "x^2 + 1", "x", (0.5, 2))
    v = equivalence_test(ode, ode)
    assert v.necessary_pass and not v.verified
    assert any("not monotone" in w for w in v.warnings)


# -- equivalence ---------------------------------------------------------------------

def test_reference_pair(eq_x, eq_t):
    v = equivalence_test(eq_x, eq_t)
    assert v.necessary_pass and v.verified
    assert v.H_exponents == (3, -2)
    assert v.lambda1 == pytest.approx(1, abs=1e-8) and v.lambda2 == pytest.approx(1, abs=1e-8)
    assert v.transport_residual < 1e-6


def test_constant_vs_variable_coefficient():
    v = equivalence_test(Ode2.from_strings("0", "1"), Ode2.from_strings("0", "x", "x", (0.5, 2)))
    assert not v.necessary_pass and not v.verified


@pytest.mark.parametrize("case", NON_DEGENERATE, ids=[s[1] for s in NON_DEGENERATE])
def test_reflexive(case):
    ode = Ode2.from_strings(*case)
    v = equivalence_test(ode, ode)
    assert v.verified
    assert np.max(np.abs(v.map.x_values - v.map.t_grid)) < 1e-10


@pytest.mark.parametrize("i", range(len(NON_DEGENERATE)))
@pytest.mark.parametrize("j", range(len(NON_DEGENERATE)))
def test_symmetric_necessary_condition(i, j):
    e1, e2 = (Ode2.from_strings(*NON_DEGENERATE[k]) for k in (i, j))
    assert equivalence_test(e1, e2).necessary_pass == equivalence_test(e2, e1).necessary_pass


@pytest.mark.parametrize("alpha", MAPS)
def test_pushed_forward_equation_is_equivalent(eq_x, alpha):
    other = pushforward(eq_x, parse(alpha), "u")
    v = equivalence_test(eq_x, other)
    assert v.necessary_pass and v.verified


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(MAPS + ["x + 0.3", "2*x", "x^2"]), st.sampled_from(NON_DEGENERATE[:4]))
def test_verified_implies_small_transport_residual(alpha, case):
    src = Ode2.from_strings(*case)
    try:
        other = pushforward(src, substitute(parse(alpha), {"x": Var(src.var)}), "u")
    except (DomainError, NonMonotoneError, SingularityError):
        return
    v = equivalence_test(src, other)
    if v.verified:
        assert v.map is not None and v.necessary_pass
        assert transport_check(src, other, v.map) < 1e-6


def test_additive_mutation_breaks_equivalence(eq_x):
    mutated = Ode2.from_strings("0", "4*exp(-3*t) + 0.05", "t", (-1, 0.9))
    assert not equivalence_test(eq_x, mutated).verified


def test_scaled_b2_remains_equivalent(eq_x):
    # 4.2 e^{-3t} is reached from the same source by x = 1.05^(1/3) e^{-t}
    scaled = Ode2.from_strings("0", "4.2*exp(-3*t)", "t", (-1, 0.9))
    v = equivalence_test(eq_x, scaled)
    assert v.verified
    t = v.map.t_grid
    assert np.max(np.abs(v.map.x_values - 1.05 ** (1 / 3) * np.exp(-t))) < 1e-8


def test_degenerate_euler_route():
    e1 = Ode2.from_strings("0", "5/x^2", "x", (0.5, 3))
    v = equivalence_test(e1, Ode2.from_strings("0", "5/t^2", "t", (1, 4)))
    assert v.route == "degenerate" and v.verified
    v = equivalence_test(e1, Ode2.from_strings("0", "7/t^2", "t", (1, 4)))
    assert not v.necessary_pass


def test_degenerate_constant_route():
    v = equivalence_test(Ode2.from_strings("0", "7"), Ode2.from_strings("0", "3", "t", (0, 2)))
    assert v.verified
    v = equivalence_test(Ode2.from_strings("0", "7"), Ode2.from_strings("0", "-3", "t", (0, 2)))
    assert not v.necessary_pass


def test_degenerate_route_uses_gauge():
    v = equivalence_test(Ode2.from_strings("2", "1"), Ode2.from_strings("0", "0", "t", (0, 2)))
    assert v.verified


# -- map recovery ----------------------------------------------------------------------

def test_recover_reference_map(eq_x, eq_t):
    t = np.linspace(-1, 0.9, 64)
    m = recover_map(eq_x, eq_t, grid=t)
    assert np.max(np.abs(m.x_values - np.exp(-t))) < 1e-8
    assert m.closed_form is not None
    for p in (-0.7, 0.0, 0.55):
        assert abs(m(p) - np.exp(-p)) < 1e-12


def test_recover_identity(eq_x):
    m = recover_map(eq_x, eq_x)
    assert np.max(np.abs(m.x_values - m.t_grid)) < 1e-12


def test_recover_euler_is_ambiguous():
    e1 = Ode2.from_strings("0", "5/x^2", "x", (0.5, 3))
    with pytest.raises(AmbiguousMapError):
        recover_map(e1, Ode2.from_strings("0", "5/t^2", "t", (0.5, 3)))


def test_recover_partial_overlap(eq_x):
    narrow = Ode2.from_strings("0", "4*exp(-3*t)", "t", (-1.5, 1.5))
    with pytest.raises(PartialOverlapError) as info:
        recover_map(eq_x, narrow)
    lo, hi = info.value.valid
    assert -1.5 < lo < hi < 1.5
    # the valid range is where e^{-t} stays inside [0.4, 2.8]
    assert lo == pytest.approx(-np.log(2.8), abs=0.05)
    assert hi == pytest.approx(-np.log(0.4), abs=0.05)


# -- fixed xi ----------------------------------------------------------------------------

def test_fixed_xi_examples():
    grid = np.linspace(0.5, 3, 32)
    assert fixed_xi_check(parse("5/x^2"), parse("5/x^2"), parse("x"), grid)
    assert not fixed_xi_check(parse("5/x^2"), parse("7/x^2"), parse("x"), grid)
    assert not fixed_xi_check(parse("3"), parse("4"), parse("1"), grid)
    assert fixed_xi_check(parse("3"), parse("3"), parse("1"), grid)


def test_fixed_xi_non_constant_potential():
    grid = np.linspace(0.5, 3, 32)
    assert fixed_xi_check(parse("x"), parse("x"), parse("1"), grid)
    assert not fixed_xi_check(parse("3"), parse("x"), parse("1"), grid)
