"""Equivalence testing by constant invariant combinations.

An equation whose X1 chain (ω13, ω14, ...) satisfies ω13^p ω14^q = λ keeps
that relation, with the same λ, under every change of the independent
variable.  Matching λ is only a necessary condition; a verdict is marked
``verified`` only after an explicit map has been recovered from ω13 and a
numerical solution of the first equation has been pushed through it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousMapError, DegenerateChainError, DomainError, NonMonotoneError, PartialOverlapError
from .expr import Expr, as_expr, differentiate, is_zero
from .expr.numeric import lambdify
from .invariants import InvariantChain, Ode2, chain_x1, nf_chain, omega13
from .numerics import bracketed_newton, uniform_grid
from .transform import PointMap, classify_integrable, fit_closed_form, transport_check


MAX_EXPONENT = 6
CONSTANCY_TOL = 1e-8
LAMBDA_TOL = 1e-6
TRANSPORT_TOL = 1e-6


@dataclass
class HFit:
    p: int
    q: int
    lam: float
    normalization: float = 1.0
    spread: float = 0.0

    @property
    def exponents(self):
        return (self.p, self.q)


@dataclass
class EquivVerdict:
    necessary_pass: bool
    H_exponents: tuple | None
    lambda1: float | None
    lambda2: float | None
    map: PointMap | None = None
    verified: bool = False
    transport_residual: float | None = None
    normalization: float = 1.0
    route: str = "invariant"
    warnings: list = field(default_factory=list)
    gauges: tuple | None = None


def _relative_spread(vals) -> float:
    vals = np.asarray(vals, dtype=float)
    ref = float(np.max(np.abs(vals)))
    if ref == 0:
        return 0.0
    return float((vals.max() - vals.min()) / ref)


def _combination(v1, v2, p, q):
    return np.power(v1, p) * np.power(v2, q)


def _normalization(p, q) -> float:
    return 4.0 if (p, q) == (3, -2) else 1.0


def _check_degenerate(chain: InvariantChain):
    if len(chain) < 2:
        raise ValueError("need at least two chain entries")
    for k in range(2):
        if is_zero(chain.exprs[k]) or np.any(chain.values[k] == 0):
            raise DegenerateChainError(f"chain entry {k} vanishes on the grid")


def _log_derivatives(chain: InvariantChain, points):
    out = []
    for e in chain.exprs[:2]:
        f, df = lambdify(e, chain.var), lambdify(differentiate(e, chain.var), chain.var)
        out.append([df(p) / f(p) for p in points])
    return out


def find_monomial_H(chain: InvariantChain, max_exponent: int = MAX_EXPONENT,
                    tol: float = CONSTANCY_TOL) -> HFit | None:
    """Small integers (p, q) with ω1^p ω2^q constant over the chain's grid.

    The ratio p/q comes from p L1 + q L2 = 0 for the logarithmic derivatives
    L_i = ω_i'/ω_i at two interior points. (3, -2) is reported with the
    normalization 4 ω1^3/ω2^2. Raises DegenerateChainError when one of the
    first two entries vanishes.
    """
    _check_degenerate(chain)
    v1, v2 = chain.values[0], chain.values[1]
    n = len(chain.grid)
    pts = [chain.grid[n // 3], chain.grid[(2 * n) // 3]]
    L1, L2 = _log_derivatives(chain, pts)
    candidates = []
    if all(abs(l) < 1e-14 for l in L1):
        candidates.append((1, 0))
    elif all(abs(l) < 1e-14 for l in L2):
        candidates.append((0, 1))
    else:
        ratios = [-l2 / l1 for l1, l2 in zip(L1, L2) if l1 != 0]
        if not ratios:
            return None
        r = ratios[0]
        for qd in range(1, max_exponent + 1):
            pn = round(r * qd)
            if pn == 0 or abs(pn) > max_exponent:
                continue
            if math.gcd(pn, qd) != 1:
                continue
            if all(abs(pn / qd - rr) <= 1e-6 * max(1.0, abs(rr)) for rr in ratios):
                candidates.append((pn, qd))
    for p, q in candidates:
        if p < 0:
            p, q = -p, -q
        vals = _combination(v1, v2, p, q)
        spread = _relative_spread(vals)
        if spread <= tol:
            norm = _normalization(p, q)
            return HFit(p, q, norm * float(np.mean(vals)), norm, spread)
    return None


def evaluate_H(chain: InvariantChain, p: int, q: int):
    """(normalized λ, relative spread) of ω1^p ω2^q over the chain's grid."""
    _check_degenerate(chain)
    vals = _combination(chain.values[0], chain.values[1], p, q)
    norm = _normalization(p, q)
    return norm * float(np.mean(vals)), _relative_spread(vals)


# -- map recovery -------------------------------------------------------------------

def _monotone_samples(e: Expr, ode: Ode2, n: int = 257):
    f = lambdify(e, ode.var)
    xs, vs = [], []
    for x in uniform_grid(*ode.interval, n=n, trim=0.0):
        try:
            vs.append(f(x))
            xs.append(float(x))
        except DomainError:
            continue
    xs, vs = np.array(xs), np.array(vs)
    d = np.diff(vs)
    if len(d) == 0 or np.all(d == 0):
        raise AmbiguousMapError("omega13 of the source equation is constant; the map is not determined")
    if not (np.all(d > 0) or np.all(d < 0)):
        raise AmbiguousMapError("omega13 of the source equation is not monotone on its interval")
    return xs, vs


def recover_map(ode1: Ode2, ode2: Ode2, grid=None) -> PointMap:
    """x(t) solving ω13 of ode1 at x = ω13 of ode2 at t, for t on ode2's grid."""
    w1, w2 = omega13(ode1), omega13(ode2)
    xs, vs = _monotone_samples(w1, ode1)
    f1 = lambdify(w1, ode1.var)
    d1 = lambdify(differentiate(w1, ode1.var), ode1.var)
    f2 = lambdify(w2, ode2.var)
    increasing = vs[-1] > vs[0]
    vmin, vmax = (vs[0], vs[-1]) if increasing else (vs[-1], vs[0])

    def solve(t):
        target = f2(t)
        if not (vmin <= target <= vmax):
            raise PartialOverlapError(f"omega13 value {target:.6g} at {t:.6g} is outside the source range")
        k = np.searchsorted(vs if increasing else -vs, target if increasing else -target)
        k = min(max(int(k), 1), len(xs) - 1)
        lo, hi = xs[k - 1], xs[k]
        return bracketed_newton(lambda x: f1(x) - target, d1, lo, hi, ftol=0.0)

    tg = ode2.default_grid() if grid is None else np.asarray(grid, dtype=float)
    ok_t, vals = [], []
    for t in tg:
        try:
            vals.append(solve(float(t)))
            ok_t.append(float(t))
        except PartialOverlapError:
            continue
    if len(ok_t) < len(tg):
        valid = (ok_t[0], ok_t[-1]) if ok_t else None
        raise PartialOverlapError("no bracket for part of the target grid", valid)
    try:
        pmap = PointMap(tg, np.array(vals), None, ode2.var, evaluator=solve)
    except NonMonotoneError as exc:
        raise AmbiguousMapError(str(exc)) from None
    pmap.closed_form = fit_closed_form(tg, pmap.x_values, ode2.var)
    return pmap


# -- degenerate chains ----------------------------------------------------------------

def _affine_map(c: float, d: float, grid, var: str) -> PointMap:
    grid = np.asarray(grid, dtype=float)
    return PointMap(grid, c * grid + d, None, var, evaluator=lambda t: c * t + d)


def _inside(pmap: PointMap, grid, interval, margin: float):
    lo, hi = interval
    return [t for t in grid if lo <= min(pmap(t - margin), pmap(t + margin))
            and max(pmap(t - margin), pmap(t + margin)) <= hi]


def _degenerate_route(ode1: Ode2, ode2: Ode2, verdict: EquivVerdict, transport_tol: float) -> EquivVerdict:
    k1, k2 = classify_integrable(ode1), classify_integrable(ode2)
    verdict.route = "degenerate"
    if k1.tag != k2.tag or k1.tag == "unknown":
        if k1.tag == k2.tag == "unknown":
            verdict.necessary_pass = True
            verdict.warnings.append("degenerate chains outside the integrable catalog; equivalence undecided")
        else:
            verdict.necessary_pass = False
        return verdict
    grid = ode2.default_grid()
    if k1.tag == "constant":
        a, b = float(k1.parameters["k"]), float(k2.parameters["k"])
        verdict.lambda1, verdict.lambda2 = a, b
        if (a > 0) != (b > 0) or (a == 0) != (b == 0):
            verdict.necessary_pass = False
            return verdict
        c = 1.0 if a == 0 else math.sqrt(b / a)
        d = 0.5 * sum(ode1.interval) - c * 0.5 * sum(ode2.interval)
    else:
        mu1, mu2 = float(k1.parameters["mu"]), float(k2.parameters["mu"])
        verdict.lambda1, verdict.lambda2 = mu1, mu2
        if abs(mu1 - mu2) > LAMBDA_TOL * max(1.0, abs(mu1)):
            verdict.necessary_pass = False
            return verdict
        x01, x02 = float(k1.parameters["x0"]), float(k2.parameters["x0"])
        s1 = [abs(v - x01) for v in ode1.interval]
        s2 = [abs(v - x02) for v in ode2.interval]
        side1 = 1 if 0.5 * sum(ode1.interval) > x01 else -1
        side2 = 1 if 0.5 * sum(ode2.interval) > x02 else -1
        c = side1 * side2 * math.sqrt(s1[0] * s1[1] / (s2[0] * s2[1]))
        d = x01 - c * x02
    verdict.necessary_pass = True
    pmap = _affine_map(c, d, grid, ode2.var)
    good = _inside(pmap, grid, ode1.interval, 3e-3)
    if len(good) < 8:
        verdict.warnings.append("affine map leaves the source interval; not verified")
        verdict.map = pmap
        return verdict
    if len(good) < len(grid):
        verdict.warnings.append(f"transport checked on [{good[0]:.6g}, {good[-1]:.6g}] only")
    pmap = _affine_map(c, d, good, ode2.var)
    pmap.closed_form = fit_closed_form(pmap.t_grid, pmap.x_values, ode2.var)
    verdict.map = pmap
    verdict.gauges = (k1.gauge, k2.gauge)
    res = transport_check(ode1, ode2, pmap, gauge=k2.gauge.inverse(), source_gauge=k1.gauge)
    verdict.transport_residual = res
    verdict.verified = bool(res < transport_tol)
    return verdict


def _is_degenerate(chain: InvariantChain) -> bool:
    try:
        _check_degenerate(chain)
    except DegenerateChainError:
        return True
    return False


def equivalence_test(ode1: Ode2, ode2: Ode2, depth: int = 2, lambda_tol: float = LAMBDA_TOL,
                     constancy_tol: float = CONSTANCY_TOL,
                     transport_tol: float = TRANSPORT_TOL) -> EquivVerdict:
    """Compare two equations through their X1 invariant chains."""
    verdict = EquivVerdict(False, None, None, None)
    if is_zero(ode1.b) or is_zero(ode2.b):
        return _degenerate_route(ode1, ode2, verdict, transport_tol)
    c1, c2 = chain_x1(ode1, max(depth, 1)), chain_x1(ode2, max(depth, 1))
    deg1, deg2 = _is_degenerate(c1), _is_degenerate(c2)
    if deg1 and deg2:
        return _degenerate_route(ode1, ode2, verdict, transport_tol)
    if deg1 != deg2:
        verdict.warnings.append("only one of the chains is degenerate")
        return verdict
    h1 = find_monomial_H(c1, tol=constancy_tol)
    h2 = find_monomial_H(c2, tol=constancy_tol)
    if (h1 is None) != (h2 is None):
        verdict.warnings.append("a constant invariant combination exists for only one equation")
        return verdict
    if h1 is None:
        verdict.warnings.append("no monomial invariant combination found; chains compared by map recovery only")
        verdict.necessary_pass = True
    else:
        lam2, spread2 = evaluate_H(c2, h1.p, h1.q)
        verdict.H_exponents = h1.exponents
        verdict.normalization = h1.normalization
        verdict.lambda1, verdict.lambda2 = h1.lam, lam2
        same = spread2 <= constancy_tol and abs(lam2 - h1.lam) <= lambda_tol * max(abs(h1.lam), 1e-300)
        verdict.necessary_pass = bool(same and h2.exponents == h1.exponents)
    if not verdict.necessary_pass:
        return verdict
    try:
        pmap = recover_map(ode1, ode2)
    except PartialOverlapError as exc:
        verdict.warnings.append(str(exc))
        if exc.valid is None:
            return verdict
        margin = 3e-3
        sub = [t for t in ode2.default_grid() if exc.valid[0] + margin <= t <= exc.valid[1] - margin]
        if len(sub) < 8:
            return verdict
        try:
            pmap = recover_map(ode1, ode2, grid=sub)
        except (AmbiguousMapError, PartialOverlapError) as exc2:
            verdict.warnings.append(str(exc2))
            return verdict
        verdict.warnings.append(f"map recovered and checked on [{sub[0]:.6g}, {sub[-1]:.6g}] only")
    except AmbiguousMapError as exc:
        verdict.warnings.append(str(exc))
        return verdict
    verdict.map = pmap
    try:
        res = transport_check(ode1, ode2, pmap)
    except DomainError as exc:
        verdict.warnings.append(str(exc))
        return verdict
    verdict.transport_residual = res
    verdict.verified = bool(res < transport_tol)
    return verdict


# -- normal form with a fixed xi -------------------------------------------------------

def fixed_xi_check(V1, V2, xi, grid, var: str = "x", tol: float = CONSTANCY_TOL) -> bool:
    """False when a constant invariant combination of V1 fails for V2.

    True only means this particular xi does not separate the potentials.
    """
    V1, V2, xi = as_expr(V1), as_expr(V2), as_expr(xi)
    grid = np.asarray(grid, dtype=float)
    ch1, ch2 = nf_chain(V1, xi, grid, var), nf_chain(V2, xi, grid, var)
    w1, w2 = ch1.values[0], ch2.values[0]
    if _relative_spread(w1) <= tol or _abs_spread(w1) <= tol:
        lam = float(np.mean(w1))
        if not (_relative_spread(w2) <= tol or _abs_spread(w2) <= tol):
            return False
        return abs(float(np.mean(w2)) - lam) <= LAMBDA_TOL * max(1.0, abs(lam))
    try:
        h = find_monomial_H(ch1, tol=tol)
    except DegenerateChainError:
        return True
    if h is None:
        return True
    try:
        lam2, spread2 = evaluate_H(ch2, h.p, h.q)
    except DegenerateChainError:
        return False
    return spread2 <= tol and abs(lam2 - h.lam) <= LAMBDA_TOL * max(1.0, abs(h.lam))


def _abs_spread(vals) -> float:
    vals = np.asarray(vals, dtype=float)
    return float(vals.max() - vals.min())
