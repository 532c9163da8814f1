"""Command-line front end: ``odequiv <command> [options]``.

Every command prints a summary (6 significant digits) or, with ``--json``,
a document ``{command, inputs, result, warnings}`` whose floats carry 17
significant digits.  Exit status: 0 ok, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from fractions import Fraction

import numpy as np

from .equivalence import equivalence_test
from .errors import DomainError, OdequivError, ParseError, UsageError
from .expr import ZERO, Expr, free_vars, parse, simplify, to_str
from .expr.numeric import lambdify
from .invariants import TRIVIAL_INVARIANTS, Ode2, chain_x1, chain_x2, omega23
from .numerics import uniform_grid
from .prolongation import (
    Generator, annihilation_check, certify_zero, determining_conditions, determining_residual,
)
from .transform import (
    GaugeFactor, PointMap, classify_integrable, gauge, reduce_to_normal_form, solve_closed_form, transport_check,
    x1_flow_map,
)

FLAGS = {"--json", "-h", "--help"}


# -- output -------------------------------------------------------------------

def _num(x: float, digits: int) -> str:
    if not math.isfinite(x):
        return "null"
    s = f"{x:.{digits}g}"
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def to_json(obj, digits: int = 17) -> str:
    """Deterministic JSON; floats with ``digits`` significant digits."""
    import json

    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        return _num(float(obj), digits)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Expr):
        return json.dumps(to_str(obj))
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v, digits)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v, digits) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _text_lines(obj, prefix="") -> list[str]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(_text_lines(v, f"{prefix}{k}." if isinstance(v, dict) else f"{prefix}{k}"))
        return out
    if isinstance(obj, (list, tuple, np.ndarray)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return [f"{prefix}: [" + ", ".join(_scalar_text(v) for v in obj) + "]"]
        out = []
        for i, v in enumerate(obj):
            out.extend(_text_lines(v, f"{prefix}[{i}]."))
        return out
    return [f"{prefix.rstrip('.')}: {_scalar_text(obj)}"]


def _scalar_text(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower() if v is not None else "null"
    if isinstance(v, (float, np.floating, Fraction)):
        return _num(float(v), 6)
    if isinstance(v, Expr):
        return to_str(v)
    return str(v)


# -- argument helpers -------------------------------------------------------------

def _merge_values(argv):
    """Glue option values that start with '-' (``--i -1:2``) onto their option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and tok not in FLAGS and i + 1 < len(argv) \
                and argv[i + 1].startswith("-") and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _interval(text: str, name: str):
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise UsageError(f"{name} must look like lo:hi, got {text!r}") from None
    if not lo < hi:
        raise UsageError(f"{name} must satisfy lo < hi, got {text!r}")
    return lo, hi


def _expr(text: str, name: str) -> Expr:
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"cannot parse {name} = {text!r}: {exc}") from None


def _infer_var(explicit, *exprs) -> str:
    if explicit:
        return explicit
    names = set()
    for e in exprs:
        names |= free_vars(e)
    if len(names) > 1:
        raise UsageError(f"coefficients use several variables {sorted(names)}; pass --var")
    return names.pop() if names else "x"


def _ode(a_text, b_text, var, interval_text, suffix=""):
    a, b = _expr(a_text, "a" + suffix), _expr(b_text, "b" + suffix)
    var = _infer_var(var, a, b)
    return Ode2(a, b, var, _interval(interval_text, "i" + suffix))


def _grid(ode: Ode2, n: int):
    if n < 8:
        raise UsageError("grid must have at least 8 points")
    return ode.default_grid(n)


def _positive(value: float, name: str):
    if not value > 0:
        raise UsageError(f"{name} must be positive")
    return value


def _map_json(pmap: PointMap | None):
    if pmap is None:
        return None
    out = {"t_grid": list(pmap.t_grid), "x_values": list(pmap.x_values)}
    if pmap.closed_form is not None:
        out["closed_form"] = to_str(pmap.closed_form)
    return out


# -- commands -------------------------------------------------------------------

def cmd_invariants(args, notes):
    ode = _ode(args.a, args.b, args.var, args.i)
    grid = _grid(ode, args.grid)
    if args.depth < 0:
        raise UsageError("depth must be non-negative")
    if args.group == "X1":
        chain = chain_x1(ode, args.depth, grid)
        notes.append("omega14 keeps the sign produced by applying (1/sqrt|b|) d/dx; "
                     "it flips under orientation-reversing maps")
    else:
        chain = chain_x2(ode, args.depth, grid)
    entries = [{"expr": to_str(e), "values": list(v)} for e, v in zip(chain.exprs, chain.values)]
    first = "omega13" if args.group == "X1" else "omega23"
    return {"group": args.group, first: to_str(chain.exprs[0]), "grid": list(grid),
            "chain": entries, "trivial": dict(TRIVIAL_INVARIANTS)}


def cmd_equiv(args, notes):
    ode1 = _ode(args.a1, args.b1, args.var1, args.i1, "1")
    ode2 = _ode(args.a2, args.b2, args.var2, args.i2, "2")
    v = equivalence_test(ode1, ode2, depth=args.depth,
                         lambda_tol=_positive(args.lambda_tol, "lambda-tol"),
                         constancy_tol=_positive(args.constancy_tol, "constancy-tol"),
                         transport_tol=_positive(args.transport_tol, "transport-tol"))
    notes.extend(v.warnings)
    H = None
    if v.H_exponents is not None:
        H = {"p": v.H_exponents[0], "q": v.H_exponents[1], "normalization": v.normalization}
    return {"necessary_pass": v.necessary_pass, "H": H, "lambda1": v.lambda1, "lambda2": v.lambda2,
            "map": _map_json(v.map), "verified": v.verified,
            "transport_residual": v.transport_residual, "route": v.route}


def cmd_reduce(args, notes):
    ode = _ode(args.a, args.b, args.var, args.i)
    V, g = reduce_to_normal_form(ode)
    w23 = omega23(ode)
    identity = simplify(V + w23 / 4) == ZERO
    out = {"V": to_str(V), "gauge_exponent": to_str(g.exponent) if g.exponent is not None else None,
           "omega23": to_str(w23), "V_equals_minus_omega23_over_4": identity}
    if g.exponent is None:
        out["gauge_integrand"] = to_str(g.integrand)
        out["gauge_base_point"] = g.x0
        notes.append("integral of a/2 is outside the closed-form catalog; gauge kept as a quadrature")
    return out


def _params(klass):
    return {k: float(v) for k, v in klass.parameters.items()}


def cmd_classify(args, notes):
    ode = _ode(args.a, args.b, args.var, args.i)
    klass = classify_integrable(ode, _grid(ode, args.grid))
    params = _params(klass)
    out = {"class": klass.tag}
    out.update(params)
    out["parameters"] = params
    out["V"] = to_str(klass.V)
    return out


def cmd_solve(args, notes):
    ode = _ode(args.a, args.b, args.var, args.i)
    grid = _grid(ode, args.grid)
    sol = solve_closed_form(ode, grid)
    if sol is None:
        notes.append("equation is outside the integrable catalog")
        return {"class": "unknown", "basis": [], "wronskian_min": None, "pullback": {}}
    if sol.tables is None:
        basis = [to_str(sol.y1), to_str(sol.y2)]
    else:
        basis = [{"grid": list(grid), "values": list(t)} for t in sol.tables]
    pull = {}
    if sol.gauge_exponent is not None and sol.gauge_exponent != ZERO:
        pull["gauge_exponent"] = to_str(sol.gauge_exponent)
    return {"class": sol.klass.tag, "parameters": _params(sol.klass), "basis": basis,
            "wronskian_min": sol.wronskian_min, "pullback": pull}


def cmd_flow(args, notes):
    xi = _expr(args.xi, "xi")
    var = _infer_var(args.var, xi)
    interval = _interval(args.i, "i")
    pts = uniform_grid(*interval, n=args.grid)
    pmap = x1_flow_map(xi, args.eps, interval, var, pts)
    out = _map_json(pmap)
    out = {"points": out["t_grid"], "values": out["x_values"], "closed_form": out.get("closed_form"),
           "valid_interval": [float(pmap.t_grid[0]), float(pmap.t_grid[-1])]}
    return out


def cmd_gauge(args, notes):
    ode = _ode(args.a, args.b, args.var, args.i)
    A = _expr(args.A, "A")
    new, g = gauge(ode, A, Fraction(repr(args.eps)))
    return {"a": to_str(new.a), "b": to_str(new.b), "exponent": to_str(g.exponent),
            "omega23_before": to_str(omega23(ode)), "omega23_after": to_str(omega23(new))}


def cmd_verify(args, notes):
    ode1 = _ode(args.a1, args.b1, args.var1, args.i1, "1")
    ode2 = _ode(args.a2, args.b2, args.var2, args.i2, "2")
    m = _expr(args.map, "map")
    if free_vars(m) - {ode2.var}:
        raise UsageError(f"map must depend on '{ode2.var}' only")
    grid = _grid(ode2, args.grid)
    f = lambdify(m, ode2.var)
    pmap = PointMap(grid, [f(t) for t in grid], m, ode2.var)
    g = None
    if args.gauge:
        g = GaugeFactor(_expr(args.gauge, "gauge"), ode2.var)
    res = transport_check(ode1, ode2, pmap, gauge=g, step=_positive(args.step, "step"))
    return {"transport_residual": res, "passed": bool(res < args.transport_tol)}


def cmd_check_generator(args, notes):
    xi = _expr(args.xi, "xi") if args.xi else ZERO
    A = _expr(args.A, "A") if args.A else ZERO
    kind = args.kind
    gen = {"X1": Generator.x1, "X2": Generator.x2, "NF": Generator.normal_form}.get(kind)
    g = Generator.general(xi, A) if kind == "general" else gen(A if kind == "X2" else xi)
    out = {"kind": kind}
    if kind == "general":
        res = determining_residual(xi, A)
        ok, conf = certify_zero(res)
        out["determining_residual"] = to_str(res)
    else:
        conds = determining_conditions(g) if kind != "NF" else {}
        out["conditions"] = {k: to_str(v) for k, v in conds.items()}
        checks = [certify_zero(v) for v in conds.values()] or [(True, "symbolic")]
        ok = all(c[0] for c in checks)
        conf = "symbolic" if all(c[1] == "symbolic" for c in checks) else ("numeric-only" if ok else "nonzero")
    out["zero"], out["confidence"] = ok, conf
    if args.omega:
        omega = _expr(args.omega, "omega")
        r = annihilation_check(g, omega)
        z, c = certify_zero(r)
        out["annihilation"] = {"omega": to_str(omega), "residual": to_str(r), "zero": z, "confidence": c}
    return out


COMMANDS = {
    "invariants": cmd_invariants, "equiv": cmd_equiv, "reduce": cmd_reduce, "classify": cmd_classify,
    "solve": cmd_solve, "flow": cmd_flow, "gauge": cmd_gauge, "verify": cmd_verify,
    "check-generator": cmd_check_generator,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="odequiv", allow_abbrev=False,
                                description="Equivalence analysis for y'' + a(x) y' + b(x) y = 0")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--json", action="store_true", help="emit JSON")
        if grid:
            sp.add_argument("--grid", type=int, default=64, help="grid size (>= 8)")

    def single(sp):
        sp.add_argument("--a", required=True)
        sp.add_argument("--b", required=True)
        sp.add_argument("--var")
        sp.add_argument("--i", required=True, help="interval lo:hi")

    def pair(sp):
        for k in ("1", "2"):
            sp.add_argument(f"--a{k}", required=True)
            sp.add_argument(f"--b{k}", required=True)
            sp.add_argument(f"--var{k}")
            sp.add_argument(f"--i{k}", required=True)

    sp = sub.add_parser("invariants", allow_abbrev=False, help="invariant chain and values")
    single(sp)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--group", choices=("X1", "X2"), default="X1")
    common(sp)

    sp = sub.add_parser("equiv", allow_abbrev=False, help="equivalence test with map recovery")
    pair(sp)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--lambda-tol", type=float, default=1e-6)
    sp.add_argument("--constancy-tol", type=float, default=1e-8)
    sp.add_argument("--transport-tol", type=float, default=1e-6)
    common(sp, grid=False)

    for name, text in (("reduce", "normal form"), ("classify", "integrable class"),
                       ("solve", "closed-form basis")):
        sp = sub.add_parser(name, allow_abbrev=False, help=text)
        single(sp)
        common(sp)

    sp = sub.add_parser("flow", allow_abbrev=False, help="finite flow of xi d/dx")
    sp.add_argument("--xi", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--var")
    sp.add_argument("--i", required=True)
    common(sp)

    sp = sub.add_parser("gauge", allow_abbrev=False, help="gauge transformation y -> y exp(eps A)")
    single(sp)
    sp.add_argument("--A", required=True)
    sp.add_argument("--eps", type=float, default=1.0)
    common(sp, grid=False)

    sp = sub.add_parser("verify", allow_abbrev=False, help="transport a solution through a given map")
    pair(sp)
    sp.add_argument("--map", required=True, help="x as an expression in the second variable")
    sp.add_argument("--gauge", help="exponent of a gauge factor exp(g) on the second equation")
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--transport-tol", type=float, default=1e-6)
    common(sp)

    sp = sub.add_parser("check-generator", allow_abbrev=False, help="certify determining equations")
    sp.add_argument("--kind", choices=("X1", "X2", "NF", "general"), required=True)
    sp.add_argument("--xi")
    sp.add_argument("--A")
    sp.add_argument("--omega", help="jet expression to test for invariance")
    common(sp, grid=False)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    inputs = {k: v for k, v in vars(args).items() if k not in ("json", "command")}
    notes: list[str] = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](args, notes)
        notes.extend(str(w.message) for w in caught)
    except UsageError as exc:
        print(f"odequiv {args.command}: usage error: {exc}", file=stderr)
        return 2
    except (DomainError, OdequivError) as exc:
        print(f"odequiv {args.command}: {exc}", file=stderr)
        return 1
    doc = {"command": args.command, "inputs": inputs, "result": result, "warnings": notes}
    if args.json:
        print(to_json(doc), file=stdout)
    else:
        for line in _text_lines(result):
            print(line, file=stdout)
        for w in notes:
            print(f"warning: {w}", file=stdout)
    return 0


def main():
    sys.exit(run())
