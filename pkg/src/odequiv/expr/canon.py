"""Canonical simplification.

An expression is normalized into a finite sum of ``coefficient * monomial``
terms. A monomial is a product of *atoms* raised to rational exponents, times
at most one ``exp(...)`` factor whose argument is itself a normalized sum:

* variables, ``ln``/``sin``/``cos``/``abs`` applications (argument normalized),
  and positive primes (for radicals such as ``2^(1/2)``) are simple atoms;
* a multi-term sum raised to a negative or fractional power is kept as a
  composite atom, scaled so that its leading coefficient is 1;
* positive integer powers of sums are expanded.

Exponents of the same base are collected, exact constants fold, and a final
pass cancels composite denominators that divide the numerator exactly
(univariate long division in one variable, over a monomial leading
coefficient). Fractional powers are only distributed where that is valid for
every real value of the factor, so ``(x^2)^(1/2)`` is left alone.

Polys are plain ``dict[Mono, Fraction]`` and are never mutated once built.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .nodes import ZERO, Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var, to_str

MAX_EXPAND = 24
_DIVISION_STEPS = 512


@dataclass(frozen=True)
class Mono:
    powers: tuple = ()          # ((atom Expr, Fraction exponent), ...) sorted by atom key
    exparg: tuple | None = None  # frozen normalized sum inside a single exp factor


UNIT = Mono()


def _akey(atom: Expr) -> str:
    return to_str(atom)


def _freeze(poly: dict) -> tuple:
    return tuple(sorted(poly.items(), key=lambda kv: _mono_sort_key(kv[0])))


@lru_cache(maxsize=65536)
def _mono_str(m: Mono) -> str:
    parts = [f"{_akey(a)}^{e}" for a, e in m.powers]
    if m.exparg is not None:
        parts.append("exp[" + ",".join(f"{c}*{_mono_str(mm)}" for mm, c in m.exparg) + "]")
    return "*".join(parts)


@lru_cache(maxsize=65536)
def _mono_sort_key(m: Mono):
    degree = sum((e for _, e in m.powers), Fraction(0))
    constant = not m.powers and m.exparg is None
    return (constant, -degree, _mono_str(m))


def _atom_kind(atom: Expr) -> str:
    if isinstance(atom, Var):
        return "var"
    if isinstance(atom, Func):
        return "func"
    if isinstance(atom, Const) and atom.value > 1 and atom.value.denominator == 1:
        return "prime"
    if isinstance(atom, Sum):
        return "sum"
    if isinstance(atom, Power) and (not isinstance(atom.exponent, Const) or atom.base == ZERO):
        return "gpow"
    return "mono"


# -- poly arithmetic ----------------------------------------------------------

def _padd(*polys) -> dict:
    out: dict = {}
    for p in polys:
        for m, c in p.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _pscale(p: dict, c: Fraction) -> dict:
    if c == 0:
        return {}
    return {m: v * c for m, v in p.items()}


def _pconst(c) -> dict:
    c = Fraction(c)
    return {UNIT: c} if c else {}


def _const_value(p: dict):
    if not p:
        return Fraction(0)
    if len(p) == 1 and UNIT in p:
        return p[UNIT]
    return None


def _pmul(p: dict, q: dict) -> dict:
    if not p or not q:
        return {}
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            prod = _mono_mul(m1, m2)
            for m, c in prod.items():
                v = out.get(m, 0) + c * c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
    return out


@lru_cache(maxsize=65536)
def _mono_mul_cached(m1: Mono, m2: Mono) -> tuple:
    powers = dict(m1.powers)
    for a, e in m2.powers:
        powers[a] = powers.get(a, 0) + e
    if m1.exparg is None:
        exparg = dict(m2.exparg) if m2.exparg else {}
    elif m2.exparg is None:
        exparg = dict(m1.exparg)
    else:
        exparg = _padd(dict(m1.exparg), dict(m2.exparg))
    return _freeze(_normalize(Fraction(1), powers, exparg))


def _mono_mul(m1: Mono, m2: Mono) -> dict:
    if m1 == UNIT:
        return {m2: Fraction(1)}
    if m2 == UNIT:
        return {m1: Fraction(1)}
    return dict(_mono_mul_cached(m1, m2))


def _ppow_int(p: dict, n: int) -> dict:
    result = _pconst(1)
    base = p
    while n:
        if n & 1:
            result = _pmul(result, base)
        n >>= 1
        if n:
            base = _pmul(base, base)
    return result


# -- radicals -------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _factorize(n: int) -> tuple:
    if n > 10**12:
        return ((n, 1),)
    out = []
    d = 2
    while d * d <= n:
        k = 0
        while n % d == 0:
            n //= d
            k += 1
        if k:
            out.append((d, k))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _rational_power(c: Fraction, r: Fraction):
    """``c^r`` for ``c > 0`` as (rational coefficient, {prime atom: exponent})."""
    if r.denominator == 1:
        return c ** r.numerator, {}
    atoms: dict = {}
    for n, sign in ((c.numerator, 1), (c.denominator, -1)):
        if n == 1:
            continue
        for prime, k in _factorize(n):
            atom = Const(prime)
            atoms[atom] = atoms.get(atom, 0) + sign * k * r
    return Fraction(1), atoms


# -- monomial normalization -------------------------------------------------------

def _normalize(coeff: Fraction, powers: dict, exparg: dict) -> dict:
    """Build a poly from one raw monomial, folding radicals and expanding sums."""
    clean = {}
    pending = []
    for atom, e in powers.items():
        if e == 0:
            continue
        kind = _atom_kind(atom)
        if kind == "prime":
            whole = e.numerator // e.denominator
            if whole:
                coeff *= Fraction(atom.value) ** whole
                e -= whole
            if e == 0:
                continue
        elif kind in ("sum", "mono") and e.denominator == 1 and not (kind == "sum" and not 0 < e <= MAX_EXPAND):
            pending.append((atom, e))
            continue
        clean[atom] = e
    m = Mono(tuple(sorted(clean.items(), key=lambda kv: _akey(kv[0]))), _freeze(exparg) if exparg else None)
    result = {m: coeff} if coeff else {}
    for atom, e in pending:
        result = _pmul(result, _ppow(_to_poly(atom), e))
    return result


# -- powers -----------------------------------------------------------------------

def _allowed(atom: Expr, e: Fraction, r: Fraction) -> bool:
    if r.denominator == 1:
        return True
    kind = _atom_kind(atom)
    if kind == "prime" or (kind == "func" and atom.name == "abs"):
        return True
    return e.numerator % 2 == 1


def _ppow_mono(m: Mono, c: Fraction, r: Fraction) -> dict:
    if r.denominator == 1:
        powers = {a: e * r for a, e in m.powers}
        exparg = _pscale(dict(m.exparg), r) if m.exparg else {}
        return _normalize(c ** r.numerator, powers, exparg)
    if c < 0:
        base = _from_poly({m: c})
        return _normalize(Fraction(1), {base: r}, {})
    coeff, powers = _rational_power(c, r)
    bad = {}
    for a, e in m.powers:
        if _allowed(a, e, r):
            powers[a] = powers.get(a, 0) + e * r
        else:
            bad[a] = e
    if bad:
        base = _from_poly({Mono(tuple(sorted(bad.items(), key=lambda kv: _akey(kv[0])))): Fraction(1)})
        powers[base] = powers.get(base, 0) + r
    exparg = _pscale(dict(m.exparg), r) if m.exparg else {}
    return _normalize(coeff, powers, exparg)


def _content(p: dict, r: Fraction):
    """Split a multi-term poly as ``coeff * mono * primitive`` for composite atoms."""
    terms = sorted(p.items(), key=lambda kv: _mono_sort_key(kv[0]))
    lead = terms[0][1]
    if r.denominator != 1:
        if lead > 0:
            return lead, UNIT
        return Fraction(1), UNIT
    common = None
    for m, _ in terms:
        d = dict(m.powers)
        if common is None:
            common = d
        else:
            common = {a: min(e, d[a]) for a, e in common.items() if a in d}
    exps = {m.exparg for m, _ in terms}
    exparg = exps.pop() if len(exps) == 1 else None
    return lead, Mono(tuple(sorted(common.items(), key=lambda kv: _akey(kv[0]))), exparg)


def _mono_inverse(m: Mono) -> Mono:
    return Mono(tuple((a, -e) for a, e in m.powers),
                _freeze(_pscale(dict(m.exparg), Fraction(-1))) if m.exparg else None)


def _ppow(p: dict, r) -> dict:
    r = Fraction(r)
    if r == 0:
        return _pconst(1)
    if not p:
        if r > 0:
            return {}
        return {Mono(((Power(ZERO, Const(r)), Fraction(1)),)): Fraction(1)}
    if len(p) == 1:
        (m, c), = p.items()
        return _ppow_mono(m, c, r)
    if r.denominator == 1 and 0 < r <= MAX_EXPAND:
        return _ppow_int(p, r.numerator)
    lead, content = _content(p, r)
    if lead != 1 or content != UNIT:
        inv = _mono_inverse(content)
        prim = {}
        for m, c in p.items():
            for mm, cc in _mono_mul(m, inv).items():
                prim[mm] = prim.get(mm, 0) + cc * c / lead
        prim = {m: c for m, c in prim.items() if c}
        head = _ppow_mono(content, lead, r)
    else:
        prim = p
        head = _pconst(1)
    if len(prim) == 1:
        return _pmul(head, _ppow(prim, r))
    atom = _from_poly(prim)
    return _pmul(head, _normalize(Fraction(1), {atom: r}, {}))


# -- expression -> poly -----------------------------------------------------------

def _to_poly(e: Expr) -> dict:
    return _to_poly_cached(e)


@lru_cache(maxsize=65536)
def _to_poly_cached(e: Expr) -> dict:
    if isinstance(e, Const):
        return _pconst(e.value)
    if isinstance(e, Var):
        return {Mono(((e, Fraction(1)),)): Fraction(1)}
    if isinstance(e, Sum):
        return _padd(*(_to_poly(t) for t in e.terms))
    if isinstance(e, Neg):
        return _pscale(_to_poly(e.arg), Fraction(-1))
    if isinstance(e, Product):
        acc = _pconst(1)
        for f in e.factors:
            acc = _pmul(acc, _to_poly(f))
            if not acc:
                break
        return acc
    if isinstance(e, Quotient):
        num = _to_poly(e.num)
        if not num:
            return {}
        return _pmul(num, _ppow(_to_poly(e.den), -1))
    if isinstance(e, Power):
        expo = _canonical(e.exponent)
        r = _const_value(expo)
        base = _to_poly(e.base)
        if r is not None:
            return _ppow(base, r)
        atom = Power(_from_poly(_cancel(base)), _from_poly(expo))
        return {Mono(((atom, Fraction(1)),)): Fraction(1)}
    if isinstance(e, Func):
        return _func_poly(e.name, _canonical(e.arg))
    raise TypeError(f"not an expression: {e!r}")


def _single_atom(m: Mono):
    if m.exparg is None and len(m.powers) == 1 and m.powers[0][1] == 1:
        return m.powers[0][0]
    return None


def _func_poly(name: str, arg: dict) -> dict:
    value = _const_value(arg)
    if name == "sqrt":
        return _ppow(arg, Fraction(1, 2))
    if name == "exp":
        if value == 0:
            return _pconst(1)
        rest = {}
        result = _pconst(1)
        for m, c in arg.items():
            atom = _single_atom(m)
            if atom is not None and isinstance(atom, Func) and atom.name == "ln":
                result = _pmul(result, _ppow(_to_poly(atom.arg), c))
            else:
                rest[m] = c
        if rest:
            result = _pmul(result, {Mono((), _freeze(rest)): Fraction(1)})
        return result
    if name == "ln":
        if value == 1:
            return {}
        if len(arg) == 1:
            (m, c), = arg.items()
            if c == 1 and not m.powers and m.exparg is not None:
                return dict(m.exparg)
    if name == "abs":
        if value is not None:
            return _pconst(abs(value))
        if len(arg) == 1:
            (m, c), = arg.items()
            keep, inner = {}, {}
            for a, e in m.powers:
                kind = _atom_kind(a)
                if kind == "prime" or (kind == "func" and a.name == "abs"):
                    keep[a] = e
                else:
                    inner[a] = e
            if not inner:
                return _normalize(abs(c), keep, dict(m.exparg) if m.exparg else {})
            inner_mono = Mono(tuple(sorted(inner.items(), key=lambda kv: _akey(kv[0]))))
            atom = _single_atom(inner_mono)
            if atom is not None and isinstance(atom, Func) and atom.name == "abs":
                absatom = atom
            else:
                absatom = Func("abs", _from_poly({inner_mono: Fraction(1)}))
            keep[absatom] = keep.get(absatom, 0) + 1
            return _normalize(abs(c), keep, dict(m.exparg) if m.exparg else {})
    if name == "sin" and value == 0:
        return {}
    if name == "cos" and value == 0:
        return _pconst(1)
    atom = Func(name, _from_poly(arg))
    return {Mono(((atom, Fraction(1)),)): Fraction(1)}


# -- poly -> expression -----------------------------------------------------------

def _power_expr(atom: Expr, e: Fraction) -> Expr:
    if e == 1:
        return atom
    return Power(atom, Const(e))


def _term_expr(m: Mono, c: Fraction) -> Expr:
    num, den = [], []
    neg_sums = [(a, e) for a, e in m.powers if _atom_kind(a) == "sum" and e < 0]
    sum_in_den = neg_sums[0][0] if len(neg_sums) == 1 and neg_sums[0][1] == -1 else None
    for a, e in m.powers:
        kind = _atom_kind(a)
        if kind in ("sum", "mono"):
            if a == sum_in_den:
                den.append(a)
            else:
                num.append(_power_expr(a, e))
        elif e > 0:
            num.append(_power_expr(a, e))
        else:
            den.append(_power_expr(a, -e))
    if m.exparg is not None:
        num.append(Func("exp", _from_poly(dict(m.exparg))))
    p, q = c.numerator, c.denominator
    if p != 1 or not num:
        num.insert(0, Const(p))
    if q != 1:
        den.insert(0, Const(q))
    top = num[0] if len(num) == 1 else Product(tuple(num))
    if not den:
        return top
    bottom = den[0] if len(den) == 1 else Product(tuple(den))
    return Quotient(top, bottom)


def _negate_leading(t: Expr) -> Expr:
    if isinstance(t, Const):
        return Const(-t.value)
    if isinstance(t, Product) and isinstance(t.factors[0], Const):
        return Product((Const(-t.factors[0].value),) + t.factors[1:])
    if isinstance(t, Quotient):
        return Quotient(_negate_leading(t.num), t.den)
    return Neg(t)


def _from_poly(p: dict) -> Expr:
    if not p:
        return ZERO
    terms = sorted(p.items(), key=lambda kv: _mono_sort_key(kv[0]))
    out = []
    for i, (m, c) in enumerate(terms):
        t = _term_expr(m, abs(c))
        if c < 0:
            t = _negate_leading(t) if i == 0 else Neg(t)
        out.append(t)
    return out[0] if len(out) == 1 else Sum(tuple(out))


# -- cancellation of composite denominators ---------------------------------------

def _split_by_degree(p: dict, v: Var):
    out: dict = {}
    for m, c in p.items():
        d = 0
        rest = []
        for a, e in m.powers:
            if a == v:
                if e.denominator != 1 or e < 0:
                    return None
                d = e.numerator
            else:
                rest.append((a, e))
        key = Mono(tuple(rest), m.exparg)
        bucket = out.setdefault(d, {})
        bucket[key] = bucket.get(key, 0) + c
    return out


def _simple_mono(m: Mono) -> bool:
    return all(_atom_kind(a) in ("var", "func", "prime", "gpow") for a, _ in m.powers)


def _divide(num: dict, den: dict):
    """Exact quotient ``num / den`` or None."""
    if not num:
        return {}
    candidates = sorted({a for m in den for a, _ in m.powers if isinstance(a, Var)}, key=_akey)
    for v in candidates:
        sd = _split_by_degree(den, v)
        if sd is None:
            continue
        exps = [dict(m.powers).get(v, Fraction(0)) for m in num]
        if any(e.denominator != 1 for e in exps):
            continue
        low = min(exps)
        shifted = num
        if low < 0:
            shifted = _pmul(num, {Mono(((v, -low),)): Fraction(1)})
        nd = _split_by_degree(shifted, v)
        if nd is None:
            continue
        deg = max(sd)
        if deg == 0 or len(sd[deg]) != 1:
            continue
        (lm, lc), = sd[deg].items()
        if not _simple_mono(lm):
            continue
        inv = _ppow_mono(lm, lc, Fraction(-1))
        rem = {d: dict(b) for d, b in nd.items() if b}
        quot: dict = {}
        for _ in range(_DIVISION_STEPS):
            rem = {d: b for d, b in rem.items() if b}
            if not rem or max(rem) < deg:
                break
            top = max(rem)
            qt = _pmul(rem[top], inv)
            shift = top - deg
            vpow = {Mono(((v, Fraction(shift)),)): Fraction(1)} if shift else _pconst(1)
            quot = _padd(quot, _pmul(qt, vpow))
            for d, sp in sd.items():
                rem[d + shift] = _padd(rem.get(d + shift, {}), _pscale(_pmul(qt, sp), Fraction(-1)))
            if rem.get(top):
                break
        else:
            continue
        rem = {d: b for d, b in rem.items() if b}
        if not rem:
            if low < 0:
                quot = _pmul(quot, {Mono(((v, low),)): Fraction(1)})
            return quot
    return None


def _cancel(p: dict) -> dict:
    for _ in range(16):
        atoms = sorted({a for m in p for a, e in m.powers
                        if _atom_kind(a) == "sum" and e < 0 and e.denominator == 1}, key=_akey)
        changed = False
        for s in atoms:
            exps = [dict(m.powers).get(s, Fraction(0)) for m in p]
            if any(e.denominator != 1 for e in exps):
                continue
            k = -min(exps)
            if k <= 0:
                continue
            spoly = _to_poly(s)
            lifted = {}
            for m, c in p.items():
                d = dict(m.powers)
                e = d.pop(s, Fraction(0))
                rest = {Mono(tuple(sorted(d.items(), key=lambda kv: _akey(kv[0]))), m.exparg): c}
                lifted = _padd(lifted, _pmul(rest, _ppow_int(spoly, int(e + k))))
            j = 0
            while j < k:
                q = _divide(lifted, spoly)
                if q is None:
                    break
                lifted = q
                j += 1
            if j or len(lifted) < len(p):
                left = k - j
                if left:
                    lifted = _pmul(lifted, _normalize(Fraction(1), {s: Fraction(-left)}, {}))
                p = lifted
                changed = True
                break
        if not changed:
            return _cancel_joint(p)
    return p


def _cancel_joint(p: dict) -> dict:
    """Clear all composite denominators at once; keep the result only if it fully cancels."""
    order = {}
    for m in p:
        for a, e in m.powers:
            if _atom_kind(a) == "sum" and e < 0 and e.denominator == 1:
                order[a] = max(order.get(a, 0), int(-e))
    if len(order) < 2 or len(order) > 4 or sum(order.values()) > 8:
        return p
    lifted: dict = {}
    for m, c in p.items():
        d = dict(m.powers)
        extra = []
        for s, k in order.items():
            e = d.pop(s, Fraction(0))
            if e.denominator != 1:
                return p
            extra.append((s, int(e + k)))
        term = {Mono(tuple(sorted(d.items(), key=lambda kv: _akey(kv[0]))), m.exparg): c}
        for s, n in extra:
            if n:
                term = _pmul(term, _ppow_int(_to_poly(s), n))
        lifted = _padd(lifted, term)
    for s, k in order.items():
        for _ in range(k):
            q = _divide(lifted, _to_poly(s))
            if q is None:
                return p
            lifted = q
    return lifted


@lru_cache(maxsize=65536)
def _canonical_cached(e: Expr) -> tuple:
    return _freeze(_cancel(_to_poly(e)))


def _canonical(e: Expr) -> dict:
    return dict(_canonical_cached(e))


def simplify(e: Expr) -> Expr:
    """Return the canonical form of ``e`` (numerically equal where both are defined)."""
    return _simplify_cached(e)


@lru_cache(maxsize=65536)
def _simplify_cached(e: Expr) -> Expr:
    return _from_poly(_canonical(e))


def is_zero(e: Expr) -> bool:
    """True when ``e`` simplifies to the exact constant 0."""
    return not _canonical(e)


def constant_value(e: Expr):
    """The exact rational value of ``e`` if it simplifies to a constant, else None."""
    return _const_value(_canonical(e))
