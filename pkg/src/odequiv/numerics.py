"""Scalar numerical kernels: adaptive Simpson quadrature, safeguarded Newton
root finding, and fixed-step classical RK4."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 50) -> float:
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    Recursive Simpson with Richardson correction; the tolerance is split
    between halves as the recursion descends.
    """
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    return _simpson(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4 * flm + fm) / 6
    right = (b - m) * (fm + 4 * frm + fb) / 6
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol or m in (a, b):
        return left + right + delta / 15
    return (_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
            + _simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1))


def bracketed_newton(f: Callable[[float], float], df: Callable[[float], float] | None,
                     lo: float, hi: float, ftol: float = 1e-12, xtol: float = 1e-15,
                     maxiter: int = 200) -> float:
    """Root of ``f`` in [lo, hi]; bisection keeps the bracket, Newton polishes.

    A Newton step is taken only when it lands strictly inside the current
    bracket; otherwise the interval is bisected.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise DomainError(f"root not bracketed in [{lo:.6g}, {hi:.6g}]")
    if flo > 0:
        lo, hi = hi, lo
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        if abs(fx) < ftol and abs(hi - lo) < 1e-6 * max(1.0, abs(x)):
            return x
        if fx < 0:
            lo = x
        elif fx > 0:
            hi = x
        else:
            return x
        step = None
        if df is not None:
            d = df(x)
            if d != 0 and math.isfinite(d):
                step = x - fx / d
        if step is not None and min(lo, hi) < step < max(lo, hi):
            if abs(step - x) <= xtol * max(1.0, abs(x)):
                return step
            x = step
        else:
            x = 0.5 * (lo + hi)
            if abs(hi - lo) <= xtol * max(1.0, abs(x)):
                return x
    return x


def rk4_linear2(a: Callable[[float], float], b: Callable[[float], float],
                xs: Sequence[float], y0: float, yp0: float) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for y'' + a(x) y' + b(x) y = 0 on the nodes ``xs``.

    The step is the local node spacing; ``xs`` may be decreasing to
    integrate backwards.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.empty_like(xs)
    ps = np.empty_like(xs)
    y, p = float(y0), float(yp0)
    ys[0], ps[0] = y, p

    def rhs(x, y, p):
        return p, -a(x) * p - b(x) * y

    for i in range(len(xs) - 1):
        x, h = xs[i], xs[i + 1] - xs[i]
        k1y, k1p = rhs(x, y, p)
        k2y, k2p = rhs(x + h / 2, y + h / 2 * k1y, p + h / 2 * k1p)
        k3y, k3p = rhs(x + h / 2, y + h / 2 * k2y, p + h / 2 * k2p)
        k4y, k4p = rhs(x + h, y + h * k3y, p + h * k3p)
        y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        ys[i + 1], ps[i + 1] = y, p
    return ys, ps


def uniform_grid(lo: float, hi: float, n: int = 64, trim: float = 0.01) -> np.ndarray:
    """``n`` uniform points on [lo, hi] with ``trim`` of the length cut at each end."""
    pad = trim * (hi - lo)
    return np.linspace(lo + pad, hi - pad, n)
