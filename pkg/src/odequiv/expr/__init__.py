"""Minimal computer-algebra kernel: parse, print, differentiate, simplify, evaluate."""

from .calculus import add, differentiate, div, free_vars, func, mul, neg, power, substitute
from .canon import constant_value, is_zero, simplify
from .nodes import ONE, ZERO, Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var, as_expr, children, to_str
from .numeric import equal_numeric, evaluate, evaluate_grid, lambdify
from .parser import parse

__all__ = [
    "Const", "Expr", "Func", "Neg", "ONE", "Power", "Product", "Quotient", "Sum", "Var", "ZERO",
    "add", "as_expr", "children", "constant_value", "differentiate", "div", "equal_numeric", "evaluate",
    "evaluate_grid", "free_vars", "func", "is_zero", "lambdify", "mul", "neg", "parse", "power",
    "simplify", "substitute", "to_str",
]
