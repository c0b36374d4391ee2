"""Small analytic expression grammar for initial data and forcing profiles.

Allowed: the coordinates x, y, the constant pi, numeric literals, +, -, *,
/, ** with numeric exponents, and sin/cos. Everything else is rejected so a
config file can never smuggle in arbitrary code.
"""

from __future__ import annotations

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from .errors import ConfigError

_X, _Y = sp.symbols("x y")
_LOCALS = {"x": _X, "y": _Y, "pi": sp.pi, "sin": sp.sin, "cos": sp.cos}
# parse_expr needs the literal wrappers; everything else stays out of reach
_GLOBALS = {"Integer": sp.Integer, "Float": sp.Float,
            "Rational": sp.Rational, "Symbol": sp.Symbol}
_ALLOWED_FUNCS = (sp.sin, sp.cos)


def _check_node(node) -> None:
    if node.is_Number or node is sp.pi:
        return
    if node is _X or node is _Y:
        return
    if isinstance(node, (sp.Add, sp.Mul, sp.Pow)):
        for arg in node.args:
            _check_node(arg)
        return
    if isinstance(node, sp.Function) and isinstance(node, _ALLOWED_FUNCS):
        _check_node(node.args[0])
        return
    raise ConfigError(f"expression element not in grammar: {node!r}")


def parse_expression(text: str):
    """Parse an expression in x, y into a vectorized callable f(X, Y)."""
    try:
        expr = parse_expr(text, local_dict=_LOCALS, global_dict=_GLOBALS,
                          evaluate=True)
    except Exception as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from exc
    _check_node(expr)
    fn = sp.lambdify((_X, _Y), expr, modules="numpy")

    def evaluate(xx, yy):
        out = fn(xx, yy)
        return np.broadcast_to(np.asarray(out, dtype=float),
                               np.broadcast_shapes(np.shape(xx),
                                                   np.shape(yy))).copy()

    return evaluate
