"""Minimal arithmetic grammar for user-supplied scalar fields.

Expressions use ``+ - * / ^``, parentheses, numbers, the functions
``sin cos sinh cosh sqrt exp log tan tanh``, coordinate names and named
constants.  They compile to callables that accept plain arrays or jets, so
derivatives of parsed expressions are exact.
"""

from __future__ import annotations

import ast
import math
import operator

import numpy as np

from . import jets as J

FUNCTIONS = {
    "sin": J.sin, "cos": J.cos, "sinh": J.sinh, "cosh": J.cosh, "sqrt": J.sqrt,
    "exp": J.exp, "log": J.log, "tan": J.tan, "tanh": J.tanh,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


class ExpressionError(ValueError):
    pass


def _pow(a, b):
    # integer exponents stay exact at a zero base
    if isinstance(b, float) and b.is_integer():
        b = int(b)
    if not J.is_jet(a) and not J.is_jet(b):
        return np.power(np.asarray(a, dtype=float), b)
    return a ** b


def compile_expression(text: str, variables, constants=None):
    """Compile ``text`` into ``f(*values)`` over the named ``variables``."""
    consts = dict(CONSTANTS)
    consts.update(constants or {})
    names = list(variables)
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = node.value
            return lambda env: v
        if isinstance(node, ast.Name):
            if node.id in names:
                key = node.id
                return lambda env: env[key]
            if node.id in consts:
                v = float(consts[node.id])
                return lambda env: v
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -inner(env)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            lhs, rhs = build(node.left), build(node.right)
            if isinstance(node.op, ast.Pow):
                return lambda env: _pow(lhs(env), rhs(env))
            op = _BINOPS[type(node.op)]
            return lambda env: op(lhs(env), rhs(env))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in FUNCTIONS and len(node.args) == 1 and not node.keywords):
            fn = FUNCTIONS[node.func.id]
            arg = build(node.args[0])
            return lambda env: fn(arg(env))
        raise ExpressionError(f"unsupported syntax in {text!r}: {ast.dump(node)[:40]}")

    body = build(tree)

    def evaluate(*values):
        if len(values) != len(names):
            raise ExpressionError(f"expected {len(names)} arguments, got {len(values)}")
        result = body(dict(zip(names, values)))
        if values and (J.is_jet(values[0]) and not J.is_jet(result)
                       or np.shape(J.value(result)) != np.shape(J.value(values[0]))):
            # constants broadcast to the shape of the inputs
            result = J.full_like(values[0], 0.0) + result
        return result

    evaluate.source = text
    return evaluate
