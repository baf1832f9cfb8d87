"""Small arithmetic-expression language for user nonlinearities and weights.

Grammar (Python-like, evaluated elementwise on numpy arrays)::

    expr   := expr (+|-|*|/) expr | expr (^|**) expr | -expr | (expr)
            | number | name | func(expr, ...)
    cond   := expr (<|<=|>|>=|==|!=) expr | cond and cond | cond or cond | not cond
    func   := log | exp | abs | sqrt | sin | cos | tan | arctan | tanh | sign
            | min(a, b) | max(a, b) | piecewise(cond, then, else)

Names are the caller-declared variables (``t`` for nonlinearities,
``x0, x1, ..., r`` for weights, ``s`` for isotropic operator densities)
plus the constants ``pi`` and ``e``.
"""
from __future__ import annotations

import ast
import operator
from typing import Callable, Iterable

import numpy as np

from .errors import DomainError

__all__ = ["compile_expression", "ExpressionError"]


class ExpressionError(DomainError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}
_CMPOPS = {
    ast.Lt: np.less,
    ast.LtE: np.less_equal,
    ast.Gt: np.greater,
    ast.GtE: np.greater_equal,
    ast.Eq: np.equal,
    ast.NotEq: np.not_equal,
}
_FUNCS: dict[str, Callable] = {
    "log": np.log,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "arctan": np.arctan,
    "atan": np.arctan,
    "tanh": np.tanh,
    "sign": np.sign,
    "min": np.minimum,
    "max": np.maximum,
    "piecewise": np.where,
}
_CONSTS = {"pi": np.pi, "e": np.e}


def _compile(node: ast.AST, names: frozenset[str]) -> Callable[[dict], object]:
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        if node.id in names:
            key = node.id
            return lambda env: env[key]
        if node.id in _CONSTS:
            value = _CONSTS[node.id]
            return lambda env: value
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, names), _compile(node.right, names)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp):
        inner = _compile(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        if isinstance(node.op, ast.UAdd):
            return inner
        if isinstance(node.op, ast.Not):
            return lambda env: np.logical_not(inner(env))
    if isinstance(node, ast.BoolOp):
        parts = [_compile(v, names) for v in node.values]
        combine = np.logical_and if isinstance(node.op, ast.And) else np.logical_or

        def boolop(env):
            out = parts[0](env)
            for part in parts[1:]:
                out = combine(out, part(env))
            return out

        return boolop
    if isinstance(node, ast.Compare):
        terms = [_compile(node.left, names)] + [_compile(c, names) for c in node.comparators]
        ops = [_CMPOPS[type(o)] for o in node.ops if type(o) in _CMPOPS]
        if len(ops) != len(node.ops):
            raise ExpressionError("unsupported comparison operator")

        def compare(env):
            vals = [t(env) for t in terms]
            out = ops[0](vals[0], vals[1])
            for i, op in enumerate(ops[1:], start=1):
                out = np.logical_and(out, op(vals[i], vals[i + 1]))
            return out

        return compare
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        fname = node.func.id
        if fname not in _FUNCS or node.keywords:
            raise ExpressionError(f"unknown function {fname!r}")
        args = [_compile(a, names) for a in node.args]
        arity = 3 if fname == "piecewise" else 2 if fname in ("min", "max") else 1
        if len(args) != arity:
            raise ExpressionError(f"{fname} takes {arity} argument(s)")
        fn = _FUNCS[fname]
        return lambda env: fn(*(a(env) for a in args))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expression(text: str, variables: Iterable[str] = ("t",)) -> Callable:
    """Compile ``text`` to a vectorized callable taking the variables positionally."""
    variables = tuple(variables)
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    body = _compile(tree, frozenset(variables))

    def fn(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments")
        env = {name: np.asarray(a, dtype=float) for name, a in zip(variables, args)}
        with np.errstate(divide="ignore", invalid="ignore"):
            out = body(env)
        shape = np.broadcast_shapes(*(np.shape(a) for a in env.values())) if env else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    fn.expression = text
    return fn
