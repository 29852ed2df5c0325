"""Exact concrete semantics: arithmetic over ``Fraction``, no rounding."""
from __future__ import annotations

from fractions import Fraction

from .ast import And, Arith, BoolConst, Cmp, Const, Neg, Not, Or, Pow, Symbol, Var
from .errors import DivisionByZero, EvalError

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def eval_expr(e, env, _memo=None):
    """Evaluate ``e`` with variables (and symbols) looked up by name in ``env``.

    Returns a ``Fraction`` for arithmetic expressions and a ``bool`` for
    boolean ones.  Shared subterms are evaluated once.
    """
    memo = {} if _memo is None else _memo
    key = id(e)
    if key in memo:
        return memo[key][1]
    if isinstance(e, Const):
        v = e.value
    elif isinstance(e, (Var, Symbol)):
        try:
            v = env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}") from None
        if not isinstance(v, bool):
            v = Fraction(v)
    elif isinstance(e, BoolConst):
        v = e.value
    elif isinstance(e, Neg):
        v = -eval_expr(e.arg, env, memo)
    elif isinstance(e, Arith):
        a = eval_expr(e.left, env, memo)
        b = eval_expr(e.right, env, memo)
        if e.op == "+":
            v = a + b
        elif e.op == "-":
            v = a - b
        elif e.op == "*":
            v = a * b
        else:
            if b == 0:
                raise DivisionByZero(e)
            v = a / b
    elif isinstance(e, Pow):
        v = eval_expr(e.base, env, memo) ** e.exp
        v = Fraction(v)
    elif isinstance(e, Cmp):
        v = _CMP[e.op](eval_expr(e.left, env, memo), eval_expr(e.right, env, memo))
    elif isinstance(e, And):
        v = eval_expr(e.left, env, memo) and eval_expr(e.right, env, memo)
    elif isinstance(e, Or):
        v = eval_expr(e.left, env, memo) or eval_expr(e.right, env, memo)
    elif isinstance(e, Not):
        v = not eval_expr(e.arg, env, memo)
    else:
        raise TypeError(f"not an expression: {e!r}")
    # keep e alive so its id cannot be reused while the memo exists
    memo[key] = (e, v)
    return v
