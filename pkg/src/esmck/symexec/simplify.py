"""Local algebraic simplification of symbolic expressions.

The ``mk_*`` constructors fold constants and apply the unit/zero identities
as nodes are built, so values in a symbolic store are always simplified.
``simplify`` rebuilds an arbitrary expression through them.

``e - e`` and ``e / e`` are rewritten to 0 and 1 when both sides are
structurally identical; the latter ignores the point where ``e`` is zero, in
line with the SMT-LIB convention that division by zero is unconstrained.
"""
from __future__ import annotations

from fractions import Fraction

from esmck.ir.ast import And, Arith, BoolConst, Cmp, Const, Neg, Not, Or, Pow, Symbol, Var

ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
TRUE = BoolConst(True)
FALSE = BoolConst(False)

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def _is(e, value) -> bool:
    return isinstance(e, Const) and e.value == value


def mk_neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mk_arith(op, a, b):
    ca, cb = isinstance(a, Const), isinstance(b, Const)
    if op == "+":
        if ca and cb:
            return Const(a.value + b.value)
        if _is(a, 0):
            return b
        if _is(b, 0):
            return a
    elif op == "-":
        if ca and cb:
            return Const(a.value - b.value)
        if _is(b, 0):
            return a
        if _is(a, 0):
            return mk_neg(b)
        if a == b:
            return ZERO
    elif op == "*":
        if ca and cb:
            return Const(a.value * b.value)
        if _is(a, 0) or _is(b, 0):
            return ZERO
        if _is(a, 1):
            return b
        if _is(b, 1):
            return a
        if _is(a, -1):
            return mk_neg(b)
        if _is(b, -1):
            return mk_neg(a)
    elif op == "/":
        if ca and cb and b.value != 0:
            return Const(a.value / b.value)
        if _is(b, 1):
            return a
        if a == b and not _is(b, 0):
            return ONE
    else:
        raise ValueError(op)
    return Arith(op, a, b)


def mk_pow(base, exp: int):
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value**exp)
    return Pow(base, exp)


def mk_cmp(op, a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return BoolConst(_CMP[op](a.value, b.value))
    if a == b:
        return BoolConst(op in ("<=", "==", ">="))
    return Cmp(op, a, b)


def mk_and(a, b):
    if a == FALSE or b == FALSE:
        return FALSE
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return And(a, b)


def mk_or(a, b):
    if a == TRUE or b == TRUE:
        return TRUE
    if a == FALSE:
        return b
    if b == FALSE:
        return a
    return Or(a, b)


def mk_not(a):
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def rebuild(e, leaf, memo=None):
    """Rebuild ``e`` bottom-up through the smart constructors.

    ``leaf`` maps each ``Var``/``Symbol`` leaf to its replacement.  ``memo``
    is keyed by node identity so shared subterms are visited once.
    """
    memo = {} if memo is None else memo
    stack = [(e, False)]
    while stack:
        node, ready = stack.pop()
        key = id(node)
        if key in memo:
            continue
        if isinstance(node, (Var, Symbol)):
            memo[key] = (node, leaf(node))
            continue
        if isinstance(node, (Const, BoolConst)):
            memo[key] = (node, node)
            continue
        kids = _children(node)
        if not ready:
            stack.append((node, True))
            stack.extend((k, False) for k in kids if id(k) not in memo)
            continue
        new = [memo[id(k)][1] for k in kids]
        if isinstance(node, Neg):
            out = mk_neg(*new)
        elif isinstance(node, Arith):
            out = mk_arith(node.op, *new)
        elif isinstance(node, Pow):
            out = mk_pow(new[0], node.exp)
        elif isinstance(node, Cmp):
            out = mk_cmp(node.op, *new)
        elif isinstance(node, And):
            out = mk_and(*new)
        elif isinstance(node, Or):
            out = mk_or(*new)
        elif isinstance(node, Not):
            out = mk_not(*new)
        else:
            raise TypeError(f"not an expression: {node!r}")
        memo[key] = (node, out)
    return memo[id(e)][1]


def _children(node):
    if isinstance(node, (Neg, Not)):
        return (node.arg,)
    if isinstance(node, Pow):
        return (node.base,)
    return (node.left, node.right)


def simplify(e):
    """Return an expression equal to ``e`` with constant subterms folded."""
    return rebuild(e, lambda leaf: leaf)


def substitute(e, mapping):
    """Replace ``Var``/``Symbol`` leaves by name, then simplify."""
    return rebuild(e, lambda leaf: mapping.get(leaf.name, leaf))
