"""Abstract syntax of the hybrid specification language (HSL).

Expressions come in two sorts, arithmetic and boolean; ``Cmp`` is the only
node that turns arithmetic operands into a boolean.  ``Symbol`` leaves never
appear in parsed programs: they are introduced by the symbolic executor and
share every other node type with concrete expressions.

All nodes are frozen dataclasses, so programs can be compared structurally
and shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", "<=", "==", ">=", ">")


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Symbol:
    """A symbolic unknown.  ``origin`` is ``input``, ``havoc`` or ``uninit``."""

    name: str
    origin: str = "havoc"
    sort: str = "real"


@dataclass(frozen=True)
class Neg:
    arg: Expr


@dataclass(frozen=True)
class Arith:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow:
    base: Expr
    exp: int

    def __post_init__(self):
        if not isinstance(self.exp, int) or self.exp < 0:
            raise ValueError(f"pow exponent must be a nonnegative integer, got {self.exp!r}")


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not:
    arg: Expr


Expr = Union[Const, Var, Symbol, Neg, Arith, Pow, BoolConst, Cmp, And, Or, Not]

BOOL_NODES = (BoolConst, Cmp, And, Or, Not)


def is_bool(e: Expr) -> bool:
    return isinstance(e, BOOL_NODES)


def const(x) -> Const:
    return Const(Fraction(x))


# Statements -----------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Havoc:
    var: str


@dataclass(frozen=True)
class Assume:
    cond: Expr


@dataclass(frozen=True)
class Assert:
    cond: Expr
    label: str


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class Block:
    body: tuple


@dataclass(frozen=True)
class ChooseInt:
    """``var`` receives a nondeterministic integer in ``[0, bound)``."""

    var: str
    bound: Expr


@dataclass(frozen=True)
class CountedLoop:
    var: str
    count: Expr
    body: tuple


@dataclass(frozen=True)
class Evolve:
    """ODE block ``v' = rhs`` for each pair, advanced by ``dt`` at most ``steps - 1`` times."""

    odes: tuple  # of (var, rhs) pairs
    dt: str
    steps: Expr


@dataclass(frozen=True)
class Call:
    name: str


@dataclass(frozen=True)
class Print:
    pass


Stmt = Union[Assign, Havoc, Assume, Assert, If, Block, ChooseInt, CountedLoop, Evolve, Call, Print]


@dataclass(frozen=True)
class InputDecl:
    name: str
    sort: str  # "int" | "real"
    assume: Expr | None = None


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: str
    init: Expr | None = None


@dataclass(frozen=True)
class Program:
    inputs: tuple = ()
    globals: tuple = ()
    functions: tuple = ()  # of (name, body) pairs, in declaration order
    main: tuple = ()

    def function(self, name: str) -> tuple:
        for fname, body in self.functions:
            if fname == name:
                return body
        raise KeyError(name)

    @property
    def function_names(self) -> list[str]:
        return [name for name, _ in self.functions]

    def sort_of(self, name: str) -> str | None:
        for d in self.inputs:
            if d.name == name:
                return d.sort
        for d in self.globals:
            if d.name == name:
                return d.sort
        return None


def walk_expr(e: Expr):
    """Yield every node of ``e`` once, following shared subterms only once."""
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        if isinstance(node, (Neg, Not)):
            stack.append(node.arg)
        elif isinstance(node, (Arith, Cmp, And, Or)):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Pow):
            stack.append(node.base)


def free_vars(e: Expr) -> set[str]:
    return {n.name for n in walk_expr(e) if isinstance(n, Var)}


def symbols_of(e: Expr) -> dict[str, Symbol]:
    return {n.name: n for n in walk_expr(e) if isinstance(n, Symbol)}


def conjuncts(e: Expr) -> list[Expr]:
    """Flatten nested ``And`` nodes."""
    out = []
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def iter_stmts(block):
    """Yield every statement of ``block`` recursively, in source order."""
    for s in block:
        yield s
        if isinstance(s, If):
            yield from iter_stmts(s.then)
            yield from iter_stmts(s.orelse)
        elif isinstance(s, Block):
            yield from iter_stmts(s.body)
        elif isinstance(s, CountedLoop):
            yield from iter_stmts(s.body)
