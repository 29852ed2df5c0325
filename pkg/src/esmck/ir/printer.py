"""Pretty printer for HSL.  Output always reparses to an equal AST."""
from __future__ import annotations

from fractions import Fraction

from .ast import (
    And, Arith, Assert, Assign, Assume, Block, BoolConst, Call, ChooseInt, Cmp, Const,
    CountedLoop, Evolve, Havoc, If, Neg, Not, Or, Pow, Print, Program, Symbol, Var,
)

_PREC = {"||": 1, "&&": 2, "!": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7}
_ATOM = 8


def format_rational(q: Fraction) -> str:
    """Literal text for ``q``: integer, exact decimal, or ``rat(p, q)``."""
    q = Fraction(q)
    sign = "-" if q < 0 else ""
    a = abs(q)
    if a.denominator == 1:
        return f"{sign}{a.numerator}"
    d, twos, fives = a.denominator, 0, 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"rat({sign}{a.numerator}, {a.denominator})"
    k = max(twos, fives)
    digits = str(a.numerator * 10**k // a.denominator).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def _prec(e) -> int:
    if isinstance(e, Arith):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Cmp):
        return _PREC["cmp"]
    if isinstance(e, Not):
        return _PREC["!"]
    if isinstance(e, And):
        return _PREC["&&"]
    if isinstance(e, Or):
        return _PREC["||"]
    return _ATOM


def _wrap(e, ok: bool) -> str:
    s = print_expr(e)
    return s if ok else f"({s})"


def print_expr(e) -> str:
    if isinstance(e, Const):
        return format_rational(e.value)
    if isinstance(e, (Var, Symbol)):
        return e.name
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, Pow):
        return f"pow({print_expr(e.base)}, {e.exp})"
    if isinstance(e, Neg):
        # "-2" would read back as a negative literal, so constants get parens
        return "-" + _wrap(e.arg, _prec(e.arg) >= _PREC["neg"] and not isinstance(e.arg, Const))
    if isinstance(e, Not):
        return "!" + _wrap(e.arg, _prec(e.arg) >= _PREC["!"])
    if isinstance(e, (Arith, And, Or, Cmp)):
        p = _prec(e)
        op = e.op if isinstance(e, (Arith, Cmp)) else ("&&" if isinstance(e, And) else "||")
        left = _wrap(e.left, _prec(e.left) >= p if not isinstance(e, Cmp) else _prec(e.left) > p)
        right = _wrap(e.right, _prec(e.right) > p)
        return f"{left} {op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_block(block, indent: int = 0) -> list[str]:
    lines = []
    for s in block:
        lines.extend(print_stmt(s, indent))
    return lines


def print_stmt(s, indent: int = 0) -> list[str]:
    from .parser import default_label

    pad = "  " * indent
    if isinstance(s, Assign):
        return [f"{pad}{s.var} = {print_expr(s.expr)};"]
    if isinstance(s, Havoc):
        return [f"{pad}havoc {s.var};"]
    if isinstance(s, Assume):
        return [f"{pad}assume ({print_expr(s.cond)});"]
    if isinstance(s, Assert):
        label = "" if s.label == default_label(s.cond) else f" : {_quote(s.label)}"
        return [f"{pad}assert ({print_expr(s.cond)}){label};"]
    if isinstance(s, If):
        lines = [f"{pad}if ({print_expr(s.cond)}) {{"]
        lines += print_block(s.then, indent + 1)
        if not s.orelse:
            lines.append(f"{pad}}}")
        elif len(s.orelse) == 1 and isinstance(s.orelse[0], If):
            nested = print_stmt(s.orelse[0], indent)
            lines.append(f"{pad}}} else {nested[0].lstrip()}")
            lines += nested[1:]
        else:
            lines.append(f"{pad}}} else {{")
            lines += print_block(s.orelse, indent + 1)
            lines.append(f"{pad}}}")
        return lines
    if isinstance(s, Block):
        return [f"{pad}{{", *print_block(s.body, indent + 1), f"{pad}}}"]
    if isinstance(s, ChooseInt):
        return [f"{pad}{s.var} = choose({print_expr(s.bound)});"]
    if isinstance(s, CountedLoop):
        return [
            f"{pad}for {s.var} in 0..{print_expr(s.count)} {{",
            *print_block(s.body, indent + 1),
            f"{pad}}}",
        ]
    if isinstance(s, Evolve):
        odes = " ".join(f"{v}' = {print_expr(rhs)};" for v, rhs in s.odes)
        return [f"{pad}evolve {{ {odes} }} dt {s.dt} steps {print_expr(s.steps)};"]
    if isinstance(s, Call):
        return [f"{pad}call {s.name};"]
    if isinstance(s, Print):
        return [f"{pad}print;"]
    raise TypeError(f"not a statement: {s!r}")


def print_program(p: Program) -> str:
    lines = []
    for d in p.inputs:
        tail = f" assume ({print_expr(d.assume)})" if d.assume is not None else ""
        lines.append(f"input {d.sort} {d.name}{tail};")
    if p.inputs:
        lines.append("")
    for d in p.globals:
        init = f" = {print_expr(d.init)}" if d.init is not None else ""
        lines.append(f"{d.sort} {d.name}{init};")
    if p.globals:
        lines.append("")
    for name, body in p.functions:
        lines.append(f"func {name} {{")
        lines += print_block(body, 1)
        lines.append("}")
        lines.append("")
    lines.append("main {")
    lines += print_block(p.main, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"
