"""SMT-LIB2 emission for obligations and a solver-agnostic external driver."""
from __future__ import annotations

import os
import re
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from fractions import Fraction

from esmck.ir.ast import And, Arith, BoolConst, Cmp, Const, Neg, Not, Or, Pow, Symbol, Var

_CMP = {"<": "<", "<=": "<=", "==": "=", ">=": ">=", ">": ">"}


def smt_real(q: Fraction) -> str:
    q = Fraction(q)
    mag = abs(q)
    if mag.denominator == 1:
        text = f"{mag.numerator}.0"
    else:
        text = f"(/ {mag.numerator}.0 {mag.denominator}.0)"
    return f"(- {text})" if q < 0 else text


def smt_term(e, int_symbols=frozenset(), _memo=None) -> str:
    memo = {} if _memo is None else _memo
    key = id(e)
    if key in memo:
        return memo[key][1]

    def sub(x):
        return smt_term(x, int_symbols, memo)

    if isinstance(e, Const):
        s = smt_real(e.value)
    elif isinstance(e, (Symbol, Var)):
        s = f"(to_real {e.name})" if e.name in int_symbols else e.name
    elif isinstance(e, BoolConst):
        s = "true" if e.value else "false"
    elif isinstance(e, Neg):
        s = f"(- {sub(e.arg)})"
    elif isinstance(e, Arith):
        s = f"({e.op} {sub(e.left)} {sub(e.right)})"
    elif isinstance(e, Pow):
        if e.exp == 0:
            s = "1.0"
        elif e.exp == 1:
            s = sub(e.base)
        else:
            s = "(* " + " ".join([sub(e.base)] * e.exp) + ")"
    elif isinstance(e, Cmp):
        s = f"({_CMP[e.op]} {sub(e.left)} {sub(e.right)})"
    elif isinstance(e, And):
        s = f"(and {sub(e.left)} {sub(e.right)})"
    elif isinstance(e, Or):
        s = f"(or {sub(e.left)} {sub(e.right)})"
    elif isinstance(e, Not):
        s = f"(not {sub(e.arg)})"
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = (e, s)
    return s


def emit_smt(ob) -> str:
    """SMT-LIB2 script whose satisfiability means the obligation's assert can fail."""
    int_symbols = frozenset(s.name for s in ob.symbols.values() if s.sort == "int")
    logic = "QF_NIRA" if int_symbols else "QF_NRA"
    memo: dict = {}
    lines = [
        f"; obligation {ob.index}: {ob.label} at {ob.location}",
        f"; choices {list(ob.choices)}",
        "(set-option :produce-models true)",
        f"(set-logic {logic})",
    ]
    for s in ob.symbols.values():
        lines.append(f"(declare-const {s.name} {'Int' if s.name in int_symbols else 'Real'})")
    for c in ob.path_condition:
        lines.append(f"(assert {smt_term(c, int_symbols, memo)})")
    lines.append(f"(assert {smt_term(ob.negated, int_symbols, memo)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# s-expressions ---------------------------------------------------------------

_SEXP_TOKEN = re.compile(r'\s+|;[^\n]*|(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|";]+)')


class SexpError(ValueError):
    pass


def parse_sexps(text: str) -> list:
    """Parse every s-expression in ``text``; atoms stay strings."""
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            raise SexpError(f"bad character at offset {pos}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise SexpError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(3) or m.group(4) or m.group(5):
            stack[-1].append(m.group(3) or m.group(4) or m.group(5))
    if len(stack) != 1:
        raise SexpError("unbalanced '('")
    return stack[0]


_BUILTIN_HEADS = {
    "set-option", "set-logic", "declare-const", "declare-fun", "assert", "check-sat", "get-model",
    "and", "or", "not", "=", "<", "<=", ">", ">=", "+", "-", "*", "/", "to_real", "ite",
}


def check_wellformed(script: str) -> list[str]:
    """Return problems found in ``script``: balance and declare-before-use."""
    try:
        forms = parse_sexps(script)
    except SexpError as e:
        return [str(e)]
    problems = []
    declared: set[str] = set()

    def uses(x):
        if isinstance(x, list):
            for y in x[1:] if x and isinstance(x[0], str) and x[0] in _BUILTIN_HEADS else x:
                uses(y)
        elif isinstance(x, str):
            if _is_literal(x) or x in _BUILTIN_HEADS or x in ("true", "false"):
                return
            if x not in declared:
                problems.append(f"symbol {x} used before declaration")

    for form in forms:
        if not isinstance(form, list) or not form:
            problems.append(f"top-level atom {form!r}")
            continue
        head = form[0]
        if head == "declare-const":
            declared.add(form[1])
        elif head == "assert":
            uses(form[1])
        elif head not in ("set-option", "set-logic", "check-sat", "get-model"):
            problems.append(f"unexpected command {head}")
    return problems


def _is_literal(atom: str) -> bool:
    return re.fullmatch(r"\d+(\.\d+)?", atom) is not None


class ModelError(ValueError):
    pass


def _value(x) -> Fraction:
    if isinstance(x, str):
        if not _is_literal(x):
            raise ModelError(f"unsupported model value {x!r}")
        return Fraction(x)
    if not x:
        raise ModelError("empty model value")
    head, *args = x
    if head == "-" and len(args) == 1:
        return -_value(args[0])
    if head == "-" and len(args) == 2:
        return _value(args[0]) - _value(args[1])
    if head == "/" and len(args) == 2:
        den = _value(args[1])
        if den == 0:
            raise ModelError("division by zero in model value")
        return _value(args[0]) / den
    if head == "to_real" and len(args) == 1:
        return _value(args[0])
    raise ModelError(f"unsupported model value {x!r}")


def parse_model(text: str) -> dict[str, Fraction]:
    """Extract ``(define-fun s () Real v)`` entries with rational ``v``."""
    model = {}
    forms = parse_sexps(text)

    def visit(x):
        if isinstance(x, list):
            if len(x) == 5 and x[0] == "define-fun" and x[2] == []:
                name = x[1]
                if name.startswith("|") and name.endswith("|"):
                    name = name[1:-1]
                model[name] = _value(x[4])
            else:
                for y in x:
                    visit(y)

    for f in forms:
        visit(f)
    return model


@dataclass(frozen=True)
class SolverResult:
    answer: str  # "sat" | "unsat" | "unknown" | "error"
    model: dict
    detail: str = ""


def run_solver(script: str, command: str, timeout: float | None = 60.0) -> SolverResult:
    """Run an external solver on ``script``.

    ``command`` is a shell-style template; ``{}`` or ``{file}`` is replaced
    by the script path, otherwise the path is appended.
    """
    argv = shlex.split(command)
    if not argv:
        return SolverResult("error", {}, "empty solver command")
    if shutil.which(argv[0]) is None and not os.path.exists(argv[0]):
        return SolverResult("error", {}, "solver unavailable")
    fd, path = tempfile.mkstemp(suffix=".smt2", prefix="esmck-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(script)
        if any(a in ("{}", "{file}") for a in argv):
            argv = [path if a in ("{}", "{file}") else a for a in argv]
        else:
            argv = argv + [path]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError:
            return SolverResult("error", {}, "solver unavailable")
        except subprocess.TimeoutExpired:
            return SolverResult("unknown", {}, f"solver timed out after {timeout}s")
    finally:
        os.unlink(path)
    out = proc.stdout.strip()
    first = out.splitlines()[0].strip() if out else ""
    if first not in ("sat", "unsat", "unknown"):
        msg = (proc.stderr.strip() or out or f"exit status {proc.returncode}").splitlines()[0]
        return SolverResult("error", {}, f"solver failed: {msg}")
    if first != "sat":
        return SolverResult(first, {})
    try:
        model = parse_model(out[len(first):])
    except (ModelError, SexpError) as e:
        return SolverResult("error", {}, f"unparseable model: {e}")
    return SolverResult("sat", model)
