"""Recursive-descent parser for ``.hsl`` sources."""
from __future__ import annotations

import re
from fractions import Fraction

from .ast import (
    And, Arith, Assert, Assign, Assume, Block, BoolConst, Call, ChooseInt, Cmp, Const,
    CountedLoop, Evolve, Havoc, If, InputDecl, Neg, Not, Or, Pow, Print, Program, Var,
    VarDecl, is_bool,
)
from .errors import HslSyntaxError, RecursionCycleError, UndeclaredError

KEYWORDS = {
    "input", "int", "real", "assume", "assert", "havoc", "choose", "evolve", "if",
    "else", "for", "in", "call", "print", "main", "func", "pow", "rat", "true", "false",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+|//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<op>\.\.|&&|\|\||<=|>=|==|[-+*/<>=!(){};,:'])
""", re.VERBOSE)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise HslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            if kind == "ident" and m.group() in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return HslSyntaxError(msg, tok.line, tok.col)

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "str"

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    # top level
    def program(self) -> Program:
        inputs, globals_, functions = [], [], []
        while not self.at("main", "kw"):
            t = self.tok
            if self.accept("input"):
                inputs.append(self.input_decl())
            elif t.text in ("int", "real") and t.kind == "kw":
                self.i += 1
                globals_.extend(self.var_decl(t.text))
            elif self.accept("func"):
                name = self.ident()
                functions.append((name, self.block()))
            else:
                raise self.error(f"expected declaration or 'main', found {t.text or 'end of input'!r}")
        self.expect("main")
        main = self.block()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after main block")
        return Program(tuple(inputs), tuple(globals_), tuple(functions), main)

    def input_decl(self):
        sort = self.sort()
        name = self.ident()
        assume = None
        if self.accept("assume"):
            self.expect("(")
            assume = self.bool_expr()
            self.expect(")")
        self.expect(";")
        return InputDecl(name, sort, assume)

    def sort(self):
        t = self.tok
        if t.kind == "kw" and t.text in ("int", "real"):
            self.i += 1
            return t.text
        raise self.error(f"expected 'int' or 'real', found {t.text!r}")

    def var_decl(self, sort):
        decls = []
        while True:
            name = self.ident()
            init = None
            if self.accept("="):
                init = self.arith_expr()
            decls.append(VarDecl(name, sort, init))
            if not self.accept(","):
                break
        self.expect(";")
        return decls

    def block(self) -> tuple:
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            body.append(self.stmt())
        self.expect("}")
        return tuple(body)

    def stmt(self):
        t = self.tok
        if t.kind == "ident":
            var = self.ident()
            self.expect("=")
            if self.accept("choose"):
                self.expect("(")
                bound = self.arith_expr()
                self.expect(")")
                self.expect(";")
                return ChooseInt(var, bound)
            e = self.arith_expr()
            self.expect(";")
            return Assign(var, e)
        if t.kind == "op" and t.text == "{":
            return Block(self.block())
        if t.kind != "kw":
            raise self.error(f"expected statement, found {t.text or 'end of input'!r}")
        self.i += 1
        kw = t.text
        if kw == "havoc":
            var = self.ident()
            self.expect(";")
            return Havoc(var)
        if kw == "assume":
            self.expect("(")
            c = self.bool_expr()
            self.expect(")")
            self.expect(";")
            return Assume(c)
        if kw == "assert":
            self.expect("(")
            c = self.bool_expr()
            self.expect(")")
            label = default_label(c)
            if self.accept(":"):
                if self.tok.kind != "str":
                    raise self.error("expected string label")
                label = _unquote(self.tok.text)
                self.i += 1
            self.expect(";")
            return Assert(c, label)
        if kw == "if":
            self.expect("(")
            c = self.bool_expr()
            self.expect(")")
            then = self.block()
            orelse = ()
            if self.accept("else"):
                if self.at("if", "kw"):
                    orelse = (self.stmt(),)
                else:
                    orelse = self.block()
            return If(c, then, orelse)
        if kw == "for":
            var = self.ident()
            self.expect("in")
            zero = self.tok
            if zero.kind != "num" or Fraction(zero.text) != 0:
                raise self.error("loop range must start at 0")
            self.i += 1
            self.expect("..")
            count = self.arith_expr()
            return CountedLoop(var, count, self.block())
        if kw == "evolve":
            self.expect("{")
            odes = []
            while not self.at("}"):
                v = self.ident()
                self.expect("'")
                self.expect("=")
                odes.append((v, self.arith_expr()))
                self.expect(";")
            self.expect("}")
            if not odes:
                raise self.error("evolve block needs at least one equation")
            if not (self.tok.kind == "ident" and self.tok.text == "dt"):
                raise self.error("expected 'dt' after evolve block")
            self.i += 1
            dt = self.ident()
            if not (self.tok.kind == "ident" and self.tok.text == "steps"):
                raise self.error("expected 'steps'")
            self.i += 1
            steps = self.arith_expr()
            self.expect(";")
            return Evolve(tuple(odes), dt, steps)
        if kw == "call":
            name = self.ident()
            self.expect(";")
            return Call(name)
        if kw == "print":
            self.expect(";")
            return Print()
        raise self.error(f"unexpected keyword {kw!r}", t)

    # expressions, precedence climbing: || < && < ! < cmp < +- < */ < unary
    def bool_expr(self):
        start = self.tok
        e = self.or_expr()
        if not is_bool(e):
            raise self.error("expected a boolean expression", start)
        return e

    def arith_expr(self):
        start = self.tok
        e = self.or_expr()
        if is_bool(e):
            raise self.error("expected an arithmetic expression", start)
        return e

    def or_expr(self):
        left = self.and_expr()
        while self.at("||"):
            t = self.tok
            self.i += 1
            right = self.and_expr()
            self._need_bool(left, right, t)
            left = Or(left, right)
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at("&&"):
            t = self.tok
            self.i += 1
            right = self.not_expr()
            self._need_bool(left, right, t)
            left = And(left, right)
        return left

    def not_expr(self):
        if self.at("!"):
            t = self.tok
            self.i += 1
            arg = self.not_expr()
            self._need_bool(arg, arg, t)
            return Not(arg)
        return self.cmp_expr()

    def cmp_expr(self):
        left = self.add_expr()
        if self.tok.kind == "op" and self.tok.text in ("<", "<=", "==", ">=", ">"):
            t = self.tok
            self.i += 1
            right = self.add_expr()
            self._need_arith(left, right, t)
            return Cmp(t.text, left, right)
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self.tok
            self.i += 1
            right = self.mul_expr()
            self._need_arith(left, right, t)
            left = Arith(t.text, left, right)
        return left

    def mul_expr(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            t = self.tok
            self.i += 1
            right = self.unary()
            self._need_arith(left, right, t)
            left = Arith(t.text, left, right)
        return left

    def unary(self):
        if self.at("-"):
            t = self.tok
            self.i += 1
            if self.tok.kind == "num":
                # a minus sign directly on a numeral is part of the literal
                return Const(-self.number())
            arg = self.unary()
            self._need_arith(arg, arg, t)
            return Neg(arg)
        return self.primary()

    def number(self) -> Fraction:
        t = self.tok
        self.i += 1
        return Fraction(t.text)

    def primary(self):
        t = self.tok
        if t.kind == "num":
            return Const(self.number())
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return BoolConst(t.text == "true")
        if self.accept("pow"):
            self.expect("(")
            base = self.arith_expr()
            self.expect(",")
            et = self.tok
            if et.kind != "num" or "." in et.text or "e" in et.text.lower():
                raise self.error("pow exponent must be a nonnegative integer literal")
            self.i += 1
            self.expect(")")
            return Pow(base, int(et.text))
        if self.accept("rat"):
            self.expect("(")
            neg = self.accept("-")
            num = self._int_literal()
            self.expect(",")
            den = self._int_literal()
            self.expect(")")
            if den == 0:
                raise self.error("zero denominator in rat literal", t)
            return Const(Fraction(-num if neg else num, den))
        if self.accept("("):
            e = self.or_expr()
            self.expect(")")
            return e
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def _int_literal(self):
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self.error("expected integer literal")
        self.i += 1
        return int(t.text)

    def _need_arith(self, a, b, tok):
        if is_bool(a) or is_bool(b):
            raise self.error(f"operator {tok.text!r} needs arithmetic operands", tok)

    def _need_bool(self, a, b, tok):
        if not (is_bool(a) and is_bool(b)):
            raise self.error(f"operator {tok.text!r} needs boolean operands", tok)


def default_label(cond) -> str:
    from .printer import print_expr

    return print_expr(cond).replace(" ", "")


def parse_expr(text: str):
    p = Parser(text)
    e = p.or_expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return e


def parse_program(text: str, check: bool = True) -> Program:
    """Parse HSL source text.  With ``check`` the result is also validated."""
    prog = Parser(text).program()
    if check:
        check_program(prog)
    return prog


# static checks ---------------------------------------------------------------

def check_program(prog: Program) -> None:
    """Raise if a variable is undeclared or the call graph is cyclic."""
    from .ast import free_vars

    names = [d.name for d in prog.inputs] + [d.name for d in prog.globals]
    seen = set()
    for n in names:
        if n in seen:
            raise UndeclaredError(n, f"variable {n!r} declared twice")
        seen.add(n)
    input_names = set()
    for d in prog.inputs:
        input_names.add(d.name)
        if d.assume is not None:
            for v in sorted(free_vars(d.assume) - input_names):
                raise UndeclaredError(v, f"input assumption refers to {v!r}, which is not a previously declared input")
    declared = set(names)
    for d in prog.globals:
        if d.init is not None:
            for v in sorted(free_vars(d.init) - input_names):
                raise UndeclaredError(v, f"initializer of {d.name!r} refers to {v!r}; only inputs are allowed")
    funcs = dict(prog.functions)
    if len(funcs) != len(prog.functions):
        raise HslSyntaxError("duplicate function name", 0, 0)
    for name, body in prog.functions:
        _check_block(body, set(declared), funcs)
    _check_block(prog.main, set(declared), funcs)
    _check_calls(prog)


def _use(e, scope):
    from .ast import free_vars

    for v in sorted(free_vars(e)):
        if v not in scope:
            raise UndeclaredError(v)


def _check_block(block, scope, funcs):
    for s in block:
        if isinstance(s, Assign):
            _use(s.expr, scope)
            if s.var not in scope:
                raise UndeclaredError(s.var)
        elif isinstance(s, Havoc):
            if s.var not in scope:
                raise UndeclaredError(s.var)
        elif isinstance(s, (Assume, Assert)):
            _use(s.cond, scope)
        elif isinstance(s, If):
            _use(s.cond, scope)
            _check_block(s.then, set(scope), funcs)
            _check_block(s.orelse, set(scope), funcs)
        elif isinstance(s, Block):
            _check_block(s.body, scope, funcs)
        elif isinstance(s, ChooseInt):
            _use(s.bound, scope)
            scope.add(s.var)
        elif isinstance(s, CountedLoop):
            _use(s.count, scope)
            _check_block(s.body, scope | {s.var}, funcs)
        elif isinstance(s, Evolve):
            if s.dt not in scope:
                raise UndeclaredError(s.dt)
            _use(s.steps, scope)
            for v, rhs in s.odes:
                if v not in scope:
                    raise UndeclaredError(v)
                _use(rhs, scope)
        elif isinstance(s, Call):
            if s.name not in funcs:
                raise UndeclaredError(s.name, f"call to undefined function {s.name!r}")


def call_graph(prog: Program) -> dict[str, list[str]]:
    from .ast import iter_stmts

    return {
        name: [s.name for s in iter_stmts(body) if isinstance(s, Call)]
        for name, body in prog.functions
    }


def _check_calls(prog: Program) -> None:
    graph = call_graph(prog)
    state = {}

    def visit(n, path):
        state[n] = 1
        for m in graph.get(n, ()):
            if state.get(m) == 1:
                cycle = path[path.index(m):] + [m]
                raise RecursionCycleError(cycle)
            if m not in state:
                visit(m, path + [m])
        state[n] = 2

    for n in graph:
        if n not in state:
            visit(n, [n])
