"""Depth-first symbolic execution of lowered HSL programs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

from esmck.ir.ast import (
    Assert, Assign, Assume, Block, BoolConst, Call, ChooseInt, Const, CountedLoop, Evolve,
    Havoc, If, Print, Program, Symbol, Var,
)
from esmck.ir.printer import print_expr

from .simplify import TRUE, mk_and, mk_not, rebuild

log = logging.getLogger(__name__)


class ExplorationError(Exception):
    pass


@dataclass(frozen=True)
class Bounds:
    """Concrete values for integer inputs plus exploration budgets."""

    values: Mapping[str, int] = field(default_factory=dict)
    max_steps: int = 1_000_000
    max_paths: int = 100_000

    def __post_init__(self):
        for k, v in self.values.items():
            if int(v) != v or v < 0:
                raise ValueError(f"bound {k}={v} must be a nonnegative integer")
        if self.max_steps < 0 or self.max_paths < 0:
            raise ValueError("budgets must be nonnegative")

    @classmethod
    def parse(cls, items, **kw) -> "Bounds":
        values = {}
        for item in items:
            name, sep, val = item.partition("=")
            if not sep or not name.strip():
                raise ValueError(f"bad bound {item!r}, expected NAME=VALUE")
            values[name.strip()] = int(val)
        return cls(values, **kw)


def havoc_symbol_name(var: str, k: int) -> str:
    """Name of the ``k``-th (0-based) havoc of ``var`` along a path."""
    return f"{var}.{k}"


def uninit_symbol_name(var: str) -> str:
    return f"{var}.init"


@dataclass
class SymState:
    store: dict
    path_condition: tuple = ()
    trace: list = field(default_factory=list)
    steps_left: int = 0
    symbols: dict = field(default_factory=dict)
    havocs: dict = field(default_factory=dict)
    choices: tuple = ()
    asserts: int = 0

    def fork(self) -> "SymState":
        return SymState(
            dict(self.store), self.path_condition, list(self.trace), self.steps_left,
            dict(self.symbols), dict(self.havocs), self.choices, self.asserts,
        )

    def new_symbol(self, name, origin, sort):
        sym = Symbol(name, origin, sort)
        self.symbols[name] = sym
        return sym

    def value(self, expr, sorts):
        def leaf(v):
            if isinstance(v, Symbol):
                return v
            try:
                return self.store[v.name]
            except KeyError:
                sym = self.new_symbol(uninit_symbol_name(v.name), "uninit", sorts.get(v.name, "real"))
                self.store[v.name] = sym
                self.trace.append(("uninit", v.name, sym.name))
                return sym

        return rebuild(expr, leaf)


@dataclass(frozen=True)
class AssertObligation:
    """``path_condition`` and ``negated`` are jointly satisfiable iff the assert can fail here."""

    index: int
    label: str
    location: str
    path_condition: tuple
    negated: object
    symbols: Mapping[str, Symbol]
    choices: tuple
    assert_index: int

    @property
    def constraints(self) -> tuple:
        return self.path_condition + (self.negated,)

    @property
    def trace_ref(self) -> tuple:
        return (self.choices, self.assert_index)

    def to_text(self) -> str:
        lines = [
            f"obligation {self.index} label {self.label!r} at {self.location}",
            f"  choices {list(self.choices)} assert# {self.assert_index}",
            "  symbols " + " ".join(f"{s.name}:{s.sort}:{s.origin}" for s in self.symbols.values()),
        ]
        lines += [f"  path {print_expr(c)}" for c in self.path_condition]
        lines.append(f"  goal {print_expr(self.negated)}")
        return "\n".join(lines)


@dataclass
class ExplorationSummary:
    paths: int = 0
    obligations: int = 0
    pruned: int = 0
    complete: bool = True
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "paths": self.paths, "obligations": self.obligations, "pruned": self.pruned,
            "complete": self.complete, "reason": self.reason,
        }


@dataclass(frozen=True)
class _LoopStep:
    loop: CountedLoop
    loc: str
    k: int
    n: int


def _push_block(block, loc, cont):
    for idx in range(len(block) - 1, -1, -1):
        cont = ((block[idx], f"{loc}.{idx}"), cont)
    return cont


def _concrete_int(expr, what, loc) -> int:
    if not isinstance(expr, Const):
        raise ExplorationError(
            f"{loc}: {what} {print_expr(expr)} is symbolic; bound the inputs it depends on"
        )
    v = expr.value
    if v.denominator != 1 or v < 0:
        raise ExplorationError(f"{loc}: {what} must be a nonnegative integer, got {v}")
    return int(v)


class Exploration:
    """Iterate to obtain obligations; ``summary`` is final once iteration ends."""

    def __init__(self, program: Program, bounds: Bounds):
        from esmck.ir.ast import iter_stmts

        blocks = [program.main] + [b for _, b in program.functions]
        if any(isinstance(s, Evolve) for b in blocks for s in iter_stmts(b)):
            raise ExplorationError("program contains evolve blocks; lower it first")
        self.program = program
        self.bounds = bounds
        self.summary = ExplorationSummary()
        self._functions = dict(program.functions)
        self._sorts = {d.name: d.sort for d in program.inputs}
        self._sorts.update({d.name: d.sort for d in program.globals})

    def __iter__(self) -> Iterator[AssertObligation]:
        self.summary = summary = ExplorationSummary()
        init = self._initial_state()
        if init is None:
            summary.pruned += 1
            return
        stack = [(_push_block(self.program.main, "main", None), init)]
        while stack:
            if summary.paths >= self.bounds.max_paths:
                summary.complete = False
                summary.reason = "path budget exhausted"
                log.info("path budget exhausted after %d paths", summary.paths)
                return
            cont, st = stack.pop()
            while True:
                if cont is None:
                    summary.paths += 1
                    break
                (item, cont) = cont
                if st.steps_left <= 0:
                    summary.complete = False
                    summary.reason = "statement budget exhausted"
                    break
                st.steps_left -= 1
                if isinstance(item, _LoopStep):
                    if item.k < item.n:
                        loop = item.loop
                        st.store[loop.var] = Const(Fraction(item.k))
                        cont = (_LoopStep(loop, item.loc, item.k + 1, item.n), cont)
                        cont = _push_block(loop.body, f"{item.loc}[{item.k}]", cont)
                    continue
                stmt, loc = item
                outcome = self._step(stmt, loc, st, cont, stack)
                if outcome is None:
                    break
                if isinstance(outcome, _Yield):
                    summary.obligations += 1
                    yield outcome.obligation
                    break
                cont = outcome

    def _initial_state(self):
        st = SymState(store={}, steps_left=self.bounds.max_steps)
        pc = TRUE
        for d in self.program.inputs:
            if d.sort == "int" and d.name in self.bounds.values:
                st.store[d.name] = Const(Fraction(self.bounds.values[d.name]))
            else:
                st.store[d.name] = st.new_symbol(d.name, "input", d.sort)
            if d.assume is not None:
                pc = mk_and(pc, st.value(d.assume, self._sorts))
        for d in self.program.globals:
            if d.init is not None:
                st.store[d.name] = st.value(d.init, self._sorts)
        return self._add_guard(st, pc)

    def _add_guard(self, st, guard):
        if isinstance(guard, BoolConst):
            return st if guard.value else None
        from esmck.ir.ast import conjuncts

        st.path_condition = st.path_condition + tuple(conjuncts(guard))
        return st

    def _step(self, stmt, loc, st: SymState, cont, stack):
        """Execute one statement; returns the new continuation, an obligation, or None."""
        if isinstance(stmt, Assign):
            st.store[stmt.var] = st.value(stmt.expr, self._sorts)
            st.trace.append(("assign", loc, stmt.var))
            return cont
        if isinstance(stmt, Havoc):
            k = st.havocs.get(stmt.var, 0)
            st.havocs[stmt.var] = k + 1
            sym = st.new_symbol(havoc_symbol_name(stmt.var, k), "havoc", self._sorts.get(stmt.var, "real"))
            st.store[stmt.var] = sym
            st.trace.append(("havoc", loc, stmt.var, sym.name))
            return cont
        if isinstance(stmt, Assume):
            guard = st.value(stmt.cond, self._sorts)
            st.trace.append(("assume", loc))
            if self._add_guard(st, guard) is None:
                self.summary.pruned += 1
                return None
            return cont
        if isinstance(stmt, Assert):
            cond = st.value(stmt.cond, self._sorts)
            ob = AssertObligation(
                index=self.summary.obligations,
                label=stmt.label,
                location=loc,
                path_condition=st.path_condition,
                negated=mk_not(cond),
                symbols=dict(st.symbols),
                choices=st.choices,
                assert_index=st.asserts,
            )
            st.asserts += 1
            st.trace.append(("assert", loc, stmt.label))
            # the obligation is yielded, then this path resumes with ``cont``
            stack.append((cont, st))
            return _Yield(ob)
        if isinstance(stmt, If):
            guard = st.value(stmt.cond, self._sorts)
            other = st.fork()
            then_st = self._add_guard(st, guard)
            else_st = self._add_guard(other, mk_not(guard))
            if else_st is not None:
                stack.append((_push_block(stmt.orelse, f"{loc}.else", cont), else_st))
            else:
                self.summary.pruned += 1
            if then_st is None:
                self.summary.pruned += 1
                return None
            return _push_block(stmt.then, f"{loc}.then", cont)
        if isinstance(stmt, Block):
            return _push_block(stmt.body, loc, cont)
        if isinstance(stmt, ChooseInt):
            n = _concrete_int(st.value(stmt.bound, self._sorts), "choose bound", loc)
            if n == 0:
                self.summary.pruned += 1
                return None
            for v in range(n - 1, 0, -1):
                alt = st.fork()
                alt.store[stmt.var] = Const(Fraction(v))
                alt.choices = alt.choices + (v,)
                alt.trace.append(("choose", loc, stmt.var, v))
                stack.append((cont, alt))
            st.store[stmt.var] = Const(Fraction(0))
            st.choices = st.choices + (0,)
            st.trace.append(("choose", loc, stmt.var, 0))
            return cont
        if isinstance(stmt, CountedLoop):
            n = _concrete_int(st.value(stmt.count, self._sorts), "loop count", loc)
            return (_LoopStep(stmt, loc, 0, n), cont)
        if isinstance(stmt, Call):
            return _push_block(self._functions[stmt.name], f"{loc}/{stmt.name}", cont)
        if isinstance(stmt, Print):
            st.trace.append(("print", loc))
            return cont
        raise ExplorationError(f"{loc}: unsupported statement {type(stmt).__name__}")


class _Yield:
    __slots__ = ("obligation",)

    def __init__(self, ob):
        self.obligation = ob


def explore(program: Program, bounds: Bounds) -> Exploration:
    """Symbolically explore every bounded path of a lowered ``program``.

    The result is iterable; obligations come out depth-first, then-branches
    before else-branches and smaller choice values first.
    """
    return Exploration(program, bounds)
