"""Lowering of ``evolve`` blocks to an explicit first-order Euler loop.

An ODE block ``evolve { v' = f(v); } dt h steps S;`` becomes::

    m = choose(S);
    for j in 0..m {
      t = t + h;          // only if the program declares a global ``t``
      v = v + f(v) * h;
    }

With several equations every right-hand side is evaluated on the pre-step
state: the new values are staged in ``<v>_next`` temporaries first.
"""
from __future__ import annotations

from dataclasses import replace

from .ast import (
    Arith, Assign, Block, ChooseInt, CountedLoop, Evolve, If, Program, Var, VarDecl, iter_stmts,
)
from .errors import UndeclaredError


def _has_evolve(block) -> bool:
    return any(isinstance(s, Evolve) for s in iter_stmts(block))


def _fresh(base: str, taken: set[str]) -> str:
    name, k = base, 1
    while name in taken:
        name = f"{base}_{k}"
        k += 1
    taken.add(name)
    return name


def _all_names(p: Program) -> set[str]:
    names = {d.name for d in p.inputs} | {d.name for d in p.globals}
    blocks = [p.main] + [b for _, b in p.functions]
    for b in blocks:
        for s in iter_stmts(b):
            if isinstance(s, (ChooseInt, CountedLoop)):
                names.add(s.var)
    return names


def lower_evolve(p: Program, time_var: str = "t") -> Program:
    """Replace every ``Evolve`` statement of ``p``; identity when there is none."""
    blocks = [p.main] + [b for _, b in p.functions]
    if not any(_has_evolve(b) for b in blocks):
        return p
    declared = {d.name for d in p.inputs} | {d.name for d in p.globals}
    taken = _all_names(p)
    choice_var = _fresh("m", taken)
    index_var = _fresh("j", taken)
    tick = time_var if time_var in {d.name for d in p.globals} else None
    new_globals = list(p.globals)
    temps: dict[str, str] = {}

    def temp_for(v):
        if v not in temps:
            temps[v] = _fresh(f"{v}_next", taken)
            new_globals.append(VarDecl(temps[v], "real"))
        return temps[v]

    def lower_one(s: Evolve):
        if s.dt not in declared:
            raise UndeclaredError(s.dt, f"evolve step variable {s.dt!r} is undeclared")
        for v, _ in s.odes:
            if v not in declared:
                raise UndeclaredError(v)
        dt = Var(s.dt)
        body = []
        if tick is not None:
            body.append(Assign(tick, Arith("+", Var(tick), dt)))
        updates = [(v, Arith("+", Var(v), Arith("*", rhs, dt))) for v, rhs in s.odes]
        if len(updates) == 1:
            body.append(Assign(*updates[0]))
        else:
            body += [Assign(temp_for(v), e) for v, e in updates]
            body += [Assign(v, Var(temp_for(v))) for v, _ in updates]
        return [ChooseInt(choice_var, s.steps), CountedLoop(index_var, Var(choice_var), tuple(body))]

    def lower_block(block):
        out = []
        for s in block:
            if isinstance(s, Evolve):
                out += lower_one(s)
            elif isinstance(s, If):
                out.append(If(s.cond, lower_block(s.then), lower_block(s.orelse)))
            elif isinstance(s, Block):
                out.append(Block(lower_block(s.body)))
            elif isinstance(s, CountedLoop):
                out.append(CountedLoop(s.var, s.count, lower_block(s.body)))
            else:
                out.append(s)
        return tuple(out)

    functions = tuple((name, lower_block(body)) for name, body in p.functions)
    main = lower_block(p.main)
    return replace(p, globals=tuple(new_globals), functions=functions, main=main)
