"""Concrete exact-rational replay of a witness along one program path."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from esmck.ir.ast import (
    Assert, Assign, Assume, Block, Call, ChooseInt, CountedLoop, Evolve, Havoc, If, Print, Program,
)
from esmck.ir.errors import EvalError
from esmck.ir.evaluate import eval_expr
from esmck.ir.printer import format_rational, print_expr
from esmck.symexec.engine import havoc_symbol_name, uninit_symbol_name


class ReplayError(Exception):
    """The witness does not describe a run of the program."""


class WitnessIncomplete(ReplayError):
    pass


class AssumptionViolated(ReplayError):
    pass


def rational_to_json(q: Fraction) -> dict:
    q = Fraction(q)
    return {"num": str(q.numerator), "den": str(q.denominator)}


def rational_from_json(d) -> Fraction:
    if isinstance(d, dict):
        return Fraction(int(d["num"]), int(d["den"]))
    return Fraction(d)


@dataclass(frozen=True)
class Witness:
    """Exact values for the symbols of one path, plus its choice resolutions."""

    assignment: Mapping[str, Fraction]
    label: str = ""
    bounds: Mapping[str, int] = field(default_factory=dict)
    choices: tuple = ()
    assert_index: int | None = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "assert_index": self.assert_index,
            "bounds": dict(self.bounds),
            "choices": list(self.choices),
            "assignment": {k: rational_to_json(v) for k, v in self.assignment.items()},
        }

    @classmethod
    def from_dict(cls, d) -> "Witness":
        return cls(
            assignment={k: rational_from_json(v) for k, v in d["assignment"].items()},
            label=d.get("label", ""),
            bounds={k: int(v) for k, v in d.get("bounds", {}).items()},
            choices=tuple(int(c) for c in d.get("choices", ())),
            assert_index=d.get("assert_index"),
        )


@dataclass(frozen=True)
class AssertOutcome:
    index: int
    label: str
    location: str
    holds: bool
    store: Mapping[str, Fraction]


@dataclass
class Trace:
    events: list = field(default_factory=list)  # (location, var, value)
    asserts: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (location, store copy) at print markers
    final_store: dict = field(default_factory=dict)
    complete: bool = True

    def violates(self, assert_index: int, label: str | None = None) -> bool:
        if assert_index >= len(self.asserts):
            return False
        out = self.asserts[assert_index]
        return not out.holds and (label is None or out.label == label)

    @property
    def violations(self) -> list:
        return [a for a in self.asserts if not a.holds]

    def to_dict(self) -> dict:
        def store(s):
            return {k: rational_to_json(v) for k, v in s.items()}

        return {
            "complete": self.complete,
            "events": [{"stmt": loc, "var": v, "value": rational_to_json(x)} for loc, v, x in self.events],
            "asserts": [
                {"index": a.index, "label": a.label, "stmt": a.location, "holds": a.holds}
                for a in self.asserts
            ],
            "snapshots": [{"stmt": loc, "store": store(s)} for loc, s in self.snapshots],
            "final_store": store(self.final_store),
        }


class _Stop(Exception):
    pass


class _Env(dict):
    def __init__(self, lookup):
        super().__init__()
        self._lookup = lookup

    def __missing__(self, name):
        value = self._lookup(uninit_symbol_name(name))
        self[name] = value
        return value


def replay(program: Program, witness: Witness, bounds: Mapping[str, int] | None = None,
           stop_after: int | None = None) -> Trace:
    """Run ``program`` concretely with every nondeterministic value taken from ``witness``.

    ``stop_after`` ends the run once the assert with that ordinal has been
    recorded.  Raises ``WitnessIncomplete`` if a needed value is missing and
    ``AssumptionViolated`` if an ``assume`` evaluates to false.
    """
    bounds = dict(witness.bounds) | dict(bounds or {})
    trace = Trace()
    havocs: dict[str, int] = {}
    choices = list(witness.choices)
    sorts = {d.name: d.sort for d in program.inputs}
    sorts.update({d.name: d.sort for d in program.globals})
    functions = dict(program.functions)

    def lookup(sym):
        try:
            return Fraction(witness.assignment[sym])
        except KeyError:
            raise WitnessIncomplete(f"witness has no value for {sym!r}") from None

    env = _Env(lookup)

    def ev(e, loc):
        try:
            return eval_expr(e, env)
        except EvalError as err:
            raise ReplayError(f"{loc}: {err}") from err

    def set_var(var, value, loc):
        if sorts.get(var) == "int" and Fraction(value).denominator != 1:
            raise ReplayError(f"{loc}: integer variable {var!r} given non-integer {value}")
        env[var] = value
        trace.events.append((loc, var, value))

    def run(block, loc):
        for idx, s in enumerate(block):
            step(s, f"{loc}.{idx}")

    def step(s, loc):
        if isinstance(s, Assign):
            set_var(s.var, ev(s.expr, loc), loc)
        elif isinstance(s, Havoc):
            k = havocs.get(s.var, 0)
            havocs[s.var] = k + 1
            set_var(s.var, lookup(havoc_symbol_name(s.var, k)), loc)
        elif isinstance(s, Assume):
            if not ev(s.cond, loc):
                raise AssumptionViolated(f"{loc}: assume ({print_expr(s.cond)}) is false")
        elif isinstance(s, Assert):
            holds = bool(ev(s.cond, loc))
            index = len(trace.asserts)
            trace.asserts.append(AssertOutcome(index, s.label, loc, holds, dict(env)))
            if stop_after is not None and index >= stop_after:
                raise _Stop
        elif isinstance(s, If):
            if ev(s.cond, loc):
                run(s.then, f"{loc}.then")
            else:
                run(s.orelse, f"{loc}.else")
        elif isinstance(s, Block):
            run(s.body, loc)
        elif isinstance(s, ChooseInt):
            bound = ev(s.bound, loc)
            if not choices:
                raise WitnessIncomplete(f"{loc}: witness has no value for choose({print_expr(s.bound)})")
            v = choices.pop(0)
            if not 0 <= v < bound:
                raise ReplayError(f"{loc}: choice {v} outside [0, {format_rational(bound)})")
            set_var(s.var, Fraction(v), loc)
        elif isinstance(s, CountedLoop):
            n = ev(s.count, loc)
            if n.denominator != 1:
                raise ReplayError(f"{loc}: loop count {n} is not an integer")
            for k in range(int(n)):
                env[s.var] = Fraction(k)
                run(s.body, f"{loc}[{k}]")
        elif isinstance(s, Call):
            run(functions[s.name], f"{loc}/{s.name}")
        elif isinstance(s, Print):
            trace.snapshots.append((loc, dict(env)))
        elif isinstance(s, Evolve):
            raise ReplayError(f"{loc}: evolve blocks must be lowered before replay")
        else:
            raise ReplayError(f"{loc}: unsupported statement {type(s).__name__}")

    for d in program.inputs:
        if d.sort == "int" and d.name in bounds:
            env[d.name] = Fraction(bounds[d.name])
        else:
            env[d.name] = lookup(d.name)
        if d.assume is not None and not ev(d.assume, f"input {d.name}"):
            raise AssumptionViolated(f"input assumption ({print_expr(d.assume)}) is false")
    for d in program.globals:
        if d.init is not None:
            env[d.name] = ev(d.init, f"global {d.name}")
    try:
        run(program.main, "main")
    except _Stop:
        trace.complete = False
    trace.final_store = {k: v for k, v in env.items()}
    return trace
