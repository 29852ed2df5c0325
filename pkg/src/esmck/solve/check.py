from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from .falsify import UNCONSTRAINED_DEFAULT, check_exact, falsify, validate
from .replay import Witness
from .smt import emit_smt, run_solver
from .verdict import HOLDS, UNKNOWN, VIOLATED, Verdict

SOLVER_ENV = "ESMCK_SOLVER"


def default_solver_command() -> str | None:
    return os.environ.get(SOLVER_ENV) or None


def check_obligation(ob, backend: str = "builtin", budget: int = 100_000, *, program=None,
                     bounds=None, solver: str | None = None, seed: int = 0,
                     timeout: float | None = 60.0) -> Verdict:
    """Discharge one obligation with the ``builtin`` falsifier or an ``smt`` solver."""
    if backend == "builtin":
        return falsify(ob, budget, program=program, bounds=bounds, seed=seed)
    if backend != "smt":
        raise ValueError(f"unknown backend {backend!r}")
    solver = solver or default_solver_command()
    if not solver:
        return Verdict(UNKNOWN, backend="smt", detail="solver unavailable")
    res = run_solver(emit_smt(ob), solver, timeout=timeout)
    spent = 0  # no samples drawn; wall time is left out so reports stay reproducible
    if res.answer == "unsat":
        return Verdict(HOLDS, backend="smt", spent=spent, detail="unsat")
    if res.answer != "sat":
        return Verdict(UNKNOWN, backend="smt", spent=spent, detail=res.detail or res.answer)
    assignment = {}
    for name in ob.symbols:
        v = res.model.get(name, UNCONSTRAINED_DEFAULT)
        assignment[name] = Fraction(v)
    if not check_exact(ob, assignment):
        return Verdict(UNKNOWN, backend="smt", spent=spent, detail="solver model does not satisfy the obligation")
    w = Witness(assignment, ob.label, dict(bounds or {}), ob.choices, ob.assert_index)
    if program is not None and not validate(program, w, ob):
        return Verdict(UNKNOWN, backend="smt", spent=spent, detail="solver model failed replay")
    return Verdict(VIOLATED, w, "smt", spent, "sat")


def check_all(obligations, jobs: int = 1, stop_on_violation: bool = False, **kw):
    """Check obligations in order, ``jobs`` at a time; yields ``(obligation, verdict)``.

    Results come back in input order whatever the completion order.  With
    ``stop_on_violation`` the first violation ends the stream.
    """
    obligations = iter(obligations)
    if jobs <= 1:
        for ob in obligations:
            v = check_obligation(ob, **kw)
            yield ob, v
            if stop_on_violation and v.status == VIOLATED:
                return
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        pending = []
        exhausted = False
        while True:
            while not exhausted and len(pending) < 2 * jobs:
                try:
                    ob = next(obligations)
                except StopIteration:
                    exhausted = True
                    break
                pending.append((ob, pool.submit(check_obligation, ob, **kw)))
            if not pending:
                return
            ob, fut = pending.pop(0)
            v = fut.result()
            yield ob, v
            if stop_on_violation and v.status == VIOLATED:
                for _, f in pending:
                    f.cancel()
                return
