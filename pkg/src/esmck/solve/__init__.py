"""Discharging obligations: SMT-LIB2 emission, numeric falsification, exact replay."""
from .check import SOLVER_ENV, check_all, check_obligation
from .falsify import falsify, validate
from .replay import (
    AssertOutcome, AssumptionViolated, ReplayError, Trace, Witness, WitnessIncomplete, replay,
)
from .smt import check_wellformed, emit_smt, parse_model, run_solver
from .verdict import HOLDS, UNKNOWN, VIOLATED, Verdict

__all__ = [
    "SOLVER_ENV", "check_all", "check_obligation", "falsify", "validate", "AssertOutcome",
    "AssumptionViolated", "ReplayError", "Trace", "Witness", "WitnessIncomplete", "replay",
    "check_wellformed", "emit_smt", "parse_model", "run_solver", "HOLDS", "UNKNOWN", "VIOLATED",
    "Verdict",
]
