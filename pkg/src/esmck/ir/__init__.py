"""Hybrid specification language: syntax, parsing, printing, lowering, evaluation."""
from .ast import *  # noqa: F401,F403
from .errors import DivisionByZero, EvalError, HslError, HslSyntaxError, RecursionCycleError, UndeclaredError
from .evaluate import eval_expr
from .lower import lower_evolve
from .parser import check_program, parse_expr, parse_program
from .printer import format_rational, print_expr, print_program

__all__ = [
    "DivisionByZero", "EvalError", "HslError", "HslSyntaxError", "RecursionCycleError",
    "UndeclaredError", "eval_expr", "lower_evolve", "check_program", "parse_expr",
    "parse_program", "format_rational", "print_expr", "print_program",
]
