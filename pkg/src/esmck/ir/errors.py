from __future__ import annotations


class HslError(Exception):
    """Base class for problems with an HSL program."""


class HslSyntaxError(HslError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


class UndeclaredError(HslError):
    def __init__(self, name: str, msg: str | None = None):
        super().__init__(msg or f"undeclared variable {name!r}")
        self.name = name


class RecursionCycleError(HslError):
    def __init__(self, cycle: list[str]):
        super().__init__("recursive call cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class EvalError(HslError):
    """Concrete evaluation failed; ``expr`` is the offending subexpression."""

    def __init__(self, msg: str, expr=None):
        if expr is not None:
            from .printer import print_expr

            msg = f"{msg} in {print_expr(expr)}"
        super().__init__(msg)
        self.expr = expr


class DivisionByZero(EvalError, ZeroDivisionError):
    def __init__(self, expr):
        super().__init__("division by zero", expr)
