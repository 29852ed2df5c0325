from __future__ import annotations

from dataclasses import dataclass

VIOLATED = "violated"
HOLDS = "holds"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    """Outcome of checking one obligation.

    ``violated`` always carries a replay-validated witness; ``holds`` is only
    produced from an external solver's ``unsat``.
    """

    status: str
    witness: object = None
    backend: str = "builtin"
    spent: float = 0
    detail: str = ""

    def __post_init__(self):
        if self.status not in (VIOLATED, HOLDS, UNKNOWN):
            raise ValueError(f"bad verdict status {self.status!r}")
        if self.status == VIOLATED and self.witness is None:
            raise ValueError("a violated verdict needs a witness")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "backend": self.backend,
            "spent": self.spent,
            "detail": self.detail,
            "witness": self.witness.to_dict() if self.witness is not None else None,
        }
