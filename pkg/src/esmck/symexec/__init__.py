"""Bounded symbolic execution producing assertion obligations."""
from .engine import (
    AssertObligation, Bounds, Exploration, ExplorationError, ExplorationSummary, SymState,
    explore, havoc_symbol_name, uninit_symbol_name,
)
from .simplify import simplify, substitute

__all__ = [
    "AssertObligation", "Bounds", "Exploration", "ExplorationError", "ExplorationSummary",
    "SymState", "explore", "havoc_symbol_name", "uninit_symbol_name", "simplify", "substitute",
]
