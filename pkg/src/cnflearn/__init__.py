"""Perception learning against CNF supervision via sampled explanations."""

from cnflearn.formula import (
    Assignment,
    ClauseStatus,
    CnfFormula,
    DimacsParseError,
    evaluate,
    negate,
    parse_dimacs,
    propagate,
    satisfies_projected,
    status,
    to_dimacs,
)

__all__ = [
    "Assignment",
    "ClauseStatus",
    "CnfFormula",
    "DimacsParseError",
    "evaluate",
    "negate",
    "parse_dimacs",
    "propagate",
    "satisfies_projected",
    "status",
    "to_dimacs",
]

__version__ = "0.1.0"
