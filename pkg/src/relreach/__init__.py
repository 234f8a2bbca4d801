"""Relational reachability model checking for Markov decision processes."""

from .checker import CheckResult, check
from .model import Mdp, MdScheduler, build_mdp, load_mdp, validate_mdp
from .oracle import BudgetExceeded, OracleBudget, md_verdict
from .property import normalize, parse_property
from .solver import Bounds, SolverConfig
from .verdict import Answer, validate_witness

__all__ = [
    "Answer",
    "Bounds",
    "BudgetExceeded",
    "CheckResult",
    "Mdp",
    "MdScheduler",
    "OracleBudget",
    "SolverConfig",
    "build_mdp",
    "check",
    "load_mdp",
    "md_verdict",
    "normalize",
    "parse_property",
    "validate_mdp",
    "validate_witness",
]
