"""Bounded satisfiability checking for linear temporal logic with past
operators over arithmetic constraint systems, via SMT solving."""

from .driver import RunConfig, Verdict, check_sat, run_suite
from .formulas import Theory, theory_by_name
from .parsing import ParseError, ProblemFile, parse, parse_formula, render

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "Verdict", "check_sat", "run_suite", "Theory",
    "theory_by_name", "ParseError", "ProblemFile", "parse", "parse_formula",
    "render", "__version__",
]
