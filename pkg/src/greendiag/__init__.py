"""Exact closed forms for the heat-kernel Green function diagonal."""

from .classify import Classification, Inadmissible, PotentialSpec, admissible, preset
from .exactalg import BiPoly, UniPoly, solve_linear_exact
from .oracle import eval_G, floquet_green_diag, monodromy, verify
from .solver import SolutionForm, build_residual, solve, solve_for_degrees

__all__ = [
    "BiPoly",
    "Classification",
    "Inadmissible",
    "PotentialSpec",
    "SolutionForm",
    "UniPoly",
    "admissible",
    "build_residual",
    "eval_G",
    "floquet_green_diag",
    "monodromy",
    "preset",
    "solve",
    "solve_for_degrees",
    "solve_linear_exact",
    "verify",
]
