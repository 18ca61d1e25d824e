from .core import BACKENDS, LIMIT_REACHED, SolveLimits, SolveOutcome, solve_lp, solve_milp
from .simplex import INFEASIBLE, OPTIMAL, DualSimplex, NumericalError

__all__ = [
    "BACKENDS", "INFEASIBLE", "LIMIT_REACHED", "OPTIMAL", "DualSimplex", "NumericalError",
    "SolveLimits", "SolveOutcome", "solve_lp", "solve_milp",
]
