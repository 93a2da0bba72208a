"""Deterministic embedded LP/MILP solver.

Two-phase primal simplex with Bland's rule; best-first branch and bound
for integer variables. No randomness anywhere: identical inputs produce
bit-identical solutions and pivot counts on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from ..errors import MissingVariable, ModelInvalid
from ..model import Domain, LpModel, normalize
from .kernel import BACKEND, available_backends
from .tableau import LIMIT, OPTIMAL, UNBOUNDED, simplex_solve


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-6
    opt_tol: float = 1e-6
    max_pivots: int = 10_000
    max_nodes: int = 10_000

    def __post_init__(self):
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ModelInvalid("tolerances must be positive")
        if self.max_pivots <= 0 or self.max_nodes <= 0:
            raise ModelInvalid("budgets must be positive")


@dataclass(frozen=True)
class Solution:
    status: SolveStatus
    values: dict[str, float] | None = None
    objective: float | None = None
    pivots: int = 0
    nodes: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


def solve_lp(model: LpModel, cfg: SolverConfig | None = None, *,
             relax_integrality: bool = False, _kernel=None) -> Solution:
    """Solve the LP (relaxation). Integer variables are rejected unless
    ``relax_integrality`` is set."""
    cfg = cfg or SolverConfig()
    m = normalize(model)
    if not relax_integrality and m.has_integer_vars():
        raise ModelInvalid("model has integer variables; use solve_milp or relax")
    code, values, pivots = simplex_solve(
        m, cfg.feas_tol, cfg.opt_tol, cfg.max_pivots, kernel=_kernel
    )
    if code == "infeasible":
        return Solution(SolveStatus.INFEASIBLE, pivots=pivots)
    if code == UNBOUNDED:
        return Solution(SolveStatus.UNBOUNDED, pivots=pivots)
    if code == LIMIT:
        return Solution(SolveStatus.ITERATION_LIMIT, pivots=pivots)
    objective = m.objective.expr.evaluate(values)
    return Solution(SolveStatus.OPTIMAL, values, objective, pivots=pivots)


def check_feasible(model: LpModel, point: dict[str, float], tol: float = 1e-6):
    """Check a full assignment against all rows, bounds and integrality.

    Returns (feasible, violations); each violation is (name, slack) with
    negative slack measuring how far the row/bound is violated, sorted
    most-violated first (ties keep declaration order).
    """
    m = normalize(model)
    for v in m.variables:
        if v.name not in point:
            raise MissingVariable(f"point does not assign variable {v.name!r}")
    entries: list[tuple[str, float]] = []
    for c in m.constraints:
        activity = c.lhs.evaluate(point)
        if c.sense.value == "<=":
            slack = c.rhs - activity
        elif c.sense.value == ">=":
            slack = activity - c.rhs
        else:
            slack = -abs(activity - c.rhs)
        entries.append((c.name, slack))
    for v in m.variables:
        x = point[v.name]
        if math.isfinite(v.lower):
            entries.append((f"{v.name}.lower", x - v.lower))
        if math.isfinite(v.upper):
            entries.append((f"{v.name}.upper", v.upper - x))
        if v.is_integer:
            entries.append((f"{v.name}.integrality", -abs(x - round(x))))
    violations = sorted(
        [(name, slack) for name, slack in entries if slack < -tol],
        key=lambda e: e[1],
    )
    return len(violations) == 0, violations


from .branch_bound import solve_milp  # noqa: E402  (needs Solution defined)

__all__ = [
    "BACKEND",
    "SolveStatus",
    "Solution",
    "SolverConfig",
    "available_backends",
    "check_feasible",
    "solve_lp",
    "solve_milp",
]
