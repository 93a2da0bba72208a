"""optmut: mutation testing and problem-level validation for LP/MILP models."""

from .model import (
    INF,
    Constraint,
    Domain,
    LinearExpr,
    LpModel,
    Objective,
    ObjSense,
    ParamSite,
    Sense,
    Variable,
    dualize,
    instantiate,
    normalize,
    scale_objective,
)
from .dsl import ModelDocument, ModelParseError, parse_model, serialize_model
from .solver import (
    SolveStatus,
    Solution,
    SolverConfig,
    check_feasible,
    solve_lp,
    solve_milp,
)

__version__ = "0.1.0"
