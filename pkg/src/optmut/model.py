"""Symbolic LP/MILP models and equivalence-preserving transforms.

Models are immutable values: every transform returns a new ``LpModel``.
Coefficients are plain floats; named scalar parameters are tracked as
binding sites so scenario overrides can be applied with ``instantiate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import (
    DuplicateName,
    ModelInvalid,
    NonPositiveFactor,
    NotInStandardForm,
    UnknownParameter,
    UnknownVariable,
)

INF = math.inf


class Domain(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class ObjSense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


@dataclass(frozen=True)
class Variable:
    """A decision variable with (possibly infinite) bounds."""

    name: str
    lower: float = 0.0
    upper: float = INF
    domain: Domain = Domain.CONTINUOUS

    @property
    def is_integer(self) -> bool:
        return self.domain == Domain.INTEGER


@dataclass(frozen=True)
class LinearExpr:
    """A linear expression: sum of coefficient*variable terms plus a constant.

    ``terms`` is an ordered tuple of (variable name, coefficient) pairs with
    unique names; ``normalize`` orders them by variable declaration order.
    """

    terms: tuple[tuple[str, float], ...] = ()
    constant: float = 0.0

    @staticmethod
    def of(terms: dict[str, float], constant: float = 0.0) -> "LinearExpr":
        return LinearExpr(tuple(terms.items()), constant)

    def as_dict(self) -> dict[str, float]:
        return dict(self.terms)

    def coef(self, name: str) -> float:
        for var, c in self.terms:
            if var == name:
                return c
        return 0.0

    def scaled(self, factor: float) -> "LinearExpr":
        return LinearExpr(
            tuple((v, c * factor) for v, c in self.terms), self.constant * factor
        )

    def with_coef(self, name: str, value: float) -> "LinearExpr":
        if any(v == name for v, _ in self.terms):
            return LinearExpr(
                tuple((v, value if v == name else c) for v, c in self.terms),
                self.constant,
            )
        return LinearExpr(self.terms + ((name, value),), self.constant)

    def evaluate(self, point: dict[str, float]) -> float:
        total = self.constant
        for var, c in self.terms:
            total += c * point[var]
        return total


@dataclass(frozen=True)
class Constraint:
    name: str
    lhs: LinearExpr
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class Objective:
    sense: ObjSense
    expr: LinearExpr


@dataclass(frozen=True)
class ParamSite:
    """Where a parameter is bound: a coefficient or rhs slot.

    ``constraint`` is None for the objective; ``var`` is None for the rhs.
    ``scale`` carries the sign/multiplier the parameter enters the slot with.
    """

    param: str
    constraint: str | None
    var: str | None
    scale: float = 1.0


@dataclass(frozen=True)
class LpModel:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: Objective
    parameters: tuple[tuple[str, float], ...] = ()
    param_sites: tuple[ParamSite, ...] = ()

    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(f"no variable named {name!r} in model {self.name!r}")

    def constraint(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise ModelInvalid(f"no constraint named {name!r} in model {self.name!r}")

    def parameter_defaults(self) -> dict[str, float]:
        return dict(self.parameters)

    def has_integer_vars(self) -> bool:
        return any(v.is_integer for v in self.variables)


def _check_expr(model: LpModel, expr: LinearExpr, where: str) -> None:
    known = set(model.variable_names())
    for var, _ in expr.terms:
        if var not in known:
            raise UnknownVariable(f"{where} references unknown variable {var!r}")


def validate(model: LpModel) -> LpModel:
    """Check model invariants; returns the model unchanged if valid."""
    names = set()
    for v in model.variables:
        if not v.name:
            raise ModelInvalid("empty variable name")
        if v.name in names:
            raise DuplicateName(f"duplicate variable name {v.name!r}")
        names.add(v.name)
        if math.isfinite(v.lower) and math.isfinite(v.upper) and v.lower > v.upper:
            raise ModelInvalid(
                f"variable {v.name!r} has lower {v.lower} > upper {v.upper}"
            )
    cnames = set()
    for c in model.constraints:
        if not c.name:
            raise ModelInvalid("empty constraint name")
        if c.name in cnames:
            raise DuplicateName(f"duplicate constraint name {c.name!r}")
        cnames.add(c.name)
        _check_expr(model, c.lhs, f"constraint {c.name!r}")
    _check_expr(model, model.objective.expr, "objective")
    pnames = set()
    for p, _ in model.parameters:
        if p in pnames:
            raise DuplicateName(f"duplicate parameter name {p!r}")
        if p in names:
            raise DuplicateName(f"parameter {p!r} shadows a variable name")
        pnames.add(p)
    for site in model.param_sites:
        if site.param not in pnames:
            raise UnknownParameter(f"binding references unknown parameter {site.param!r}")
        if site.constraint is not None and site.constraint not in cnames:
            raise ModelInvalid(f"binding references unknown constraint {site.constraint!r}")
        if site.var is not None and site.var not in names:
            raise UnknownVariable(f"binding references unknown variable {site.var!r}")
    return model


def normalize(model: LpModel) -> LpModel:
    """Fold lhs constants into the rhs, drop zero terms, order terms by
    variable declaration order. Idempotent."""
    validate(model)
    order = {name: i for i, name in enumerate(model.variable_names())}

    def norm_expr(expr: LinearExpr) -> LinearExpr:
        merged: dict[str, float] = {}
        for var, c in expr.terms:
            merged[var] = merged.get(var, 0.0) + c
        terms = tuple(
            (var, merged[var])
            for var in sorted(merged, key=order.__getitem__)
            if merged[var] != 0.0
        )
        return LinearExpr(terms, expr.constant)

    constraints = []
    for c in model.constraints:
        lhs = norm_expr(c.lhs)
        constraints.append(
            Constraint(c.name, LinearExpr(lhs.terms, 0.0), c.sense, c.rhs - lhs.constant)
        )
    obj_expr = norm_expr(model.objective.expr)
    return replace(
        model,
        constraints=tuple(constraints),
        objective=Objective(model.objective.sense, obj_expr),
    )


def dualize(model: LpModel) -> LpModel:
    """Dual of a standard-form LP: max c'x s.t. Ax <= b, x >= 0 becomes
    min b'u s.t. A'u >= c, u >= 0, one dual variable per primal row.

    Only the standard form is accepted; anything else raises
    NotInStandardForm rather than being silently transformed.
    """
    m = normalize(model)
    if m.objective.sense != ObjSense.MAXIMIZE:
        raise NotInStandardForm("objective must be maximize")
    if m.objective.expr.constant != 0.0:
        raise NotInStandardForm("objective must have no constant term")
    for v in m.variables:
        if v.is_integer:
            raise NotInStandardForm(f"integer variable {v.name!r}")
        if v.lower != 0.0:
            raise NotInStandardForm(f"variable {v.name!r} must have lower bound 0")
        if v.upper != INF:
            raise NotInStandardForm(f"variable {v.name!r} must have no upper bound")
    for c in m.constraints:
        if c.sense != Sense.LE:
            raise NotInStandardForm(f"constraint {c.name!r} must be <=")

    dual_vars = tuple(Variable(f"u_{c.name}", 0.0, INF) for c in m.constraints)
    obj = LinearExpr(tuple((f"u_{c.name}", c.rhs) for c in m.constraints))
    rows = []
    cvec = m.objective.expr.as_dict()
    for v in m.variables:
        terms = tuple(
            (f"u_{c.name}", c.lhs.coef(v.name))
            for c in m.constraints
            if c.lhs.coef(v.name) != 0.0
        )
        rows.append(Constraint(v.name, LinearExpr(terms), Sense.GE, cvec.get(v.name, 0.0)))
    dual = LpModel(
        name=f"{m.name}_dual",
        variables=dual_vars,
        constraints=tuple(rows),
        objective=Objective(ObjSense.MINIMIZE, obj),
    )
    return normalize(dual)


def scale_objective(model: LpModel, factor: float) -> LpModel:
    """Multiply the objective by a positive factor; constraints untouched."""
    if not (factor > 0.0):
        raise NonPositiveFactor(f"factor must be > 0, got {factor}")
    validate(model)
    sites = tuple(
        replace(s, scale=s.scale * factor) if s.constraint is None else s
        for s in model.param_sites
    )
    return replace(
        model,
        objective=Objective(model.objective.sense, model.objective.expr.scaled(factor)),
        param_sites=sites,
    )


def instantiate(model: LpModel, overrides: dict[str, float]) -> LpModel:
    """Apply scenario overrides to parameter-bound coefficients and rhs values.

    Unknown override keys raise UnknownParameter; parameters without an
    override keep their defaults (a no-op for an already-default model).
    """
    validate(model)
    defaults = model.parameter_defaults()
    for key in overrides:
        if key not in defaults:
            raise UnknownParameter(f"model has no parameter {key!r}")
    values = {**defaults, **overrides}

    constraints = {c.name: c for c in model.constraints}
    objective = model.objective
    for site in model.param_sites:
        bound = site.scale * values[site.param]
        if site.constraint is None:
            if site.var is None:
                objective = Objective(
                    objective.sense, replace(objective.expr, constant=bound)
                )
            else:
                objective = Objective(
                    objective.sense, objective.expr.with_coef(site.var, bound)
                )
        else:
            c = constraints[site.constraint]
            if site.var is None:
                constraints[site.constraint] = replace(c, rhs=bound)
            else:
                constraints[site.constraint] = replace(c, lhs=c.lhs.with_coef(site.var, bound))

    return replace(
        model,
        constraints=tuple(constraints[c.name] for c in model.constraints),
        objective=objective,
        parameters=tuple((p, values[p]) for p, _ in model.parameters),
    )
