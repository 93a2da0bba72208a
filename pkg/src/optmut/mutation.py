"""Structured mutations of LP/MILP models, kill evaluation and coverage.

Value mutations perturb literals (rhs, coefficients, objective); decision
mutations change structure (senses, bounds, domains, dropped rows). One
mutant differs from its base by exactly one mutation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .errors import ModelInvalid, NoApplicableOperator, NoValidMutants
from .interface import InterfaceBinding, SuiteReport, TestSuite, run_suite
from .model import (
    INF,
    Constraint,
    Domain,
    LinearExpr,
    LpModel,
    Objective,
    Sense,
    Variable,
    instantiate,
    normalize,
    scale_objective,
)
from .solver import SolverConfig, SolveStatus, solve_lp, solve_milp

MUTATION_KINDS = (
    "rhs_delta",
    "coef_delta",
    "sense_flip",
    "objective_scale",
    "objective_coef_delta",
    "bound_drop",
    "domain_relax",
    "constraint_drop",
)

_SCALE_PALETTE = (10.0, 0.5, 2.0, 100.0)


@dataclass(frozen=True)
class Mutation:
    kind: str
    constraint: str | None = None
    variable: str | None = None
    delta: float | None = None
    factor: float | None = None
    sense: str | None = None  # new sense for sense_flip
    which: str | None = None  # lower | upper for bound_drop
    description: str = ""

    def describe(self) -> str:
        if self.description:
            return self.description
        if self.kind == "rhs_delta":
            return f"shift rhs of {self.constraint} by {self.delta:+g}"
        if self.kind == "coef_delta":
            return f"shift coefficient of {self.variable} in {self.constraint} by {self.delta:+g}"
        if self.kind == "sense_flip":
            return f"flip {self.constraint} to {self.sense}"
        if self.kind == "objective_scale":
            return f"scale objective by {self.factor:g}"
        if self.kind == "objective_coef_delta":
            return f"shift objective coefficient of {self.variable} by {self.delta:+g}"
        if self.kind == "bound_drop":
            return f"drop {self.which} bound of {self.variable}"
        if self.kind == "domain_relax":
            return f"relax {self.variable} to continuous"
        return f"drop constraint {self.constraint}"


@dataclass(frozen=True)
class Mutant:
    base_model: str
    mutation: Mutation
    model: LpModel


def validate_mutation(mutation: Mutation, model: LpModel) -> Mutation:
    kind = mutation.kind
    if kind not in MUTATION_KINDS:
        raise ModelInvalid(f"unknown mutation kind {mutation.kind!r}")
    cons = {c.name: c for c in model.constraints}
    var_by_name = {v.name: v for v in model.variables}
    if kind in ("rhs_delta", "coef_delta", "sense_flip", "constraint_drop"):
        if mutation.constraint not in cons:
            raise ModelInvalid(f"mutation targets unknown constraint {mutation.constraint!r}")
    if kind in ("coef_delta", "objective_coef_delta", "bound_drop", "domain_relax"):
        if mutation.variable not in var_by_name:
            raise ModelInvalid(f"mutation targets unknown variable {mutation.variable!r}")
    if kind in ("rhs_delta", "coef_delta", "objective_coef_delta"):
        if not mutation.delta:
            raise ModelInvalid("mutation delta must be nonzero")
    if kind == "sense_flip":
        if mutation.sense not in (s.value for s in Sense):
            raise ModelInvalid(f"unknown sense {mutation.sense!r}")
        if cons[mutation.constraint].sense.value == mutation.sense:
            raise ModelInvalid("sense_flip must change the sense")
    if kind == "objective_scale":
        if mutation.factor is None or mutation.factor <= 0 or mutation.factor == 1.0:
            raise ModelInvalid("objective_scale factor must be positive and != 1")
    if kind == "bound_drop":
        if mutation.which not in ("lower", "upper"):
            raise ModelInvalid("bound_drop needs which in {lower, upper}")
        v = var_by_name[mutation.variable]
        bound = v.lower if mutation.which == "lower" else v.upper
        if bound in (INF, -INF):
            raise ModelInvalid(f"{mutation.variable!r} has no finite {mutation.which} bound to drop")
    if kind == "domain_relax":
        if not var_by_name[mutation.variable].is_integer:
            raise ModelInvalid(f"{mutation.variable!r} is not integer")
    return mutation


def _without_sites(model: LpModel, constraint, var) -> LpModel:
    sites = tuple(
        s for s in model.param_sites if not (s.constraint == constraint and s.var == var)
    )
    return replace(model, param_sites=sites)


def apply_mutation(model: LpModel, mutation: Mutation) -> LpModel:
    """Apply one mutation; parameter sites whose slot is edited are dropped
    so the mutated literal survives scenario instantiation."""
    m = normalize(model)
    validate_mutation(mutation, m)
    kind = mutation.kind
    if kind == "objective_scale":
        return scale_objective(m, mutation.factor)
    if kind == "objective_coef_delta":
        expr = m.objective.expr
        coef = expr.coef(mutation.variable) + mutation.delta
        out = replace(m, objective=Objective(m.objective.sense, expr.with_coef(mutation.variable, coef)))
        return normalize(_without_sites(out, None, mutation.variable))
    if kind in ("bound_drop", "domain_relax"):
        variables = []
        for v in m.variables:
            if v.name != mutation.variable:
                variables.append(v)
            elif kind == "domain_relax":
                variables.append(replace(v, domain=Domain.CONTINUOUS))
            elif mutation.which == "lower":
                variables.append(replace(v, lower=-INF))
            else:
                variables.append(replace(v, upper=INF))
        return replace(m, variables=tuple(variables))
    if kind == "constraint_drop":
        constraints = tuple(c for c in m.constraints if c.name != mutation.constraint)
        sites = tuple(s for s in m.param_sites if s.constraint != mutation.constraint)
        return replace(m, constraints=constraints, param_sites=sites)
    constraints = []
    for c in m.constraints:
        if c.name != mutation.constraint:
            constraints.append(c)
        elif kind == "rhs_delta":
            constraints.append(replace(c, rhs=c.rhs + mutation.delta))
        elif kind == "sense_flip":
            constraints.append(replace(c, sense=Sense(mutation.sense)))
        else:  # coef_delta
            coef = c.lhs.coef(mutation.variable) + mutation.delta
            constraints.append(replace(c, lhs=c.lhs.with_coef(mutation.variable, coef)))
    out = replace(m, constraints=tuple(constraints))
    if kind == "rhs_delta":
        out = _without_sites(out, mutation.constraint, None)
    elif kind == "coef_delta":
        out = _without_sites(out, mutation.constraint, mutation.variable)
    return normalize(out)


def default_delta_policy(kind: str, value: float) -> float:
    """Perturbation magnitude: at least 1, else 10% of the literal."""
    return max(1.0, 0.1 * abs(value))


def _candidates(model: LpModel, operators):
    """Applicable (kind, target) pairs in canonical declaration order."""
    out = []
    for kind in MUTATION_KINDS:
        if kind not in operators:
            continue
        if kind == "rhs_delta":
            out += [(kind, c.name, None) for c in model.constraints]
        elif kind == "coef_delta":
            out += [
                (kind, c.name, var) for c in model.constraints for var, _ in c.lhs.terms
            ]
        elif kind == "sense_flip":
            for c in model.constraints:
                out += [
                    (kind, c.name, s.value) for s in Sense if s != c.sense
                ]
        elif kind == "objective_scale":
            out.append((kind, None, None))
        elif kind == "objective_coef_delta":
            out += [(kind, None, var) for var, _ in model.objective.expr.terms]
        elif kind == "bound_drop":
            for v in model.variables:
                if v.lower not in (INF, -INF):
                    out.append((kind, v.name, "lower"))
                if v.upper not in (INF, -INF):
                    out.append((kind, v.name, "upper"))
        elif kind == "domain_relax":
            out += [(kind, v.name, None) for v in model.variables if v.is_integer]
        elif kind == "constraint_drop":
            out += [(kind, c.name, None) for c in model.constraints]
    return out


def generate_mutants(model: LpModel, operators, budget: int, seed: int,
                     delta_policy=default_delta_policy) -> list[Mutant]:
    """Deterministically generate up to ``budget`` single-edit mutants.

    Candidate sites are enumerated in declaration order, shuffled with the
    seed, then materialized one by one; structural duplicates and mutants
    equal to the base are elided.
    """
    if budget < 1:
        raise ModelInvalid("budget must be >= 1")
    operators = set(operators)
    unknown = operators - set(MUTATION_KINDS)
    if unknown:
        raise ModelInvalid(f"unknown operators: {', '.join(sorted(unknown))}")
    if not operators:
        raise ModelInvalid("operators must be non-empty")
    base = normalize(model)
    candidates = _candidates(base, operators)
    if not candidates:
        raise NoApplicableOperator(
            f"no applicable operator among {', '.join(sorted(operators))} for model {base.name!r}"
        )
    rng = random.Random(seed)
    rng.shuffle(candidates)
    cons = {c.name: c for c in base.constraints}
    mutants: list[Mutant] = []
    seen = {base}
    for kind, a, b in candidates:
        if len(mutants) >= budget:
            break
        sign = rng.choice((-1.0, 1.0))
        if kind == "rhs_delta":
            delta = sign * delta_policy(kind, cons[a].rhs)
            mutation = Mutation(kind, constraint=a, delta=delta)
        elif kind == "coef_delta":
            delta = sign * delta_policy(kind, cons[a].lhs.coef(b))
            mutation = Mutation(kind, constraint=a, variable=b, delta=delta)
        elif kind == "sense_flip":
            mutation = Mutation(kind, constraint=a, sense=b)
        elif kind == "objective_scale":
            mutation = Mutation(kind, factor=rng.choice(_SCALE_PALETTE))
        elif kind == "objective_coef_delta":
            delta = sign * delta_policy(kind, base.objective.expr.coef(b))
            mutation = Mutation(kind, variable=b, delta=delta)
        elif kind == "bound_drop":
            mutation = Mutation(kind, variable=a, which=b)
        elif kind == "domain_relax":
            mutation = Mutation(kind, variable=a)
        else:
            mutation = Mutation(kind, constraint=a)
        try:
            mutated = apply_mutation(base, mutation)
        except ModelInvalid:
            continue
        if mutated in seen:
            continue
        seen.add(mutated)
        mutants.append(Mutant(base.name, mutation, mutated))
    return mutants


# ---------------------------------------------------------------------------
# verdicts, coverage, outcome matrix


@dataclass(frozen=True)
class MutantVerdict:
    outcome: str  # killed | survived | stillborn
    failing_cases: tuple[str, ...] = ()
    errored_cases: tuple[str, ...] = ()
    reason: str = ""


def evaluate_mutant(mutant: Mutant, suite: TestSuite, binding: InterfaceBinding,
                    cfg: SolverConfig | None = None,
                    base_report: SuiteReport | None = None,
                    base_model: LpModel | None = None) -> MutantVerdict:
    """Run the suite on the mutated model.

    The suite must pass on the base model; if the caller supplies neither a
    base report nor a base model to check, that precondition is trusted.
    A violated baseline downgrades the verdict to stillborn. Cases that
    error on the mutant count as kills (detection with a diagnostic).
    """
    cfg = cfg or SolverConfig()
    if base_report is None and base_model is not None:
        base_report = run_suite(suite, base_model, binding, cfg)
    if base_report is not None and not base_report.passed:
        return MutantVerdict("stillborn", reason="baseline_failed")
    report = run_suite(suite, mutant.model, binding, cfg)
    failing = tuple(c.name for c in report.cases if c.verdict == "fail")
    errored = tuple(c.name for c in report.cases if c.verdict == "error")
    if failing or errored:
        return MutantVerdict("killed", failing_cases=failing, errored_cases=errored)
    return MutantVerdict("survived")


def coverage(verdicts) -> "CoverageReport":
    """Mutation coverage: killed over non-stillborn, as an exact percentage."""
    verdicts = list(verdicts)
    killed = sum(1 for v in verdicts if v.outcome == "killed")
    survived = sum(1 for v in verdicts if v.outcome == "survived")
    stillborn = sum(1 for v in verdicts if v.outcome == "stillborn")
    total = killed + survived
    if total == 0:
        raise NoValidMutants("no non-stillborn mutants to score")
    return CoverageReport(killed, survived, stillborn, 100.0 * killed / total)


@dataclass(frozen=True)
class CoverageReport:
    killed: int
    survived: int
    stillborn: int
    mc_percent: float

    @property
    def total(self) -> int:
        return self.killed + self.survived

    @property
    def kill_ratio(self) -> float:
        return self.killed / self.total

    @property
    def kill_ratio_2dp(self) -> float:
        return round(self.kill_ratio, 2)


OUTCOME_CELLS = ("desired_kill", "survivor_gap", "baseline_broken")


def classify_outcome(suite_on_base: str, suite_on_mutant: str) -> str:
    """Outcome-matrix cell for a (base verdict, mutant verdict) pair."""
    if suite_on_base != "pass":
        return "baseline_broken"
    if suite_on_mutant == "pass":
        return "survivor_gap"
    return "desired_kill"


def probe_equivalence(base: LpModel, mutant_model: LpModel, seed: int,
                      cfg: SolverConfig | None = None, n_scenarios: int = 5) -> bool:
    """Seeded scenario probe for the equivalent-mutant problem.

    Returns True (potentially equivalent) when no probed scenario
    distinguishes base and mutant optimal solutions; equivalence is never
    proven, only flagged.
    """
    cfg = cfg or SolverConfig()
    base = normalize(base)
    rng = random.Random(seed)
    scenarios: list[dict[str, float]] = [{}]
    params = base.parameter_defaults()
    for _ in range(n_scenarios):
        if not params:
            break
        scenario = {}
        for p, v in params.items():
            scenario[p] = v * (1.0 + rng.choice((-0.25, 0.25))) + rng.choice((-1.0, 0.0, 1.0))
        scenarios.append(scenario)
    for scenario in scenarios:
        try:
            a = instantiate(base, scenario)
            b = instantiate(mutant_model, scenario)
        except Exception:
            return False  # scenario not applicable to mutant: distinguishable
        solve_a = solve_milp if a.has_integer_vars() else solve_lp
        solve_b = solve_milp if b.has_integer_vars() else solve_lp
        ra, rb = solve_a(a, cfg), solve_b(b, cfg)
        if ra.status != rb.status:
            return False
        if ra.status == SolveStatus.OPTIMAL:
            scale = max(1.0, abs(ra.objective))
            if abs(ra.objective - rb.objective) > 1e-6 * scale:
                return False
            for name, va in ra.values.items():
                if abs(va - rb.values.get(name, float("nan"))) > 1e-6:
                    return False
    return True
