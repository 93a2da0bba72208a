"""Problem-level testing API: business interfaces, bindings, assertions,
and the deterministic suite harness.

A BusinessInterface describes the shape of a solution (decision
quantities, KPIs, scenario parameters) independently of any particular
model; an InterfaceBinding ties those names to a concrete model. Suites
assert over SolutionRecords and always yield Pass/Fail/Error verdicts.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import (
    BindingIncomplete,
    DivisionByZero,
    EvaluationError,
    InterfaceInvalid,
)
from .model import LpModel, ObjSense, instantiate, normalize
from .solver import SolverConfig, SolveStatus, check_feasible, solve_lp, solve_milp

# ---------------------------------------------------------------------------
# KPI expression language: + - * / over quantities, parameters and constants


_EXPR_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[()+\-*/]))")


class _ExprParser:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        while pos < len(text):
            m = _EXPR_TOKEN.match(text, pos)
            if m is None:
                if text[pos:].strip():
                    raise InterfaceInvalid(f"bad expression {text!r} at offset {pos}")
                break
            if m.lastgroup == "num":
                self.tokens.append(("num", m.group().strip()))
            elif m.lastgroup == "name":
                self.tokens.append(("name", m.group("name")))
            else:
                self.tokens.append(("op", m.group("op")))
            pos = m.end()
        self.tokens.append(("end", ""))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        t = self.tokens[self.i]
        if t[0] != "end":
            self.i += 1
        return t

    # grammar: expr := term (('+'|'-') term)*   term := unary (('*'|'/') unary)*
    #          unary := '-' unary | atom        atom := num | name | '(' expr ')'
    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise InterfaceInvalid(f"trailing tokens in expression: {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.next()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.next()[1]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.next()
            return ("neg", self.unary())
        return self.atom()

    def atom(self):
        kind, text = self.next()
        if kind == "num":
            return ("num", float(text))
        if kind == "name":
            return ("ref", text)
        if (kind, text) == ("op", "("):
            node = self.expr()
            if self.next() != ("op", ")"):
                raise InterfaceInvalid("unbalanced parentheses in expression")
            return node
        raise InterfaceInvalid(f"unexpected token {text!r} in expression")


def parse_expr(text: str):
    return _ExprParser(text).parse()


def expr_names(node) -> set[str]:
    if node[0] == "ref":
        return {node[1]}
    if node[0] == "num":
        return set()
    if node[0] == "neg":
        return expr_names(node[1])
    return expr_names(node[1]) | expr_names(node[2])


def eval_expr(node, env: dict[str, float], kpi: str) -> float:
    op = node[0]
    if op == "num":
        return node[1]
    if op == "ref":
        return env[node[1]]
    if op == "neg":
        return -eval_expr(node[1], env, kpi)
    a = eval_expr(node[1], env, kpi)
    b = eval_expr(node[2], env, kpi)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0.0:
        raise DivisionByZero(kpi)
    return a / b


# ---------------------------------------------------------------------------
# interface types


@dataclass(frozen=True)
class Quantity:
    name: str
    description: str = ""
    units: str = ""


@dataclass(frozen=True)
class Kpi:
    name: str
    expr: str


@dataclass(frozen=True)
class InterfaceParam:
    name: str
    default: float
    description: str = ""


@dataclass(frozen=True)
class BusinessInterface:
    name: str
    quantities: tuple[Quantity, ...]
    kpis: tuple[Kpi, ...] = ()
    parameters: tuple[InterfaceParam, ...] = ()

    def quantity_names(self) -> list[str]:
        return [q.name for q in self.quantities]

    def parameter_names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def parameter_defaults(self) -> dict[str, float]:
        return {p.name: p.default for p in self.parameters}


def validate_interface(bi: BusinessInterface) -> BusinessInterface:
    seen: set[str] = set()
    for group in (bi.quantity_names(), [k.name for k in bi.kpis], bi.parameter_names()):
        for name in group:
            if not name:
                raise InterfaceInvalid("empty name in interface")
            if name in seen:
                raise InterfaceInvalid(f"duplicate interface name {name!r}")
            seen.add(name)
    known = set(bi.quantity_names()) | set(bi.parameter_names())
    for k in bi.kpis:
        refs = expr_names(parse_expr(k.expr))
        unknown = refs - known
        if unknown:
            raise InterfaceInvalid(
                f"KPI {k.name!r} references undeclared names: {', '.join(sorted(unknown))}"
            )
    return bi


# ---------------------------------------------------------------------------
# bindings


@dataclass(frozen=True)
class QuantityBinding:
    """Quantity -> model variable (or linear combination of variables)."""

    quantity: str
    terms: tuple[tuple[str, float], ...]
    constant: float = 0.0

    @staticmethod
    def to_var(quantity: str, var: str) -> "QuantityBinding":
        return QuantityBinding(quantity, ((var, 1.0),))

    @property
    def simple_var(self) -> str | None:
        if len(self.terms) == 1 and self.terms[0][1] == 1.0 and self.constant == 0.0:
            return self.terms[0][0]
        return None

    def evaluate(self, values: dict[str, float]) -> float:
        return self.constant + sum(c * values[v] for v, c in self.terms)


@dataclass(frozen=True)
class InterfaceBinding:
    quantities: tuple[QuantityBinding, ...]
    parameters: tuple[tuple[str, str], ...] = ()  # interface param -> model param

    def quantity_map(self) -> dict[str, QuantityBinding]:
        return {qb.quantity: qb for qb in self.quantities}

    def parameter_map(self) -> dict[str, str]:
        return dict(self.parameters)


def validate_binding(binding: InterfaceBinding, bi: BusinessInterface, model: LpModel):
    qmap = binding.quantity_map()
    missing = [q for q in bi.quantity_names() if q not in qmap]
    pmap = binding.parameter_map()
    missing += [p for p in bi.parameter_names() if p not in pmap]
    if missing:
        raise BindingIncomplete(missing)
    model_vars = set(model.variable_names())
    model_params = set(model.parameter_defaults())
    for qb in binding.quantities:
        for var, _ in qb.terms:
            if var not in model_vars:
                raise BindingIncomplete([f"{qb.quantity}->{var}"])
    for p, mp in binding.parameters:
        if mp not in model_params:
            raise BindingIncomplete([f"{p}->{mp}"])
    return binding


def invert_point(binding: InterfaceBinding, model: LpModel, point: dict[str, float]):
    """Translate quantity values to a full variable assignment.

    Requires every model variable to be the target of exactly one simple
    (name-to-name) quantity binding present in ``point``.
    """
    var_point: dict[str, float] = {}
    for qb in binding.quantities:
        var = qb.simple_var
        if var is None:
            raise EvaluationError(
                f"quantity {qb.quantity!r} is bound to an expression; "
                "point assertions need one-to-one variable bindings"
            )
        if qb.quantity in point:
            if var in var_point:
                raise EvaluationError(f"variable {var!r} bound by multiple quantities")
            var_point[var] = point[qb.quantity]
    missing = [v for v in model.variable_names() if v not in var_point]
    if missing:
        raise EvaluationError(
            f"point does not determine variables: {', '.join(sorted(missing))}"
        )
    return var_point


# ---------------------------------------------------------------------------
# solution records and assertions


@dataclass(frozen=True)
class SolutionRecord:
    status: SolveStatus
    quantities: dict[str, float]
    kpis: dict[str, float]
    objective: float | None


ASSERTION_KINDS = (
    "status_is",
    "kpi_compare",
    "quantity_compare",
    "point_feasible",
    "point_dominated",
)

_OPS = ("<=", ">=", "==", "<", ">")


@dataclass(frozen=True)
class Assertion:
    kind: str
    status: str | None = None
    kpi: str | None = None
    quantity: str | None = None
    op: str | None = None
    value: float | None = None
    tol: float = 0.0
    point: tuple[tuple[str, float], ...] | None = None
    relative: bool = False

    @staticmethod
    def status_is(status: str) -> "Assertion":
        return Assertion("status_is", status=status)

    @staticmethod
    def kpi_compare(kpi: str, op: str, value: float, tol: float = 0.0) -> "Assertion":
        return Assertion("kpi_compare", kpi=kpi, op=op, value=value, tol=tol)

    @staticmethod
    def quantity_compare(quantity: str, op: str, value: float, tol: float = 0.0) -> "Assertion":
        return Assertion("quantity_compare", quantity=quantity, op=op, value=value, tol=tol)

    @staticmethod
    def point_feasible(point: dict[str, float]) -> "Assertion":
        return Assertion("point_feasible", point=tuple(sorted(point.items())))

    @staticmethod
    def point_dominated(point: dict[str, float], tol: float = 0.0, relative: bool = False) -> "Assertion":
        return Assertion(
            "point_dominated", point=tuple(sorted(point.items())), tol=tol, relative=relative
        )

    def describe(self) -> str:
        if self.kind == "status_is":
            return f"status is {self.status}"
        if self.kind == "kpi_compare":
            return f"kpi {self.kpi} {self.op} {self.value} (tol {self.tol})"
        if self.kind == "quantity_compare":
            return f"quantity {self.quantity} {self.op} {self.value} (tol {self.tol})"
        if self.kind == "point_feasible":
            return f"point {dict(self.point)} is feasible"
        return f"optimum dominates point {dict(self.point)}"


@dataclass(frozen=True)
class TestCase:
    name: str
    scenario: tuple[tuple[str, float], ...] = ()
    assertions: tuple[Assertion, ...] = ()

    def scenario_map(self) -> dict[str, float]:
        return dict(self.scenario)


@dataclass(frozen=True)
class TestSuite:
    interface: BusinessInterface
    cases: tuple[TestCase, ...]
    name: str = "suite"

    @property
    def interface_name(self) -> str:
        return self.interface.name


def validate_suite(suite: TestSuite) -> TestSuite:
    validate_interface(suite.interface)
    bi = suite.interface
    qnames = set(bi.quantity_names())
    knames = {k.name for k in bi.kpis}
    pnames = set(bi.parameter_names())
    seen: set[str] = set()
    for case in suite.cases:
        if case.name in seen:
            raise InterfaceInvalid(f"duplicate case name {case.name!r}")
        seen.add(case.name)
        if not case.assertions:
            raise InterfaceInvalid(f"case {case.name!r} has no assertions")
        for p in case.scenario_map():
            if p not in pnames:
                raise InterfaceInvalid(f"case {case.name!r} overrides unknown parameter {p!r}")
        for a in case.assertions:
            if a.kind not in ASSERTION_KINDS:
                raise InterfaceInvalid(f"unknown assertion kind {a.kind!r}")
            if a.tol < 0:
                raise InterfaceInvalid("assertion tol must be >= 0")
            if a.kind == "status_is" and a.status not in [s.value for s in SolveStatus]:
                raise InterfaceInvalid(f"unknown status {a.status!r}")
            if a.kind == "kpi_compare" and a.kpi not in knames:
                raise InterfaceInvalid(f"assertion references unknown KPI {a.kpi!r}")
            if a.kind == "quantity_compare" and a.quantity not in qnames:
                raise InterfaceInvalid(f"assertion references unknown quantity {a.quantity!r}")
            if a.kind in ("kpi_compare", "quantity_compare") and a.op not in _OPS:
                raise InterfaceInvalid(f"unknown comparison op {a.op!r}")
            if a.kind in ("point_feasible", "point_dominated"):
                unknown = [q for q, _ in a.point if q not in qnames]
                if unknown:
                    raise InterfaceInvalid(
                        f"point assertion references unknown quantities: {', '.join(unknown)}"
                    )
    return suite


# ---------------------------------------------------------------------------
# evaluation


def evaluate_kpis(bi: BusinessInterface, quantities: dict[str, float]) -> dict[str, float]:
    """Recompute every KPI from quantity values and parameter defaults."""
    env = {**bi.parameter_defaults(), **quantities}
    return {k.name: eval_expr(parse_expr(k.expr), env, k.name) for k in bi.kpis}


def _kpis_for_scenario(bi, quantities, scenario):
    env = {**bi.parameter_defaults(), **scenario, **quantities}
    return {k.name: eval_expr(parse_expr(k.expr), env, k.name) for k in bi.kpis}


def build_solution_record(bi, binding, solution, scenario=None) -> SolutionRecord:
    """Map a solver solution to the interface level; KPIs are recomputed
    from quantities, never trusted from the model."""
    if solution.status != SolveStatus.OPTIMAL:
        return SolutionRecord(solution.status, {}, {}, None)
    quantities = {
        qb.quantity: float(qb.evaluate(solution.values)) for qb in binding.quantities
    }
    kpis = _kpis_for_scenario(bi, quantities, scenario or {})
    return SolutionRecord(solution.status, quantities, kpis, solution.objective)


def _compare(measured: float, op: str, target: float, tol: float) -> bool:
    if op == "<=":
        return measured <= target + tol
    if op == ">=":
        return measured >= target - tol
    if op == "==":
        return abs(measured - target) <= tol
    if op == "<":
        return measured < target - tol
    return measured > target + tol


@dataclass(frozen=True)
class AssertionResult:
    assertion: Assertion
    outcome: str  # pass | fail | error
    detail: str = ""


@dataclass(frozen=True)
class CaseResult:
    name: str
    verdict: str  # pass | fail | error
    results: tuple[AssertionResult, ...] = ()
    diagnostic: str = ""

    @property
    def reasons(self) -> tuple[str, ...]:
        return tuple(
            f"{r.assertion.describe()}: {r.detail}" if r.detail else r.assertion.describe()
            for r in self.results
            if r.outcome != "pass"
        )


@dataclass(frozen=True)
class SuiteReport:
    verdict: str  # pass | fail
    cases: tuple[CaseResult, ...]
    warnings: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def failing_case_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.cases if c.verdict != "pass")


def _evaluate_assertion(a, record, scenario_model, bi, binding, cfg) -> AssertionResult:
    try:
        if a.kind == "status_is":
            ok = record.status.value == a.status
            return AssertionResult(
                a, "pass" if ok else "fail", "" if ok else f"status was {record.status.value}"
            )
        if a.kind == "point_feasible":
            var_point = invert_point(binding, scenario_model, dict(a.point))
            ok, violations = check_feasible(scenario_model, var_point, cfg.feas_tol)
            detail = "" if ok else "; ".join(f"{n} slack {s:.6g}" for n, s in violations[:3])
            return AssertionResult(a, "pass" if ok else "fail", detail)
        if record.status != SolveStatus.OPTIMAL:
            return AssertionResult(a, "fail", f"no optimal solution ({record.status.value})")
        if a.kind == "kpi_compare":
            measured = record.kpis.get(a.kpi)
            if measured is None:
                return AssertionResult(a, "error", f"KPI {a.kpi!r} not in record")
            ok = _compare(measured, a.op, a.value, a.tol)
            return AssertionResult(a, "pass" if ok else "fail", "" if ok else f"measured {measured:.6g}")
        if a.kind == "quantity_compare":
            measured = record.quantities.get(a.quantity)
            if measured is None:
                return AssertionResult(a, "error", f"quantity {a.quantity!r} not in record")
            ok = _compare(measured, a.op, a.value, a.tol)
            return AssertionResult(a, "pass" if ok else "fail", "" if ok else f"measured {measured:.6g}")
        if a.kind == "point_dominated":
            var_point = invert_point(binding, scenario_model, dict(a.point))
            point_obj = scenario_model.objective.expr.evaluate(var_point)
            tol = a.tol * max(1.0, abs(point_obj)) if a.relative else a.tol
            if scenario_model.objective.sense == ObjSense.MAXIMIZE:
                ok = record.objective >= point_obj - tol
            else:
                ok = record.objective <= point_obj + tol
            detail = "" if ok else f"optimum {record.objective:.6g} vs point {point_obj:.6g}"
            return AssertionResult(a, "pass" if ok else "fail", detail)
        return AssertionResult(a, "error", f"unknown assertion kind {a.kind!r}")
    except EvaluationError as exc:
        return AssertionResult(a, "error", str(exc))


def run_suite(suite: TestSuite, model: LpModel, binding: InterfaceBinding,
              cfg: SolverConfig | None = None) -> SuiteReport:
    """Run every case: instantiate scenario, solve, build the record, then
    evaluate all assertions (no short-circuit, so failure reasons are
    complete). Fully deterministic."""
    cfg = cfg or SolverConfig()
    validate_suite(suite)
    bi = suite.interface
    base = normalize(model)
    validate_binding(binding, bi, base)
    pmap = binding.parameter_map()
    warnings: list[str] = []
    if not suite.cases:
        warnings.append("EmptySuite: no cases; suite passes vacuously")
    results: list[CaseResult] = []
    for case in suite.cases:
        try:
            scenario = case.scenario_map()
            overrides = {pmap[p]: v for p, v in scenario.items()}
            scenario_model = instantiate(base, overrides)
            solve = solve_milp if scenario_model.has_integer_vars() else solve_lp
            solution = solve(scenario_model, cfg)
            record = build_solution_record(bi, binding, solution, scenario)
            evaluated = tuple(
                _evaluate_assertion(a, record, scenario_model, bi, binding, cfg)
                for a in case.assertions
            )
            if any(r.outcome == "error" for r in evaluated):
                verdict = "error"
            elif any(r.outcome == "fail" for r in evaluated):
                verdict = "fail"
            else:
                verdict = "pass"
            results.append(CaseResult(case.name, verdict, evaluated))
        except (EvaluationError, DivisionByZero) as exc:
            results.append(CaseResult(case.name, "error", (), str(exc)))
    verdict = "pass" if all(c.verdict == "pass" for c in results) else "fail"
    return SuiteReport(verdict, tuple(results), tuple(warnings))
