"""Schema-validated JSON bundles for machine-facing artifacts.

Every bundle carries schema_version 1 and a ``kind`` discriminator;
unknown fields are rejected. Serialization is canonical (sorted keys,
2-space indent, shortest float repr, LF) so golden files are stable.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from importlib import resources

import jsonschema

from .errors import SchemaViolation
from .interface import (
    Assertion,
    BusinessInterface,
    InterfaceBinding,
    InterfaceParam,
    Kpi,
    Quantity,
    QuantityBinding,
    TestCase,
    TestSuite,
    validate_interface,
    validate_suite,
)
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
    validate,
)
from .mutation import CoverageReport, Mutation, MutantVerdict

_SCHEMA_CACHE: dict[str, dict] = {}

KINDS = (
    "model",
    "interface",
    "binding",
    "testsuite",
    "mutants",
    "report",
    "aggregate_report",
)


def load_schema(kind: str) -> dict:
    if kind not in _SCHEMA_CACHE:
        text = resources.files("optmut").joinpath(f"schemas/{kind}.json").read_text("utf-8")
        _SCHEMA_CACHE[kind] = json.loads(text)
    return _SCHEMA_CACHE[kind]


def validate_bundle(data, kind: str):
    schema = load_schema(kind)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise SchemaViolation(err.message, pointer)
    return data


def canonical_dumps(value) -> str:
    return json.dumps(value, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json_atomic(path, value) -> None:
    """Write canonical JSON via temp file + rename."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".optmut-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(canonical_dumps(value))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# model


def _bound_to_json(v: float):
    return None if v in (INF, -INF) else v


def model_to_json(model: LpModel) -> dict:
    validate(model)
    return {
        "schema_version": 1,
        "kind": "model",
        "model": {
            "name": model.name,
            "variables": [
                {
                    "name": v.name,
                    "lower": _bound_to_json(v.lower),
                    "upper": _bound_to_json(v.upper),
                    "domain": v.domain.value,
                }
                for v in model.variables
            ],
            "constraints": [
                {
                    "name": c.name,
                    "terms": [[var, coef] for var, coef in c.lhs.terms],
                    "sense": c.sense.value,
                    "rhs": c.rhs,
                }
                for c in model.constraints
            ],
            "objective": {
                "sense": model.objective.sense.value,
                "terms": [[var, coef] for var, coef in model.objective.expr.terms],
                "constant": model.objective.expr.constant,
            },
            "parameters": [{"name": p, "default": d} for p, d in model.parameters],
            "param_sites": [
                {"param": s.param, "constraint": s.constraint, "var": s.var, "scale": s.scale}
                for s in model.param_sites
            ],
        },
    }


def model_from_json(data: dict) -> LpModel:
    validate_bundle(data, "model")
    m = data["model"]
    variables = tuple(
        Variable(
            v["name"],
            -INF if v.get("lower") is None else float(v["lower"]),
            INF if v.get("upper", None) is None else float(v["upper"]),
            Domain(v.get("domain", "continuous")),
        )
        for v in m["variables"]
    )
    constraints = tuple(
        Constraint(
            c["name"],
            LinearExpr(tuple((t[0], float(t[1])) for t in c["terms"])),
            Sense(c["sense"]),
            float(c["rhs"]),
        )
        for c in m["constraints"]
    )
    obj = m["objective"]
    objective = Objective(
        ObjSense(obj["sense"]),
        LinearExpr(tuple((t[0], float(t[1])) for t in obj["terms"]), float(obj.get("constant", 0.0))),
    )
    model = LpModel(
        m["name"],
        variables,
        constraints,
        objective,
        parameters=tuple((p["name"], float(p["default"])) for p in m.get("parameters", [])),
        param_sites=tuple(
            ParamSite(s["param"], s.get("constraint"), s.get("var"), float(s.get("scale", 1.0)))
            for s in m.get("param_sites", [])
        ),
    )
    return validate(model)


# ---------------------------------------------------------------------------
# interface / binding


def _interface_body(bi: BusinessInterface) -> dict:
    body = {
        "name": bi.name,
        "quantities": [
            {"name": q.name, **({"description": q.description} if q.description else {}),
             **({"units": q.units} if q.units else {})}
            for q in bi.quantities
        ],
        "kpis": [{"name": k.name, "expr": k.expr} for k in bi.kpis],
        "parameters": [
            {"name": p.name, "default": p.default,
             **({"description": p.description} if p.description else {})}
            for p in bi.parameters
        ],
    }
    return body


def _interface_from_body(body: dict) -> BusinessInterface:
    bi = BusinessInterface(
        body["name"],
        tuple(
            Quantity(q["name"], q.get("description", ""), q.get("units", ""))
            for q in body["quantities"]
        ),
        tuple(Kpi(k["name"], k["expr"]) for k in body.get("kpis", [])),
        tuple(
            InterfaceParam(p["name"], float(p["default"]), p.get("description", ""))
            for p in body.get("parameters", [])
        ),
    )
    return validate_interface(bi)


def interface_to_json(bi: BusinessInterface) -> dict:
    return {"schema_version": 1, "kind": "interface", "interface": _interface_body(bi)}


def interface_from_json(data: dict) -> BusinessInterface:
    validate_bundle(data, "interface")
    return _interface_from_body(data["interface"])


def binding_to_json(binding: InterfaceBinding) -> dict:
    quantities = []
    for qb in binding.quantities:
        var = qb.simple_var
        if var is not None:
            quantities.append({"quantity": qb.quantity, "to": var})
        else:
            entry = {"quantity": qb.quantity, "terms": [[v, c] for v, c in qb.terms]}
            if qb.constant:
                entry["constant"] = qb.constant
            quantities.append(entry)
    return {
        "schema_version": 1,
        "kind": "binding",
        "binding": {
            "quantities": quantities,
            "parameters": [{"interface": p, "model": mp} for p, mp in binding.parameters],
        },
    }


def binding_from_json(data: dict) -> InterfaceBinding:
    validate_bundle(data, "binding")
    b = data["binding"]
    quantities = []
    for q in b["quantities"]:
        if "to" in q:
            quantities.append(QuantityBinding.to_var(q["quantity"], q["to"]))
        else:
            quantities.append(
                QuantityBinding(
                    q["quantity"],
                    tuple((t[0], float(t[1])) for t in q["terms"]),
                    float(q.get("constant", 0.0)),
                )
            )
    parameters = tuple((p["interface"], p["model"]) for p in b.get("parameters", []))
    return InterfaceBinding(tuple(quantities), parameters)


# ---------------------------------------------------------------------------
# test suites


def _assertion_to_json(a: Assertion) -> dict:
    out: dict = {"kind": a.kind}
    if a.kind == "status_is":
        out["status"] = a.status
    elif a.kind == "kpi_compare":
        out.update(kpi=a.kpi, op=a.op, value=a.value)
        if a.tol:
            out["tol"] = a.tol
    elif a.kind == "quantity_compare":
        out.update(quantity=a.quantity, op=a.op, value=a.value)
        if a.tol:
            out["tol"] = a.tol
    else:
        out["point"] = {q: v for q, v in a.point}
        if a.tol:
            out["tol"] = a.tol
        if a.relative:
            out["relative"] = True
    return out


def _assertion_from_json(data: dict) -> Assertion:
    kind = data["kind"]
    if kind == "status_is":
        return Assertion.status_is(data["status"])
    if kind == "kpi_compare":
        return Assertion.kpi_compare(data["kpi"], data["op"], float(data["value"]), float(data.get("tol", 0.0)))
    if kind == "quantity_compare":
        return Assertion.quantity_compare(
            data["quantity"], data["op"], float(data["value"]), float(data.get("tol", 0.0))
        )
    point = {q: float(v) for q, v in data["point"].items()}
    if kind == "point_feasible":
        return Assertion.point_feasible(point)
    return Assertion.point_dominated(point, float(data.get("tol", 0.0)), bool(data.get("relative", False)))


def suite_to_json(suite: TestSuite) -> dict:
    return {
        "schema_version": 1,
        "kind": "testsuite",
        "interface": _interface_body(suite.interface),
        "suite": {
            "name": suite.name,
            "cases": [
                {
                    "name": c.name,
                    **({"scenario": dict(c.scenario)} if c.scenario else {}),
                    "assertions": [_assertion_to_json(a) for a in c.assertions],
                }
                for c in suite.cases
            ],
        },
    }


def suite_from_json(data: dict) -> TestSuite:
    validate_bundle(data, "testsuite")
    bi = _interface_from_body(data["interface"])
    s = data["suite"]
    cases = tuple(
        TestCase(
            c["name"],
            tuple(sorted((p, float(v)) for p, v in c.get("scenario", {}).items())),
            tuple(_assertion_from_json(a) for a in c["assertions"]),
        )
        for c in s["cases"]
    )
    return validate_suite(TestSuite(bi, cases, s["name"]))


# ---------------------------------------------------------------------------
# mutations / coverage / reports


def mutation_to_json(mutation: Mutation) -> dict:
    out: dict = {"kind": mutation.kind}
    for field in ("constraint", "variable", "delta", "factor", "sense", "which"):
        value = getattr(mutation, field)
        if value is not None:
            out[field] = value
    if mutation.description:
        out["description"] = mutation.description
    return out


def mutation_from_json(data: dict) -> Mutation:
    return Mutation(
        kind=data["kind"],
        constraint=data.get("constraint"),
        variable=data.get("variable"),
        delta=None if data.get("delta") is None else float(data["delta"]),
        factor=None if data.get("factor") is None else float(data["factor"]),
        sense=data.get("sense"),
        which=data.get("which"),
        description=data.get("description", ""),
    )


def coverage_to_json(report: CoverageReport) -> dict:
    return {
        "killed": report.killed,
        "survived": report.survived,
        "stillborn": report.stillborn,
        "mc_percent": report.mc_percent,
        "coverage": report.kill_ratio_2dp,
    }


def mutant_entry_to_json(mutant_id: str, mutation: Mutation, verdict: MutantVerdict,
                         potentially_equivalent: bool = False) -> dict:
    out = {
        "id": mutant_id,
        "mutation": mutation_to_json(mutation),
        "outcome": verdict.outcome,
    }
    if verdict.failing_cases:
        out["failing_cases"] = list(verdict.failing_cases)
    if verdict.errored_cases:
        out["errored_cases"] = list(verdict.errored_cases)
    if verdict.reason:
        out["reason"] = verdict.reason
    if potentially_equivalent:
        out["potentially_equivalent"] = True
    return out


def mutants_bundle(base_model: str, entries: list[dict], report: CoverageReport | None) -> dict:
    out = {
        "schema_version": 1,
        "kind": "mutants",
        "base_model": base_model,
        "mutants": entries,
    }
    if report is not None:
        out["coverage"] = coverage_to_json(report)
    return validate_bundle(out, "mutants")


# ---------------------------------------------------------------------------
# generic bundle IO


def read_json_bundle(path):
    """Load, validate and convert a bundle; dispatches on its kind field."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaViolation(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}")
    if not isinstance(data, dict) or data.get("kind") not in KINDS:
        raise SchemaViolation(f"missing or unknown bundle kind (expected one of {', '.join(KINDS)})")
    kind = data["kind"]
    if kind == "model":
        return model_from_json(data)
    if kind == "interface":
        return interface_from_json(data)
    if kind == "binding":
        return binding_from_json(data)
    if kind == "testsuite":
        return suite_from_json(data)
    # mutants / reports stay as validated dicts
    return validate_bundle(data, kind)


def write_json_bundle(value, path) -> None:
    """Serialize a typed value (or pre-built bundle dict) canonically."""
    if isinstance(value, LpModel):
        data = model_to_json(value)
    elif isinstance(value, BusinessInterface):
        data = interface_to_json(value)
    elif isinstance(value, InterfaceBinding):
        data = binding_to_json(value)
    elif isinstance(value, TestSuite):
        data = suite_to_json(value)
    elif isinstance(value, dict) and value.get("kind") in KINDS:
        data = validate_bundle(value, value["kind"])
    else:
        raise SchemaViolation(f"cannot serialize {type(value).__name__} as a bundle")
    write_json_atomic(path, data)
