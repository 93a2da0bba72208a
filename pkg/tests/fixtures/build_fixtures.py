#!/usr/bin/env python3
"""Author the scripted-provider fixtures for the bundled toy problems.

Runs the real campaign pipeline with an authoring provider, so every
stored response is guaranteed to parse, validate, pass its suite on its
model, and kill its mutant. Re-run after changing prompt templates:

    python tests/fixtures/build_fixtures.py [output_root]

Writes, per problem:
    problems/<name>/description.txt
    campaigns/<name>/<prompt-sha256>.txt
plus external-model fixtures used by check-external tests.
"""

import json
import shutil
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent.parent / "src"))

from optmut.agents.pipeline import run_campaign, adjust_tests, load_templates
from optmut.agents.providers import ScriptedProvider
from optmut.dsl import parse_model
from optmut.interface import run_suite
from optmut.jsonio import canonical_dumps, suite_to_json, write_json_atomic


def j(data) -> str:
    return canonical_dumps(data)


PROBLEMS: dict[str, dict] = {}

# --- factory: the two-product bench/machining plan ------------------------

PROBLEMS["factory"] = {
    "description": """\
A small fabrication shop makes two products each day: gearbox housings and
mounting brackets. Finishing one unit of either product occupies the
assembly-and-inspection bench for one hour, and the bench is available for
8 hours a day. The machining line offers 10 hours a day; a housing needs 2
machining hours, a bracket 1. Profit is 120 dollars per housing and 90
dollars per bracket. Decide how many housings and brackets to make per day
to maximize profit.
""",
    "interface": {
        "schema_version": 1,
        "kind": "interface",
        "interface": {
            "name": "factory",
            "quantities": [
                {"name": "housings", "description": "gearbox housings made per day", "units": "units"},
                {"name": "brackets", "description": "mounting brackets made per day", "units": "units"},
            ],
            "kpis": [
                {"name": "profit", "expr": "profit_housing * housings + profit_bracket * brackets"}
            ],
            "parameters": [
                {"name": "assembly_cap", "default": 8, "description": "bench hours per day"},
                {"name": "machine_cap", "default": 10, "description": "machining hours per day"},
                {"name": "profit_housing", "default": 120, "description": "profit per housing"},
                {"name": "profit_bracket", "default": 90, "description": "profit per bracket"},
            ],
        },
    },
    "suite": {
        "name": "factory_suite",
        "cases": [
            {
                "name": "default_optimum",
                "assertions": [
                    {"kind": "status_is", "status": "optimal"},
                    {"kind": "point_feasible", "point": {"housings": 2, "brackets": 6}},
                    {"kind": "kpi_compare", "kpi": "profit", "op": ">=", "value": 780, "tol": 1e-6},
                    {"kind": "point_dominated", "point": {"housings": 2, "brackets": 6}, "tol": 1e-6},
                ],
            },
            {
                "name": "tight_assembly",
                "scenario": {"assembly_cap": 7},
                "assertions": [
                    {"kind": "status_is", "status": "optimal"},
                    {"kind": "kpi_compare", "kpi": "profit", "op": "==", "value": 720, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"housings": 3, "brackets": 4}},
                ],
            },
            {
                "name": "machine_bound",
                "scenario": {"machine_cap": 8},
                "assertions": [
                    {"kind": "quantity_compare", "quantity": "housings", "op": "==", "value": 0, "tol": 1e-6},
                    {"kind": "kpi_compare", "kpi": "profit", "op": "==", "value": 720, "tol": 1e-6},
                ],
            },
            {
                "name": "profit_flip",
                "scenario": {"profit_housing": 140, "profit_bracket": 60},
                "assertions": [
                    {"kind": "quantity_compare", "quantity": "housings", "op": "==", "value": 5, "tol": 1e-6},
                    {"kind": "kpi_compare", "kpi": "profit", "op": "==", "value": 700, "tol": 1e-6},
                ],
            },
        ],
    },
    "model_dsl": """\
model factory

vars:
  x, y

params:
  assembly_cap = 8
  machine_cap = 10
  profit_housing = 120
  profit_bracket = 90

maximize: profit_housing x + profit_bracket y

subject_to:
  c1: x + y <= assembly_cap
  c2: 2 x + y <= machine_cap
""",
    "binding": {
        "quantities": [
            {"quantity": "housings", "to": "x"},
            {"quantity": "brackets", "to": "y"},
        ],
        "parameters": [
            {"interface": "assembly_cap", "model": "assembly_cap"},
            {"interface": "machine_cap", "model": "machine_cap"},
            {"interface": "profit_housing", "model": "profit_housing"},
            {"interface": "profit_bracket", "model": "profit_bracket"},
        ],
    },
    "mutations": [
        {"kind": "rhs_delta", "constraint": "c1", "delta": -1,
         "description": "tighten the bench-hours cap by one"}
    ],
}

# --- feedmix: minimize cost under >= coverage rows ------------------------

PROBLEMS["feedmix"] = {
    "description": """\
A feed blender mixes corn meal and soy meal. A kilogram of corn meal gives
2 units of protein and 1 unit of fiber and costs 3. A kilogram of soy meal
gives 1 unit of protein and 2 units of fiber and costs 4. Every batch must
supply at least 10 units of protein and at least 8 units of fiber. Choose
the cheapest mix meeting both requirements.
""",
    "interface": {
        "schema_version": 1,
        "kind": "interface",
        "interface": {
            "name": "feedmix",
            "quantities": [
                {"name": "corn", "description": "kg of corn meal", "units": "kg"},
                {"name": "soy", "description": "kg of soy meal", "units": "kg"},
            ],
            "kpis": [{"name": "total_cost", "expr": "corn_cost * corn + soy_cost * soy"}],
            "parameters": [
                {"name": "protein_req", "default": 10, "description": "protein units required"},
                {"name": "fiber_req", "default": 8, "description": "fiber units required"},
                {"name": "corn_cost", "default": 3, "description": "cost per kg corn"},
                {"name": "soy_cost", "default": 4, "description": "cost per kg soy"},
            ],
        },
    },
    "suite": {
        "name": "feedmix_suite",
        "cases": [
            {
                "name": "default_optimum",
                "assertions": [
                    {"kind": "status_is", "status": "optimal"},
                    {"kind": "kpi_compare", "kpi": "total_cost", "op": "==", "value": 20, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"corn": 4, "soy": 2}},
                    {"kind": "point_dominated", "point": {"corn": 8, "soy": 0}, "tol": 1e-6},
                ],
            },
            {
                "name": "richer_batch",
                "scenario": {"protein_req": 12, "fiber_req": 12},
                "assertions": [
                    {"kind": "kpi_compare", "kpi": "total_cost", "op": "==", "value": 28, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"corn": 4, "soy": 4}},
                ],
            },
            {
                "name": "cheap_soy",
                "scenario": {"soy_cost": 1},
                "assertions": [
                    {"kind": "quantity_compare", "quantity": "corn", "op": "==", "value": 0, "tol": 1e-6},
                    {"kind": "kpi_compare", "kpi": "total_cost", "op": "==", "value": 10, "tol": 1e-6},
                ],
            },
        ],
    },
    "model_dsl": """\
model feedmix

vars:
  corn, soy

params:
  protein_req = 10
  fiber_req = 8
  corn_cost = 3
  soy_cost = 4

minimize: corn_cost corn + soy_cost soy

subject_to:
  protein: 2 corn + soy >= protein_req
  fiber: corn + 2 soy >= fiber_req
""",
    "binding": {
        "quantities": [
            {"quantity": "corn", "to": "corn"},
            {"quantity": "soy", "to": "soy"},
        ],
        "parameters": [
            {"interface": "protein_req", "model": "protein_req"},
            {"interface": "fiber_req", "model": "fiber_req"},
            {"interface": "corn_cost", "model": "corn_cost"},
            {"interface": "soy_cost", "model": "soy_cost"},
        ],
    },
    "mutations": [
        {"kind": "sense_flip", "constraint": "protein", "sense": "<=",
         "description": "write the protein requirement in the wrong direction"}
    ],
}

# --- bakery: an equality row (standing order) -----------------------------

PROBLEMS["bakery"] = {
    "description": """\
A bakery sells plain and seeded loaves. A standing order requires the two
kinds together to total exactly 40 loaves a day. Flour is limited to 100
scoops a day; a plain loaf takes 2 scoops, a seeded loaf 3. Profit is 5 per
plain loaf and 7 per seeded loaf. Plan the day's bake to maximize profit.
""",
    "interface": {
        "schema_version": 1,
        "kind": "interface",
        "interface": {
            "name": "bakery",
            "quantities": [
                {"name": "plain", "description": "plain loaves baked", "units": "loaves"},
                {"name": "seeded", "description": "seeded loaves baked", "units": "loaves"},
            ],
            "kpis": [{"name": "profit", "expr": "profit_plain * plain + profit_seeded * seeded"}],
            "parameters": [
                {"name": "order_total", "default": 40, "description": "loaves required in total"},
                {"name": "flour_cap", "default": 100, "description": "flour scoops available"},
                {"name": "profit_plain", "default": 5, "description": "profit per plain loaf"},
                {"name": "profit_seeded", "default": 7, "description": "profit per seeded loaf"},
            ],
        },
    },
    "suite": {
        "name": "bakery_suite",
        "cases": [
            {
                "name": "default_optimum",
                "assertions": [
                    {"kind": "status_is", "status": "optimal"},
                    {"kind": "kpi_compare", "kpi": "profit", "op": "==", "value": 240, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"plain": 20, "seeded": 20}},
                    {"kind": "quantity_compare", "quantity": "seeded", "op": "==", "value": 20, "tol": 1e-6},
                ],
            },
            {
                "name": "less_flour",
                "scenario": {"flour_cap": 90},
                "assertions": [
                    {"kind": "kpi_compare", "kpi": "profit", "op": "==", "value": 220, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"plain": 30, "seeded": 10}},
                ],
            },
            {
                "name": "flour_shortage_infeasible",
                "scenario": {"flour_cap": 70},
                "assertions": [{"kind": "status_is", "status": "infeasible"}],
            },
        ],
    },
    "model_dsl": """\
model bakery

vars:
  plain, seeded

params:
  order_total = 40
  flour_cap = 100
  profit_plain = 5
  profit_seeded = 7

maximize: profit_plain plain + profit_seeded seeded

subject_to:
  order: plain + seeded == order_total
  flour: 2 plain + 3 seeded <= flour_cap
""",
    "binding": {
        "quantities": [
            {"quantity": "plain", "to": "plain"},
            {"quantity": "seeded", "to": "seeded"},
        ],
        "parameters": [
            {"interface": "order_total", "model": "order_total"},
            {"interface": "flour_cap", "model": "flour_cap"},
            {"interface": "profit_plain", "model": "profit_plain"},
            {"interface": "profit_seeded", "model": "profit_seeded"},
        ],
    },
    "mutations": [
        {"kind": "rhs_delta", "constraint": "order", "delta": 1,
         "description": "deliver one loaf more than the order"}
    ],
}

# --- crates: integer domains ----------------------------------------------

PROBLEMS["crates"] = {
    "description": """\
A courier van is loaded with two crate types. A type-A crate weighs 6 and
pays 5; a type-B crate weighs 4 and pays 4. The van carries at most 23
weight units. Crates cannot be split: only whole crates may be loaded.
Maximize the payout.
""",
    "interface": {
        "schema_version": 1,
        "kind": "interface",
        "interface": {
            "name": "crates",
            "quantities": [
                {"name": "crates_a", "description": "type-A crates loaded", "units": "crates"},
                {"name": "crates_b", "description": "type-B crates loaded", "units": "crates"},
            ],
            "kpis": [{"name": "payout", "expr": "pay_a * crates_a + pay_b * crates_b"}],
            "parameters": [
                {"name": "weight_cap", "default": 23, "description": "van weight capacity"},
                {"name": "pay_a", "default": 5, "description": "payout per type-A crate"},
                {"name": "pay_b", "default": 4, "description": "payout per type-B crate"},
            ],
        },
    },
    "suite": {
        "name": "crates_suite",
        "cases": [
            {
                "name": "default_optimum",
                "assertions": [
                    {"kind": "status_is", "status": "optimal"},
                    {"kind": "kpi_compare", "kpi": "payout", "op": "==", "value": 21, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"crates_a": 1, "crates_b": 4}},
                    {"kind": "point_dominated", "point": {"crates_a": 0, "crates_b": 5}, "tol": 1e-6},
                ],
            },
            {
                "name": "small_van",
                "scenario": {"weight_cap": 12},
                "assertions": [
                    {"kind": "kpi_compare", "kpi": "payout", "op": "==", "value": 12, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"crates_a": 0, "crates_b": 3}},
                ],
            },
            {
                "name": "bigger_van",
                "scenario": {"weight_cap": 24},
                "assertions": [
                    {"kind": "kpi_compare", "kpi": "payout", "op": "==", "value": 24, "tol": 1e-6}
                ],
            },
        ],
    },
    "model_dsl": """\
model crates

vars:
  a int
  b int

params:
  weight_cap = 23
  pay_a = 5
  pay_b = 4

maximize: pay_a a + pay_b b

subject_to:
  weight: 6 a + 4 b <= weight_cap
""",
    "binding": {
        "quantities": [
            {"quantity": "crates_a", "to": "a"},
            {"quantity": "crates_b", "to": "b"},
        ],
        "parameters": [
            {"interface": "weight_cap", "model": "weight_cap"},
            {"interface": "pay_a", "model": "pay_a"},
            {"interface": "pay_b", "model": "pay_b"},
        ],
    },
    "mutations": [
        {"kind": "domain_relax", "variable": "b",
         "description": "let type-B crates be split fractionally"}
    ],
}

# --- shifts: cost minimization with an infeasibility-revealing scenario ----

PROBLEMS["shifts"] = {
    "description": """\
A call centre staffs a day shift and a night shift. A day agent handles 30
calls per day and costs 200; a night agent handles 20 calls per day and
costs 150. At least 600 calls must be covered daily, and union rules cap
total staffing at 25 agents. Staff the centre at minimum cost.
""",
    "interface": {
        "schema_version": 1,
        "kind": "interface",
        "interface": {
            "name": "shifts",
            "quantities": [
                {"name": "day_agents", "description": "agents on the day shift", "units": "agents"},
                {"name": "night_agents", "description": "agents on the night shift", "units": "agents"},
            ],
            "kpis": [
                {"name": "total_cost", "expr": "day_cost * day_agents + night_cost * night_agents"},
                {"name": "calls_covered", "expr": "day_rate * day_agents + night_rate * night_agents"},
            ],
            "parameters": [
                {"name": "calls_req", "default": 600, "description": "calls to cover daily"},
                {"name": "max_agents", "default": 25, "description": "staffing cap"},
                {"name": "day_cost", "default": 200, "description": "cost per day agent"},
                {"name": "night_cost", "default": 150, "description": "cost per night agent"},
                {"name": "day_rate", "default": 30, "description": "calls handled per day agent"},
                {"name": "night_rate", "default": 20, "description": "calls handled per night agent"},
            ],
        },
    },
    "suite": {
        "name": "shifts_suite",
        "cases": [
            {
                "name": "default_optimum",
                "assertions": [
                    {"kind": "status_is", "status": "optimal"},
                    {"kind": "kpi_compare", "kpi": "total_cost", "op": "==", "value": 4000, "tol": 1e-6},
                    {"kind": "point_feasible", "point": {"day_agents": 20, "night_agents": 0}},
                    {"kind": "point_dominated", "point": {"day_agents": 10, "night_agents": 15}, "tol": 1e-6},
                ],
            },
            {
                "name": "busier_day",
                "scenario": {"calls_req": 750},
                "assertions": [
                    {"kind": "kpi_compare", "kpi": "total_cost", "op": "==", "value": 5000, "tol": 1e-6},
                    {"kind": "quantity_compare", "quantity": "night_agents", "op": "==", "value": 0, "tol": 1e-6},
                ],
            },
            {
                "name": "impossible_volume",
                "scenario": {"calls_req": 800},
                "assertions": [{"kind": "status_is", "status": "infeasible"}],
            },
        ],
    },
    "model_dsl": """\
model shifts

vars:
  d, n

params:
  calls_req = 600
  max_agents = 25
  day_cost = 200
  night_cost = 150
  day_rate = 30
  night_rate = 20

minimize: day_cost d + night_cost n

subject_to:
  calls: day_rate d + night_rate n >= calls_req
  headcount: d + n <= max_agents
""",
    "binding": {
        "quantities": [
            {"quantity": "day_agents", "to": "d"},
            {"quantity": "night_agents", "to": "n"},
        ],
        "parameters": [
            {"interface": "calls_req", "model": "calls_req"},
            {"interface": "max_agents", "model": "max_agents"},
            {"interface": "day_cost", "model": "day_cost"},
            {"interface": "night_cost", "model": "night_cost"},
            {"interface": "day_rate", "model": "day_rate"},
            {"interface": "night_rate", "model": "night_rate"},
        ],
    },
    "mutations": [
        {"kind": "sense_flip", "constraint": "headcount", "sense": ">=",
         "description": "write the staffing cap in the wrong direction"}
    ],
}


class AuthoringProvider:
    """Serves authored responses by agent, recording every exchange."""

    AGENT_MARKERS = {
        "operations-research analyst": "business_interface",
        "test engineer": "tests_generator",
        "optimization modeler": "optimization_modeler",
        "mutation-testing agent": "mutation_agent",
        "test adjuster": "test_adjuster",
    }

    def __init__(self, responses: dict[str, str]):
        self.responses = responses
        self.recorded: list[tuple[list, str]] = []

    def complete_with_usage(self, messages, **kwargs):
        system = messages[0]["content"]
        agent = next(
            (aid for marker, aid in self.AGENT_MARKERS.items() if marker in system), None
        )
        if agent is None or agent not in self.responses:
            raise RuntimeError(f"no authored response for agent {agent!r}")
        text = self.responses[agent]
        self.recorded.append((messages, text))
        return text, {"prompt_tokens": 0, "completion_tokens": 0}

    def complete(self, messages, **kwargs):
        return self.complete_with_usage(messages, **kwargs)[0]


def build_problem(name: str, spec: dict, root: Path) -> None:
    responses = {
        "business_interface": j(spec["interface"]),
        "tests_generator": j(spec["suite"]),
        "optimization_modeler": j({"model_dsl": spec["model_dsl"], "binding": spec["binding"]}),
        "mutation_agent": j({"mutations": spec["mutations"]}),
    }
    provider = AuthoringProvider(responses)
    result = run_campaign(provider, spec["description"], budget=10)
    if result.verdict != "pass":
        raise SystemExit(f"{name}: authored suite does not pass its model")
    if result.iterations != 1:
        raise SystemExit(f"{name}: expected convergence on iteration 1")
    killed = sum(1 for e in result.mutants if e.verdict.outcome == "killed")
    if killed != len(result.mutants) or killed < 1:
        raise SystemExit(
            f"{name}: authored mutant not killed "
            f"({[ (e.mutation.kind, e.verdict.outcome) for e in result.mutants ]})"
        )

    problem_dir = root / "problems" / name
    problem_dir.mkdir(parents=True, exist_ok=True)
    (problem_dir / "description.txt").write_text(spec["description"], "utf-8")
    fixture_dir = root / "campaigns" / name
    if fixture_dir.exists():
        shutil.rmtree(fixture_dir)
    for messages, text in provider.recorded:
        ScriptedProvider.store(fixture_dir, messages, text)
    print(f"{name}: {len(provider.recorded)} fixture responses, mutant killed")


EXTERNAL_RENAMED_FACTORY = """\
model assembly_plan

vars:
  gearbox_units, bracket_units

params:
  bench_hours = 8
  mill_hours = 10
  gross_gearbox = 120
  gross_bracket = 90

maximize: gross_gearbox gearbox_units + gross_bracket bracket_units

subject_to:
  bench: gearbox_units + bracket_units <= bench_hours
  mill: 2 gearbox_units + bracket_units <= mill_hours
"""

EXTERNAL_FLIPPED_FACTORY = """\
model factory_wrong_direction

vars:
  x, y

params:
  assembly_cap = 8
  machine_cap = 10
  profit_housing = 120
  profit_bracket = 90

maximize: profit_housing x + profit_bracket y

subject_to:
  c1: x + y >= assembly_cap
  c2: 2 x + y <= machine_cap
"""

EXTERNAL_RELAXED_CRATES = """\
model crates_relaxed

vars:
  a, b

params:
  weight_cap = 23
  pay_a = 5
  pay_b = 4

maximize: pay_a a + pay_b b

subject_to:
  weight: 6 a + 4 b <= weight_cap
"""

ADJUSTER_MAPPING_FACTORY = {
    "quantity_map": {"housings": "gearbox_units", "brackets": "bracket_units"},
    "parameter_map": {
        "assembly_cap": "bench_hours",
        "machine_cap": "mill_hours",
        "profit_housing": "gross_gearbox",
        "profit_bracket": "gross_bracket",
    },
}


def build_external(root: Path) -> None:
    ext = root / "external"
    ext.mkdir(parents=True, exist_ok=True)
    (ext / "factory_renamed.optmod").write_text(EXTERNAL_RENAMED_FACTORY, "utf-8")
    (ext / "factory_flipped.optmod").write_text(EXTERNAL_FLIPPED_FACTORY, "utf-8")
    (ext / "crates_relaxed.optmod").write_text(EXTERNAL_RELAXED_CRATES, "utf-8")

    # suite bundles for check-external runs
    for pname in ("factory", "crates"):
        spec = PROBLEMS[pname]
        bundle = {
            "schema_version": 1,
            "kind": "testsuite",
            "interface": spec["interface"]["interface"],
            "suite": spec["suite"],
        }
        write_json_atomic(ext / f"{pname}_suite.json", bundle)

    # adjuster mapping fixture for the renamed factory model
    adj_dir = root / "adjuster" / "factory_renamed"
    if adj_dir.exists():
        shutil.rmtree(adj_dir)
    provider = AuthoringProvider({"test_adjuster": j(ADJUSTER_MAPPING_FACTORY)})
    from optmut.jsonio import suite_from_json

    suite = suite_from_json(
        {
            "schema_version": 1,
            "kind": "testsuite",
            "interface": PROBLEMS["factory"]["interface"]["interface"],
            "suite": PROBLEMS["factory"]["suite"],
        }
    )
    model = parse_model(EXTERNAL_RENAMED_FACTORY).model
    adjusted, binding = adjust_tests(
        provider, PROBLEMS["factory"]["description"], model, suite
    )
    report = run_suite(adjusted, model, binding)
    if not report.passed:
        raise SystemExit("renamed external model should pass after adjustment")
    for messages, text in provider.recorded:
        ScriptedProvider.store(adj_dir, messages, text)
    print(f"external: 3 models, 2 suites, {len(provider.recorded)} adjuster fixture(s)")


def main() -> None:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else HERE
    for name, spec in PROBLEMS.items():
        build_problem(name, spec, root)
    build_external(root)


if __name__ == "__main__":
    main()
