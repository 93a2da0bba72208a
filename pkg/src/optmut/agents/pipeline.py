"""The multi-agent workflow.

Four generation agents (interface, tests, modeler, mutations) feed an
iterative campaign loop: tests and model are regenerated from scratch each
round with no failure feedback carried over, until the suite passes on the
model or the iteration budget runs out. Mutants are then evaluated as the
suite-adequacy measure. A separate adjuster reconciles an existing suite
with an externally authored model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template

from ..dsl import ModelParseError, parse_model, serialize_model
from ..errors import (
    BindingIncomplete,
    InterfaceInvalid,
    LlmOutputInvalid,
    SchemaViolation,
    UnbindableSuite,
)
from ..interface import (
    BusinessInterface,
    InterfaceBinding,
    QuantityBinding,
    TestSuite,
    run_suite,
    validate_binding,
    validate_suite,
)
from ..jsonio import (
    binding_from_json,
    canonical_dumps,
    interface_from_json,
    suite_from_json,
    suite_to_json,
    interface_to_json,
)
from ..model import LpModel, normalize
from ..mutation import (
    CoverageReport,
    Mutant,
    Mutation,
    MutantVerdict,
    MUTATION_KINDS,
    apply_mutation,
    coverage,
    evaluate_mutant,
    generate_mutants,
    probe_equivalence,
    validate_mutation,
)
from ..solver import SolverConfig
from .providers import prompt_key

TEMPLATE_IDS = (
    "business_interface",
    "tests_generator",
    "optimization_modeler",
    "mutation_agent",
    "test_adjuster",
)

DEFAULT_MUTATION_RULES = (
    "Prefer the hardest-to-detect single edits: nudge one right-hand side or "
    "coefficient by a small amount, flip one constraint sense, drop one bound "
    "or constraint, or relax one integer domain."
)

EDIT_DISTANCE_THRESHOLD = 0.4


class Trace:
    """Append-only, timestamp-free event log (JSONL)."""

    def __init__(self):
        self.events: list[dict] = []

    def record(self, event: str, **fields) -> None:
        self.events.append({"event": event, **fields})

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(e, sort_keys=True, ensure_ascii=False) + "\n" for e in self.events
        )


def load_templates(override_dir=None) -> dict[str, tuple[Template, Template]]:
    """Load prompt templates (system, user); files in override_dir win."""
    out: dict[str, tuple[Template, Template]] = {}
    for tid in TEMPLATE_IDS:
        text = None
        if override_dir is not None:
            p = Path(override_dir) / f"{tid}.txt"
            if p.is_file():
                text = p.read_text("utf-8")
        if text is None:
            text = resources.files("optmut").joinpath(f"prompts/{tid}.txt").read_text("utf-8")
        if "---user---" not in text:
            raise LlmOutputInvalid(f"template {tid} lacks a ---user--- separator")
        system, user = text.split("---user---", 1)
        out[tid] = (Template(system.strip()), Template(user.strip()))
    return out


def render_prompt(templates, template_id: str, **fields) -> list[dict]:
    system_t, user_t = templates[template_id]
    return [
        {"role": "system", "content": system_t.substitute(**fields)},
        {"role": "user", "content": user_t.substitute(**fields)},
    ]


_FENCE_RE = re.compile(r"^\s*```[a-zA-Z]*\s*\n(.*)\n\s*```\s*$", re.DOTALL)


def _parse_json_output(text: str) -> dict:
    m = _FENCE_RE.match(text)
    if m:
        text = m.group(1)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"provider output is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise SchemaViolation("provider output must be a JSON object")
    return data


_RECOVERABLE = (SchemaViolation, InterfaceInvalid, ModelParseError, BindingIncomplete)


def _call_agent(provider, templates, template_id, fields, parse, trace, temperature=1.0):
    """One provider call with a single structured reprompt on validation
    failure, then a hard LlmOutputInvalid."""
    messages = render_prompt(templates, template_id, **fields)
    text, usage = provider.complete_with_usage(messages, temperature=temperature)
    if trace is not None:
        trace.record("agent_call", agent=template_id, prompt_sha256=prompt_key(messages),
                     attempt=1, **usage)
    try:
        return parse(text)
    except _RECOVERABLE as first_error:
        retry = messages + [
            {"role": "assistant", "content": text},
            {
                "role": "user",
                "content": (
                    f"That output failed validation: {first_error}\n"
                    "Return the corrected JSON document only."
                ),
            },
        ]
        text2, usage2 = provider.complete_with_usage(retry, temperature=temperature)
        if trace is not None:
            trace.record("agent_call", agent=template_id, prompt_sha256=prompt_key(retry),
                         attempt=2, **usage2)
        try:
            return parse(text2)
        except _RECOVERABLE as second_error:
            raise LlmOutputInvalid(
                f"{template_id} output invalid after reprompt: {second_error}",
                diagnostics=(str(first_error), str(second_error)),
            )


def gen_business_interface(provider, td: str, templates=None, trace=None) -> BusinessInterface:
    if not td or not td.strip():
        raise ValueError("problem description is empty")
    templates = templates or load_templates()

    def parse(text):
        return interface_from_json(_parse_json_output(text))

    bi = _call_agent(provider, templates, "business_interface",
                     {"problem_description": td.strip()}, parse, trace)
    if trace is not None:
        trace.record("artifact", name="interface", interface=bi.name)
    return bi


def gen_tests(provider, td: str, bi: BusinessInterface, iteration: int = 1,
              templates=None, trace=None) -> TestSuite:
    templates = templates or load_templates()
    if not bi.kpis and trace is not None:
        trace.record("warning", message="NoKpis: interface declares no KPIs")
    fields = {
        "problem_description": td.strip(),
        "interface_json": canonical_dumps(interface_to_json(bi)).strip(),
        "iteration": str(iteration),
    }

    def parse(text):
        data = _parse_json_output(text)
        bundle = {
            "schema_version": 1,
            "kind": "testsuite",
            "interface": interface_to_json(bi)["interface"],
            "suite": data,
        }
        return suite_from_json(bundle)

    suite = _call_agent(provider, templates, "tests_generator", fields, parse, trace)
    if trace is not None:
        trace.record("artifact", name="testsuite", cases=len(suite.cases), iteration=iteration)
    return suite


def gen_model(provider, td: str, bi: BusinessInterface, suite: TestSuite,
              iteration: int = 1, templates=None, trace=None):
    templates = templates or load_templates()
    fields = {
        "problem_description": td.strip(),
        "interface_json": canonical_dumps(interface_to_json(bi)).strip(),
        "suite_json": canonical_dumps(suite_to_json(suite)).strip(),
        "iteration": str(iteration),
    }

    def parse(text):
        data = _parse_json_output(text)
        if "model_dsl" not in data or "binding" not in data:
            raise SchemaViolation("modeler output needs model_dsl and binding fields")
        model = parse_model(str(data["model_dsl"])).model
        binding = binding_from_json(
            {"schema_version": 1, "kind": "binding", "binding": data["binding"]}
        )
        validate_binding(binding, bi, model)
        return model, binding

    model, binding = _call_agent(provider, templates, "optimization_modeler", fields, parse, trace)
    if trace is not None:
        trace.record("artifact", name="model", model=model.name, iteration=iteration)
    return model, binding


def gen_mutations(provider, td: str, bi: BusinessInterface, suite: TestSuite,
                  model: LpModel, rules: str = DEFAULT_MUTATION_RULES,
                  n_mutations: int = 1, seed: int = 0,
                  templates=None, trace=None) -> list[Mutation]:
    """Mutation proposals restricted to the closed operator set; anything
    invalid is dropped, and a seeded engine-local fallback guarantees
    progress when nothing usable remains."""
    templates = templates or load_templates()
    fields = {
        "problem_description": td.strip(),
        "interface_json": canonical_dumps(interface_to_json(bi)).strip(),
        "suite_json": canonical_dumps(suite_to_json(suite)).strip(),
        "model_dsl": serialize_model(model),
        "mutation_rules": rules,
        "n_mutations": str(n_mutations),
    }

    def parse(text):
        data = _parse_json_output(text)
        if not isinstance(data.get("mutations"), list):
            raise SchemaViolation("mutation agent output needs a mutations array")
        return data["mutations"]

    proposals: list[dict] = []
    try:
        proposals = _call_agent(provider, templates, "mutation_agent", fields, parse, trace)
    except LlmOutputInvalid as exc:
        if trace is not None:
            trace.record("warning", message=f"mutation agent unusable: {exc}")
    accepted: list[Mutation] = []
    for i, raw in enumerate(proposals):
        try:
            if not isinstance(raw, dict):
                raise SchemaViolation("mutation proposal must be an object")
            from ..jsonio import mutation_from_json, validate_bundle  # local to avoid cycle

            mutation = mutation_from_json(raw)
            validate_mutation(mutation, model)
            accepted.append(mutation)
        except Exception as exc:
            if trace is not None:
                trace.record("dropped_mutation", index=i, reason=str(exc))
    if not accepted:
        fallback = generate_mutants(model, set(MUTATION_KINDS), n_mutations, seed)
        accepted = [m.mutation for m in fallback]
        if trace is not None:
            trace.record("fallback_mutations", count=len(accepted), seed=seed)
    return accepted[:n_mutations]


@dataclass
class CampaignState:
    td: str
    budget: int
    bi: BusinessInterface | None = None
    suite: TestSuite | None = None
    model: LpModel | None = None
    binding: InterfaceBinding | None = None
    mutations: list[Mutation] = field(default_factory=list)
    iteration: int = 0
    trace: Trace = field(default_factory=Trace)


@dataclass(frozen=True)
class MutantReportEntry:
    mutant_id: str
    mutation: Mutation
    verdict: MutantVerdict
    potentially_equivalent: bool = False


@dataclass
class CampaignResult:
    interface: BusinessInterface
    suite: TestSuite
    model: LpModel
    binding: InterfaceBinding
    mutants: list[MutantReportEntry]
    coverage: CoverageReport | None
    iterations: int
    verdict: str  # pass | fail
    trace: Trace


def run_campaign(provider, td: str, budget: int = 10,
                 cfg: SolverConfig | None = None, templates=None,
                 seed: int = 0, n_mutations: int = 1) -> CampaignResult:
    """Iteratively regenerate tests and model until the suite passes (or
    the budget ends), then score the proposed mutants. No state carries
    between iterations other than the interface (Monte-Carlo style)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cfg = cfg or SolverConfig()
    templates = templates or load_templates()
    state = CampaignState(td=td, budget=budget)
    state.bi = gen_business_interface(provider, td, templates, state.trace)
    report = None
    for iteration in range(1, budget + 1):
        state.iteration = iteration
        state.suite = gen_tests(provider, td, state.bi, iteration, templates, state.trace)
        state.model, state.binding = gen_model(
            provider, td, state.bi, state.suite, iteration, templates, state.trace
        )
        report = run_suite(state.suite, state.model, state.binding, cfg)
        state.trace.record(
            "suite_run",
            iteration=iteration,
            verdict=report.verdict,
            cases=[[c.name, c.verdict] for c in report.cases],
        )
        state.mutations = gen_mutations(
            provider, td, state.bi, state.suite, state.model,
            n_mutations=n_mutations, seed=seed, templates=templates, trace=state.trace,
        )
        if report.passed:
            break

    entries: list[MutantReportEntry] = []
    base = normalize(state.model)
    for i, mutation in enumerate(state.mutations, start=1):
        mutant_id = f"m{i}"
        try:
            mutant = Mutant(base.name, mutation, apply_mutation(base, mutation))
        except Exception as exc:
            entries.append(
                MutantReportEntry(mutant_id, mutation, MutantVerdict("stillborn", reason=str(exc)))
            )
            continue
        verdict = evaluate_mutant(mutant, state.suite, state.binding, cfg, base_report=report)
        equivalent = False
        if verdict.outcome == "survived":
            equivalent = probe_equivalence(base, mutant.model, seed)
        entries.append(MutantReportEntry(mutant_id, mutation, verdict, equivalent))
    state.trace.record(
        "mutants_evaluated",
        outcomes=[[e.mutant_id, e.verdict.outcome] for e in entries],
    )
    try:
        cov = coverage([e.verdict for e in entries])
    except Exception:
        cov = None
    return CampaignResult(
        interface=state.bi,
        suite=state.suite,
        model=state.model,
        binding=state.binding,
        mutants=entries,
        coverage=cov,
        iterations=state.iteration,
        verdict=report.verdict if report is not None else "fail",
        trace=state.trace,
    )


# ---------------------------------------------------------------------------
# external-model adjustment


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _normalized_distance(a: str, b: str) -> float:
    if not a and not b:
        return 0.0
    return _levenshtein(a.lower(), b.lower()) / max(len(a), len(b))


def _greedy_match(sources, targets):
    """Greedy nearest-name matching under the distance threshold; sources
    in declaration order, ties by target declaration order."""
    available = list(targets)
    mapping: dict[str, str] = {}
    unbound: list[str] = []
    for src in sources:
        best = None
        best_d = None
        for t in available:
            d = _normalized_distance(src, t)
            if best_d is None or d < best_d:
                best, best_d = t, d
        if best is None or best_d > EDIT_DISTANCE_THRESHOLD:
            unbound.append(src)
        else:
            mapping[src] = best
            available.remove(best)
    return mapping, unbound


def _binding_from_maps(bi, model, qmap, pmap):
    quantities = tuple(
        QuantityBinding.to_var(q, qmap[q]) for q in bi.quantity_names() if q in qmap
    )
    parameters = tuple((p, pmap[p]) for p in bi.parameter_names() if p in pmap)
    return InterfaceBinding(quantities, parameters)


def adjust_tests(provider, td: str, external_model: LpModel, suite: TestSuite,
                 templates=None, trace=None):
    """Rebind a suite to an externally authored model.

    The provider proposes a name mapping; without a provider (or when its
    proposal cannot be used) a deterministic greedy edit-distance matcher
    takes over. Fails with UnbindableSuite listing anything left unbound.
    The suite itself is returned unchanged: only the binding is new.
    """
    model = normalize(external_model)
    validate_suite(suite)
    bi = suite.interface
    qmap: dict[str, str] = {}
    pmap: dict[str, str] = {}
    if provider is not None:
        templates = templates or load_templates()
        fields = {
            "problem_description": td.strip(),
            "model_dsl": serialize_model(model),
            "suite_json": canonical_dumps(suite_to_json(suite)).strip(),
        }

        def parse(text):
            data = _parse_json_output(text)
            q = data.get("quantity_map", {})
            p = data.get("parameter_map", {})
            if not isinstance(q, dict) or not isinstance(p, dict):
                raise SchemaViolation("adjuster output needs quantity_map and parameter_map objects")
            return q, p

        try:
            rawq, rawp = _call_agent(provider, templates, "test_adjuster", fields, parse, trace)
            model_vars = set(model.variable_names())
            model_params = set(model.parameter_defaults())
            qmap = {q: v for q, v in rawq.items()
                    if q in bi.quantity_names() and v in model_vars}
            pmap = {p: v for p, v in rawp.items()
                    if p in bi.parameter_names() and v in model_params}
        except LlmOutputInvalid as exc:
            if trace is not None:
                trace.record("warning", message=f"adjuster output unusable: {exc}")

    # deterministic fallback for anything the provider did not (validly) map
    missing_q = [q for q in bi.quantity_names() if q not in qmap]
    missing_p = [p for p in bi.parameter_names() if p not in pmap]
    fb_q, unbound_q = _greedy_match(
        missing_q, [v for v in model.variable_names() if v not in qmap.values()]
    )
    fb_p, unbound_p = _greedy_match(
        missing_p, [p for p in model.parameter_defaults() if p not in pmap.values()]
    )
    qmap.update(fb_q)
    pmap.update(fb_p)
    if unbound_q or unbound_p:
        raise UnbindableSuite(unbound_q + unbound_p)
    binding = _binding_from_maps(bi, model, qmap, pmap)
    validate_binding(binding, bi, model)
    if trace is not None:
        trace.record("artifact", name="adjusted_binding",
                     quantities=sorted(qmap.items()), parameters=sorted(pmap.items()))
    return suite, binding
