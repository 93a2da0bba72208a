"""Parser and serializer for the .optmod model DSL.

The grammar (documented in docs/dsl.md) is line-oriented:

    model NAME
    vars:
      x, y              # continuous, >= 0 by default
      n int in [0, 10]
      w free
    params:
      cap = 10
    maximize: 120 x + 90 y
    subject_to:
      c1: x + y <= 8
      2 x + y <= cap    # unnamed rows get c<position> names

Parsing never raises anything but ModelParseError; every diagnostic
carries a 1-based line:column location.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import OptmutError
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
    normalize,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|=|[:,+\-*\[\]])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"model", "vars", "params", "maximize", "minimize", "subject_to", "int", "free", "in"}


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_col: int


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    code: str  # syntax | duplicate-name | unknown-symbol
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.code}: {self.message}"


class ModelParseError(OptmutError):
    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else "unknown parse error"
        extra = f" (+{len(self.diagnostics) - 1} more)" if len(self.diagnostics) > 1 else ""
        super().__init__(f"{first}{extra}")


@dataclass(frozen=True)
class ModelDocument:
    source: str
    model: LpModel
    spans: dict[tuple, Span]


@dataclass
class _Tok:
    kind: str  # num | name | op | end
    text: str
    line: int
    col: int

    @property
    def value(self) -> float:
        return float(self.text)


def _tokenize_line(text: str, lineno: int, diags: list[Diagnostic]) -> list[_Tok] | None:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diags.append(
                Diagnostic(lineno, pos + 1, "syntax", f"unexpected character {text[pos]!r}")
            )
            return None
        if m.lastgroup != "ws":
            kind = {"num": "num", "name": "name", "op": "op"}[m.lastgroup]
            toks.append(_Tok(kind, m.group(), lineno, pos + 1))
        pos = m.end()
    toks.append(_Tok("end", "", lineno, len(text) + 1))
    return toks


class _Cursor:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.peek().kind == "op" and self.peek().text == text:
            self.next()
            return True
        return False

    def at_end(self) -> bool:
        return self.peek().kind == "end"


@dataclass
class _RawLine:
    lineno: int
    toks: list[_Tok]


class _Parser:
    """Two-phase parser: section split + declaration scan, then expression
    resolution against the declared symbol tables."""

    def __init__(self, text: str):
        self.text = text
        self.diags: list[Diagnostic] = []
        self.name = "model"
        self.vars: list[Variable] = []
        self.var_spans: dict[str, Span] = {}
        self.params: list[tuple[str, float]] = []
        self.obj: Objective | None = None
        self.obj_span: Span | None = None
        self.constraints: list[Constraint] = []
        self.con_spans: dict[str, Span] = {}
        self.sites: list[ParamSite] = []

    def error(self, tok: _Tok, code: str, message: str) -> None:
        self.diags.append(Diagnostic(tok.line, tok.col, code, message))

    # -- phase A: split into sections ------------------------------------

    def split_sections(self):
        sections: dict[str, list[_RawLine]] = {}
        obj_line: tuple[str, _RawLine] | None = None
        current: str | None = None
        seen: set[str] = set()
        for lineno, raw in enumerate(self.text.split("\n"), start=1):
            line = raw.rstrip("\r")
            stripped = line.split("#", 1)[0].rstrip()
            if not stripped.strip():
                continue
            toks = _tokenize_line(stripped, lineno, self.diags)
            if toks is None:
                continue
            head = toks[0]
            if head.kind == "name" and head.text == "model" and current is None and "model" not in seen:
                seen.add("model")
                if len(toks) == 3 and toks[1].kind == "name":
                    self.name = toks[1].text
                else:
                    self.error(head, "syntax", "expected: model NAME")
                continue
            if (
                head.kind == "name"
                and head.text in ("vars", "params", "subject_to", "maximize", "minimize")
                and len(toks) >= 2
                and toks[1].kind == "op"
                and toks[1].text == ":"
            ):
                key = "objective" if head.text in ("maximize", "minimize") else head.text
                if key in seen:
                    self.error(head, "duplicate-name", f"section {head.text!r} given twice")
                    current = None
                    continue
                seen.add(key)
                if key == "objective":
                    if len(toks) <= 3:  # "maximize:" then end
                        self.error(head, "syntax", "objective expression expected on the same line")
                        current = None
                        continue
                    obj_line = (head.text, _RawLine(lineno, toks[2:]))
                    current = None
                else:
                    if len(toks) != 3:
                        self.error(toks[2], "syntax", "unexpected tokens after section header")
                    sections[key] = []
                    current = key
                continue
            if current is None:
                self.error(head, "syntax", f"statement outside any section: {stripped.strip()!r}")
                continue
            sections[current].append(_RawLine(lineno, toks))
        return sections, obj_line

    # -- phase B: declarations -------------------------------------------

    def parse_vars(self, lines: list[_RawLine]):
        for rl in lines:
            cur = _Cursor(rl.toks)
            names: list[_Tok] = []
            while True:
                t = cur.next()
                if t.kind != "name" or t.text in _KEYWORDS:
                    self.error(t, "syntax", "variable name expected")
                    break
                names.append(t)
                if not cur.accept(","):
                    break
            else:
                continue
            if not names:
                continue
            domain = Domain.CONTINUOUS
            if cur.peek().kind == "name" and cur.peek().text == "int":
                cur.next()
                domain = Domain.INTEGER
            lower, upper = 0.0, INF
            t = cur.peek()
            if t.kind == "name" and t.text == "free":
                cur.next()
                lower = -INF
            elif t.kind == "name" and t.text == "in":
                cur.next()
                lower, upper = self.parse_interval(cur)
            elif t.kind == "op" and t.text in (">=", "<="):
                lower, upper = self.parse_bound_ops(cur)
            if not cur.at_end():
                self.error(cur.peek(), "syntax", "unexpected trailing tokens in var declaration")
                continue
            for nt in names:
                if any(v.name == nt.text for v in self.vars):
                    self.error(nt, "duplicate-name", f"variable {nt.text!r} already declared")
                    continue
                self.vars.append(Variable(nt.text, lower, upper, domain))
                self.var_spans[nt.text] = Span(nt.line, nt.col, nt.col + len(nt.text))

    def parse_interval(self, cur: _Cursor) -> tuple[float, float]:
        lower, upper = 0.0, INF
        if not cur.accept("["):
            self.error(cur.peek(), "syntax", "expected [lo, hi] after 'in'")
            return lower, upper
        lo = self.parse_signed_number(cur)
        if lo is None or not cur.accept(","):
            self.error(cur.peek(), "syntax", "expected [lo, hi] after 'in'")
            return lower, upper
        hi = self.parse_signed_number(cur)
        if hi is None or not cur.accept("]"):
            self.error(cur.peek(), "syntax", "expected [lo, hi] after 'in'")
            return lower, upper
        return lo, hi

    def parse_bound_ops(self, cur: _Cursor) -> tuple[float, float]:
        lower, upper = 0.0, INF
        if cur.accept(">="):
            v = self.parse_signed_number(cur)
            if v is None:
                return lower, upper
            lower = v
            if cur.accept("<="):
                v = self.parse_signed_number(cur)
                if v is not None:
                    upper = v
        elif cur.accept("<="):
            v = self.parse_signed_number(cur)
            if v is None:
                return lower, upper
            lower, upper = -INF, v
        return lower, upper

    def parse_signed_number(self, cur: _Cursor) -> float | None:
        sign = 1.0
        while cur.peek().kind == "op" and cur.peek().text in "+-":
            if cur.next().text == "-":
                sign = -sign
        t = cur.peek()
        if t.kind != "num":
            self.error(t, "syntax", "number expected")
            return None
        cur.next()
        return sign * t.value

    def parse_params(self, lines: list[_RawLine]):
        for rl in lines:
            cur = _Cursor(rl.toks)
            t = cur.next()
            if t.kind != "name" or t.text in _KEYWORDS:
                self.error(t, "syntax", "parameter name expected")
                continue
            if not cur.accept("="):
                self.error(cur.peek(), "syntax", "expected: NAME = NUMBER")
                continue
            v = self.parse_signed_number(cur)
            if v is None or not cur.at_end():
                self.error(cur.peek(), "syntax", "expected: NAME = NUMBER")
                continue
            if any(p == t.text for p, _ in self.params):
                self.error(t, "duplicate-name", f"parameter {t.text!r} already declared")
                continue
            if any(v2.name == t.text for v2 in self.vars):
                self.error(t, "duplicate-name", f"parameter {t.text!r} shadows a variable")
                continue
            self.params.append((t.text, v))

    # -- phase C: expressions ---------------------------------------------

    def is_var(self, name: str) -> bool:
        return any(v.name == name for v in self.vars)

    def is_param(self, name: str) -> bool:
        return any(p == name for p, _ in self.params)

    def param_default(self, name: str) -> float:
        return dict(self.params)[name]

    def parse_expr(self, cur: _Cursor, where: str, con_name: str | None):
        """Parse a linear expression until a sense operator or end of line.

        Returns (terms, constant) and records parameter sites as it goes.
        A term is [NUM '*'?] [PARAM '*'?] VAR, or a bare NUM constant.
        """
        terms: dict[str, float] = {}
        constant = 0.0
        first = True
        while True:
            t = cur.peek()
            if t.kind == "end" or (t.kind == "op" and t.text in ("<=", ">=", "==")):
                if first:
                    self.error(t, "syntax", f"empty expression in {where}")
                return LinearExpr(tuple(terms.items()), constant)
            sign = 1.0
            if t.kind == "op" and t.text in "+-":
                if t.text == "-":
                    sign = -1.0
                cur.next()
            elif not first:
                self.error(t, "syntax", "expected + or - between terms")
                return None
            first = False
            got = self.parse_term(cur, where, con_name, sign, terms)
            if got is None:
                return None
            constant += got

    def parse_term(self, cur, where, con_name, sign, terms) -> float | None:
        """Parse one term into ``terms``; returns its constant contribution."""
        t = cur.peek()
        coef_num: float | None = None
        param: _Tok | None = None
        if t.kind == "num":
            cur.next()
            coef_num = t.value
            cur.accept("*")
            t = cur.peek()
        if t.kind == "name" and t.text not in _KEYWORDS:
            cur.next()
            if self.is_param(t.text):
                param = t
                cur.accept("*")
                t = cur.peek()
                if not (t.kind == "name" and t.text not in _KEYWORDS):
                    self.error(param, "syntax", f"parameter {param.text!r} must multiply a variable here")
                    return None
                cur.next()
            if not self.is_var(t.text):
                code = "unknown-symbol"
                self.error(t, code, f"unknown symbol {t.text!r} in {where}")
                return None
            var = t.text
            if param is not None:
                scale = sign * (1.0 if coef_num is None else coef_num)
                coef = scale * self.param_default(param.text)
                self.sites.append(ParamSite(param.text, con_name, var, scale))
            else:
                coef = sign * (1.0 if coef_num is None else coef_num)
            terms[var] = terms.get(var, 0.0) + coef
            return 0.0
        if coef_num is not None:
            return sign * coef_num
        self.error(t, "syntax", f"unexpected token {t.text!r} in {where}")
        return None

    def parse_rhs(self, cur: _Cursor, con_name: str) -> float | None:
        sign = 1.0
        t = cur.peek()
        if t.kind == "op" and t.text in "+-":
            cur.next()
            if t.text == "-":
                sign = -1.0
        t = cur.peek()
        num: float | None = None
        if t.kind == "num":
            cur.next()
            num = t.value
            if not cur.accept("*"):
                if not cur.at_end():
                    self.error(cur.peek(), "syntax", "unexpected trailing tokens after rhs")
                    return None
                return sign * num
            t = cur.peek()
        if t.kind == "name" and self.is_param(t.text):
            cur.next()
            if not cur.at_end():
                self.error(cur.peek(), "syntax", "unexpected trailing tokens after rhs")
                return None
            scale = sign * (1.0 if num is None else num)
            self.sites.append(ParamSite(t.text, con_name, None, scale))
            return scale * self.param_default(t.text)
        if t.kind == "name":
            self.error(t, "unknown-symbol", f"unknown symbol {t.text!r} on rhs")
            return None
        self.error(t, "syntax", "rhs number or parameter expected")
        return None

    def parse_objective(self, obj_line):
        sense_word, rl = obj_line
        cur = _Cursor(rl.toks)
        expr = self.parse_expr(cur, "objective", None)
        if expr is None:
            return
        if not cur.at_end():
            self.error(cur.peek(), "syntax", "unexpected trailing tokens in objective")
            return
        sense = ObjSense.MAXIMIZE if sense_word == "maximize" else ObjSense.MINIMIZE
        self.obj = Objective(sense, expr)
        head = rl.toks[0]
        self.obj_span = Span(head.line, head.col, rl.toks[-1].col)

    def parse_constraints(self, lines: list[_RawLine]):
        for position, rl in enumerate(lines, start=1):
            cur = _Cursor(rl.toks)
            name = f"c{position}"
            t = cur.peek()
            if (
                t.kind == "name"
                and t.text not in _KEYWORDS
                and cur.toks[cur.i + 1].kind == "op"
                and cur.toks[cur.i + 1].text == ":"
            ):
                cur.next()
                cur.next()
                name = t.text
            if any(c.name == name for c in self.constraints):
                self.error(rl.toks[0], "duplicate-name", f"constraint {name!r} already declared")
                continue
            lhs = self.parse_expr(cur, f"constraint {name!r}", name)
            if lhs is None:
                continue
            op = cur.next()
            if op.kind != "op" or op.text not in ("<=", ">=", "=="):
                self.error(op, "syntax", "constraint sense <=, >= or == expected")
                continue
            rhs = self.parse_rhs(cur, name)
            if rhs is None:
                continue
            self.constraints.append(Constraint(name, lhs, Sense(op.text), rhs))
            self.con_spans[name] = Span(rl.toks[0].line, rl.toks[0].col, rl.toks[-1].col)

    def run(self) -> ModelDocument:
        sections, obj_line = self.split_sections()
        self.parse_vars(sections.get("vars", []))
        self.parse_params(sections.get("params", []))
        if obj_line is not None:
            self.parse_objective(obj_line)
        elif not self.diags:
            self.diags.append(Diagnostic(1, 1, "syntax", "missing maximize:/minimize: section"))
        self.parse_constraints(sections.get("subject_to", []))
        if self.diags:
            raise ModelParseError(self.diags)
        model = LpModel(
            name=self.name,
            variables=tuple(self.vars),
            constraints=tuple(self.constraints),
            objective=self.obj,
            parameters=tuple(self.params),
            param_sites=tuple(self.sites),
        )
        model = normalize(model)
        spans: dict[tuple, Span] = {("objective",): self.obj_span}
        for v, sp in self.var_spans.items():
            spans[("var", v)] = sp
        for c, sp in self.con_spans.items():
            spans[("constraint", c)] = sp
        return ModelDocument(self.text, model, spans)


def parse_model(text: str) -> ModelDocument:
    """Parse DSL text into a normalized model; raises ModelParseError with
    position-bearing diagnostics on any failure."""
    if not isinstance(text, str):
        raise ModelParseError([Diagnostic(1, 1, "syntax", "input is not text")])
    return _Parser(text).run()


def load_model_file(path) -> ModelDocument:
    """Read a .optmod file (UTF-8, LF or CRLF) and parse it."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ModelParseError([Diagnostic(1, 1, "syntax", f"cannot read {path}: {exc}")])
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelParseError([Diagnostic(1, 1, "syntax", f"not valid UTF-8: {exc}")])
    return parse_model(text)


def fmt_num(v: float) -> str:
    """Shortest round-trippable decimal form; integral values print bare."""
    if v != v or v in (INF, -INF):
        raise ValueError(f"cannot serialize non-finite number {v}")
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _site_index(model: LpModel) -> dict[tuple, ParamSite]:
    defaults = model.parameter_defaults()
    # stale sites (slot value no longer scale*default, e.g. after a mutation
    # edited the slot directly) are dropped: the number is emitted instead
    out: dict[tuple, ParamSite] = {}
    for s in model.param_sites:
        out[(s.constraint, s.var)] = s
    index: dict[tuple, ParamSite] = {}
    for (con, var), s in out.items():
        if con is None and var is None:
            current = model.objective.expr.constant
        elif con is None:
            current = model.objective.expr.coef(var)
        else:
            c = model.constraint(con)
            current = c.rhs if var is None else c.lhs.coef(var)
        if current == s.scale * defaults[s.param]:
            index[(con, var)] = s
    return index


def _fmt_coef_slot(coef: float, site: ParamSite | None) -> str:
    """Render a coefficient slot, re-emitting the parameter name if bound."""
    if site is None:
        return fmt_num(coef)
    if site.scale == 1.0:
        return site.param
    if site.scale == -1.0:
        return f"-{site.param}"
    return f"{fmt_num(site.scale)}*{site.param}"


def _fmt_expr(expr: LinearExpr, sites: dict[tuple, ParamSite], con: str | None) -> str:
    parts: list[str] = []
    for var, coef in expr.terms:
        site = sites.get((con, var))
        slot = _fmt_coef_slot(coef, site)
        if slot.startswith("-"):
            head, body = "-", slot[1:]
        else:
            head, body = "+", slot
        if body == "1" and site is None:
            parts.append((head, var))
        else:
            parts.append((head, f"{body} {var}"))
    if expr.constant != 0.0:
        c = expr.constant
        parts.append(("-" if c < 0 else "+", fmt_num(abs(c))))
    if not parts:
        return "0"
    head, body = parts[0]
    out = f"-{body}" if head == "-" else body
    for head, body in parts[1:]:
        out += f" {head} {body}"
    return out


def _fmt_var_decl(v: Variable) -> str:
    out = v.name
    if v.is_integer:
        out += " int"
    if v.lower == 0.0 and v.upper == INF:
        return out
    if v.lower == -INF and v.upper == INF:
        return out + " free"
    if math.isfinite(v.lower) and math.isfinite(v.upper):
        return out + f" in [{fmt_num(v.lower)}, {fmt_num(v.upper)}]"
    if math.isfinite(v.lower):
        return out + f" >= {fmt_num(v.lower)}"
    return out + f" <= {fmt_num(v.upper)}"


def serialize_model(model: LpModel) -> str:
    """Canonical DSL text for a model; parse of the output round-trips."""
    m = normalize(model)
    sites = _site_index(m)
    lines = [f"model {m.name}", ""]
    lines.append("vars:")
    for v in m.variables:
        lines.append(f"  {_fmt_var_decl(v)}")
    if m.parameters:
        lines.append("")
        lines.append("params:")
        for p, d in m.parameters:
            lines.append(f"  {p} = {fmt_num(d)}")
    lines.append("")
    word = "maximize" if m.objective.sense == ObjSense.MAXIMIZE else "minimize"
    lines.append(f"{word}: {_fmt_expr(m.objective.expr, sites, None)}")
    lines.append("")
    lines.append("subject_to:")
    for c in m.constraints:
        site = sites.get((c.name, None))
        if site is not None:
            if site.scale == 1.0:
                rhs = site.param
            elif site.scale == -1.0:
                rhs = f"-{site.param}"
            else:
                rhs = f"{fmt_num(site.scale)}*{site.param}"
        else:
            rhs = fmt_num(c.rhs)
        lines.append(f"  {c.name}: {_fmt_expr(c.lhs, sites, c.name)} {c.sense.value} {rhs}")
    return "\n".join(lines) + "\n"
