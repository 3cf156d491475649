"""Knowledge base: stored expert patterns with recommendation templates.

Templates are plain text with ``@alias`` tags that pull matched plan elements
into the wording: ``@TOP`` renders the element bound to the alias TOP,
``[@TOP, @ANY2]:1`` renders only the first occurrence of a repeating match,
and ``@TOP.listColumns("INPUT")`` expands an operator's recorded column list.
``@@`` escapes a literal ``@``.  Rendering never fails on a matched plan: a
missing column detail degrades to a placeholder plus a warning.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from decimal import Decimal

from .compile import QueryIR, compile_pattern, render_query_text
from .errors import (
    CorruptKb,
    IoFailure,
    SchemaViolation,
    TemplateSyntax,
    UnknownAlias,
)
from .graph import (
    BASEOBJ_NS,
    POP_NS,
    LocationKind,
    PlanLocation,
    Term,
    TermKind,
    TripleGraph,
    plan_graph,
)
from .match import MatchSet, evaluate, location_of_term
from .model import Plan
from .numeric import format_decimal
from .pattern import (
    PatternSpec,
    builtin_patterns,
    pattern_from_builder_doc,
    pattern_to_builder_doc,
)

SENTINEL_TEXT = "There is currently no recommendation in knowledge base"

HELPER_FUNCTIONS = ("listColumns",)
CALL_MODES = ("PREDICATE", "INPUT")
_MODE_DETAIL_KEY = {"PREDICATE": "PREDICATE_COLUMNS", "INPUT": "INPUT_COLUMNS"}
UNKNOWN_COLUMNS = "<unknown columns>"


# --------------------------------------------------------------------------
# template language


@dataclass(frozen=True)
class Plain:
    text: str


@dataclass(frozen=True)
class Token:
    alias: str


@dataclass(frozen=True)
class Group:
    aliases: tuple[str, ...]
    cap: int | None  # None means unlimited


@dataclass(frozen=True)
class Call:
    alias: str
    function: str
    mode: str


TemplatePart = Plain | Token | Group | Call
TemplateAst = tuple[TemplatePart, ...]

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_CALL_RE = re.compile(r"\.([A-Za-z_][A-Za-z0-9_]*)\(")
_GROUP_START_RE = re.compile(r"\[\s*@")


def parse_template(text: str) -> TemplateAst:
    parts: list[TemplatePart] = []
    plain: list[str] = []
    pos = 0

    def flush() -> None:
        if plain:
            parts.append(Plain("".join(plain)))
            plain.clear()

    def read_token(at: int) -> tuple[str, int]:
        if at >= len(text) or text[at] != "@":
            raise TemplateSyntax("missing '@'", at, "'@'")
        m = _IDENT_RE.match(text, at + 1)
        if not m:
            raise TemplateSyntax("'@' without alias name", at, "identifier")
        return m.group(0), m.end()

    while pos < len(text):
        ch = text[pos]
        if ch == "@":
            if text.startswith("@@", pos):
                plain.append("@")
                pos += 2
                continue
            alias, pos = read_token(pos)
            call = _CALL_RE.match(text, pos)
            if call:
                function = call.group(1)
                if function not in HELPER_FUNCTIONS:
                    raise TemplateSyntax(
                        f"unknown helper function {function!r}", pos,
                        " or ".join(HELPER_FUNCTIONS),
                    )
                rest = re.match(r'"([A-Z]+)"\)', text[call.end():])
                if not rest:
                    raise TemplateSyntax(
                        "malformed helper call", call.end(), '"MODE")'
                    )
                mode = rest.group(1)
                if mode not in CALL_MODES:
                    raise TemplateSyntax(
                        f"unknown mode {mode!r}", call.end(), " or ".join(CALL_MODES)
                    )
                flush()
                parts.append(Call(alias, function, mode))
                pos = call.end() + rest.end()
            else:
                flush()
                parts.append(Token(alias))
            continue
        if ch == "[" and _GROUP_START_RE.match(text, pos):
            flush()
            aliases = []
            cursor = pos + 1
            while True:
                cursor = _skip_ws(text, cursor)
                alias, cursor = read_token(cursor)
                aliases.append(alias)
                cursor = _skip_ws(text, cursor)
                if cursor < len(text) and text[cursor] == ",":
                    cursor += 1
                    continue
                if cursor < len(text) and text[cursor] == "]":
                    cursor += 1
                    break
                raise TemplateSyntax("unterminated group", cursor, "',' or ']'")
            cap: int | None = None
            if cursor < len(text) and text[cursor] == ":":
                m = re.match(r":(\d+)", text[cursor:])
                if not m:
                    raise TemplateSyntax("missing occurrence cap", cursor, "integer")
                cap = int(m.group(1))
                if cap < 1:
                    raise TemplateSyntax("occurrence cap must be >= 1", cursor, ">= 1")
                cursor += m.end()
            parts.append(Group(tuple(aliases), cap))
            pos = cursor
            continue
        plain.append(ch)
        pos += 1

    flush()
    return tuple(parts)


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t":
        pos += 1
    return pos


def template_aliases(ast: TemplateAst) -> list[str]:
    out: list[str] = []
    for part in ast:
        if isinstance(part, Token):
            out.append(part.alias)
        elif isinstance(part, Group):
            out.extend(part.aliases)
        elif isinstance(part, Call):
            out.append(part.alias)
    return out


# --------------------------------------------------------------------------
# entries


@dataclass(frozen=True)
class KbEntry:
    entry_id: str
    name: str
    pattern: PatternSpec
    compiled: QueryIR
    template_text: str
    template: TemplateAst
    severity_weight: Decimal = Decimal(1)
    provenance: str = ""


@dataclass(frozen=True)
class KnowledgeBase:
    entries: tuple[KbEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, entry_id: str) -> KbEntry | None:
        for entry in self.entries:
            if entry.entry_id == entry_id:
                return entry
        return None


def kb_add(
    kb: KnowledgeBase,
    pattern: PatternSpec,
    template_text: str,
    severity_weight: Decimal | str = Decimal(1),
    entry_id: str | None = None,
    name: str | None = None,
    provenance: str = "",
) -> KnowledgeBase:
    """Return a new knowledge base with the entry appended (snapshots are immutable)."""
    compiled = compile_pattern(pattern)  # raises on invalid patterns
    ast = parse_template(template_text)

    known_aliases = {alias for _, alias in compiled.selects}
    for alias in template_aliases(ast):
        if alias not in known_aliases:
            raise UnknownAlias(
                f"@{alias} names no returned node (have: {', '.join(sorted(known_aliases))})"
            )

    weight = Decimal(severity_weight) if not isinstance(severity_weight, Decimal) else severity_weight
    if not (0 < weight <= 1):
        raise SchemaViolation("severity_weight must be in (0, 1]", "$.severity_weight")

    if entry_id is None:
        taken = {e.entry_id for e in kb.entries}
        n = len(kb.entries) + 1
        while f"entry-{n}" in taken:
            n += 1
        entry_id = f"entry-{n}"
    elif any(e.entry_id == entry_id for e in kb.entries):
        raise SchemaViolation(f"entry id {entry_id!r} already exists", "$.entry_id")

    entry = KbEntry(
        entry_id=entry_id,
        name=name if name is not None else (pattern.name or entry_id),
        pattern=pattern,
        compiled=compiled,
        template_text=template_text,
        template=ast,
        severity_weight=weight,
        provenance=provenance,
    )
    return KnowledgeBase(entries=kb.entries + (entry,))


BUILTIN_ENTRY_IDS = ("pattern-a", "pattern-b", "pattern-c", "pattern-d")


def builtin_kb() -> KnowledgeBase:
    kb = KnowledgeBase()
    for entry_id, (spec, template) in zip(BUILTIN_ENTRY_IDS, builtin_patterns()):
        kb = kb_add(
            kb,
            spec,
            template,
            entry_id=entry_id,
            name=spec.name,
            provenance="planmatch builtin",
        )
    return kb


# --------------------------------------------------------------------------
# rendering


@dataclass(frozen=True)
class RenderedRecommendation:
    entry_id: str
    plan_id: str
    text: str
    confidence: Decimal
    evidence: tuple[tuple[str, PlanLocation], ...]
    warnings: tuple[str, ...] = ()


def _plan_location(term: Term, plan_id: str) -> PlanLocation:
    uri = term.value
    if term.kind is TermKind.RESOURCE and uri.startswith(POP_NS):
        return PlanLocation(plan_id, LocationKind.OPERATOR, int(uri[len(POP_NS):]))
    if term.kind is TermKind.RESOURCE and uri.startswith(BASEOBJ_NS):
        return PlanLocation(plan_id, LocationKind.BASE_OBJECT, uri[len(BASEOBJ_NS):])
    return PlanLocation(plan_id, LocationKind.STREAM, str(uri))


def _label(term: Term, plan: Plan) -> str:
    return location_of_term(term, plan)["label"]


def _row_columns(row, plan: Plan):
    """Correlations of every base object bound anywhere in the row."""
    correlations = set()
    for term in row.mapping.values():
        if term.kind is TermKind.RESOURCE and term.value.startswith(BASEOBJ_NS):
            name = term.value[len(BASEOBJ_NS):]
            if plan.has_base_object(name):
                corr = plan.base_object(name).correlation
                if corr:
                    correlations.add(corr)
    return correlations


def render_recommendation(
    entry: KbEntry, matches: MatchSet, plan: Plan
) -> RenderedRecommendation:
    """Instantiate the entry's template in the context of one plan's matches."""
    if not matches.rows:
        raise ValueError("render_recommendation needs a nonempty MatchSet")

    var_of = {alias: var for var, alias in entry.compiled.selects}
    first = matches.rows[0]
    pieces: list[str] = []
    evidence: list[tuple[str, PlanLocation]] = []
    warnings: list[str] = []

    def note_evidence(alias: str, term: Term) -> None:
        item = (alias, _plan_location(term, plan.plan_id))
        if item not in evidence:
            evidence.append(item)

    for part in entry.template:
        if isinstance(part, Plain):
            pieces.append(part.text)
        elif isinstance(part, Token):
            term = first.mapping[var_of[part.alias]]
            pieces.append(_label(term, plan))
            note_evidence(part.alias, term)
        elif isinstance(part, Group):
            rows = matches.rows if part.cap is None else matches.rows[: part.cap]
            rendered_rows = []
            for row in rows:
                labels = []
                for alias in part.aliases:
                    term = row.mapping[var_of[alias]]
                    labels.append(_label(term, plan))
                    note_evidence(alias, term)
                rendered_rows.append(", ".join(labels))
            pieces.append("; ".join(rendered_rows))
        elif isinstance(part, Call):
            term = first.mapping[var_of[part.alias]]
            note_evidence(part.alias, term)
            pieces.append(_render_columns(part, term, first, plan, warnings))

    confidence = score_match(entry, matches, plan)
    return RenderedRecommendation(
        entry_id=entry.entry_id,
        plan_id=plan.plan_id,
        text="".join(pieces),
        confidence=confidence,
        evidence=tuple(evidence),
        warnings=tuple(warnings),
    )


def _render_columns(part: Call, term: Term, row, plan: Plan, warnings: list[str]) -> str:
    detail_key = _MODE_DETAIL_KEY[part.mode]
    if not (term.kind is TermKind.RESOURCE and term.value.startswith(POP_NS)):
        warnings.append(f"@{part.alias} is not an operator; {detail_key} unavailable")
        return UNKNOWN_COLUMNS
    op_num = int(term.value[len(POP_NS):])
    details = plan.operator(op_num).details if plan.has_operator(op_num) else {}
    if detail_key not in details:
        warnings.append(
            f"operator #{op_num} has no {detail_key} detail for @{part.alias}"
        )
        return UNKNOWN_COLUMNS
    columns = [c.strip() for c in details[detail_key].split(",") if c.strip()]
    if part.mode == "INPUT":
        correlations = _row_columns(row, plan)
        if correlations:
            columns = [
                c
                for c in columns
                if "." not in c or c.split(".", 1)[0] in correlations
            ]
    return ", ".join(columns)


# --------------------------------------------------------------------------
# scoring and diagnosis


def score_match(entry: KbEntry, matches: MatchSet, plan: Plan) -> Decimal:
    """severity_weight times the matched subplan's share of the plan's total cost."""
    if not matches.rows:
        return Decimal(0)
    plan_cost = plan.total_cost
    if plan_cost == 0:
        return Decimal(0)
    first_var = entry.compiled.result_vars[0]
    highest = Decimal(0)
    for row in matches.rows:
        term = row.mapping.get(first_var)
        if term is None or term.kind is not TermKind.RESOURCE:
            continue
        if term.value.startswith(POP_NS):
            op_num = int(term.value[len(POP_NS):])
            if plan.has_operator(op_num):
                highest = max(highest, plan.operator(op_num).total_cost)
    fraction = highest / plan_cost
    fraction = min(max(fraction, Decimal(0)), Decimal(1))
    return entry.severity_weight * fraction


@dataclass(frozen=True)
class DiagnosisReport:
    recommendations: tuple[RenderedRecommendation, ...]
    no_match_plan_ids: tuple[str, ...]
    evaluations: int
    plan_ids: tuple[str, ...]

    def for_plan(self, plan_id: str) -> list[RenderedRecommendation]:
        return [r for r in self.recommendations if r.plan_id == plan_id]

    def to_dict(self) -> dict:
        plans = []
        for plan_id in self.plan_ids:
            if plan_id in self.no_match_plan_ids:
                plans.append({"plan_id": plan_id, "recommendations": [],
                              "sentinel": SENTINEL_TEXT})
                continue
            plans.append(
                {
                    "plan_id": plan_id,
                    "recommendations": [
                        {
                            "entry_id": r.entry_id,
                            "confidence": format_decimal(r.confidence),
                            "text": r.text,
                            "evidence": [
                                {"alias": alias, "kind": loc.kind.value, "ref": loc.ref}
                                for alias, loc in r.evidence
                            ],
                            "warnings": list(r.warnings),
                        }
                        for r in self.for_plan(plan_id)
                    ],
                }
            )
        return {"plans": plans, "evaluations": self.evaluations}


def diagnose_workload(
    kb: KnowledgeBase,
    plans: list[Plan],
    graphs: dict[str, TripleGraph] | None = None,
) -> DiagnosisReport:
    """Evaluate every entry against every plan; rank rendered recommendations.

    Ordering is total: confidence descending, then entry_id, then plan_id.
    Plans no entry matches are reported with the sentinel message.
    """
    from . import match as match_module

    start_count = match_module.EVALUATION_COUNT
    rendered: list[RenderedRecommendation] = []
    no_match: list[str] = []
    for plan in plans:
        graph = graphs[plan.plan_id] if graphs is not None else plan_graph(plan)
        matched_any = False
        for entry in kb.entries:
            matches = evaluate(entry.compiled, graph)
            if matches.rows:
                matched_any = True
                rendered.append(render_recommendation(entry, matches, plan))
        if not matched_any:
            no_match.append(plan.plan_id)

    rendered.sort(key=lambda r: (-r.confidence, r.entry_id, r.plan_id))
    return DiagnosisReport(
        recommendations=tuple(rendered),
        no_match_plan_ids=tuple(no_match),
        evaluations=match_module.EVALUATION_COUNT - start_count,
        plan_ids=tuple(p.plan_id for p in plans),
    )


# --------------------------------------------------------------------------
# persistence: both forms of every pattern (document and rendered query)


def _entries_payload(kb: KnowledgeBase) -> list[dict]:
    return [
        {
            "entry_id": e.entry_id,
            "name": e.name,
            "pattern": pattern_to_builder_doc(e.pattern),
            "query": render_query_text(e.compiled),
            "template": e.template_text,
            "severity_weight": format_decimal(e.severity_weight),
            "provenance": e.provenance,
        }
        for e in kb.entries
    ]


def _checksum(payload: list[dict]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def kb_save(kb: KnowledgeBase, path) -> None:
    payload = _entries_payload(kb)
    doc = {
        "format": "planmatch-kb",
        "version": 1,
        "entries": payload,
        "checksum": _checksum(payload),
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write knowledge base {path}: {exc}") from exc


def kb_load(path) -> KnowledgeBase:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read knowledge base {path}: {exc}") from exc

    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptKb(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != "planmatch-kb":
        raise CorruptKb(f"{path}: not a planmatch knowledge base")
    if doc.get("version") != 1:
        raise CorruptKb(f"{path}: unsupported version {doc.get('version')!r}")
    entries = doc.get("entries")
    if not isinstance(entries, list) or doc.get("checksum") != _checksum(entries):
        raise CorruptKb(f"{path}: checksum mismatch")

    kb = KnowledgeBase()
    for i, entry in enumerate(entries):
        try:
            pattern = pattern_from_builder_doc(entry["pattern"])
            kb = kb_add(
                kb,
                pattern,
                entry["template"],
                severity_weight=Decimal(entry["severity_weight"]),
                entry_id=entry["entry_id"],
                name=entry["name"],
                provenance=entry.get("provenance", ""),
            )
        except (KeyError, TypeError, ValueError, SchemaViolation) as exc:
            raise CorruptKb(f"{path}: entry {i} is malformed ({exc})") from exc
        stored_query = entry.get("query")
        if stored_query != render_query_text(kb.entries[-1].compiled):
            raise CorruptKb(
                f"{path}: entry {entry['entry_id']!r} query text does not match its pattern"
            )
    return kb
