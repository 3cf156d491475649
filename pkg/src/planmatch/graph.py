"""Plan-to-triple-graph transformation and detransformation.

Every operator, base object and stream edge of a plan becomes a resource
with predicates for its properties.  Stream edges materialize as their own
resources so that a shared subplan (one TEMP feeding two consumers) keeps a
distinct stream per consumer; matching through those nodes is what makes
each occurrence unique.  The origin map points every resource back at its
plan location for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import NamedTuple

from .errors import UnknownResource
from .model import Leg, Plan
from .numeric import format_decimal

POP_NS = "http://explainPlan/PlanPop/"
BASEOBJ_NS = "http://explainPlan/PlanBaseObject/"
PRED_NS = "http://explainPlan/PlanPred/"
DETAILS_NS = "http://explainPlan/PlanDetails/"
STREAM_NS = "http://explainPlan/PlanStream/"

PREFIXES = (
    ("popURI", POP_NS),
    ("baseObjURI", BASEOBJ_NS),
    ("predURI", PRED_NS),
    ("planURI", DETAILS_NS),
)

INPUT_STREAM_PREDICATES = {
    Leg.OUTER: "hasOuterInputStream",
    Leg.INNER: "hasInnerInputStream",
    Leg.GENERIC: "hasInputStream",
}
OUTPUT_STREAM_PREDICATE = "hasOutputStream"


class TermKind(Enum):
    RESOURCE = "resource"
    LITERAL_NUMBER = "number"
    LITERAL_STRING = "string"


class Term(NamedTuple):
    kind: TermKind
    value: str | Decimal


def resource(uri: str) -> Term:
    return Term(TermKind.RESOURCE, uri)


def number(value: Decimal) -> Term:
    return Term(TermKind.LITERAL_NUMBER, value)


def string(value: str) -> Term:
    return Term(TermKind.LITERAL_STRING, value)


_PRED_CACHE: dict[str, Term] = {}


def pred(name: str) -> Term:
    term = _PRED_CACHE.get(name)
    if term is None:
        term = _PRED_CACHE[name] = Term(TermKind.RESOURCE, PRED_NS + name)
    return term


TRUE = string("true")


class LocationKind(str, Enum):
    OPERATOR = "OPERATOR"
    BASE_OBJECT = "BASE_OBJECT"
    STREAM = "STREAM"


@dataclass(frozen=True)
class PlanLocation:
    plan_id: str
    kind: LocationKind
    ref: int | str  # op_num for operators, name for base objects, "parent/ordinal" for streams


Triple = tuple[Term, Term, Term]


@dataclass
class TripleGraph:
    plan_id: str
    triples: set[Triple] = field(default_factory=set)
    origin: dict[str, PlanLocation] = field(default_factory=dict)
    derived: bool = False

    # indexes, maintained by add()
    spo: dict[Term, dict[Term, set[Term]]] = field(default_factory=dict)
    pos: dict[Term, dict[Term, set[Term]]] = field(default_factory=dict)
    ps: dict[Term, list[tuple[Term, Term]]] = field(default_factory=dict)

    def add(self, s: Term, p: Term, o: Term) -> None:
        t = (s, p, o)
        if t in self.triples:
            return
        self.triples.add(t)
        self.spo.setdefault(s, {}).setdefault(p, set()).add(o)
        self.pos.setdefault(p, {}).setdefault(o, set()).add(s)
        self.ps.setdefault(p, []).append((s, o))

    def objects(self, s: Term, p: Term) -> set[Term]:
        return self.spo.get(s, {}).get(p, set())

    def subjects(self, p: Term, o: Term) -> set[Term]:
        return self.pos.get(p, {}).get(o, set())

    def value(self, s: Term, p: Term) -> Term | None:
        objs = self.objects(s, p)
        return next(iter(objs)) if len(objs) == 1 else None


def pop_uri(op_num: int) -> str:
    return f"{POP_NS}{op_num}"


def base_obj_uri(name: str) -> str:
    return f"{BASEOBJ_NS}{name}"


def stream_uri(parent: int, ordinal: int) -> str:
    return f"{STREAM_NS}{parent}/{ordinal}"


def detail_predicate(key: str) -> str:
    camel = "".join(part.capitalize() for part in key.split("_") if part)
    return f"has{camel}"


def _try_number(text: str) -> Term:
    from .numeric import is_numeric_literal, parse_numeric_literal

    if is_numeric_literal(text):
        return number(parse_numeric_literal(text))
    return string(text)


def build_graph(plan: Plan) -> TripleGraph:
    """Transform a validated plan into its triple graph (without derived predicates)."""
    g = TripleGraph(plan_id=plan.plan_id)

    for op in plan.operators:
        subj = resource(pop_uri(op.op_num))
        g.origin[subj.value] = PlanLocation(plan.plan_id, LocationKind.OPERATOR, op.op_num)
        g.add(subj, pred("hasPopType"), string(op.op_type))
        g.add(subj, pred("hasEstimatedCardinality"), number(op.cardinality))
        g.add(subj, pred("hasTotalCost"), number(op.total_cost))
        g.add(subj, pred("hasIOCost"), number(op.io_cost))
        if op.is_left_outer_join:
            g.add(subj, pred("hasLeftOuterJoin"), TRUE)
        for key, raw in op.details.items():
            g.add(subj, pred(detail_predicate(key)), _try_number(raw))

    for obj in plan.base_objects:
        subj = resource(base_obj_uri(obj.name))
        g.origin[subj.value] = PlanLocation(plan.plan_id, LocationKind.BASE_OBJECT, obj.name)
        g.add(subj, pred("hasEstimatedCardinality"), number(obj.cardinality))
        g.add(subj, pred("isABaseObj"), TRUE)

    for edge in plan.streams:
        parent = resource(pop_uri(edge.parent))
        child = resource(
            pop_uri(edge.child) if edge.child_is_operator else base_obj_uri(edge.child)
        )
        stream = resource(stream_uri(edge.parent, edge.ordinal))
        g.origin[stream.value] = PlanLocation(
            plan.plan_id, LocationKind.STREAM, f"{edge.parent}/{edge.ordinal}"
        )
        input_pred = pred(INPUT_STREAM_PREDICATES[edge.leg])
        output_pred = pred(OUTPUT_STREAM_PREDICATE)
        g.add(parent, input_pred, stream)
        g.add(stream, input_pred, child)
        g.add(child, output_pred, stream)
        g.add(stream, output_pred, parent)
        if edge.leg in (Leg.OUTER, Leg.INNER):
            g.add(child, pred("hasJoinInputLeg"), string(edge.leg.value))

    return g


def derive_properties(plan: Plan, g: TripleGraph) -> TripleGraph:
    """Add hasTotalCostIncrease: own cumulative cost minus the operator children's."""
    child_totals: dict[int, Decimal] = {}
    for edge in plan.streams:
        if edge.child_is_operator:
            child_totals[edge.parent] = (
                child_totals.get(edge.parent, Decimal(0))
                + plan.operator(edge.child).total_cost
            )
    for op in plan.operators:
        g.add(
            resource(pop_uri(op.op_num)),
            pred("hasTotalCostIncrease"),
            number(op.total_cost - child_totals.get(op.op_num, Decimal(0))),
        )
    g.derived = True
    return g


def plan_graph(plan: Plan) -> TripleGraph:
    """build_graph + derive_properties in one step."""
    return derive_properties(plan, build_graph(plan))


def lookup_origin(g: TripleGraph, uri: str) -> PlanLocation:
    try:
        return g.origin[uri]
    except KeyError:
        raise UnknownResource(f"no origin recorded for {uri!r}") from None


def term_text(term: Term) -> str:
    if term.kind is TermKind.RESOURCE:
        return f"<{term.value}>"
    if term.kind is TermKind.LITERAL_NUMBER:
        return f'"{format_decimal(term.value)}"'
    return f'"{term.value}"'


def serialize_graph(g: TripleGraph) -> str:
    """Newline-delimited triples, one per line, lexicographically sorted."""
    lines = sorted(
        f"{term_text(s)} {term_text(p)} {term_text(o)} ." for s, p, o in g.triples
    )
    return "\n".join(lines) + ("\n" if lines else "")
