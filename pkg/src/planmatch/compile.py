"""Compile a PatternSpec into the executable graph-query IR.

Handler generation is modular and deterministic: result handlers ``pop{id}``
carry one pattern node each, internal handlers bind filtered or
existence-checked values in (node id, constraint order) sequence, and blank
node handlers ``BNodeOfpop{child}_to_pop{parent}`` stand for the stream
resource between two related nodes.  Rendering the IR to query text is a
pure function of the pattern, so golden files pin it byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import NamedTuple, Union

from .errors import PatternValidationError
from .graph import (
    INPUT_STREAM_PREDICATES,
    OUTPUT_STREAM_PREDICATE,
    PREFIXES,
    Term,
    TermKind,
    string,
)
from .model import Leg
from .numeric import format_decimal
from .pattern import (
    ANY,
    PatternSpec,
    RelKind,
    RelLeg,
    default_alias,
    validate_pattern,
)


class Var(NamedTuple):
    name: str


VarOrTerm = Union[Var, Term]


@dataclass(frozen=True)
class TriplePattern:
    subject: Var
    predicate: str  # local predicate name under predURI
    object: VarOrTerm


@dataclass(frozen=True)
class FilterCompare:
    lhs: VarOrTerm
    op: str
    rhs: VarOrTerm


@dataclass(frozen=True)
class FilterIn:
    var: Var
    values: tuple[str, ...]


@dataclass(frozen=True)
class PathClause:
    """First hop through `first_leg`, then any number of further child hops."""

    from_var: Var
    to_var: Var
    first_leg: RelLeg


Clause = Union[TriplePattern, FilterCompare, FilterIn, PathClause]


@dataclass(frozen=True)
class HandlerTable:
    result_handlers: dict[int, tuple[str, str]]  # node id -> (variable, alias)
    internal_handlers: tuple[str, ...]
    bnode_handlers: dict[tuple[int, int], str]  # (child id, parent id) -> variable


@dataclass(frozen=True)
class QueryIR:
    pattern_name: str
    selects: tuple[tuple[str, str], ...]  # (variable, alias) for returned nodes
    where: tuple[Clause, ...]
    order_by: str
    result_vars: tuple[str, ...]  # every pop variable, id order
    aliases: tuple[tuple[str, str], ...]  # (variable, alias) for every node
    node_of_var: dict[str, int]

    @property
    def select_vars(self) -> tuple[str, ...]:
        return tuple(var for var, _ in self.selects)

    def alias_of(self, var: str) -> str | None:
        for v, alias in self.selects:
            if v == var:
                return alias
        return None

    def var_of_alias(self, alias: str) -> str | None:
        for v, a in self.selects:
            if a == alias:
                return v
        return None

    def triple_patterns(self) -> list[TriplePattern]:
        return [c for c in self.where if isinstance(c, TriplePattern)]

    def filters(self) -> list[FilterCompare]:
        return [c for c in self.where if isinstance(c, FilterCompare)]

    def paths(self) -> list[PathClause]:
        return [c for c in self.where if isinstance(c, PathClause)]


def allocate_handlers(spec: PatternSpec) -> HandlerTable:
    diagnostics = validate_pattern(spec)
    if diagnostics:
        raise PatternValidationError(diagnostics)

    aliases = default_alias(spec)
    result = {nid: (f"pop{nid}", aliases[nid]) for nid in spec.node_ids()}

    internal: list[str] = []
    bnodes: dict[tuple[int, int], str] = {}
    counter = 0
    for node_id in spec.node_ids():
        node = spec.node(node_id)
        if node.is_base_object:
            counter += 1
            internal.append(f"internalHandler{counter}")
        for _ in node.constraints:
            counter += 1
            internal.append(f"internalHandler{counter}")
        for rel in node.relations:
            if rel.kind is RelKind.IMMEDIATE:
                bnodes[(rel.target_id, node_id)] = (
                    f"BNodeOfpop{rel.target_id}_to_pop{node_id}"
                )
    return HandlerTable(result, tuple(internal), bnodes)


def _constant(value: Decimal | str | bool) -> Term:
    if isinstance(value, bool):
        return Term(TermKind.LITERAL_STRING, "true" if value else "false")
    if isinstance(value, Decimal):
        return Term(TermKind.LITERAL_NUMBER, value)
    return string(value)


def compile_pattern(spec: PatternSpec) -> QueryIR:
    """Deterministic translation of a validated pattern into the query IR."""
    handlers = allocate_handlers(spec)
    where: list[Clause] = []
    internal = iter(handlers.internal_handlers)
    cross_counter = 0

    for node_id in spec.node_ids():
        node = spec.node(node_id)
        pop = Var(f"pop{node_id}")

        # type clause
        if node.is_base_object:
            where.append(TriplePattern(pop, "isABaseObj", Var(next(internal))))
        elif node.node_type != ANY:
            alternatives = node.type_alternatives()
            if len(alternatives) == 1:
                where.append(
                    TriplePattern(pop, "hasPopType", string(next(iter(alternatives))))
                )
            else:
                type_var = Var(f"pop{node_id}Type")
                where.append(TriplePattern(pop, "hasPopType", type_var))
                where.append(FilterIn(type_var, tuple(sorted(alternatives))))

        # constant constraints
        for constraint in node.constraints:
            value_var = Var(next(internal))
            where.append(TriplePattern(pop, constraint.property, value_var))
            where.append(FilterCompare(value_var, constraint.op, _constant(constraint.value)))

        # cross-node comparisons
        for cmp_ in node.compares:
            cross_counter += 1
            left = Var(f"crossHandler{cross_counter}_a")
            right = Var(f"crossHandler{cross_counter}_b")
            where.append(TriplePattern(pop, cmp_.property, left))
            where.append(
                TriplePattern(Var(f"pop{cmp_.other_id}"), cmp_.other_property, right)
            )
            where.append(FilterCompare(left, cmp_.op, right))

        # relations
        for rel in node.relations:
            child = Var(f"pop{rel.target_id}")
            if rel.kind is RelKind.DESCENDANT:
                where.append(PathClause(pop, child, rel.leg))
                continue
            bnode = Var(handlers.bnode_handlers[(rel.target_id, node_id)])
            if rel.leg is RelLeg.ANY:
                where.append(TriplePattern(child, OUTPUT_STREAM_PREDICATE, bnode))
                where.append(TriplePattern(bnode, OUTPUT_STREAM_PREDICATE, pop))
            else:
                leg_pred = INPUT_STREAM_PREDICATES[Leg(rel.leg.value)]
                where.append(TriplePattern(pop, leg_pred, bnode))
                where.append(TriplePattern(bnode, leg_pred, child))
                where.append(TriplePattern(child, OUTPUT_STREAM_PREDICATE, bnode))
                where.append(TriplePattern(bnode, OUTPUT_STREAM_PREDICATE, pop))

    selects = tuple(
        (handlers.result_handlers[nid][0], handlers.result_handlers[nid][1])
        for nid in spec.node_ids()
        if spec.node(nid).returned
    )
    result_vars = tuple(handlers.result_handlers[nid][0] for nid in spec.node_ids())

    ir = QueryIR(
        pattern_name=spec.name,
        selects=selects,
        where=tuple(where),
        order_by=selects[0][0] if selects else result_vars[0],
        result_vars=result_vars,
        aliases=tuple(handlers.result_handlers[nid] for nid in spec.node_ids()),
        node_of_var={f"pop{nid}": nid for nid in spec.node_ids()},
    )
    _check_ir(ir)
    return ir


def _check_ir(ir: QueryIR) -> None:
    bound: set[str] = set()
    for clause in ir.where:
        if isinstance(clause, TriplePattern):
            bound.add(clause.subject.name)
            if isinstance(clause.object, Var):
                bound.add(clause.object.name)
        elif isinstance(clause, PathClause):
            bound.add(clause.from_var.name)
            bound.add(clause.to_var.name)
    for var, _ in ir.selects:
        if var not in bound:
            raise PatternValidationError(
                [f"select variable ?{var} is never bound in the query body"]
            )
    for clause in ir.where:
        if isinstance(clause, FilterCompare):
            for side in (clause.lhs, clause.rhs):
                if isinstance(side, Var) and side.name not in bound:
                    raise PatternValidationError(
                        [f"filter variable ?{side.name} is never bound"]
                    )
        elif isinstance(clause, FilterIn) and clause.var.name not in bound:
            raise PatternValidationError(
                [f"filter variable ?{clause.var.name} is never bound"]
            )


_ANY_HOP = "({0}|{1}|{2})".format(
    *(f"predURI:{INPUT_STREAM_PREDICATES[leg]}" for leg in (Leg.OUTER, Leg.INNER, Leg.GENERIC))
)
_ANY_STEP = f"({_ANY_HOP}/{_ANY_HOP})"


def _render_term(value: VarOrTerm) -> str:
    if isinstance(value, Var):
        return f"?{value.name}"
    if value.kind is TermKind.LITERAL_NUMBER:
        return format_decimal(value.value)
    if value.value in ("true", "false"):
        return value.value
    return f'"{value.value}"'


def _render_clause(clause: Clause) -> str:
    if isinstance(clause, TriplePattern):
        obj = (
            f"?{clause.object.name}"
            if isinstance(clause.object, Var)
            else _render_term(clause.object)
        )
        return f"  ?{clause.subject.name} predURI:{clause.predicate} {obj} ."
    if isinstance(clause, FilterCompare):
        return f"  FILTER ({_render_term(clause.lhs)} {clause.op} {_render_term(clause.rhs)}) ."
    if isinstance(clause, FilterIn):
        values = ", ".join(f'"{v}"' for v in clause.values)
        return f"  FILTER (?{clause.var.name} IN ({values})) ."
    if isinstance(clause, PathClause):
        if clause.first_leg is RelLeg.ANY:
            path = f"{_ANY_STEP}+"
        else:
            leg_pred = f"predURI:{INPUT_STREAM_PREDICATES[Leg(clause.first_leg.value)]}"
            path = f"({leg_pred}/{leg_pred})/{_ANY_STEP}*"
        return f"  ?{clause.from_var.name} {path} ?{clause.to_var.name} ."
    raise TypeError(f"unknown clause {clause!r}")


def render_query_text(ir: QueryIR) -> str:
    """Byte-stable query text for inspection and golden-file regression."""
    lines = [f"PREFIX {prefix}: <{ns}>" for prefix, ns in PREFIXES]
    select = " ".join(f"(?{var} AS ?{alias})" for var, alias in ir.selects)
    lines.append(f"SELECT {select}")
    lines.append("WHERE {")
    lines.extend(_render_clause(c) for c in ir.where)
    lines.append(f"}} ORDER BY ?{ir.order_by}")
    return "\n".join(lines) + "\n"
