"""Graph-pattern evaluation over triple graphs, plus the brute-force oracle.

Evaluation is backtracking basic-graph-pattern matching with homomorphism
semantics (two variables may bind the same resource unless a filter forbids
it), decimal-exact filter comparison, and transitive path closure for
descendant relations.  The oracle re-derives matches by enumerating node
assignments directly against the Plan structure, so the two implementations
share no traversal code and check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .compile import (
    FilterCompare,
    FilterIn,
    PathClause,
    QueryIR,
    TriplePattern,
    Var,
)
from .errors import PatternValidationError, TooLarge
from .graph import (
    BASEOBJ_NS,
    INPUT_STREAM_PREDICATES,
    POP_NS,
    LocationKind,
    Term,
    TermKind,
    TripleGraph,
    base_obj_uri,
    detail_predicate,
    number,
    pop_uri,
    pred,
    resource,
    string,
)
from .model import BaseObject, Leg, Plan, PlanOperator
from .numeric import format_decimal
from .pattern import (
    BASE_OB,
    PatternSpec,
    RelKind,
    RelLeg,
    validate_pattern,
)

#: Incremented once per evaluate() call; lets callers observe loop shapes.
EVALUATION_COUNT = 0


def reset_evaluation_count() -> None:
    global EVALUATION_COUNT
    EVALUATION_COUNT = 0


@dataclass(frozen=True)
class BindingRow:
    mapping: dict[str, Term]
    plan_id: str

    def key(self, select_vars: tuple[str, ...]) -> tuple:
        return tuple(self.mapping[v] for v in select_vars if v in self.mapping)


@dataclass(frozen=True)
class MatchSet:
    plan_id: str
    pattern_name: str
    rows: tuple[BindingRow, ...]

    def __bool__(self) -> bool:
        return bool(self.rows)

    def projections(self, select_vars: tuple[str, ...]) -> frozenset[tuple]:
        return frozenset(row.key(select_vars) for row in self.rows)


def compare_terms(lhs: Term, op: str, rhs: Term) -> bool:
    """Decimal comparison for numbers; equality only across matching kinds."""
    if op == "=":
        return _terms_equal(lhs, rhs)
    if op == "!=":
        return not _terms_equal(lhs, rhs)
    if lhs.kind is TermKind.LITERAL_NUMBER and rhs.kind is TermKind.LITERAL_NUMBER:
        if op == "<":
            return lhs.value < rhs.value
        if op == "<=":
            return lhs.value <= rhs.value
        if op == ">":
            return lhs.value > rhs.value
        if op == ">=":
            return lhs.value >= rhs.value
    return False


def _terms_equal(lhs: Term, rhs: Term) -> bool:
    if lhs.kind is TermKind.LITERAL_NUMBER and rhs.kind is TermKind.LITERAL_NUMBER:
        return lhs.value == rhs.value
    return lhs.kind == rhs.kind and lhs.value == rhs.value


def _term_sort_key(term: Term) -> tuple:
    if term.kind is TermKind.RESOURCE:
        uri = term.value
        if uri.startswith(POP_NS):
            return (0, int(uri[len(POP_NS):]), "")
        if uri.startswith(BASEOBJ_NS):
            return (1, 0, uri[len(BASEOBJ_NS):])
        return (2, 0, uri)
    if term.kind is TermKind.LITERAL_NUMBER:
        return (3, 0, format_decimal(term.value))
    return (4, 0, str(term.value))


def _row_sort_key(row: BindingRow, order_var: str, result_vars: tuple[str, ...]) -> tuple:
    primary = _term_sort_key(row.mapping[order_var]) if order_var in row.mapping else ()
    rest = tuple(_term_sort_key(row.mapping[v]) for v in result_vars if v in row.mapping)
    return (primary, rest)


def _finalize_rows(
    raw: list[dict[str, Term]],
    plan_id: str,
    pattern_name: str,
    select_vars: tuple[str, ...],
    order_var: str,
    result_vars: tuple[str, ...],
) -> MatchSet:
    rows = [BindingRow(mapping=m, plan_id=plan_id) for m in raw]
    rows.sort(key=lambda r: _row_sort_key(r, order_var, result_vars))
    seen: set[tuple] = set()
    unique: list[BindingRow] = []
    for row in rows:
        key = row.key(select_vars)
        if key not in seen:
            seen.add(key)
            unique.append(row)
    return MatchSet(plan_id=plan_id, pattern_name=pattern_name, rows=tuple(unique))


# --------------------------------------------------------------------------
# graph-side evaluation


def _graph_cache(g: TripleGraph) -> dict:
    cache = getattr(g, "_match_cache", None)
    if cache is None:
        cache = {}
        g._match_cache = cache
    return cache


def _child_hops(g: TripleGraph, uri: str, legs: tuple[Leg, ...]) -> list[str]:
    node = resource(uri)
    out: list[str] = []
    for leg in legs:
        p = pred(INPUT_STREAM_PREDICATES[leg])
        for stream in g.objects(node, p):
            for child in g.objects(stream, p):
                if child.kind is TermKind.RESOURCE:
                    out.append(child.value)
    return out


_ALL_LEGS = (Leg.OUTER, Leg.INNER, Leg.GENERIC)


def _reach_any(g: TripleGraph) -> dict[str, set[str]]:
    """uri -> every operator/base-object resource reachable via child hops."""
    cache = _graph_cache(g)
    if "reach_any" in cache:
        return cache["reach_any"]

    reach: dict[str, set[str]] = {}
    nodes = [
        uri
        for uri, loc in g.origin.items()
        if loc.kind in (LocationKind.OPERATOR, LocationKind.BASE_OBJECT)
    ]

    # iterative post-order over the stream DAG
    state: dict[str, int] = {}
    for start in nodes:
        if start in state:
            continue
        stack = [(start, False)]
        while stack:
            uri, expanded = stack.pop()
            if expanded:
                acc: set[str] = set()
                for child in _child_hops(g, uri, _ALL_LEGS):
                    acc.add(child)
                    acc |= reach.get(child, set())
                reach[uri] = acc
                state[uri] = 2
                continue
            if state.get(uri) is not None:
                continue
            state[uri] = 1
            stack.append((uri, True))
            for child in _child_hops(g, uri, _ALL_LEGS):
                if state.get(child) is None:
                    stack.append((child, False))
    cache["reach_any"] = reach
    return reach


def descendant_closure(g: TripleGraph, from_uri: str, first_leg: RelLeg) -> set[str]:
    """Resources reachable by one first_leg hop then any number of child hops."""
    cache = _graph_cache(g).setdefault("closure", {})
    key = (from_uri, first_leg)
    if key in cache:
        return cache[key]
    legs = _ALL_LEGS if first_leg is RelLeg.ANY else (Leg(first_leg.value),)
    reach = _reach_any(g)
    out: set[str] = set()
    for hop in _child_hops(g, from_uri, legs):
        out.add(hop)
        out |= reach.get(hop, set())
    cache[key] = out
    return out


def evaluate(ir: QueryIR, g: TripleGraph) -> MatchSet:
    """Match the compiled pattern against one graph; empty MatchSet if nothing."""
    global EVALUATION_COUNT
    EVALUATION_COUNT += 1

    triples = [c for c in ir.where if isinstance(c, TriplePattern)]
    paths = [c for c in ir.where if isinstance(c, PathClause)]
    filters = [c for c in ir.where if isinstance(c, (FilterCompare, FilterIn))]
    filter_needs: list[set[str]] = []
    for f in filters:
        if isinstance(f, FilterIn):
            filter_needs.append({f.var.name})
        else:
            filter_needs.append(
                {s.name for s in (f.lhs, f.rhs) if isinstance(s, Var)}
            )

    bindings: dict[str, Term] = {}
    raw_rows: list[dict[str, Term]] = []

    def resolve(x) -> Term | None:
        if isinstance(x, Var):
            return bindings.get(x.name)
        return x

    def check_filter(f) -> bool:
        if isinstance(f, FilterIn):
            term = bindings[f.var.name]
            return term.kind is TermKind.LITERAL_STRING and term.value in f.values
        lhs = resolve(f.lhs)
        rhs = resolve(f.rhs)
        return compare_terms(lhs, f.op, rhs)

    def candidate_count(tp: TriplePattern) -> int:
        p = pred(tp.predicate)
        s = resolve(tp.subject)
        o = resolve(tp.object)
        if s is not None and o is not None:
            return 1 if (s, p, o) in g.triples else 0
        if s is not None:
            return len(g.spo.get(s, {}).get(p, ()))
        if o is not None:
            return len(g.pos.get(p, {}).get(o, ()))
        return len(g.ps.get(p, ()))

    def candidate_pairs(tp: TriplePattern) -> list[tuple[Term, Term]]:
        p = pred(tp.predicate)
        s = resolve(tp.subject)
        o = resolve(tp.object)
        if s is not None and o is not None:
            return [(s, o)] if (s, p, o) in g.triples else []
        if s is not None:
            return [(s, obj) for obj in g.spo.get(s, {}).get(p, ())]
        if o is not None:
            return [(subj, o) for subj in g.pos.get(p, {}).get(o, ())]
        return list(g.ps.get(p, ()))

    def bind(x, term: Term, trail: list[str]) -> bool:
        if isinstance(x, Var):
            existing = bindings.get(x.name)
            if existing is None:
                bindings[x.name] = term
                trail.append(x.name)
                return True
            return existing == term
        return x == term

    def apply_ready_filters(pending: list[int], trail_unused) -> tuple[bool, list[int]]:
        still: list[int] = []
        for idx in pending:
            if filter_needs[idx] <= bindings.keys():
                if not check_filter(filters[idx]):
                    return False, still
            else:
                still.append(idx)
        return True, still

    pop_uris = [
        uri for uri, loc in g.origin.items() if loc.kind is LocationKind.OPERATOR
    ]

    def solve_paths(remaining: list[PathClause], pending: list[int]) -> None:
        if not remaining:
            raw_rows.append({v: bindings[v] for v in ir.result_vars})
            return
        path, rest = remaining[0], remaining[1:]
        from_term = resolve(path.from_var)
        to_term = resolve(path.to_var)

        def attempt(from_uri: str) -> None:
            closure = descendant_closure(g, from_uri, path.first_leg)
            if to_term is not None:
                if to_term.kind is TermKind.RESOURCE and to_term.value in closure:
                    ok, still = apply_ready_filters(pending, None)
                    if ok:
                        solve_paths(rest, still)
                return
            for target in sorted(closure):
                trail: list[str] = []
                if bind(path.to_var, resource(target), trail):
                    ok, still = apply_ready_filters(pending, None)
                    if ok:
                        solve_paths(rest, still)
                for name in trail:
                    del bindings[name]

        if from_term is not None:
            if from_term.kind is TermKind.RESOURCE:
                attempt(from_term.value)
            return
        for from_uri in sorted(pop_uris):
            trail: list[str] = []
            if bind(path.from_var, resource(from_uri), trail):
                attempt(from_uri)
            for name in trail:
                del bindings[name]

    def solve(remaining: list[TriplePattern], pending: list[int]) -> None:
        if not remaining:
            solve_paths(paths, pending)
            return
        best_i = min(range(len(remaining)), key=lambda i: candidate_count(remaining[i]))
        tp = remaining[best_i]
        rest = remaining[:best_i] + remaining[best_i + 1:]
        for s_term, o_term in candidate_pairs(tp):
            trail: list[str] = []
            if bind(tp.subject, s_term, trail) and bind(tp.object, o_term, trail):
                ok, still = apply_ready_filters(pending, None)
                if ok:
                    solve(rest, still)
            for name in trail:
                del bindings[name]

    solve(triples, list(range(len(filters))))

    return _finalize_rows(
        raw_rows, g.plan_id, ir.pattern_name, ir.select_vars, ir.order_by, ir.result_vars
    )


def match_workload(ir: QueryIR, graphs: list[TripleGraph]) -> list[MatchSet]:
    """Evaluate per graph independently; only graphs with matches are reported."""
    results = [evaluate(ir, g) for g in graphs]
    return sorted((m for m in results if m.rows), key=lambda m: m.plan_id)


# --------------------------------------------------------------------------
# plan-side brute-force oracle

ORACLE_MAX_OPERATORS = 64


def _operator_property(plan: Plan, op: PlanOperator, prop: str) -> Term | None:
    if prop == "hasPopType":
        return string(op.op_type)
    if prop == "hasEstimatedCardinality":
        return number(op.cardinality)
    if prop == "hasTotalCost":
        return number(op.total_cost)
    if prop == "hasIOCost":
        return number(op.io_cost)
    if prop == "hasLeftOuterJoin":
        return string("true") if op.is_left_outer_join else None
    if prop == "hasTotalCostIncrease":
        child_total = sum(
            (
                plan.operator(e.child).total_cost
                for e in plan.children_of(op.op_num)
                if e.child_is_operator
            ),
            Decimal(0),
        )
        return number(op.total_cost - child_total)
    for key, value in op.details.items():
        if detail_predicate(key) == prop:
            from .numeric import is_numeric_literal, parse_numeric_literal

            if is_numeric_literal(value):
                return number(parse_numeric_literal(value))
            return string(value)
    return None


def _object_property(obj: BaseObject, prop: str) -> Term | None:
    if prop == "hasEstimatedCardinality":
        return number(obj.cardinality)
    if prop == "isABaseObj":
        return string("true")
    return None


class _Element:
    __slots__ = ("ref", "is_operator", "payload")

    def __init__(self, ref, is_operator, payload):
        self.ref = ref
        self.is_operator = is_operator
        self.payload = payload

    def uri_term(self) -> Term:
        return resource(pop_uri(self.ref) if self.is_operator else base_obj_uri(self.ref))


def brute_force_oracle(spec: PatternSpec, plan: Plan) -> MatchSet:
    """Enumerate every assignment of pattern nodes to plan elements.

    Checks all constraints naively against the Plan itself (never the triple
    graph), so the result is an independent derivation of what evaluate()
    must produce for the same pattern.
    """
    if len(plan.operators) > ORACLE_MAX_OPERATORS:
        raise TooLarge(
            f"{len(plan.operators)} operators exceeds the oracle guard "
            f"({ORACLE_MAX_OPERATORS})"
        )
    diagnostics = validate_pattern(spec)
    if diagnostics:
        raise PatternValidationError(diagnostics)

    elements = [_Element(op.op_num, True, op) for op in plan.operators] + [
        _Element(obj.name, False, obj) for obj in plan.base_objects
    ]

    def prop_of(el: _Element, prop: str) -> Term | None:
        if el.is_operator:
            return _operator_property(plan, el.payload, prop)
        return _object_property(el.payload, prop)

    def type_ok(node, el: _Element) -> bool:
        if node.node_type == BASE_OB:
            return not el.is_operator
        alternatives = node.type_alternatives()
        if alternatives is None:  # ANY
            return True
        return el.is_operator and el.payload.op_type in alternatives

    def constraints_ok(node, el: _Element) -> bool:
        for c in node.constraints:
            value = prop_of(el, c.property)
            if value is None:
                return False
            expected = (
                string("true" if c.value else "false")
                if isinstance(c.value, bool)
                else number(c.value)
                if isinstance(c.value, Decimal)
                else string(c.value)
            )
            if not compare_terms(value, c.op, expected):
                return False
        return True

    # plan-level immediate edges and descendant closure (independent DFS)
    edges: dict[int | str, list] = {}
    for e in plan.streams:
        edges.setdefault(e.parent, []).append(e)

    def op_children(ref) -> list:
        return edges.get(ref, []) if isinstance(ref, int) else []

    reach_cache: dict[int | str, set] = {}

    def reach(ref) -> set:
        if ref in reach_cache:
            return reach_cache[ref]
        acc: set = set()
        for e in op_children(ref):
            acc.add(e.child)
            acc |= reach(e.child)
        reach_cache[ref] = acc
        return acc

    def leg_matches(rel_leg: RelLeg, edge_leg: Leg) -> bool:
        return rel_leg is RelLeg.ANY or rel_leg.value == edge_leg.value

    def relation_ok(rel, parent_el: _Element, child_el: _Element) -> bool:
        if not parent_el.is_operator:
            return False
        if rel.kind is RelKind.IMMEDIATE:
            return any(
                e.child == child_el.ref
                and (isinstance(e.child, int) == child_el.is_operator)
                and leg_matches(rel.leg, e.leg)
                for e in op_children(parent_el.ref)
            )
        hops = [
            e.child
            for e in op_children(parent_el.ref)
            if leg_matches(rel.leg, e.leg)
        ]
        targets: set = set()
        for hop in hops:
            targets.add(hop)
            targets |= reach(hop)
        if child_el.is_operator:
            return child_el.ref in targets
        return child_el.ref in {t for t in targets if isinstance(t, str)}

    node_ids = spec.node_ids()
    nodes = [spec.node(nid) for nid in node_ids]
    candidates = [
        [el for el in elements if type_ok(node, el) and constraints_ok(node, el)]
        for node in nodes
    ]

    assignment: dict[int, _Element] = {}
    raw_rows: list[dict[str, Term]] = []

    def compares_ok_now(node, el) -> bool:
        for cmp_ in node.compares:
            other = assignment.get(cmp_.other_id)
            if other is None:
                continue
            lhs = prop_of(el, cmp_.property)
            rhs = prop_of(other, cmp_.other_property)
            if lhs is None or rhs is None or not compare_terms(lhs, cmp_.op, rhs):
                return False
        # comparisons declared on other nodes pointing at this one
        for other_id, other_el in assignment.items():
            for cmp_ in spec.node(other_id).compares:
                if cmp_.other_id != node.id:
                    continue
                lhs = prop_of(other_el, cmp_.property)
                rhs = prop_of(el, cmp_.other_property)
                if lhs is None or rhs is None or not compare_terms(lhs, cmp_.op, rhs):
                    return False
        return True

    def relations_ok_now(node, el) -> bool:
        for rel in node.relations:
            target = assignment.get(rel.target_id)
            if target is not None and not relation_ok(rel, el, target):
                return False
        for other_id, other_el in assignment.items():
            for rel in spec.node(other_id).relations:
                if rel.target_id == node.id and not relation_ok(rel, other_el, el):
                    return False
        return True

    def assign(idx: int) -> None:
        if idx == len(nodes):
            raw_rows.append(
                {f"pop{nid}": assignment[nid].uri_term() for nid in node_ids}
            )
            return
        node = nodes[idx]
        for el in candidates[idx]:
            if not compares_ok_now(node, el) or not relations_ok_now(node, el):
                continue
            assignment[node.id] = el
            assign(idx + 1)
            del assignment[node.id]

    assign(0)

    select_vars = tuple(
        f"pop{nid}" for nid in node_ids if spec.node(nid).returned
    )
    order_var = select_vars[0] if select_vars else f"pop{node_ids[0]}"
    result_vars = tuple(f"pop{nid}" for nid in node_ids)
    return _finalize_rows(
        raw_rows, plan.plan_id, spec.name, select_vars, order_var, result_vars
    )


# --------------------------------------------------------------------------
# export


def location_of_term(term: Term, plan: Plan) -> dict:
    """Detransform one bound resource into {kind, ref, label} against its plan."""
    if term.kind is not TermKind.RESOURCE:
        value = (
            format_decimal(term.value)
            if term.kind is TermKind.LITERAL_NUMBER
            else str(term.value)
        )
        return {"kind": "LITERAL", "ref": value, "label": value}
    uri = term.value
    if uri.startswith(POP_NS):
        op_num = int(uri[len(POP_NS):])
        label = plan.operator(op_num).label() if plan.has_operator(op_num) else f"#{op_num}"
        return {"kind": LocationKind.OPERATOR.value, "ref": op_num, "label": label}
    if uri.startswith(BASEOBJ_NS):
        name = uri[len(BASEOBJ_NS):]
        return {"kind": LocationKind.BASE_OBJECT.value, "ref": name, "label": name}
    return {"kind": LocationKind.STREAM.value, "ref": uri, "label": uri}


def export_match_set(ms: MatchSet, ir: QueryIR, plan: Plan) -> dict:
    """Detransformed rows keyed by alias; unreturned handlers are included
    (flagged) so reports and the UI can show the whole matched shape."""
    returned = {alias for _, alias in ir.selects}
    rows = []
    for row in ms.rows:
        entry = {}
        for var, alias in ir.aliases:
            location = location_of_term(row.mapping[var], plan)
            location["returned"] = alias in returned
            entry[alias] = location
        rows.append(entry)
    return {"plan_id": ms.plan_id, "pattern": ms.pattern_name, "rows": rows}
