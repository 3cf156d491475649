"""Problem-pattern model: the document the pattern builder produces and its
semantic form.

A pattern is a small labelled tree of operator descriptions.  Node types are
concrete operator tokens, alternations ("IXSCAN|TBSCAN"), or the wildcards
ANY (anything), JOIN (any join method) and BASE OB (base objects only).
Nodes constrain properties against constants, compare properties across two
nodes, and relate to children either immediately or through any number of
intermediate operators (the descendant's unconstrained path).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from importlib import resources

import jsonschema

from .errors import DanglingReference, InconsistentInverse, SchemaViolation
from .model import Diagnostic, JOIN_TYPES, Leg
from .numeric import format_decimal, is_numeric_literal, parse_numeric_literal

ANY = "ANY"
JOIN = "JOIN"
BASE_OB = "BASE OB"

COMPARISON_SIGNS = ("<", "<=", "=", "!=", ">=", ">")

_RELATION_LEGS = {
    "hasOuterInputStream": Leg.OUTER,
    "hasInnerInputStream": Leg.INNER,
    "hasInputStream": Leg.GENERIC,
    "hasAnyInputStream": None,  # any leg
}
_INVERSE_ID = "hasOutputStream"

#: The paper's figures spell this predicate two ways; patterns may use either.
PREDICATE_ALIASES = {"hasEstimateCardinality": "hasEstimatedCardinality"}

#: Predicates whose values are never numbers; ordering comparisons on these
#: are rejected by the validator.
NON_NUMERIC_PREDICATES = frozenset(
    {"hasPopType", "hasJoinInputLeg", "isABaseObj", "hasLeftOuterJoin"}
)


class RelKind(str, Enum):
    IMMEDIATE = "IMMEDIATE"
    DESCENDANT = "DESCENDANT"


class RelLeg(str, Enum):
    OUTER = "OUTER"
    INNER = "INNER"
    GENERIC = "GENERIC"
    ANY = "ANY"


@dataclass(frozen=True)
class PropertyConstraint:
    property: str
    op: str  # one of COMPARISON_SIGNS
    value: Decimal | str | bool


@dataclass(frozen=True)
class CrossNodeConstraint:
    """value(property of this node) OP value(other_property of node other_id)."""

    property: str
    op: str
    other_id: int
    other_property: str


@dataclass(frozen=True)
class RelationshipConstraint:
    target_id: int
    leg: RelLeg
    kind: RelKind


@dataclass(frozen=True)
class PatternNode:
    id: int
    node_type: str
    alias: str | None = None
    constraints: tuple[PropertyConstraint, ...] = ()
    compares: tuple[CrossNodeConstraint, ...] = ()
    relations: tuple[RelationshipConstraint, ...] = ()
    returned: bool = True

    def type_alternatives(self) -> frozenset[str] | None:
        """Concrete operator types this node accepts; None means unrestricted."""
        if self.node_type == ANY or self.node_type == BASE_OB:
            return None
        if self.node_type == JOIN:
            return JOIN_TYPES
        return frozenset(self.node_type.split("|"))

    @property
    def is_base_object(self) -> bool:
        return self.node_type == BASE_OB


@dataclass(frozen=True)
class PatternSpec:
    name: str
    nodes: tuple[PatternNode, ...]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> PatternNode:
        return self._by_id[node_id]

    def node_ids(self) -> list[int]:
        return sorted(n.id for n in self.nodes)


_validator = None


def _schema_validator():
    global _validator
    if _validator is None:
        schema = json.loads(
            resources.files("planmatch").joinpath("data/schemas/pattern.schema.json").read_text()
        )
        _validator = jsonschema.Draft202012Validator(schema)
    return _validator


def _constraint_value(raw, path: str) -> Decimal | str | bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return Decimal(str(raw))
    if isinstance(raw, str):
        if is_numeric_literal(raw):
            return parse_numeric_literal(raw)
        return raw
    raise SchemaViolation(f"unsupported constraint value {raw!r}", path)


def pattern_from_builder_doc(doc: dict) -> PatternSpec:
    """Normalize a builder document into a PatternSpec.

    Relations point parent-to-child; child-side hasOutputStream entries are
    verified against the parent side and then dropped.
    """
    errors = sorted(_schema_validator().iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise SchemaViolation(first.message, first.json_path)

    ids = [pop["ID"] for pop in doc["pops"]]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("node IDs are not unique", "$.pops")
    id_set = set(ids)

    relations: dict[int, list[RelationshipConstraint]] = {i: [] for i in ids}
    inverses: list[tuple[int, int, str]] = []  # (child, parent, path)
    constraints: dict[int, list[PropertyConstraint]] = {i: [] for i in ids}

    for p_idx, pop in enumerate(doc["pops"]):
        node_id = pop["ID"]
        for c_idx, entry in enumerate(pop.get("popProperties", [])):
            path = f"$.pops[{p_idx}].popProperties[{c_idx}]"
            prop = PREDICATE_ALIASES.get(entry["id"], entry["id"])
            sign = entry.get("sign", "")

            if sign in ("Immediate Child", "Descendant Child"):
                if prop not in _RELATION_LEGS:
                    raise SchemaViolation(
                        f"{prop!r} is not a stream relationship", path
                    )
                if not isinstance(entry["value"], int) or isinstance(entry["value"], bool):
                    raise SchemaViolation("relationship value must be a node ID", path)
                target = entry["value"]
                if target not in id_set:
                    raise DanglingReference(
                        f"node {node_id} relates to unknown node {target}"
                    )
                leg = _RELATION_LEGS[prop]
                relations[node_id].append(
                    RelationshipConstraint(
                        target_id=target,
                        leg=RelLeg(leg.value) if leg is not None else RelLeg.ANY,
                        kind=RelKind.IMMEDIATE
                        if sign == "Immediate Child"
                        else RelKind.DESCENDANT,
                    )
                )
            elif prop == _INVERSE_ID:
                if not isinstance(entry["value"], int) or isinstance(entry["value"], bool):
                    raise SchemaViolation("hasOutputStream value must be a node ID", path)
                inverses.append((node_id, entry["value"], path))
            else:
                if sign not in COMPARISON_SIGNS:
                    raise SchemaViolation(
                        f"sign {sign!r} is not a comparison or relationship kind", path
                    )
                constraints[node_id].append(
                    PropertyConstraint(prop, sign, _constraint_value(entry["value"], path))
                )

    for child, parent, path in inverses:
        if parent not in id_set:
            raise DanglingReference(
                f"node {child} declares output stream to unknown node {parent}"
            )
        if not any(rel.target_id == child for rel in relations[parent]):
            raise InconsistentInverse(
                f"node {child} declares its output goes to node {parent}, "
                f"but node {parent} has no matching child relation"
            )

    nodes = []
    for pop in doc["pops"]:
        node_id = pop["ID"]
        compares = tuple(
            CrossNodeConstraint(
                property=PREDICATE_ALIASES.get(c["property"], c["property"]),
                op=c["sign"],
                other_id=c["otherId"],
                other_property=PREDICATE_ALIASES.get(c["otherProperty"], c["otherProperty"]),
            )
            for c in pop.get("compare", [])
        )
        for cmp_ in compares:
            if cmp_.other_id not in id_set:
                raise DanglingReference(
                    f"node {node_id} compares against unknown node {cmp_.other_id}"
                )
        nodes.append(
            PatternNode(
                id=node_id,
                node_type=pop["type"],
                alias=pop.get("alias"),
                constraints=tuple(constraints[node_id]),
                compares=compares,
                relations=tuple(relations[node_id]),
                returned=pop.get("returned", True),
            )
        )

    return PatternSpec(
        name=doc.get("name", ""),
        description=doc.get("description", ""),
        nodes=tuple(nodes),
    )


def pattern_to_builder_doc(spec: PatternSpec) -> dict:
    """Serialize back to the builder document form (including inverse entries)."""
    parents: dict[int, list[int]] = {}
    for node in spec.nodes:
        for rel in node.relations:
            if rel.kind is RelKind.IMMEDIATE:
                parents.setdefault(rel.target_id, []).append(node.id)

    leg_ids = {
        RelLeg.OUTER: "hasOuterInputStream",
        RelLeg.INNER: "hasInnerInputStream",
        RelLeg.GENERIC: "hasInputStream",
        RelLeg.ANY: "hasAnyInputStream",
    }

    pops = []
    for node in spec.nodes:
        props = []
        for c in node.constraints:
            if isinstance(c.value, bool):
                value = c.value
            elif isinstance(c.value, Decimal):
                value = format_decimal(c.value)
            else:
                value = c.value
            props.append({"id": c.property, "value": value, "sign": c.op})
        for rel in node.relations:
            props.append(
                {
                    "id": leg_ids[rel.leg],
                    "value": rel.target_id,
                    "sign": "Immediate Child"
                    if rel.kind is RelKind.IMMEDIATE
                    else "Descendant Child",
                }
            )
        for parent in parents.get(node.id, []):
            props.append({"id": _INVERSE_ID, "value": parent})

        pop: dict = {"ID": node.id, "type": node.node_type, "popProperties": props}
        if node.alias is not None:
            pop["alias"] = node.alias
        if not node.returned:
            pop["returned"] = False
        if node.compares:
            pop["compare"] = [
                {
                    "property": c.property,
                    "sign": c.op,
                    "otherId": c.other_id,
                    "otherProperty": c.other_property,
                }
                for c in node.compares
            ]
        pops.append(pop)

    doc: dict = {"pops": pops}
    if spec.name:
        doc["name"] = spec.name
    if spec.description:
        doc["description"] = spec.description
    return doc


def default_alias(spec: PatternSpec) -> dict[int, str]:
    """User alias, else TOP for the first node and TYPE+id for the rest."""
    ids = spec.node_ids()
    aliases: dict[int, str] = {}
    for i, node_id in enumerate(ids):
        node = spec.node(node_id)
        if node.alias:
            aliases[node_id] = node.alias
        elif i == 0:
            aliases[node_id] = "TOP"
        else:
            base = {ANY: "ANY", BASE_OB: "BASE"}.get(node.node_type, node.node_type)
            aliases[node_id] = f"{base.replace('|', '_')}{node_id}"
    return aliases


def validate_pattern(spec: PatternSpec) -> list[Diagnostic]:
    """All PatternSpec invariants; empty list means compilable."""
    out: list[Diagnostic] = []
    if not spec.nodes:
        out.append(Diagnostic("EmptyPattern", "pattern has no nodes"))
        return out

    seen: set[int] = set()
    for node in spec.nodes:
        if node.id in seen:
            out.append(Diagnostic("DuplicateId", f"node id {node.id} repeats"))
        seen.add(node.id)

    if len(seen) == len(spec.nodes):
        aliases = default_alias(spec)
        taken: set[str] = set()
        for node_id in spec.node_ids():
            alias = aliases[node_id]
            if alias in taken:
                out.append(
                    Diagnostic("DuplicateAlias", f"alias {alias!r} names two nodes")
                )
            taken.add(alias)

    ids = {n.id for n in spec.nodes}
    has_inbound: set[int] = set()
    for node in spec.nodes:
        legs_seen: list[RelLeg] = []
        for rel in node.relations:
            if rel.target_id not in ids:
                out.append(
                    Diagnostic(
                        "DanglingReference",
                        f"node {node.id} relates to unknown node {rel.target_id}",
                    )
                )
            else:
                has_inbound.add(rel.target_id)
            if rel.kind is RelKind.IMMEDIATE and rel.leg in (RelLeg.OUTER, RelLeg.INNER):
                if rel.leg in legs_seen:
                    out.append(
                        Diagnostic(
                            "DuplicateLeg",
                            f"node {node.id} has two immediate {rel.leg.value} children",
                        )
                    )
                legs_seen.append(rel.leg)
        for cmp_ in node.compares:
            if cmp_.other_id not in ids:
                out.append(
                    Diagnostic(
                        "DanglingReference",
                        f"node {node.id} compares against unknown node {cmp_.other_id}",
                    )
                )
        for c in node.constraints:
            ordered = c.op in ("<", "<=", ">=", ">")
            if ordered and (
                not isinstance(c.value, Decimal) or c.property in NON_NUMERIC_PREDICATES
            ):
                out.append(
                    Diagnostic(
                        "NonNumericComparison",
                        f"node {node.id}: {c.op} needs a numeric value for {c.property}",
                    )
                )

    if _pattern_has_cycle(spec):
        out.append(Diagnostic("CyclicPattern", "relationship graph contains a cycle"))

    # An untyped node with nothing else binding it would mean "match anything";
    # every node must be pinned by a type, a constraint, a comparison, or a
    # relation on either side.
    for node in spec.nodes:
        if (
            node.node_type == ANY
            and not node.constraints
            and not node.compares
            and not node.relations
            and node.id not in has_inbound
            and not any(c.other_id == node.id for n in spec.nodes for c in n.compares)
        ):
            out.append(
                Diagnostic(
                    "UnconstrainedNode",
                    f"node {node.id} is ANY with no constraints or relations",
                )
            )
    return out


def _pattern_has_cycle(spec: PatternSpec) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n.id: WHITE for n in spec.nodes}

    def visit(node_id: int) -> bool:
        color[node_id] = GRAY
        for rel in spec.node(node_id).relations:
            if rel.target_id not in color:
                continue
            if color[rel.target_id] == GRAY:
                return True
            if color[rel.target_id] == WHITE and visit(rel.target_id):
                return True
        color[node_id] = BLACK
        return False

    return any(color[n.id] == WHITE and visit(n.id) for n in spec.nodes)


BUILTIN_PATTERN_FILES = {
    "pattern-a": "pattern_a.json",
    "pattern-b": "pattern_b.json",
    "pattern-c": "pattern_c.json",
    "pattern-d": "pattern_d.json",
}

BUILTIN_TEMPLATES = {
    "pattern-a": 'Create index on table @BASE4 on columns @TOP.listColumns("INPUT")',
    "pattern-b": (
        "Poor join order around @TOP: rewrite (T1 LOJ T2) JOIN (T3 LOJ T4) into "
        "((T1 LOJ T2) JOIN T3) LOJ T4 so the left outer joins @JOIN2 and @JOIN3 stack."
    ),
    "pattern-c": (
        "Collect column group statistics on the equality local and join predicate "
        'columns of @BASE2 (scan @TOP, predicate columns @TOP.listColumns("PREDICATE")).'
    ),
    "pattern-d": (
        "Sort spill: @TOP writes more I/O than its input @ANY2; "
        "consider increasing sort heap memory."
    ),
}


def load_pattern_file(name: str) -> PatternSpec:
    doc = json.loads(
        resources.files("planmatch").joinpath(f"data/patterns/{name}").read_text()
    )
    return pattern_from_builder_doc(doc)


def builtin_pattern_doc(key: str) -> dict:
    return json.loads(
        resources.files("planmatch")
        .joinpath(f"data/patterns/{BUILTIN_PATTERN_FILES[key]}")
        .read_text()
    )


def builtin_patterns() -> list[tuple[PatternSpec, str]]:
    """The four shipped expert patterns with their recommendation templates."""
    return [
        (load_pattern_file(filename), BUILTIN_TEMPLATES[key])
        for key, filename in BUILTIN_PATTERN_FILES.items()
    ]
