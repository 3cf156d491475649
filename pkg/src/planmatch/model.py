"""Canonical parsed explain-plan model and its validator.

A Plan is an immutable snapshot of one optimizer explain: the operator tree
(possibly a DAG where a shared subplan such as a TEMP feeds several
consumers), the base objects the leaves touch, and the stream edges wiring
them together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum


class Leg(str, Enum):
    OUTER = "OUTER"
    INNER = "INNER"
    GENERIC = "GENERIC"


class ObjectKind(str, Enum):
    TABLE = "TABLE"
    INDEX = "INDEX"


JOIN_TYPES = frozenset({"NLJOIN", "HSJOIN", "MSJOIN"})

#: Operator modifier prefixes with defined semantics. '>' marks a left outer
#: join; anything else in the set is preserved verbatim without meaning.
KNOWN_MODIFIERS = frozenset({">", "^"})


@dataclass(frozen=True)
class PlanOperator:
    op_num: int
    op_type: str
    cardinality: Decimal
    total_cost: Decimal
    io_cost: Decimal
    modifiers: frozenset[str] = frozenset()
    details: dict[str, str] = field(default_factory=dict)

    @property
    def is_left_outer_join(self) -> bool:
        return ">" in self.modifiers

    @property
    def is_join(self) -> bool:
        return self.op_type in JOIN_TYPES

    def label(self) -> str:
        return f"{self.op_type}(#{self.op_num})"


@dataclass(frozen=True)
class BaseObject:
    name: str
    cardinality: Decimal
    correlation: str | None = None
    kind: ObjectKind = ObjectKind.TABLE

    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class StreamEdge:
    """parent consumes child; ``child`` is an op_num (int) or base-object name (str)."""

    parent: int
    child: int | str
    leg: Leg
    ordinal: int

    @property
    def child_is_operator(self) -> bool:
        return isinstance(self.child, int)


@dataclass(frozen=True)
class Plan:
    plan_id: str
    operators: tuple[PlanOperator, ...]
    base_objects: tuple[BaseObject, ...]
    streams: tuple[StreamEdge, ...]
    source_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_ops", {op.op_num: op for op in self.operators})
        object.__setattr__(self, "_objs", {b.name: b for b in self.base_objects})

    def operator(self, op_num: int) -> PlanOperator:
        return self._ops[op_num]

    def has_operator(self, op_num: int) -> bool:
        return op_num in self._ops

    def base_object(self, name: str) -> BaseObject:
        return self._objs[name]

    def has_base_object(self, name: str) -> bool:
        return name in self._objs

    def children_of(self, op_num: int) -> list[StreamEdge]:
        return sorted(
            (e for e in self.streams if e.parent == op_num),
            key=lambda e: e.ordinal,
        )

    def parents_of(self, child: int | str) -> list[int]:
        return sorted(e.parent for e in self.streams if e.child == child)

    def roots(self) -> list[PlanOperator]:
        consumed = {e.child for e in self.streams if e.child_is_operator}
        return [op for op in self.operators if op.op_num not in consumed]

    def root(self) -> PlanOperator:
        roots = self.roots()
        if len(roots) != 1:
            raise ValueError(f"plan {self.plan_id} has {len(roots)} roots")
        return roots[0]

    @property
    def total_cost(self) -> Decimal:
        roots = self.roots()
        return roots[0].total_cost if len(roots) == 1 else Decimal(0)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    location: str = ""

    def __str__(self) -> str:
        where = f" [{self.location}]" if self.location else ""
        return f"{self.code}: {self.message}{where}"


def validate_plan(plan: Plan) -> list[Diagnostic]:
    """Check every Plan invariant; an empty list means the plan is well formed."""
    out: list[Diagnostic] = []

    seen: set[int] = set()
    for op in plan.operators:
        if op.op_num in seen:
            out.append(Diagnostic("DuplicateOpNum", f"operator number {op.op_num} repeats"))
        seen.add(op.op_num)
        if op.op_num <= 0:
            out.append(Diagnostic("NonPositiveOpNum", f"operator number {op.op_num}", op.label()))
        for name, value in (
            ("cardinality", op.cardinality),
            ("total_cost", op.total_cost),
            ("io_cost", op.io_cost),
        ):
            if value < 0:
                out.append(Diagnostic("NegativeValue", f"{name} is {value}", op.label()))

    for obj in plan.base_objects:
        if not obj.name:
            out.append(Diagnostic("EmptyObjectName", "base object with empty name"))
        if obj.cardinality < 0:
            out.append(Diagnostic("NegativeValue", f"cardinality is {obj.cardinality}", obj.name))

    for edge in plan.streams:
        if edge.parent not in plan._ops:
            out.append(Diagnostic("UnknownParent", f"edge parent {edge.parent} is no operator"))
        if edge.child_is_operator:
            if edge.child not in plan._ops:
                out.append(Diagnostic("UnknownChild", f"edge child {edge.child} is no operator"))
        elif edge.child not in plan._objs:
            out.append(Diagnostic("UnknownChild", f"edge child {edge.child!r} is no base object"))

    roots = plan.roots()
    if len(plan.operators) and len(roots) != 1:
        out.append(
            Diagnostic(
                "MultipleRoots" if len(roots) > 1 else "NoRoot",
                f"{len(roots)} root operators",
            )
        )
    if not plan.operators:
        out.append(Diagnostic("EmptyPlan", "plan has no operators"))

    if _has_cycle(plan):
        out.append(Diagnostic("NotADag", "stream edges contain a cycle"))

    for op in plan.operators:
        edges = plan.children_of(op.op_num)
        legs = [e.leg for e in edges]
        if op.is_join and len(edges) == 2:
            if legs != [Leg.OUTER, Leg.INNER]:
                out.append(
                    Diagnostic("BadJoinLegs", f"binary join legs are {legs}", op.label())
                )
        else:
            for e in edges:
                if e.leg != Leg.GENERIC and not (op.is_join and len(edges) == 2):
                    out.append(
                        Diagnostic("BadLeg", f"non-join edge carries leg {e.leg}", op.label())
                    )

    return out


def _has_cycle(plan: Plan) -> bool:
    children: dict[int, list[int]] = {}
    for e in plan.streams:
        if e.child_is_operator:
            children.setdefault(e.parent, []).append(e.child)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {op.op_num: WHITE for op in plan.operators}

    for start in color:
        if color[start] != WHITE:
            continue
        stack: list[tuple[int, int]] = [(start, 0)]
        color[start] = GRAY
        while stack:
            node, idx = stack[-1]
            kids = children.get(node, [])
            if idx < len(kids):
                stack[-1] = (node, idx + 1)
                kid = kids[idx]
                state = color.get(kid, BLACK)
                if state == GRAY:
                    return True
                if state == WHITE:
                    color[kid] = GRAY
                    stack.append((kid, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return False
