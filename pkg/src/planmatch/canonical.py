"""Canonical structured plan documents (``.plan.json``).

This is the loss-free ingestion path beside the ASCII parser: one JSON
document per plan, mirroring the Plan model field for field.  Costs and
cardinalities travel as decimal literal strings, never as binary floats.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema

from .errors import SchemaViolation
from .model import BaseObject, Leg, ObjectKind, Plan, PlanOperator, StreamEdge
from .numeric import format_decimal, parse_numeric_literal

_validator = None


def _schema_validator() -> jsonschema.Validator:
    global _validator
    if _validator is None:
        schema = json.loads(
            resources.files("planmatch").joinpath("data/schemas/plan.schema.json").read_text()
        )
        _validator = jsonschema.Draft202012Validator(schema)
    return _validator


def parse_plan_canonical(doc: dict) -> Plan:
    """Build a Plan from a canonical document; SchemaViolation names the bad field."""
    errors = sorted(_schema_validator().iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise SchemaViolation(first.message, first.json_path)

    seen: set[int] = set()
    operators = []
    for i, op in enumerate(doc["operators"]):
        if op["op_num"] in seen:
            raise SchemaViolation(
                f"duplicate op_num {op['op_num']}", f"$.operators[{i}].op_num"
            )
        seen.add(op["op_num"])
        operators.append(
            PlanOperator(
                op_num=op["op_num"],
                op_type=op["op_type"],
                cardinality=parse_numeric_literal(op["cardinality"]),
                total_cost=parse_numeric_literal(op["total_cost"]),
                io_cost=parse_numeric_literal(op["io_cost"]),
                modifiers=frozenset(op.get("modifiers", [])),
                details=dict(op.get("details", {})),
            )
        )

    object_names: set[str] = set()
    base_objects = []
    for i, obj in enumerate(doc.get("base_objects", [])):
        if obj["name"] in object_names:
            raise SchemaViolation(
                f"duplicate base object {obj['name']!r}", f"$.base_objects[{i}].name"
            )
        object_names.add(obj["name"])
        base_objects.append(
            BaseObject(
                name=obj["name"],
                cardinality=parse_numeric_literal(obj["cardinality"]),
                correlation=obj.get("correlation"),
                kind=ObjectKind(obj.get("kind", "TABLE")),
            )
        )

    streams = []
    for i, edge in enumerate(doc.get("streams", [])):
        child = edge["child"]
        if isinstance(child, int):
            if child not in seen:
                raise SchemaViolation(
                    f"stream child {child} is no operator", f"$.streams[{i}].child"
                )
        elif child not in object_names:
            raise SchemaViolation(
                f"stream child {child!r} is no base object", f"$.streams[{i}].child"
            )
        if edge["parent"] not in seen:
            raise SchemaViolation(
                f"stream parent {edge['parent']} is no operator", f"$.streams[{i}].parent"
            )
        streams.append(
            StreamEdge(
                parent=edge["parent"],
                child=child,
                leg=Leg(edge["leg"]),
                ordinal=edge["ordinal"],
            )
        )

    return Plan(
        plan_id=doc["plan_id"],
        operators=tuple(sorted(operators, key=lambda o: o.op_num)),
        base_objects=tuple(sorted(base_objects, key=lambda b: b.name)),
        streams=tuple(sorted(streams, key=lambda e: (e.parent, e.ordinal))),
        source_name=doc.get("source_name", doc["plan_id"]),
    )


def plan_to_canonical(plan: Plan) -> dict:
    """Serialize a Plan to its canonical document (inverse of parse_plan_canonical)."""
    return {
        "format": "planmatch-plan",
        "version": 1,
        "plan_id": plan.plan_id,
        "source_name": plan.source_name,
        "operators": [
            {
                "op_num": op.op_num,
                "op_type": op.op_type,
                "modifiers": sorted(op.modifiers),
                "cardinality": format_decimal(op.cardinality),
                "total_cost": format_decimal(op.total_cost),
                "io_cost": format_decimal(op.io_cost),
                "details": dict(op.details),
            }
            for op in plan.operators
        ],
        "base_objects": [
            {
                "name": obj.name,
                "cardinality": format_decimal(obj.cardinality),
                "correlation": obj.correlation,
                "kind": obj.kind.value,
            }
            for obj in plan.base_objects
        ],
        "streams": [
            {
                "parent": e.parent,
                "child": e.child,
                "leg": e.leg.value,
                "ordinal": e.ordinal,
            }
            for e in plan.streams
        ],
    }


def dumps_canonical(plan: Plan) -> str:
    return json.dumps(plan_to_canonical(plan), indent=2, sort_keys=True) + "\n"
