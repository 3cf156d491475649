import json
from decimal import Decimal

import pytest

from planmatch.errors import DanglingReference, InconsistentInverse, SchemaViolation
from planmatch.pattern import (
    ANY,
    BASE_OB,
    CrossNodeConstraint,
    PatternNode,
    PatternSpec,
    PropertyConstraint,
    RelKind,
    RelLeg,
    RelationshipConstraint,
    builtin_patterns,
    pattern_from_builder_doc,
    pattern_to_builder_doc,
    validate_pattern,
)

# the four-node document shape the pattern builder emits
BUILDER_DOC = {
    "pops": [
        {
            "ID": 1,
            "type": "NLJOIN",
            "popProperties": [
                {"id": "hasEstimateCardinality", "value": "100", "sign": ">"},
                {"id": "hasOuterInputStream", "value": 2, "sign": "Immediate Child"},
                {"id": "hasInnerInputStream", "value": 3, "sign": "Immediate Child"},
            ],
        },
        {
            "ID": 2,
            "type": "ANY",
            "popProperties": [{"id": "hasOutputStream", "value": 1}],
        },
        {
            "ID": 3,
            "type": "TBSCAN",
            "popProperties": [
                {"id": "hasInputStream", "value": 4, "sign": "Immediate Child"},
                {"id": "hasOutputStream", "value": 1},
            ],
        },
        {
            "ID": 4,
            "type": "BASE OB",
            "popProperties": [{"id": "hasOutputStream", "value": 3}],
            "planDetails": [],
        },
    ]
}


def test_builder_doc_normalizes():
    spec = pattern_from_builder_doc(BUILDER_DOC)
    assert [n.id for n in spec.nodes] == [1, 2, 3, 4]
    node1 = spec.node(1)
    assert node1.node_type == "NLJOIN"
    # the figure's alternate predicate spelling is normalized
    assert node1.constraints == (
        PropertyConstraint("hasEstimatedCardinality", ">", Decimal(100)),
    )
    assert node1.relations == (
        RelationshipConstraint(2, RelLeg.OUTER, RelKind.IMMEDIATE),
        RelationshipConstraint(3, RelLeg.INNER, RelKind.IMMEDIATE),
    )
    assert spec.node(2).node_type == ANY
    assert spec.node(2).relations == ()  # inverse entries are dropped
    assert spec.node(3).relations == (
        RelationshipConstraint(4, RelLeg.GENERIC, RelKind.IMMEDIATE),
    )
    assert spec.node(4).node_type == BASE_OB


def test_inconsistent_inverse_rejected():
    doc = json.loads(json.dumps(BUILDER_DOC))
    doc["pops"][1]["popProperties"][0]["value"] = 3  # claims node 3 as parent
    with pytest.raises(InconsistentInverse):
        pattern_from_builder_doc(doc)


def test_dangling_relationship_rejected():
    doc = json.loads(json.dumps(BUILDER_DOC))
    doc["pops"][0]["popProperties"][1]["value"] = 42
    with pytest.raises(DanglingReference):
        pattern_from_builder_doc(doc)


def test_duplicate_ids_rejected():
    doc = json.loads(json.dumps(BUILDER_DOC))
    doc["pops"][1]["ID"] = 1
    with pytest.raises(SchemaViolation, match="not unique"):
        pattern_from_builder_doc(doc)


def test_single_node_doc():
    spec = pattern_from_builder_doc({"pops": [{"ID": 1, "type": "SORT"}]})
    assert len(spec.nodes) == 1
    assert spec.node(1).relations == ()
    assert validate_pattern(spec) == []


def test_bad_sign_rejected():
    doc = {"pops": [{"ID": 1, "type": "SORT", "popProperties": [
        {"id": "hasIOCost", "value": "5", "sign": "~"}]}]}
    with pytest.raises(SchemaViolation, match="sign"):
        pattern_from_builder_doc(doc)


def test_doc_round_trip_idempotent():
    spec = pattern_from_builder_doc(BUILDER_DOC)
    doc = pattern_to_builder_doc(spec)
    spec2 = pattern_from_builder_doc(doc)
    assert spec == spec2
    assert pattern_to_builder_doc(spec2) == doc


def test_builtins_round_trip_and_validate():
    for spec, _template in builtin_patterns():
        assert validate_pattern(spec) == []
        again = pattern_from_builder_doc(pattern_to_builder_doc(spec))
        assert again == spec


def _node(node_id, **kwargs):
    defaults = dict(node_type="SORT")
    defaults.update(kwargs)
    return PatternNode(id=node_id, **defaults)


def test_validator_duplicate_id():
    spec = PatternSpec("t", (_node(1), _node(1)))
    assert "DuplicateId" in [d.code for d in validate_pattern(spec)]


def test_validator_cycle():
    spec = PatternSpec(
        "t",
        (
            _node(1, relations=(RelationshipConstraint(2, RelLeg.ANY, RelKind.IMMEDIATE),)),
            _node(2, relations=(RelationshipConstraint(1, RelLeg.ANY, RelKind.IMMEDIATE),)),
        ),
    )
    assert "CyclicPattern" in [d.code for d in validate_pattern(spec)]


def test_validator_dangling():
    spec = PatternSpec(
        "t", (_node(1, relations=(RelationshipConstraint(9, RelLeg.ANY, RelKind.IMMEDIATE),)),)
    )
    assert "DanglingReference" in [d.code for d in validate_pattern(spec)]


def test_validator_duplicate_outer_leg():
    rels = (
        RelationshipConstraint(2, RelLeg.OUTER, RelKind.IMMEDIATE),
        RelationshipConstraint(3, RelLeg.OUTER, RelKind.IMMEDIATE),
    )
    spec = PatternSpec("t", (_node(1, node_type="NLJOIN", relations=rels),
                             _node(2, node_type=ANY,
                                   constraints=(PropertyConstraint("hasIOCost", ">", Decimal(1)),)),
                             _node(3, node_type="TBSCAN")))
    assert "DuplicateLeg" in [d.code for d in validate_pattern(spec)]


def test_validator_non_numeric_comparison():
    spec = PatternSpec(
        "t", (_node(1, constraints=(PropertyConstraint("hasPopType", ">", Decimal(1)),)),)
    )
    assert "NonNumericComparison" in [d.code for d in validate_pattern(spec)]
    spec = PatternSpec(
        "t", (_node(1, constraints=(PropertyConstraint("hasIOCost", ">", "big"),)),)
    )
    assert "NonNumericComparison" in [d.code for d in validate_pattern(spec)]


def test_validator_unconstrained_any():
    spec = PatternSpec("t", (_node(1, node_type=ANY),))
    assert "UnconstrainedNode" in [d.code for d in validate_pattern(spec)]


def test_validator_empty_pattern():
    assert "EmptyPattern" in [d.code for d in validate_pattern(PatternSpec("t", ()))]


def test_builtin_pattern_a_shape():
    spec = next(s for s, _ in builtin_patterns() if s.name == "costly-nljoin-over-tbscan")
    assert spec.node(2).constraints == (
        PropertyConstraint("hasEstimatedCardinality", ">", Decimal(1)),
    )
    assert spec.node(3).constraints == (
        PropertyConstraint("hasEstimatedCardinality", ">", Decimal(100)),
    )
    assert spec.node(3).returned is False
    assert spec.node(4).node_type == BASE_OB


def test_builtin_pattern_b_uses_join_wildcard_and_descendants():
    spec = next(s for s, _ in builtin_patterns() if s.name == "stacked-left-outer-joins")
    assert spec.node(1).node_type == "JOIN"
    assert spec.node(1).type_alternatives() == frozenset({"NLJOIN", "HSJOIN", "MSJOIN"})
    kinds = {(r.leg, r.kind) for r in spec.node(1).relations}
    assert kinds == {(RelLeg.OUTER, RelKind.DESCENDANT), (RelLeg.INNER, RelKind.DESCENDANT)}
    assert spec.node(2).constraints == (
        PropertyConstraint("hasLeftOuterJoin", "=", True),
    )


def test_builtin_pattern_c_thresholds():
    spec = next(s for s, _ in builtin_patterns() if s.name == "underestimated-scan")
    assert spec.node(1).type_alternatives() == frozenset({"IXSCAN", "TBSCAN"})
    assert spec.node(1).constraints == (
        PropertyConstraint("hasEstimatedCardinality", "<", Decimal("0.001")),
    )
    assert spec.node(2).constraints == (
        PropertyConstraint("hasEstimatedCardinality", ">", Decimal(100000)),
    )


def test_builtin_pattern_d_cross_node_compare():
    spec = next(s for s, _ in builtin_patterns() if s.name == "spilling-sort")
    assert spec.node(2).compares == (
        CrossNodeConstraint("hasIOCost", "<", 1, "hasIOCost"),
    )
