import json

import pytest

from conftest import FIXTURES, load_fixture_plan
from planmatch.canonical import dumps_canonical, parse_plan_canonical, plan_to_canonical
from planmatch.errors import SchemaViolation


@pytest.fixture(scope="module")
def fig1_doc():
    return json.loads(FIXTURES.joinpath("fig1.plan.json").read_text())


def test_cross_parser_equality(fig1_doc, fig1):
    assert parse_plan_canonical(fig1_doc) == fig1


def test_round_trip_through_canonical(fig1, fig7, fig8):
    for plan in (fig1, fig7, fig8):
        assert parse_plan_canonical(plan_to_canonical(plan)) == plan


def test_serialized_text_round_trip(fig7):
    text = dumps_canonical(fig7)
    assert parse_plan_canonical(json.loads(text)) == fig7


def test_empty_operator_list_rejected(fig1_doc):
    doc = json.loads(json.dumps(fig1_doc))
    doc["operators"] = []
    with pytest.raises(SchemaViolation):
        parse_plan_canonical(doc)


def test_duplicate_op_num_rejected(fig1_doc):
    doc = json.loads(json.dumps(fig1_doc))
    doc["operators"].append(dict(doc["operators"][0]))
    with pytest.raises(SchemaViolation, match="duplicate op_num"):
        parse_plan_canonical(doc)


def test_unknown_stream_child_rejected(fig1_doc):
    doc = json.loads(json.dumps(fig1_doc))
    doc["streams"][0]["child"] = 99
    with pytest.raises(SchemaViolation, match="no operator"):
        parse_plan_canonical(doc)


def test_bad_numeric_literal_rejected(fig1_doc):
    doc = json.loads(json.dumps(fig1_doc))
    doc["operators"][0]["cardinality"] = "lots"
    with pytest.raises(SchemaViolation) as excinfo:
        parse_plan_canonical(doc)
    assert "cardinality" in str(excinfo.value)


def test_violation_carries_path(fig1_doc):
    doc = json.loads(json.dumps(fig1_doc))
    del doc["operators"][1]["op_type"]
    with pytest.raises(SchemaViolation) as excinfo:
        parse_plan_canonical(doc)
    assert "operators[1]" in excinfo.value.path


def test_exponent_spelling_survives_round_trip(fig8):
    # 1.311e-08 may re-serialize in any spelling as long as the value is exact
    doc = plan_to_canonical(fig8)
    plan = parse_plan_canonical(doc)
    assert plan.operator(38).cardinality == fig8.operator(38).cardinality


def test_text_parser_canonical_round_trip_all_fixtures():
    for name in ("fig1", "fig7", "fig8"):
        plan = load_fixture_plan(name)
        assert parse_plan_canonical(json.loads(dumps_canonical(plan))) == plan
