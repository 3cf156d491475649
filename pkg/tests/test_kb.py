import json
import random
from decimal import Decimal

import pytest

from conftest import fuzz_plan
from planmatch.compile import compile_pattern
from planmatch.errors import CorruptKb, SchemaViolation, TemplateSyntax, UnknownAlias
from planmatch.graph import plan_graph
from planmatch.kb import (
    SENTINEL_TEXT,
    UNKNOWN_COLUMNS,
    Call,
    Group,
    KnowledgeBase,
    Plain,
    Token,
    builtin_kb,
    diagnose_workload,
    kb_add,
    kb_load,
    kb_save,
    parse_template,
    render_recommendation,
    score_match,
)
from planmatch.match import evaluate
from planmatch.model import BaseObject, Leg, Plan, PlanOperator, StreamEdge
from planmatch.pattern import builtin_patterns


@pytest.fixture(scope="module")
def kb():
    return builtin_kb()


@pytest.fixture(scope="module")
def specs():
    return {spec.name: (spec, template) for spec, template in builtin_patterns()}


# -- template grammar


def test_parse_call_template():
    ast = parse_template('Create index on table @BASE4 on columns @TOP.listColumns("INPUT")')
    assert ast == (
        Plain("Create index on table "),
        Token("BASE4"),
        Plain(" on columns "),
        Call("TOP", "listColumns", "INPUT"),
    )


def test_parse_group_with_cap():
    assert parse_template("[@TOP, @ANY2]:1") == (Group(("TOP", "ANY2"), 1),)


def test_parse_group_without_cap():
    assert parse_template("[@TOP]") == (Group(("TOP",), None),)


def test_parse_plain_only():
    assert parse_template("no tokens here") == (Plain("no tokens here"),)


def test_escaped_at_sign():
    assert parse_template("mail me @@home") == (Plain("mail me @home"),)


def test_plain_bracket_is_not_a_group():
    assert parse_template("cost [timerons] high") == (Plain("cost [timerons] high"),)


def test_template_errors_carry_position():
    with pytest.raises(TemplateSyntax) as excinfo:
        parse_template("bad @ alone")
    assert excinfo.value.position == 4

    with pytest.raises(TemplateSyntax, match="unknown helper"):
        parse_template('@TOP.dropTable("INPUT")')

    with pytest.raises(TemplateSyntax, match="unknown mode"):
        parse_template('@TOP.listColumns("SIDEWAYS")')

    with pytest.raises(TemplateSyntax, match="unterminated group"):
        parse_template("[@TOP, @A2")

    with pytest.raises(TemplateSyntax, match=">= 1"):
        parse_template("[@TOP]:0")


# -- kb_add


def test_add_caches_compiled_ir(specs):
    spec, template = specs["costly-nljoin-over-tbscan"]
    kb = kb_add(KnowledgeBase(), spec, template)
    assert kb.entries[0].compiled == compile_pattern(spec)


def test_unknown_alias_rejected(specs):
    spec, _ = specs["costly-nljoin-over-tbscan"]
    with pytest.raises(UnknownAlias):
        kb_add(KnowledgeBase(), spec, "touch @NOSUCH please")


def test_unreturned_alias_rejected(specs):
    # node 3 of pattern A is unreturned; its default alias must not be taggable
    spec, _ = specs["costly-nljoin-over-tbscan"]
    with pytest.raises(UnknownAlias):
        kb_add(KnowledgeBase(), spec, "scan @TBSCAN3")


def test_builtin_kb_unique_ids(kb):
    ids = [e.entry_id for e in kb.entries]
    assert len(ids) == 4
    assert len(set(ids)) == 4


def test_weight_range_enforced(specs):
    spec, template = specs["costly-nljoin-over-tbscan"]
    with pytest.raises(SchemaViolation):
        kb_add(KnowledgeBase(), spec, template, severity_weight=Decimal(2))
    with pytest.raises(SchemaViolation):
        kb_add(KnowledgeBase(), spec, template, severity_weight=Decimal(0))


# -- rendering


def _match(kb, entry_id, plan):
    entry = kb.get(entry_id)
    return entry, evaluate(entry.compiled, plan_graph(plan))


def test_render_fig1_index_recommendation(kb, fig1):
    entry, matches = _match(kb, "pattern-a", fig1)
    rec = render_recommendation(entry, matches, fig1)
    assert rec.text.startswith("Create index on table CUST_DIM on columns")
    # INPUT columns keep only qualifiers matching bound base objects (Q1/Q2)
    assert rec.text.endswith("Q1.CUST_ID, Q1.CUST_NAME")
    assert "@" not in rec.text
    assert rec.warnings == ()
    aliases = [alias for alias, _ in rec.evidence]
    assert aliases == ["BASE4", "TOP"]
    assert all(loc.plan_id == "fig1" for _, loc in rec.evidence)


def test_render_input_columns_drops_foreign_qualifiers(kb, fig1):
    # Q2.CUST_KEY is filtered out because SALES_FACT (Q2) is not bound in the row
    entry, matches = _match(kb, "pattern-a", fig1)
    rec = render_recommendation(entry, matches, fig1)
    assert "CUST_KEY" not in rec.text


def _three_sort_plan():
    ops = []
    streams = []
    for i, io in ((1, 50), (3, 60), (5, 70)):
        ops.append(PlanOperator(i, "SORT", Decimal(10), Decimal(100 + i), Decimal(io)))
        ops.append(PlanOperator(i + 1, "TBSCAN", Decimal(10), Decimal(50), Decimal(10)))
        streams.append(StreamEdge(i, i + 1, Leg.GENERIC, 0))
        streams.append(StreamEdge(i + 1, f"T{i}", Leg.GENERIC, 0))
    ops.append(PlanOperator(7, "GRPBY", Decimal(1), Decimal(500), Decimal(140)))
    ops.append(PlanOperator(8, "TEMP", Decimal(1), Decimal(490), Decimal(135)))
    ops.append(PlanOperator(9, "TEMP", Decimal(1), Decimal(480), Decimal(130)))
    streams += [
        StreamEdge(7, 8, Leg.GENERIC, 0),
        StreamEdge(8, 9, Leg.GENERIC, 0),
        StreamEdge(9, 1, Leg.GENERIC, 0),
        StreamEdge(9, 3, Leg.GENERIC, 1),
        StreamEdge(9, 5, Leg.GENERIC, 2),
    ]
    objs = tuple(BaseObject(f"T{i}", Decimal(1000), f"Q{i}") for i in (1, 3, 5))
    return Plan("threesort", tuple(ops), objs, tuple(streams))


def test_group_cap_limits_occurrences(specs):
    spec, _ = specs["spilling-sort"]
    plan = _three_sort_plan()
    kb1 = kb_add(KnowledgeBase(), spec, "[@TOP, @ANY2]:1", entry_id="capped")
    entry = kb1.entries[0]
    matches = evaluate(entry.compiled, plan_graph(plan))
    assert len(matches.rows) == 3
    rec = render_recommendation(entry, matches, plan)
    assert rec.text == "SORT(#1), TBSCAN(#2)"

    kb2 = kb_add(KnowledgeBase(), spec, "[@TOP]", entry_id="uncapped")
    rec2 = render_recommendation(
        kb2.entries[0],
        evaluate(kb2.entries[0].compiled, plan_graph(plan)),
        plan,
    )
    assert rec2.text == "SORT(#1); SORT(#3); SORT(#5)"


def test_missing_detail_degrades(specs):
    spec, _ = specs["spilling-sort"]
    plan = _three_sort_plan()
    kb1 = kb_add(KnowledgeBase(), spec, 'columns @TOP.listColumns("PREDICATE")',
                 entry_id="cols")
    entry = kb1.entries[0]
    rec = render_recommendation(entry, evaluate(entry.compiled, plan_graph(plan)), plan)
    assert UNKNOWN_COLUMNS in rec.text
    assert rec.warnings and "PREDICATE_COLUMNS" in rec.warnings[0]


# -- scoring


def test_score_fig1_full_fraction(kb, fig1):
    entry, matches = _match(kb, "pattern-a", fig1)
    # NLJOIN(2) carries the whole plan cost, so the fraction is exactly 1
    assert score_match(entry, matches, fig1) == Decimal(1)


def test_score_zero_cost_plan(kb, specs):
    spec, template = specs["spilling-sort"]
    plan = Plan(
        "zero",
        (
            PlanOperator(1, "SORT", Decimal(1), Decimal(0), Decimal(5)),
            PlanOperator(2, "TBSCAN", Decimal(1), Decimal(0), Decimal(1)),
        ),
        (BaseObject("T", Decimal(1)),),
        (StreamEdge(1, 2, Leg.GENERIC, 0), StreamEdge(2, "T", Leg.GENERIC, 0)),
    )
    entry = kb.get("pattern-d")
    matches = evaluate(entry.compiled, plan_graph(plan))
    assert matches.rows
    assert score_match(entry, matches, plan) == Decimal(0)


def test_score_weight_product(specs, fig1):
    spec, template = specs["costly-nljoin-over-tbscan"]
    kb1 = kb_add(KnowledgeBase(), spec, template, severity_weight=Decimal("0.5"),
                 entry_id="half")
    entry = kb1.entries[0]
    matches = evaluate(entry.compiled, plan_graph(fig1))
    # cost fraction 1.0 on fig1, so confidence is exactly the weight
    assert score_match(entry, matches, fig1) == Decimal("0.5")


# -- diagnosis


def test_diagnose_fixture_workload(kb, fig1, fig7, fig8):
    report = diagnose_workload(kb, [fig1, fig7, fig8])
    by_plan = {
        plan_id: [r.entry_id for r in report.for_plan(plan_id)]
        for plan_id in ("fig1", "fig7", "fig8")
    }
    assert by_plan == {
        "fig1": ["pattern-a"],
        "fig7": ["pattern-b"],
        "fig8": ["pattern-c"],
    }
    assert report.no_match_plan_ids == ()
    assert report.evaluations == 12  # 3 plans x 4 entries, never short-circuited


def test_diagnose_empty_kb_emits_sentinel(fig1, fig8):
    report = diagnose_workload(KnowledgeBase(), [fig1, fig8])
    assert report.no_match_plan_ids == ("fig1", "fig8")
    exported = report.to_dict()
    assert [p.get("sentinel") for p in exported["plans"]] == [SENTINEL_TEXT] * 2


def test_diagnose_orders_by_confidence(specs, fig1):
    spec, template = specs["costly-nljoin-over-tbscan"]
    kb1 = KnowledgeBase()
    kb1 = kb_add(kb1, spec, template, severity_weight=Decimal("0.5"), entry_id="weak")
    kb1 = kb_add(kb1, spec, template, severity_weight=Decimal(1), entry_id="strong")
    report = diagnose_workload(kb1, [fig1])
    assert [r.entry_id for r in report.recommendations] == ["strong", "weak"]
    assert [r.confidence for r in report.recommendations] == [Decimal(1), Decimal("0.5")]


def test_diagnose_counts_n_times_m(kb):
    rng = random.Random(77)
    plans = [fuzz_plan(rng, f"nm-{i}", max_ops=8) for i in range(5)]
    report = diagnose_workload(kb, plans)
    assert report.evaluations == len(plans) * len(kb.entries)


def test_rendered_text_never_leaks_across_plans(kb, fig1, fig7, fig8):
    report = diagnose_workload(kb, [fig1, fig7, fig8])
    labels = {
        "fig1": {"NLJOIN(#2)", "CUST_DIM"},
        "fig7": {"NLJOIN(#5)", "HSJOIN(#7)", "NLJOIN(#15)"},
        "fig8": {"IXSCAN(#38)", "IDX9"},
    }
    for rec in report.recommendations:
        for other_plan, other_labels in labels.items():
            if other_plan != rec.plan_id:
                for label in other_labels:
                    assert label not in rec.text


def test_no_unresolved_tokens_anywhere(kb, fig1, fig7, fig8):
    report = diagnose_workload(kb, [fig1, fig7, fig8])
    for rec in report.recommendations:
        assert "@" not in rec.text


# -- persistence


def test_save_load_round_trip(tmp_path, kb):
    path = tmp_path / "kb.json"
    kb_save(kb, path)
    assert kb_load(path) == kb


def test_empty_kb_round_trip(tmp_path):
    path = tmp_path / "kb.json"
    kb_save(KnowledgeBase(), path)
    assert kb_load(path) == KnowledgeBase()


def test_truncated_file_rejected(tmp_path, kb):
    path = tmp_path / "kb.json"
    kb_save(kb, path)
    raw = path.read_text()
    path.write_text(raw[: len(raw) // 2])
    with pytest.raises(CorruptKb):
        kb_load(path)


def test_tampered_entries_rejected(tmp_path, kb):
    path = tmp_path / "kb.json"
    kb_save(kb, path)
    doc = json.loads(path.read_text())
    doc["entries"][0]["severity_weight"] = "0.9"
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptKb, match="checksum"):
        kb_load(path)


def test_stored_query_must_match_pattern(tmp_path, kb):
    path = tmp_path / "kb.json"
    kb_save(kb, path)
    doc = json.loads(path.read_text())
    doc["entries"][0]["query"] = "PREFIX nothing\n"
    # keep the checksum honest so only the query integrity check can fire
    from planmatch.kb import _checksum

    doc["checksum"] = _checksum(doc["entries"])
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptKb, match="query text"):
        kb_load(path)
