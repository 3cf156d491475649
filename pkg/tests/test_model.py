from decimal import Decimal

from conftest import shared_temp_plan
from planmatch.model import (
    BaseObject,
    Leg,
    Plan,
    PlanOperator,
    StreamEdge,
    validate_plan,
)


def op(num, typ, card="10", total="100", io="10", modifiers=()):
    return PlanOperator(num, typ, Decimal(card), Decimal(total), Decimal(io),
                        frozenset(modifiers))


def make_plan(ops, streams, objs=()):
    return Plan("t", tuple(ops), tuple(objs), tuple(streams))


def test_fixtures_validate_clean(fig1, fig7, fig8):
    for plan in (fig1, fig7, fig8):
        assert validate_plan(plan) == []


def test_shared_temp_dag_is_valid():
    assert validate_plan(shared_temp_plan()) == []


def test_two_roots_flagged():
    plan = make_plan([op(1, "TBSCAN"), op(2, "TBSCAN")], [])
    codes = [d.code for d in validate_plan(plan)]
    assert "MultipleRoots" in codes


def test_cycle_flagged():
    plan = make_plan(
        [op(1, "TEMP"), op(2, "TEMP")],
        [StreamEdge(1, 2, Leg.GENERIC, 0), StreamEdge(2, 1, Leg.GENERIC, 0)],
    )
    codes = [d.code for d in validate_plan(plan)]
    assert "NotADag" in codes


def test_negative_cardinality_flagged():
    plan = make_plan([op(1, "TBSCAN", card="-5")], [])
    codes = [d.code for d in validate_plan(plan)]
    assert "NegativeValue" in codes


def test_join_leg_invariant():
    bad = make_plan(
        [op(1, "NLJOIN"), op(2, "TBSCAN"), op(3, "TBSCAN")],
        [StreamEdge(1, 2, Leg.GENERIC, 0), StreamEdge(1, 3, Leg.GENERIC, 1)],
    )
    codes = [d.code for d in validate_plan(bad)]
    assert "BadJoinLegs" in codes


def test_unknown_stream_refs_flagged():
    plan = make_plan([op(1, "TBSCAN")], [StreamEdge(1, 2, Leg.GENERIC, 0)])
    codes = [d.code for d in validate_plan(plan)]
    assert "UnknownChild" in codes


def test_left_outer_join_flag():
    assert op(1, "HSJOIN", modifiers={">"}).is_left_outer_join
    assert not op(1, "HSJOIN", modifiers={"^"}).is_left_outer_join


def test_duplicate_op_num_flagged():
    plan = make_plan([op(1, "TBSCAN"), op(1, "IXSCAN")], [])
    codes = [d.code for d in validate_plan(plan)]
    assert "DuplicateOpNum" in codes


def test_empty_base_object_name_flagged():
    plan = make_plan([op(1, "TBSCAN")], [], [BaseObject("", Decimal(5))])
    codes = [d.code for d in validate_plan(plan)]
    assert "EmptyObjectName" in codes
