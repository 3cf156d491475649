import random
from decimal import Decimal
from importlib import resources
from pathlib import Path

import pytest

#: (criterion, "PASS"/"FAIL", detail) rows filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, verdict, detail in ACCEPTANCE_RESULTS:
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"  {verdict}: {name}{suffix}")

from planmatch.graph import plan_graph
from planmatch.model import BaseObject, Leg, Plan, PlanOperator, StreamEdge
from planmatch.text_parser import parse_plan_text
from planmatch.workload import _Gen, _emit_plan

FIXTURES = resources.files("planmatch").joinpath("data/fixtures")


def fixture_text(name: str) -> str:
    return FIXTURES.joinpath(name).read_text()


def load_fixture_plan(name: str) -> Plan:
    return parse_plan_text(fixture_text(f"{name}.exp"), plan_id=name,
                           source_name=f"{name}.exp")


@pytest.fixture(scope="session")
def fig1():
    return load_fixture_plan("fig1")


@pytest.fixture(scope="session")
def fig7():
    return load_fixture_plan("fig7")


@pytest.fixture(scope="session")
def fig8():
    return load_fixture_plan("fig8")


@pytest.fixture(scope="session")
def fixture_plans(fig1, fig7, fig8):
    return {"fig1": fig1, "fig7": fig7, "fig8": fig8}


@pytest.fixture(scope="session")
def fixture_graphs(fixture_plans):
    return {name: plan_graph(plan) for name, plan in fixture_plans.items()}


@pytest.fixture()
def fixtures_dir(tmp_path: Path) -> Path:
    """A directory holding the three figure fixtures as .exp files."""
    for name in ("fig1", "fig7", "fig8"):
        (tmp_path / f"{name}.exp").write_text(fixture_text(f"{name}.exp"))
    return tmp_path


def _dec(x: float) -> Decimal:
    return Decimal(f"{x:.6g}")


def fuzz_plan(rng: random.Random, plan_id: str, max_ops: int = 30) -> Plan:
    """Unconstrained random plan for oracle-equivalence fuzzing.

    Unlike the synthetic workload generator this one freely produces the
    shapes the builtin patterns look for: left-outer-join modifiers, tiny
    scan estimates over huge objects, spilling sorts, NLJOINs over scans.
    """

    def leaf() -> _Gen:
        op_type = rng.choice(("TBSCAN", "IXSCAN"))
        card = _dec(10 ** rng.uniform(-9, 6))
        io = _dec(rng.uniform(1, 5000))
        cost = _dec(rng.uniform(5, 20000))
        base_card = _dec(10 ** rng.uniform(0, 9))
        return _Gen(op_type, card, cost, io, obj=(base_card,))

    def subtree(budget: int) -> _Gen:
        if budget <= 1:
            return leaf()
        if budget == 2 or rng.random() < 0.45:
            op_type = rng.choice(("SORT", "GRPBY", "TEMP", "FETCH"))
            child = subtree(budget - 1)
            own_io = Decimal(0) if rng.random() < 0.5 else _dec(rng.uniform(1, 2000))
            node = _Gen(op_type, child.card, _dec(rng.uniform(1, 500)), own_io,
                        children=[child])
            if op_type == "FETCH":
                node.obj = (_dec(10 ** rng.uniform(0, 7)),)
            return node
        op_type = rng.choice(("NLJOIN", "HSJOIN", "MSJOIN"))
        left = rng.randint(1, budget - 2)
        modifiers = {">"} if rng.random() < 0.3 else ()
        return _Gen(
            op_type,
            _dec(10 ** rng.uniform(-4, 7)),
            _dec(rng.uniform(10, 9000)),
            Decimal(0),
            modifiers=modifiers,
            children=[subtree(left), subtree(budget - 1 - left)],
        )

    return _emit_plan(subtree(rng.randint(1, max_ops)), plan_id)


def shared_temp_plan() -> Plan:
    """One TEMP feeding two joins: the ambiguity case stream nodes resolve."""
    ops = [
        PlanOperator(1, "HSJOIN", Decimal(100), Decimal(1000), Decimal(80)),
        PlanOperator(2, "NLJOIN", Decimal(50), Decimal(400), Decimal(30)),
        PlanOperator(3, "NLJOIN", Decimal(60), Decimal(450), Decimal(30)),
        PlanOperator(4, "IXSCAN", Decimal(10), Decimal(50), Decimal(5)),
        PlanOperator(5, "IXSCAN", Decimal(12), Decimal(55), Decimal(5)),
        PlanOperator(9, "TEMP", Decimal(7), Decimal(90), Decimal(9)),
        PlanOperator(6, "TBSCAN", Decimal(7), Decimal(70), Decimal(7)),
    ]
    objs = [
        BaseObject("A", Decimal(1000), "Q1"),
        BaseObject("B", Decimal(2000), "Q2"),
        BaseObject("C", Decimal(500), "Q3"),
    ]
    streams = [
        StreamEdge(1, 2, Leg.OUTER, 0),
        StreamEdge(1, 3, Leg.INNER, 1),
        StreamEdge(2, 4, Leg.OUTER, 0),
        StreamEdge(2, 9, Leg.INNER, 1),
        StreamEdge(3, 5, Leg.OUTER, 0),
        StreamEdge(3, 9, Leg.INNER, 1),
        StreamEdge(9, 6, Leg.GENERIC, 0),
        StreamEdge(4, "A", Leg.GENERIC, 0),
        StreamEdge(5, "B", Leg.GENERIC, 0),
        StreamEdge(6, "C", Leg.GENERIC, 0),
    ]
    return Plan(
        plan_id="shared-temp",
        operators=tuple(ops),
        base_objects=tuple(objs),
        streams=tuple(streams),
        source_name="shared-temp",
    )
