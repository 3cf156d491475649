"""Workload ingestion, batch search, clustering and the synthetic generator.

The synthetic generator exists because the customer workload the original
measurements used cannot ship with the code: it produces deterministic
pseudo-random plans with a realistic operator mix, and can embed any of the
four builtin problem patterns into an exact number of plans while keeping
every other plan clean of all four.  That construction is what makes the
precision/recall experiment exact rather than statistical.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .canonical import parse_plan_canonical
from .compile import compile_pattern
from .errors import InfeasibleEmbedding, NoValidPlans, PlanmatchError
from .graph import TripleGraph, plan_graph
from .kb import KnowledgeBase
from .match import MatchSet, evaluate, export_match_set
from .model import BaseObject, Leg, Plan, PlanOperator, StreamEdge, validate_plan
from .numeric import format_decimal
from .pattern import PatternSpec, validate_pattern
from .text_parser import parse_plan_text


@dataclass
class WorkloadStore:
    workload_id: str
    plans: dict[str, Plan]
    diagnostics: list[str] = field(default_factory=list)
    ground_truth: dict[str, tuple[str, ...]] = field(default_factory=dict)
    _graphs: dict[str, TripleGraph] = field(default_factory=dict)

    def plan_ids(self) -> list[str]:
        return sorted(self.plans)

    def graph(self, plan_id: str) -> TripleGraph:
        if plan_id not in self._graphs:
            self._graphs[plan_id] = plan_graph(self.plans[plan_id])
        return self._graphs[plan_id]

    def graphs(self) -> dict[str, TripleGraph]:
        for plan_id in self.plans:
            self.graph(plan_id)
        return self._graphs

    def stats(self) -> dict[str, dict]:
        return {
            plan_id: {
                "operators": len(plan.operators),
                "total_cost": format_decimal(plan.total_cost),
            }
            for plan_id, plan in self.plans.items()
        }


PLAN_SUFFIXES = (".plan.json", ".exp")


def _plan_id_for(path: Path) -> str:
    name = path.name
    for suffix in PLAN_SUFFIXES:
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def load_plan_file(path: Path) -> Plan:
    plan_id = _plan_id_for(path)
    if path.name.endswith(".plan.json"):
        return parse_plan_canonical(json.loads(path.read_text()))
    return parse_plan_text(path.read_text(), plan_id=plan_id, source_name=path.name)


def ingest_workload(paths, workload_id: str = "workload") -> WorkloadStore:
    """Parse and validate every .exp / .plan.json input; keep what survives."""
    if isinstance(paths, (str, Path)):
        root = Path(paths)
        if root.is_dir():
            files = sorted(
                p for p in root.iterdir()
                if p.name.endswith(PLAN_SUFFIXES)
            )
        else:
            files = [root]
    else:
        files = [Path(p) for p in paths]

    plans: dict[str, Plan] = {}
    diagnostics: list[str] = []
    for path in files:
        plan_id = _plan_id_for(path)
        try:
            plan = load_plan_file(path)
        except (PlanmatchError, OSError, json.JSONDecodeError) as exc:
            diagnostics.append(f"{path.name}: {exc}")
            continue
        problems = validate_plan(plan)
        if problems:
            diagnostics.append(f"{path.name}: invalid plan: {problems[0]}")
            continue
        if plan_id in plans:
            diagnostics.append(f"{path.name}: duplicate plan id {plan_id!r}, skipped")
            continue
        plans[plan_id] = plan

    if not plans:
        raise NoValidPlans(
            f"no valid plans among {len(files)} file(s); " + "; ".join(diagnostics)
        )
    return WorkloadStore(workload_id=workload_id, plans=plans, diagnostics=diagnostics)


def search(store: WorkloadStore, pattern: PatternSpec) -> tuple[list[MatchSet], dict]:
    """Compile once, evaluate against every plan, export detransformed rows."""
    ir = compile_pattern(pattern)
    match_sets = []
    exports = []
    for plan_id in store.plan_ids():
        ms = evaluate(ir, store.graph(plan_id))
        if ms.rows:
            match_sets.append(ms)
            exports.append(export_match_set(ms, ir, store.plans[plan_id]))
    export = {
        "workload_id": store.workload_id,
        "pattern": pattern.name,
        "plan_count": len(store.plans),
        "match_count": len(match_sets),
        "matches": exports,
    }
    return match_sets, export


# --------------------------------------------------------------------------
# cost-based clustering


@dataclass(frozen=True)
class Cluster:
    cost_min: Decimal
    cost_max: Decimal
    plan_ids: tuple[str, ...]
    hits: dict[str, int]


@dataclass(frozen=True)
class ClusterReport:
    k: int
    clusters: tuple[Cluster, ...]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "clusters": [
                {
                    "cost_min": format_decimal(c.cost_min),
                    "cost_max": format_decimal(c.cost_max),
                    "plan_ids": list(c.plan_ids),
                    "hits": dict(sorted(c.hits.items())),
                }
                for c in self.clusters
            ],
        }


def cluster_workload(store: WorkloadStore, kb: KnowledgeBase, k: int) -> ClusterReport:
    """Quantile-bucket plans by total cost and count pattern hits per bucket."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not store.plans:
        raise ValueError("workload is empty")

    ordered = sorted(store.plans.values(), key=lambda p: (p.total_cost, p.plan_id))
    buckets = min(k, len(ordered))
    size, extra = divmod(len(ordered), buckets)

    clusters = []
    start = 0
    for i in range(buckets):
        count = size + (1 if i < extra else 0)
        chunk = ordered[start:start + count]
        start += count
        hits = {
            entry.entry_id: sum(
                1
                for plan in chunk
                if evaluate(entry.compiled, store.graph(plan.plan_id)).rows
            )
            for entry in kb.entries
        }
        clusters.append(
            Cluster(
                cost_min=chunk[0].total_cost,
                cost_max=chunk[-1].total_cost,
                plan_ids=tuple(p.plan_id for p in chunk),
                hits=hits,
            )
        )
    return ClusterReport(k=k, clusters=tuple(clusters))


# --------------------------------------------------------------------------
# synthetic workload generation


class _Gen:
    """One operator under construction; costs cumulate bottom-up at emit time."""

    __slots__ = ("op_type", "card", "own_cost", "own_io", "modifiers", "children", "obj")

    def __init__(self, op_type, card, own_cost, own_io, modifiers=(), children=(), obj=None):
        self.op_type = op_type
        self.card = card
        self.own_cost = own_cost
        self.own_io = own_io
        self.modifiers = frozenset(modifiers)
        self.children = list(children)
        self.obj = obj  # (name is assigned at emit time) -> (card, correlation_hint)

    def op_count(self) -> int:
        return 1 + sum(c.op_count() for c in self.children)

    def leaves(self) -> list["_Gen"]:
        if not self.children:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]


def _dec(x: float) -> Decimal:
    return Decimal(f"{x:.6g}")


_UNARY_TYPES = ("SORT", "GRPBY", "TEMP", "FETCH")
_JOIN_TYPES = ("HSJOIN", "NLJOIN", "MSJOIN")


class _PlanBuilder:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def leaf(self, forbid_tbscan: bool = False) -> _Gen:
        rng = self.rng
        op_type = "IXSCAN" if forbid_tbscan or rng.random() < 0.4 else "TBSCAN"
        card = _dec(10 ** rng.uniform(0.5, 6.0))
        io = _dec(float(card) * rng.uniform(0.001, 0.01) + rng.uniform(3, 20))
        cost = _dec(float(io) * rng.uniform(1.2, 3.0) + rng.uniform(5, 40))
        base_card = _dec(float(card) * rng.uniform(1.0, 50.0))
        return _Gen(op_type, card, cost, io, obj=(base_card,))

    def subtree(self, budget: int, forbid_tbscan_root: bool = False) -> _Gen:
        rng = self.rng
        if budget <= 1:
            return self.leaf(forbid_tbscan_root)
        if budget == 2 or rng.random() < 0.55:
            return self.unary(budget)
        return self.join(budget)

    def unary(self, budget: int) -> _Gen:
        rng = self.rng
        op_type = rng.choice(_UNARY_TYPES)
        child = self.subtree(budget - 1)
        card = child.card
        if op_type == "GRPBY":
            card = _dec(max(float(child.card) * rng.uniform(0.01, 0.5), 1.0))
        cost = _dec(rng.uniform(10, 500))
        node = _Gen(op_type, card, cost, Decimal(0), children=[child])
        if op_type == "FETCH":
            base_card = _dec(float(card) * rng.uniform(1.0, 40.0))
            node.obj = (base_card,)
        return node

    def join(self, budget: int) -> _Gen:
        rng = self.rng
        op_type = rng.choice(_JOIN_TYPES)
        left_budget = rng.randint(1, budget - 2)
        right_budget = budget - 1 - left_budget
        outer = self.subtree(left_budget)
        # An NLJOIN whose inner leg starts at a table scan is exactly the
        # indexing problem pattern; background plans must never contain it.
        inner = self.subtree(right_budget, forbid_tbscan_root=(op_type == "NLJOIN"))
        card = _dec(
            max(float(outer.card) * float(inner.card) * 10 ** rng.uniform(-6, -1), 0.01)
        )
        cost = _dec(rng.uniform(50, 5000))
        return _Gen(op_type, card, cost, Decimal(0), children=[outer, inner])

    # -- embeddings: each returns a subtree guaranteed to match exactly its
    #    own pattern and none of the other three.

    def embed_pattern_a(self) -> _Gen:
        rng = self.rng
        outer = _Gen(
            "IXSCAN", _dec(rng.uniform(10, 10000)),
            _dec(rng.uniform(50, 2000)), _dec(rng.uniform(10, 300)),
            obj=(_dec(rng.uniform(1000, 500000)),),
        )
        inner_card = _dec(rng.uniform(200, 1000000))
        inner = _Gen(
            "TBSCAN", inner_card,
            _dec(rng.uniform(500, 20000)), _dec(rng.uniform(100, 8000)),
            obj=(_dec(float(inner_card) * rng.uniform(1.0, 10.0)),),
        )
        card = _dec(float(outer.card) * rng.uniform(0.5, 20.0))
        return _Gen("NLJOIN", card, _dec(rng.uniform(100, 4000)), Decimal(0),
                    children=[outer, inner])

    def embed_pattern_b(self) -> _Gen:
        def scan(forbid_tbscan=False):
            return self.leaf(forbid_tbscan)

        loj_outer = _Gen(
            "HSJOIN", _dec(self.rng.uniform(100, 1e6)),
            _dec(self.rng.uniform(100, 5000)), Decimal(0),
            modifiers={">"}, children=[scan(), scan()],
        )
        loj_inner = _Gen(
            "NLJOIN", _dec(self.rng.uniform(1, 1e4)),
            _dec(self.rng.uniform(100, 5000)), Decimal(0),
            modifiers={">"}, children=[scan(), scan(forbid_tbscan=True)],
        )
        return _Gen(
            "HSJOIN", _dec(self.rng.uniform(10, 1e5)),
            _dec(self.rng.uniform(100, 5000)), Decimal(0),
            children=[loj_outer, loj_inner],
        )

    def embed_pattern_c(self) -> _Gen:
        rng = self.rng
        return _Gen(
            "IXSCAN", _dec(10 ** rng.uniform(-8, -3.5)),
            _dec(rng.uniform(5, 200)), _dec(rng.uniform(1, 30)),
            obj=(_dec(10 ** rng.uniform(5.1, 8.5)),),
        )

    def embed_pattern_d(self) -> _Gen:
        rng = self.rng
        child = self.leaf()
        # own_io > 0 makes the sort's cumulative I/O exceed its input's: a spill
        return _Gen("SORT", child.card, _dec(rng.uniform(100, 3000)),
                    _dec(rng.uniform(100, 5000)), children=[child])


_EMBEDDERS = {
    "costly-nljoin-over-tbscan": _PlanBuilder.embed_pattern_a,
    "stacked-left-outer-joins": _PlanBuilder.embed_pattern_b,
    "underestimated-scan": _PlanBuilder.embed_pattern_c,
    "spilling-sort": _PlanBuilder.embed_pattern_d,
}


def _emit_plan(root: _Gen, plan_id: str) -> Plan:
    operators: list[PlanOperator] = []
    base_objects: list[BaseObject] = []
    streams: list[StreamEdge] = []
    counter = {"op": 0, "obj": 0}

    def walk(node: _Gen) -> tuple[int, Decimal, Decimal]:
        counter["op"] += 1
        op_num = counter["op"]
        total = node.own_cost
        io = node.own_io
        child_refs: list[tuple[int | str, bool]] = []
        for child in node.children:
            child_num, child_total, child_io = walk(child)
            total += child_total
            io += child_io
            child_refs.append((child_num, True))
        if node.obj is not None:
            counter["obj"] += 1
            name = f"T{counter['obj']}"
            base_objects.append(
                BaseObject(
                    name=name,
                    cardinality=node.obj[0],
                    correlation=f"Q{counter['obj']}",
                )
            )
            child_refs.append((name, False))

        is_binary_join = node.op_type in _JOIN_TYPES and len(child_refs) == 2
        for ordinal, (ref, _) in enumerate(child_refs):
            leg = (
                (Leg.OUTER if ordinal == 0 else Leg.INNER)
                if is_binary_join
                else Leg.GENERIC
            )
            streams.append(StreamEdge(op_num, ref, leg, ordinal))

        operators.append(
            PlanOperator(
                op_num=op_num,
                op_type=node.op_type,
                cardinality=node.card,
                total_cost=total,
                io_cost=io,
                modifiers=node.modifiers,
            )
        )
        return op_num, total, io

    walk(root)
    return Plan(
        plan_id=plan_id,
        operators=tuple(sorted(operators, key=lambda o: o.op_num)),
        base_objects=tuple(base_objects),
        streams=tuple(sorted(streams, key=lambda e: (e.parent, e.ordinal))),
        source_name=f"{plan_id}.synthetic",
    )


def generate_synthetic_workload(
    n_plans: int,
    ops_per_plan: int,
    seed: int,
    seeded_patterns: list[tuple[PatternSpec, int]] = (),
    workload_id: str = "synthetic",
) -> WorkloadStore:
    """Deterministic workload with exact ground-truth pattern embeddings."""
    if n_plans < 0 or ops_per_plan < 1:
        raise ValueError("need n_plans >= 0 and ops_per_plan >= 1")

    embeds: list[tuple[str, PatternSpec]] = []
    for spec, count in seeded_patterns:
        if validate_pattern(spec):
            raise InfeasibleEmbedding(f"pattern {spec.name!r} is invalid")
        if spec.name not in _EMBEDDERS:
            raise InfeasibleEmbedding(
                f"no embedding recipe for pattern {spec.name!r}; "
                f"known: {', '.join(sorted(_EMBEDDERS))}"
            )
        if count < 0:
            raise InfeasibleEmbedding("embedding counts must be >= 0")
        embeds.extend((spec.name, spec) for _ in range(count))
    if len(embeds) > n_plans:
        raise InfeasibleEmbedding(
            f"{len(embeds)} embeddings into {n_plans} plans"
        )

    rng = random.Random(seed)
    width = max(4, len(str(n_plans)))
    plan_ids = [f"synth-{i:0{width}d}" for i in range(1, n_plans + 1)]
    chosen = rng.sample(range(n_plans), len(embeds)) if embeds else []

    assignment: dict[int, tuple[str, PatternSpec]] = {
        idx: embeds[j] for j, idx in enumerate(chosen)
    }

    builder = _PlanBuilder(rng)
    plans: dict[str, Plan] = {}
    truth: dict[str, list[str]] = {name: [] for name, _ in embeds}

    for i, plan_id in enumerate(plan_ids):
        if i in assignment:
            name, _spec = assignment[i]
            embed_fn = _EMBEDDERS[name]
            embed_root = embed_fn(builder)
            needed = embed_root.op_count()
            if ops_per_plan < needed:
                raise InfeasibleEmbedding(
                    f"pattern {name!r} needs at least {needed} operators per plan"
                )
            if ops_per_plan == needed:
                plans[plan_id] = _emit_plan(embed_root, plan_id)
            else:
                background = builder.subtree(ops_per_plan - needed + 1)
                _graft(background, embed_root, rng)
                plans[plan_id] = _emit_plan(background, plan_id)
            truth[name].append(plan_id)
        else:
            plans[plan_id] = _emit_plan(builder.subtree(ops_per_plan), plan_id)

    return WorkloadStore(
        workload_id=workload_id,
        plans=plans,
        ground_truth={name: tuple(sorted(ids)) for name, ids in truth.items()},
    )


def _graft(background: _Gen, embed_root: _Gen, rng: random.Random) -> None:
    """Replace one random leaf scan of the background tree with the embedding."""
    target = rng.choice(background.leaves())
    parent = _find_parent(background, target)
    if parent is None:  # background is itself a leaf; caller prevents this
        raise InfeasibleEmbedding("background too small to graft into")
    idx = parent.children.index(target)
    parent.children[idx] = embed_root


def _find_parent(node: _Gen, target: _Gen) -> _Gen | None:
    for child in node.children:
        if child is target:
            return node
        found = _find_parent(child, target)
        if found is not None:
            return found
    return None
