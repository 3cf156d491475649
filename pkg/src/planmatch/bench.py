"""Scaling measurements: runtime versus workload size, plan size and KB size.

Each series reports transform (plan to graph) and match phases separately and
combined, and fits a least-squares line to the combined time; the interesting
output is the R-squared of that fit, since linear growth is what makes the
approach usable on thousand-plan workloads.
"""

from __future__ import annotations

import copy
import statistics
import time
from dataclasses import dataclass
from decimal import Decimal

from .compile import compile_pattern
from .kb import KnowledgeBase, diagnose_workload, kb_add
from .match import evaluate
from .graph import plan_graph
from .pattern import builtin_patterns, pattern_from_builder_doc, builtin_pattern_doc
from .workload import generate_synthetic_workload


@dataclass(frozen=True)
class BenchPoint:
    x: int
    transform_s: float
    match_s: float

    @property
    def total_s(self) -> float:
        return self.transform_s + self.match_s


@dataclass(frozen=True)
class BenchSeries:
    name: str
    x_label: str
    points: tuple[BenchPoint, ...]

    @property
    def r_squared(self) -> float:
        xs = [p.x for p in self.points]
        ys = [p.total_s for p in self.points]
        if len(set(ys)) <= 1:
            return 1.0
        return statistics.correlation(xs, ys) ** 2

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "x_label": self.x_label,
            "r_squared": round(self.r_squared, 4),
            "points": [
                {
                    "x": p.x,
                    "transform_s": round(p.transform_s, 4),
                    "match_s": round(p.match_s, 4),
                    "total_s": round(p.total_s, 4),
                }
                for p in self.points
            ],
        }


def _pattern_a():
    for spec, _ in builtin_patterns():
        if spec.name == "costly-nljoin-over-tbscan":
            return spec
    raise RuntimeError("builtin pattern missing")


def bench_workload_scaling(
    sizes: tuple[int, ...] = (100, 200, 300, 400, 500, 600, 700, 800, 900, 1000),
    ops_per_plan: int = 100,
    seed: int = 11,
) -> BenchSeries:
    """Single-pattern search time as the workload grows plan by plan.

    Every plan's transform is timed individually, so a bucket's transform
    cost is the exact sum over its plans; the match phase is re-run per
    bucket.  Embeds a matching pattern into a tenth of the plans so the
    search does real binding work.
    """
    spec = _pattern_a()
    store = generate_synthetic_workload(
        max(sizes), ops_per_plan, seed,
        seeded_patterns=[(spec, max(sizes) // 10)],
    )
    ir = compile_pattern(spec)

    plan_ids = [f"synth-{i:0{max(4, len(str(max(sizes))))}d}" for i in range(1, max(sizes) + 1)]
    build_times: list[float] = []
    graphs = []
    for plan_id in plan_ids:
        t0 = time.perf_counter()
        g = plan_graph(store.plans[plan_id])
        build_times.append(time.perf_counter() - t0)
        graphs.append(g)

    points = []
    for size in sizes:
        transform = sum(build_times[:size])
        t0 = time.perf_counter()
        for g in graphs[:size]:
            evaluate(ir, g)
        match = time.perf_counter() - t0
        points.append(BenchPoint(size, transform, match))
    return BenchSeries("workload-size", "plans", tuple(points))


def bench_ops_scaling(
    op_counts: tuple[int, ...] = (50, 150, 250, 350, 450, 550),
    plans_per_bucket: int = 20,
    seed: int = 13,
    repeats: int = 2,
) -> BenchSeries:
    """Average per-plan analysis time (transform + match) by plan size.

    Each bucket is measured `repeats` times and the fastest pass kept, which
    filters out GC and scheduler noise that would blur the fit.
    """
    spec = _pattern_a()
    ir = compile_pattern(spec)
    points = []
    for ops in op_counts:
        store = generate_synthetic_workload(
            plans_per_bucket, ops, seed + ops,
            seeded_patterns=[(spec, max(1, plans_per_bucket // 5))],
        )
        best: BenchPoint | None = None
        for _ in range(repeats):
            transform = 0.0
            match = 0.0
            for plan in store.plans.values():
                t0 = time.perf_counter()
                g = plan_graph(plan)
                transform += time.perf_counter() - t0
                t0 = time.perf_counter()
                evaluate(ir, g)
                match += time.perf_counter() - t0
            point = BenchPoint(
                ops, transform / plans_per_bucket, match / plans_per_bucket
            )
            if best is None or point.total_s < best.total_s:
                best = point
        points.append(best)
    return BenchSeries("plan-size", "operators per plan", tuple(points))


def synthetic_kb(size: int) -> KnowledgeBase:
    """A KB of `size` believable entries cycling through the builtin shapes."""
    docs = [builtin_pattern_doc(key) for key in
            ("pattern-a", "pattern-b", "pattern-c", "pattern-d")]
    kb = KnowledgeBase()
    for i in range(size):
        doc = copy.deepcopy(docs[i % 4])
        doc["name"] = f"{doc['name']}-v{i:03d}"
        if i % 4 == 0:
            # jitter the outer-cardinality threshold without losing embedded hits
            for entry in doc["pops"][1]["popProperties"]:
                if entry.get("sign") == ">":
                    entry["value"] = format(1 + (i % 7) / 1000, ".4f")
        spec = pattern_from_builder_doc(doc)
        kb = kb_add(
            kb, spec, "@TOP needs attention.",
            severity_weight=Decimal(1) - Decimal(i % 5) / 10,
            entry_id=f"bench-{i:03d}",
        )
    return kb


def bench_kb_scaling(
    kb_sizes: tuple[int, ...] = (1, 10, 100, 250),
    n_plans: int = 100,
    ops_per_plan: int = 50,
    seed: int = 17,
) -> BenchSeries:
    """Diagnosis time for one workload as the knowledge base grows."""
    spec = _pattern_a()
    store = generate_synthetic_workload(
        n_plans, ops_per_plan, seed, seeded_patterns=[(spec, n_plans // 10)]
    )
    t0 = time.perf_counter()
    graphs = store.graphs()
    transform = time.perf_counter() - t0
    plans = [store.plans[pid] for pid in store.plan_ids()]

    full_kb = synthetic_kb(max(kb_sizes))
    points = []
    for size in kb_sizes:
        kb = KnowledgeBase(entries=full_kb.entries[:size])
        t0 = time.perf_counter()
        diagnose_workload(kb, plans, graphs=graphs)
        match = time.perf_counter() - t0
        points.append(BenchPoint(size, transform, match))
    return BenchSeries("kb-size", "knowledge base entries", tuple(points))


def run_all(quick: bool = False) -> dict:
    """The full scaling suite; `quick` shrinks every axis for smoke runs."""
    if quick:
        workload = bench_workload_scaling(sizes=(20, 40, 60, 80, 100), ops_per_plan=30)
        ops = bench_ops_scaling(op_counts=(20, 60, 100), plans_per_bucket=5)
        kb = bench_kb_scaling(kb_sizes=(1, 5, 10), n_plans=20, ops_per_plan=20)
    else:
        workload = bench_workload_scaling()
        ops = bench_ops_scaling()
        kb = bench_kb_scaling()
    return {
        "workload": workload.to_dict(),
        "ops": ops.to_dict(),
        "kb": kb.to_dict(),
    }
