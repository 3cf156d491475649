import pytest

from planmatch.errors import InfeasibleEmbedding, NoValidPlans
from planmatch.kb import builtin_kb
from planmatch.match import brute_force_oracle
from planmatch.model import validate_plan
from planmatch.pattern import builtin_patterns
from planmatch.service import export_json
from planmatch.workload import (
    cluster_workload,
    generate_synthetic_workload,
    ingest_workload,
    search,
)


@pytest.fixture(scope="module")
def patterns():
    return {spec.name: spec for spec, _ in builtin_patterns()}


def test_ingest_fixture_directory(fixtures_dir):
    store = ingest_workload(fixtures_dir)
    assert sorted(store.plans) == ["fig1", "fig7", "fig8"]
    assert store.diagnostics == []
    stats = store.stats()
    assert stats["fig1"]["operators"] == 4
    assert stats["fig1"]["total_cost"] == "16246.59"


def test_ingest_empty_directory(tmp_path):
    with pytest.raises(NoValidPlans):
        ingest_workload(tmp_path)


def test_ingest_keeps_good_reports_bad(fixtures_dir):
    (fixtures_dir / "broken.exp").write_text("not a plan at all\n")
    store = ingest_workload(fixtures_dir)
    assert sorted(store.plans) == ["fig1", "fig7", "fig8"]
    assert len(store.diagnostics) == 1
    assert "broken.exp" in store.diagnostics[0]


def test_ingest_reads_canonical_files(tmp_path, fig1):
    from planmatch.canonical import dumps_canonical

    (tmp_path / "fig1.plan.json").write_text(dumps_canonical(fig1))
    store = ingest_workload(tmp_path)
    assert store.plans["fig1"] == fig1


def test_search_fixture_store(fixtures_dir, patterns):
    store = ingest_workload(fixtures_dir)
    match_sets, export = search(store, patterns["costly-nljoin-over-tbscan"])
    assert [m.plan_id for m in match_sets] == ["fig1"]
    assert export["match_count"] == 1
    assert export["plan_count"] == 3
    row = export["matches"][0]["rows"][0]
    assert row["TOP"] == {
        "kind": "OPERATOR", "ref": 2, "label": "NLJOIN(#2)", "returned": True,
    }
    assert row["BASE4"] == {
        "kind": "BASE_OBJECT", "ref": "CUST_DIM", "label": "CUST_DIM", "returned": True,
    }
    # unreturned handlers ride along flagged, so the UI can highlight the
    # whole matched shape
    assert row["TBSCAN3"] == {
        "kind": "OPERATOR", "ref": 5, "label": "TBSCAN(#5)", "returned": False,
    }


def test_search_no_matches_is_empty_not_error(fixtures_dir, patterns):
    store = ingest_workload(fixtures_dir)
    match_sets, export = search(store, patterns["spilling-sort"])
    assert match_sets == []
    assert export["match_count"] == 0


def test_search_twice_identical_bytes(fixtures_dir, patterns):
    store = ingest_workload(fixtures_dir)
    _, export1 = search(store, patterns["underestimated-scan"])
    _, export2 = search(store, patterns["underestimated-scan"])
    assert export_json(export1) == export_json(export2)


def test_generate_empty_store():
    store = generate_synthetic_workload(0, 10, seed=1)
    assert store.plans == {}


def test_generate_deterministic(patterns):
    seeded = [(patterns["costly-nljoin-over-tbscan"], 3)]
    a = generate_synthetic_workload(20, 15, seed=9, seeded_patterns=seeded)
    b = generate_synthetic_workload(20, 15, seed=9, seeded_patterns=seeded)
    assert a.plans == b.plans
    assert a.ground_truth == b.ground_truth
    c = generate_synthetic_workload(20, 15, seed=10, seeded_patterns=seeded)
    assert c.plans != a.plans


def test_generated_plans_validate(patterns):
    store = generate_synthetic_workload(
        30, 20, seed=3,
        seeded_patterns=[(patterns["stacked-left-outer-joins"], 5),
                         (patterns["spilling-sort"], 5)],
    )
    for plan in store.plans.values():
        assert validate_plan(plan) == []
        assert len(plan.operators) == 20


def test_ground_truth_is_exact(patterns):
    seeded = [
        (patterns["costly-nljoin-over-tbscan"], 4),
        (patterns["stacked-left-outer-joins"], 3),
        (patterns["underestimated-scan"], 5),
        (patterns["spilling-sort"], 2),
    ]
    store = generate_synthetic_workload(25, 12, seed=21, seeded_patterns=seeded)
    for spec, _count in seeded:
        hits = tuple(sorted(
            plan_id
            for plan_id, plan in store.plans.items()
            if brute_force_oracle(spec, plan).rows
        ))
        assert hits == store.ground_truth[spec.name], spec.name


def test_embedding_count_guard(patterns):
    with pytest.raises(InfeasibleEmbedding):
        generate_synthetic_workload(
            2, 10, seed=1,
            seeded_patterns=[(patterns["costly-nljoin-over-tbscan"], 3)],
        )


def test_unknown_pattern_embedding_rejected(patterns):
    from planmatch.pattern import pattern_from_builder_doc

    spec = pattern_from_builder_doc(
        {"name": "custom", "pops": [{"ID": 1, "type": "SORT"}]}
    )
    with pytest.raises(InfeasibleEmbedding, match="no embedding recipe"):
        generate_synthetic_workload(5, 10, seed=1, seeded_patterns=[(spec, 1)])


def test_cluster_single_bucket(fixtures_dir):
    store = ingest_workload(fixtures_dir)
    report = cluster_workload(store, builtin_kb(), 1)
    assert len(report.clusters) == 1
    cluster = report.clusters[0]
    assert sorted(cluster.plan_ids) == ["fig1", "fig7", "fig8"]
    assert cluster.hits == {
        "pattern-a": 1, "pattern-b": 1, "pattern-c": 1, "pattern-d": 0,
    }


def test_cluster_singletons_when_k_large(fixtures_dir):
    store = ingest_workload(fixtures_dir)
    report = cluster_workload(store, builtin_kb(), 10)
    assert len(report.clusters) == 3
    assert all(len(c.plan_ids) == 1 for c in report.clusters)


def test_clusters_partition_and_ascend(patterns):
    store = generate_synthetic_workload(23, 10, seed=5)
    report = cluster_workload(store, builtin_kb(), 4)
    seen = [pid for c in report.clusters for pid in c.plan_ids]
    assert sorted(seen) == store.plan_ids()
    assert len(seen) == len(set(seen))
    mins = [c.cost_min for c in report.clusters]
    maxs = [c.cost_max for c in report.clusters]
    assert mins == sorted(mins)
    for i in range(len(report.clusters) - 1):
        assert maxs[i] <= mins[i + 1]


def test_graph_cache_consistency(fixtures_dir):
    from planmatch.graph import plan_graph

    store = ingest_workload(fixtures_dir)
    cached = store.graph("fig1")
    assert cached is store.graph("fig1")
    assert cached.triples == plan_graph(store.plans["fig1"]).triples
