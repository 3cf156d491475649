import pytest
from fastapi.testclient import TestClient

from conftest import fixture_text
from planmatch.compile import compile_pattern, render_query_text
from planmatch.pattern import builtin_pattern_doc, builtin_patterns
from planmatch.service import ServiceConfig, create_app, export_json
from planmatch.workload import ingest_workload, search


@pytest.fixture()
def client(tmp_path):
    config = ServiceConfig(kb_path=str(tmp_path / "kb.json"), seed_builtins=True)
    app = create_app(config)
    with TestClient(app) as tc:
        yield tc


@pytest.fixture()
def empty_kb_client(tmp_path):
    config = ServiceConfig(kb_path=str(tmp_path / "kb.json"), seed_builtins=False)
    with TestClient(create_app(config)) as tc:
        yield tc


def upload_fixtures(client) -> str:
    files = [
        {"name": f"{name}.exp", "content": fixture_text(f"{name}.exp")}
        for name in ("fig1", "fig7", "fig8")
    ]
    response = client.post("/workloads", json={"files": files})
    assert response.status_code == 201, response.text
    return response.json()["workload_id"]


def test_upload_and_search_pattern_a(client):
    workload_id = upload_fixtures(client)
    response = client.post(
        f"/workloads/{workload_id}/search",
        json={"pattern": builtin_pattern_doc("pattern-a")},
    )
    assert response.status_code == 200
    payload = response.json()
    assert payload["match_count"] == 1
    assert payload["matches"][0]["plan_id"] == "fig1"
    row = payload["matches"][0]["rows"][0]
    assert row["TOP"]["ref"] == 2
    assert row["BASE4"]["ref"] == "CUST_DIM"


def test_kb_entries_seeded(client):
    response = client.get("/kb/entries")
    assert response.status_code == 200
    ids = [e["entry_id"] for e in response.json()["entries"]]
    assert ids == ["pattern-a", "pattern-b", "pattern-c", "pattern-d"]


def test_kb_entries_empty_without_seed(empty_kb_client):
    assert empty_kb_client.get("/kb/entries").json() == {"entries": []}


def test_compile_endpoint_equals_library(client):
    doc = builtin_pattern_doc("pattern-a")
    response = client.post("/patterns/compile", json={"pattern": doc})
    assert response.status_code == 200
    spec = next(s for s, _ in builtin_patterns() if s.name == doc["name"])
    assert response.json()["query"] == render_query_text(compile_pattern(spec))


def test_compile_rejects_bad_pattern(client):
    response = client.post(
        "/patterns/compile",
        json={"pattern": {"pops": [{"ID": 1, "type": "ANY"}]}},
    )
    assert response.status_code == 422
    assert "UnconstrainedNode" in response.json()["detail"]


def test_kb_add_round_trip(client):
    doc = builtin_pattern_doc("pattern-d")
    doc["name"] = "my-sort-check"
    response = client.post(
        "/kb/entries",
        json={"pattern": doc, "template": "look at @TOP", "severity_weight": "0.7"},
    )
    assert response.status_code == 201, response.text
    entry_id = response.json()["entry_id"]
    listed = client.get("/kb/entries").json()["entries"]
    assert any(e["entry_id"] == entry_id for e in listed)


def test_kb_add_unknown_alias_rejected(client):
    doc = builtin_pattern_doc("pattern-d")
    response = client.post(
        "/kb/entries", json={"pattern": doc, "template": "see @NOSUCH"}
    )
    assert response.status_code == 422
    assert "NOSUCH" in response.json()["detail"]


def test_diagnose_endpoint(client, fig1):
    workload_id = upload_fixtures(client)
    response = client.post(f"/workloads/{workload_id}/diagnose")
    assert response.status_code == 200
    payload = response.json()
    per_plan = {p["plan_id"]: p for p in payload["plans"]}
    assert per_plan["fig1"]["recommendations"][0]["entry_id"] == "pattern-a"
    assert per_plan["fig1"]["recommendations"][0]["text"].startswith(
        "Create index on table CUST_DIM on columns"
    )


def test_clusters_endpoint(client):
    workload_id = upload_fixtures(client)
    response = client.get(f"/workloads/{workload_id}/clusters", params={"k": 1})
    assert response.status_code == 200
    [cluster] = response.json()["clusters"]
    assert cluster["hits"]["pattern-a"] == 1


def test_plan_detail_endpoint(client):
    workload_id = upload_fixtures(client)
    response = client.get(f"/workloads/{workload_id}/plans/fig1")
    assert response.status_code == 200
    doc = response.json()
    assert doc["format"] == "planmatch-plan"
    assert len(doc["operators"]) == 4


def test_unknown_workload_404(client):
    assert client.get("/workloads/wl-99").status_code == 404
    assert client.post("/workloads/wl-99/diagnose").status_code == 404


def test_upload_with_only_bad_files_is_422(client):
    response = client.post(
        "/workloads", json={"files": [{"name": "x.exp", "content": "garbage"}]}
    )
    assert response.status_code == 422


def test_cli_and_http_search_exports_identical(client, fixtures_dir):
    workload_id = upload_fixtures(client)
    doc = builtin_pattern_doc("pattern-a")
    http_bytes = client.post(
        f"/workloads/{workload_id}/search", json={"pattern": doc}
    ).content

    from planmatch.pattern import pattern_from_builder_doc

    store = ingest_workload(fixtures_dir, workload_id)
    _, export = search(store, pattern_from_builder_doc(doc))
    assert http_bytes.decode() == export_json(export)


def test_kb_persisted_across_instances(tmp_path):
    kb_file = tmp_path / "kb.json"
    config = ServiceConfig(kb_path=str(kb_file), seed_builtins=True)
    with TestClient(create_app(config)) as tc:
        doc = builtin_pattern_doc("pattern-d")
        doc["name"] = "persisted"
        response = tc.post("/kb/entries", json={"pattern": doc, "template": "x @TOP"})
        assert response.status_code == 201
    # Fresh instance reads the same file back
    with TestClient(create_app(ServiceConfig(kb_path=str(kb_file)))) as tc:
        ids = [e["entry_id"] for e in tc.get("/kb/entries").json()["entries"]]
        assert "entry-5" in ids
