"""HTTP service backing the pattern-builder UI and scripted clients.

Every response is a deterministic function of the stored state; search and
diagnose results are rendered through the same export serializer the CLI
uses, so the two surfaces return identical bytes for identical inputs.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .canonical import parse_plan_canonical, plan_to_canonical
from .compile import compile_pattern, render_query_text
from .errors import PlanmatchError
from .kb import KnowledgeBase, builtin_kb, diagnose_workload, kb_load, kb_save
from .kb import kb_add as _kb_add
from .kb import _entries_payload
from .model import validate_plan
from .pattern import pattern_from_builder_doc, validate_pattern
from .text_parser import parse_plan_text
from .workload import WorkloadStore, cluster_workload, search

DEFAULT_KB_FILENAME = "planmatch-kb.json"
KB_PATH_ENV = "PLANMATCH_KB"


@dataclass
class ServiceConfig:
    kb_path: str | None = None
    seed_builtins: bool = False


def resolve_kb_path(explicit: str | None = None) -> Path:
    """--kb flag beats PLANMATCH_KB beats the default file name."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(KB_PATH_ENV)
    if env:
        return Path(env)
    return Path(DEFAULT_KB_FILENAME)


def export_json(payload: dict) -> str:
    """The one serialization used for exports everywhere (CLI and HTTP)."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _json_response(payload: dict, status_code: int = 200) -> Response:
    return Response(
        content=export_json(payload),
        media_type="application/json",
        status_code=status_code,
    )


class FileDoc(BaseModel):
    name: str
    content: str


class WorkloadPayload(BaseModel):
    files: list[FileDoc]
    workload_id: str | None = None


class PatternPayload(BaseModel):
    pattern: dict


class KbEntryPayload(BaseModel):
    pattern: dict
    template: str
    severity_weight: str = "1"
    entry_id: str | None = None
    name: str | None = None
    provenance: str = ""


class _State:
    def __init__(self, config: ServiceConfig):
        self.lock = threading.Lock()
        self.workloads: dict[str, WorkloadStore] = {}
        self.counter = 0
        self.kb_path = resolve_kb_path(config.kb_path)
        if self.kb_path.exists():
            self.kb = kb_load(self.kb_path)
        elif config.seed_builtins:
            self.kb = builtin_kb()
        else:
            self.kb = KnowledgeBase()

    def next_workload_id(self) -> str:
        self.counter += 1
        return f"wl-{self.counter}"


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = _State(config or ServiceConfig())
    app = FastAPI(title="planmatch", version="0.1.0")
    app.state.planmatch = state

    def get_store(workload_id: str) -> WorkloadStore:
        store = state.workloads.get(workload_id)
        if store is None:
            raise HTTPException(status_code=404, detail=f"no workload {workload_id!r}")
        return store

    def parse_pattern_or_422(doc: dict):
        try:
            spec = pattern_from_builder_doc(doc)
        except PlanmatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        problems = validate_pattern(spec)
        if problems:
            raise HTTPException(
                status_code=422, detail="; ".join(str(p) for p in problems)
            )
        return spec

    @app.post("/workloads")
    def create_workload(payload: WorkloadPayload) -> Response:
        plans = {}
        diagnostics = []
        for doc in payload.files:
            plan_id = doc.name
            for suffix in (".plan.json", ".exp"):
                if plan_id.endswith(suffix):
                    plan_id = plan_id[: -len(suffix)]
            try:
                if doc.name.endswith(".plan.json"):
                    plan = parse_plan_canonical(json.loads(doc.content))
                else:
                    plan = parse_plan_text(doc.content, plan_id=plan_id,
                                           source_name=doc.name)
            except (PlanmatchError, json.JSONDecodeError) as exc:
                diagnostics.append(f"{doc.name}: {exc}")
                continue
            problems = validate_plan(plan)
            if problems:
                diagnostics.append(f"{doc.name}: invalid plan: {problems[0]}")
                continue
            if plan_id in plans:
                diagnostics.append(f"{doc.name}: duplicate plan id {plan_id!r}, skipped")
                continue
            plans[plan_id] = plan
        if not plans:
            raise HTTPException(status_code=422, detail="no valid plans in upload")
        with state.lock:
            workload_id = state.next_workload_id()
            store = WorkloadStore(
                workload_id=workload_id, plans=plans, diagnostics=diagnostics
            )
            state.workloads[workload_id] = store
        return _json_response(
            {
                "workload_id": workload_id,
                "plans": store.stats(),
                "diagnostics": diagnostics,
            },
            status_code=201,
        )

    @app.get("/workloads")
    def list_workloads() -> Response:
        return _json_response({"workloads": sorted(state.workloads)})

    @app.get("/workloads/{workload_id}")
    def get_workload(workload_id: str) -> Response:
        store = get_store(workload_id)
        return _json_response(
            {
                "workload_id": store.workload_id,
                "plans": store.stats(),
                "diagnostics": store.diagnostics,
            }
        )

    @app.get("/workloads/{workload_id}/plans/{plan_id}")
    def get_plan(workload_id: str, plan_id: str) -> Response:
        store = get_store(workload_id)
        plan = store.plans.get(plan_id)
        if plan is None:
            raise HTTPException(status_code=404, detail=f"no plan {plan_id!r}")
        return _json_response(plan_to_canonical(plan))

    @app.post("/patterns/compile")
    def compile_endpoint(payload: PatternPayload) -> Response:
        spec = parse_pattern_or_422(payload.pattern)
        ir = compile_pattern(spec)
        return _json_response(
            {"name": spec.name, "query": render_query_text(ir)}
        )

    @app.post("/workloads/{workload_id}/search")
    def search_endpoint(workload_id: str, payload: PatternPayload) -> Response:
        store = get_store(workload_id)
        spec = parse_pattern_or_422(payload.pattern)
        _, export = search(store, spec)
        return _json_response(export)

    @app.get("/kb/entries")
    def kb_entries() -> Response:
        return _json_response({"entries": _entries_payload(state.kb)})

    @app.post("/kb/entries")
    def kb_add_entry(payload: KbEntryPayload) -> Response:
        spec = parse_pattern_or_422(payload.pattern)
        try:
            with state.lock:
                state.kb = _kb_add(
                    state.kb,
                    spec,
                    payload.template,
                    severity_weight=Decimal(payload.severity_weight),
                    entry_id=payload.entry_id,
                    name=payload.name,
                    provenance=payload.provenance,
                )
                if state.kb_path:
                    kb_save(state.kb, state.kb_path)
        except PlanmatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        entry = state.kb.entries[-1]
        return _json_response(
            {
                "entry_id": entry.entry_id,
                "name": entry.name,
                "query": render_query_text(entry.compiled),
            },
            status_code=201,
        )

    @app.post("/workloads/{workload_id}/diagnose")
    def diagnose_endpoint(workload_id: str) -> Response:
        store = get_store(workload_id)
        plans = [store.plans[pid] for pid in store.plan_ids()]
        report = diagnose_workload(state.kb, plans, graphs=store.graphs())
        return _json_response(report.to_dict())

    @app.get("/workloads/{workload_id}/clusters")
    def clusters_endpoint(workload_id: str, k: int = 3) -> Response:
        store = get_store(workload_id)
        try:
            report = cluster_workload(store, state.kb, k)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _json_response(report.to_dict())

    return app


def serve(config: ServiceConfig, host: str, port: int) -> None:
    """Run the service until interrupted; BindFailure if the address is taken."""
    import uvicorn

    from .errors import BindFailure

    app = create_app(config)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
