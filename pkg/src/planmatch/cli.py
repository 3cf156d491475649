"""planmatch command line.

Exit codes: 0 the command ran (even with zero matches), 1 usage error,
2 input error (unreadable or malformed files, bad patterns).
"""

from __future__ import annotations

import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

import click

from .bench import run_all
from .canonical import dumps_canonical
from .compile import compile_pattern, render_query_text
from .errors import PlanmatchError
from .kb import (
    KnowledgeBase,
    builtin_kb,
    diagnose_workload,
    kb_add,
    kb_load,
    kb_save,
)
from .pattern import (
    BUILTIN_PATTERN_FILES,
    builtin_patterns,
    pattern_from_builder_doc,
    validate_pattern,
)
from .service import ServiceConfig, export_json, resolve_kb_path, serve
from .workload import generate_synthetic_workload, ingest_workload, search


def _load_pattern(path: str):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanmatchError(f"cannot read pattern {path}: {exc}") from exc
    spec = pattern_from_builder_doc(doc)
    problems = validate_pattern(spec)
    if problems:
        raise PlanmatchError(
            f"invalid pattern {path}: " + "; ".join(str(p) for p in problems)
        )
    return spec


def _load_kb(path: str | None) -> KnowledgeBase:
    resolved = resolve_kb_path(path)
    if resolved.exists():
        return kb_load(resolved)
    if path is not None:
        raise PlanmatchError(f"knowledge base {path} does not exist")
    return builtin_kb()


def _emit(payload: dict, out: str | None) -> None:
    text = export_json(payload)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
def cli() -> None:
    """Explain-plan problem search and tuning recommendations."""


@cli.command()
@click.argument("directory", type=click.Path(exists=True))
@click.option("--workload-id", default=None, help="Identifier for the workload.")
def ingest(directory: str, workload_id: str | None) -> None:
    """Parse and validate every plan file in DIRECTORY."""
    store = ingest_workload(directory, workload_id or Path(directory).name)
    _emit(
        {
            "workload_id": store.workload_id,
            "plans": store.stats(),
            "diagnostics": store.diagnostics,
        },
        None,
    )


@cli.command("search")
@click.option("--pattern", "pattern_path", required=True, type=click.Path(exists=True))
@click.option("--workload", "workload_dir", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def search_cmd(pattern_path: str, workload_dir: str, out: str | None) -> None:
    """Search one pattern across a workload directory."""
    spec = _load_pattern(pattern_path)
    store = ingest_workload(workload_dir, Path(workload_dir).name)
    _, export = search(store, spec)
    _emit(export, out)


@cli.command("compile")
@click.option("--pattern", "pattern_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def compile_cmd(pattern_path: str, out: str | None) -> None:
    """Render the executable query text for a pattern document."""
    spec = _load_pattern(pattern_path)
    text = render_query_text(compile_pattern(spec))
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--kb", "kb_path", default=None, type=click.Path())
@click.option("--workload", "workload_dir", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def diagnose(kb_path: str | None, workload_dir: str, out: str | None) -> None:
    """Run every knowledge-base entry over a workload and rank the advice."""
    kb = _load_kb(kb_path)
    store = ingest_workload(workload_dir, Path(workload_dir).name)
    plans = [store.plans[pid] for pid in store.plan_ids()]
    report = diagnose_workload(kb, plans, graphs=store.graphs())
    _emit(report.to_dict(), out)


@cli.group()
def kb() -> None:
    """Knowledge-base maintenance."""


@kb.command("init")
@click.option("--kb", "kb_path", default=None, type=click.Path())
@click.option("--builtins/--empty", default=True,
              help="Seed with the four shipped patterns (default) or start empty.")
def kb_init(kb_path: str | None, builtins: bool) -> None:
    """Create a knowledge-base file."""
    resolved = resolve_kb_path(kb_path)
    if resolved.exists():
        raise PlanmatchError(f"{resolved} already exists")
    kb_save(builtin_kb() if builtins else KnowledgeBase(), resolved)
    click.echo(f"wrote {resolved}")


@kb.command("add")
@click.option("--kb", "kb_path", default=None, type=click.Path())
@click.option("--pattern", "pattern_path", required=True, type=click.Path(exists=True))
@click.option("--template", "template_text", default=None)
@click.option("--template-file", default=None, type=click.Path(exists=True))
@click.option("--weight", default="1")
@click.option("--entry-id", default=None)
@click.option("--name", default=None)
@click.option("--provenance", default="")
def kb_add_cmd(
    kb_path: str | None,
    pattern_path: str,
    template_text: str | None,
    template_file: str | None,
    weight: str,
    entry_id: str | None,
    name: str | None,
    provenance: str,
) -> None:
    """Store a pattern plus recommendation template."""
    if (template_text is None) == (template_file is None):
        raise click.UsageError("exactly one of --template / --template-file")
    if template_file is not None:
        template_text = Path(template_file).read_text().rstrip("\n")
    try:
        weight_dec = Decimal(weight)
    except InvalidOperation:
        raise click.UsageError(f"--weight {weight!r} is not a decimal")

    resolved = resolve_kb_path(kb_path)
    base = kb_load(resolved) if resolved.exists() else KnowledgeBase()
    spec = _load_pattern(pattern_path)
    updated = kb_add(
        base, spec, template_text,
        severity_weight=weight_dec, entry_id=entry_id, name=name,
        provenance=provenance,
    )
    kb_save(updated, resolved)
    click.echo(f"added {updated.entries[-1].entry_id} to {resolved}")


@kb.command("list")
@click.option("--kb", "kb_path", default=None, type=click.Path())
def kb_list(kb_path: str | None) -> None:
    """Show stored entries."""
    base = _load_kb(kb_path)
    payload = [
        {
            "entry_id": e.entry_id,
            "name": e.name,
            "severity_weight": str(e.severity_weight),
            "template": e.template_text,
        }
        for e in base.entries
    ]
    _emit({"entries": payload}, None)


def _parse_embeds(embeds: tuple[str, ...]):
    known = {}
    for (spec, _template), key in zip(builtin_patterns(), BUILTIN_PATTERN_FILES):
        known[key] = spec
        known[spec.name] = spec
    out = []
    for item in embeds:
        if ":" not in item:
            raise click.UsageError(f"--embed wants NAME:COUNT, got {item!r}")
        name, _, count_text = item.rpartition(":")
        if name not in known:
            raise PlanmatchError(
                f"unknown pattern {name!r}; known: {', '.join(sorted(known))}"
            )
        try:
            count = int(count_text)
        except ValueError:
            raise click.UsageError(f"--embed count {count_text!r} is not an integer")
        out.append((known[name], count))
    return out


@cli.command()
@click.option("--plans", "n_plans", required=True, type=int)
@click.option("--ops", "ops_per_plan", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--embed", "embeds", multiple=True,
              help="pattern:count, e.g. pattern-a:15; repeatable.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth(n_plans: int, ops_per_plan: int, seed: int,
          embeds: tuple[str, ...], out_dir: str) -> None:
    """Write a deterministic synthetic workload as canonical plan files."""
    store = generate_synthetic_workload(
        n_plans, ops_per_plan, seed, seeded_patterns=_parse_embeds(embeds),
        workload_id=Path(out_dir).name,
    )
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    for plan_id in store.plan_ids():
        (target / f"{plan_id}.plan.json").write_text(dumps_canonical(store.plans[plan_id]))
    (target / "ground_truth.json").write_text(
        export_json({"ground_truth": {k: list(v) for k, v in store.ground_truth.items()}})
    )
    click.echo(f"wrote {len(store.plans)} plans to {target}")


@cli.command()
@click.option("--quick", is_flag=True, help="Small axes; for smoke tests.")
@click.option("--out", default=None, type=click.Path())
def bench(quick: bool, out: str | None) -> None:
    """Measure scaling against workload size, plan size and KB size."""
    results = run_all(quick=quick)
    for series in results.values():
        click.echo(
            f"{series['name']:14s} R^2={series['r_squared']:.4f} "
            + " ".join(f"{p['x']}:{p['total_s']:.3f}s" for p in series["points"])
        )
    if out:
        Path(out).write_text(export_json(results))


@cli.command("serve")
@click.option("--addr", default="127.0.0.1:8625", help="host:port to bind.")
@click.option("--kb", "kb_path", default=None, type=click.Path())
@click.option("--seed-builtins", is_flag=True,
              help="Start from the shipped patterns when no KB file exists.")
def serve_cmd(addr: str, kb_path: str | None, seed_builtins: bool) -> None:
    """Run the HTTP service."""
    host, _, port_text = addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.UsageError(f"--addr wants host:port, got {addr!r}")
    serve(ServiceConfig(kb_path=kb_path, seed_builtins=seed_builtins),
          host, int(port_text))


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        return 1
    except PlanmatchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
