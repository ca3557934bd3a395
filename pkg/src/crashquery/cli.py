"""Command-line interface.

Exit codes for `query`: 0 success, 2 interpretation failure, 3 repair
rejection, 4 execution error, 5 ambiguous anchor (candidates printed,
re-run with --pick-anchor N), 64 usage error.
"""

from __future__ import annotations

import json
import sys

import click

from .engine import AmbiguousAnchor, QueryEngine, SoundnessError
from .graph import CompileError
from .geo.store import ExecutionDataError, IngestError
from .executor import ExecutionTypeError
from .interpreter import InterpretationFailure, InterpreterBackend, InterpreterUnavailable
from .repair import RepairRejection


@click.group()
def cli():
    """Natural-language spatial queries over transportation safety data."""


def _backend(name: str) -> InterpreterBackend:
    if name == "remote":
        return InterpreterBackend.from_env(kind="remote_llm")
    return InterpreterBackend(kind="rule_based")


@cli.command()
@click.option("--query", "query_text", required=True, help="Natural-language query text.")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Dataset directory (per-entity GeoJSON plus places.json).")
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Registry YAML (defaults to the shipped registry).")
@click.option("--backend", type=click.Choice(["rules", "remote"]), default="rules")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out",
              help="Directory for map/table/summary/audit artifacts.")
@click.option("--format", "fmt", type=click.Choice(["geojson", "csv", "json", "html"]),
              default="geojson")
@click.option("--pick-anchor", type=int, default=None,
              help="Candidate index from a previous ambiguous-anchor run.")
def query(query_text, data_dir, registry_path, backend, out_dir, fmt, pick_anchor):
    """Run one query end to end and write result artifacts."""
    import os

    engine = QueryEngine.from_data_dir(
        data_dir, registry_path=registry_path, backend=_backend(backend),
        audit_path=os.path.join(out_dir, "audit.jsonl"),
    )
    try:
        outcome = engine.run_query(query_text, anchor_pick=pick_anchor)
    except (InterpreterUnavailable, InterpretationFailure) as exc:
        click.echo(f"interpretation failed: {exc}", err=True)
        sys.exit(2)
    except AmbiguousAnchor as exc:
        click.echo("ambiguous reference; candidates:")
        for group in exc.candidates:
            for i, cand in enumerate(group["candidates"]):
                loc = cand["location"]
                click.echo(f"  [{i}] {cand['name']} ({loc[0]:.5f}, {loc[1]:.5f})")
        click.echo("re-run with --pick-anchor N to choose one")
        sys.exit(5)
    except RepairRejection as exc:
        click.echo(f"repair rejected: {exc}", err=True)
        sys.exit(3)
    except (SoundnessError, CompileError, ExecutionDataError, ExecutionTypeError) as exc:
        click.echo(f"execution error: {exc}", err=True)
        sys.exit(4)

    click.echo(outcome.nl_summary)
    for action in outcome.repair_report.actions:
        click.echo(f"  repair: {action.path}: {action.before!r} -> {action.after!r} "
                   f"[{action.rule_id}]")
    counts = ", ".join(f"{role}={n}" for role, n in outcome.result.summary_counts().items())
    click.echo(f"records: {counts}")
    if outcome.result.ranking_rows is not None:
        for i, row in enumerate(outcome.result.ranking_rows, start=1):
            click.echo(f"  {i}. {row.name} ({row.value})")
    for path in engine.write_artifacts(outcome, out_dir, fmt=fmt):
        click.echo(f"wrote {path}")


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--backend", type=click.Choice(["rules", "remote"]), default="rules")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--audit", "audit_path", type=click.Path(dir_okay=False), default=None)
@click.option("--console", "console_dir", type=click.Path(file_okay=False, exists=True),
              default=None, help="Static directory with the web console build.")
def serve(data_dir, registry_path, backend, host, port, audit_path, console_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    engine = QueryEngine.from_data_dir(
        data_dir, registry_path=registry_path, backend=_backend(backend),
        audit_path=audit_path,
    )
    app = create_app(engine, console_dir=console_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=1, type=int)
@click.option("--crashes", default=None, type=int)
@click.option("--roads", default=None, type=int)
@click.option("--schools", default=None, type=int)
@click.option("--bus-stops", default=None, type=int)
@click.option("--crosswalks", default=None, type=int)
def fixture(out_dir, seed, crashes, roads, schools, bus_stops, crosswalks):
    """Generate a deterministic synthetic dataset directory."""
    from .geo.fixture import write_fixture_dir

    counts = {}
    for key, value in (("crashes", crashes), ("roads", roads), ("schools", schools),
                       ("bus_stops", bus_stops), ("crosswalks", crosswalks)):
        if value is not None:
            counts[key] = value
    ds = write_fixture_dir(out_dir, seed, counts or None)
    click.echo(f"wrote fixture seed={seed} version={ds.version} to {out_dir}")
    for entity, col in sorted(ds.collections.items()):
        click.echo(f"  {entity}: {len(col)}")


@cli.command(name="eval")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--backend", type=click.Choice(["rules", "remote"]), default="rules")
@click.option("--overrides/--no-overrides", default=False,
              help="Run the seeded raw-frame override corpus instead of interpretation.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--artifacts", "artifact_dir", type=click.Path(file_okay=False), default=None)
def eval_cmd(data_dir, registry_path, backend, overrides, report_path, artifact_dir):
    """Run the shipped 80-case evaluation suite."""
    from .harness import load_cases, load_overrides, report_render, run_suite

    engine = QueryEngine.from_data_dir(data_dir, registry_path=registry_path,
                                       backend=_backend(backend))
    cases = load_cases()
    override_frames = load_overrides() if overrides else None
    report = run_suite(cases, engine.backend, engine.registry, engine.table,
                       engine.gazetteer, engine.dataset,
                       overrides=override_frames, artifact_dir=artifact_dir)
    click.echo(report_render(report))
    totals = report.totals()
    click.echo(f"action counts: {totals['action_counts']}")
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_obj(), fh, indent=2, sort_keys=True)
        click.echo(f"wrote {report_path}")
    failed = [c.id for c in report.cases if not (c.exec_success and c.intent_complete)]
    if failed:
        click.echo(f"failing cases: {failed}", err=True)
        sys.exit(1)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(64)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)


if __name__ == "__main__":
    main()
