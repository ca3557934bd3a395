"""Query engine: the full pipeline behind the CLI and HTTP service.

Wires one dataset, registry, normalization table, gazetteer, and
interpreter backend into staged operations with an unconditional audit
trail. The soundness gate lives here: execute_frame() re-validates every
frame, so nothing that fails schema validation can reach the executor.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .audit import AuditLog, text_hash
from .executor import ResultSet, execute
from .frames import SemanticFrame, frame_to_json, frame_to_obj
from .graph import CompileError, ExecGraph, check_graph, compile_frame, graph_to_text
from .interpreter import (
    InterpretationFailure,
    InterpreterBackend,
    InterpreterUnavailable,
    build_system_prompt,
    interpret,
)
from .outputs import render_map, render_map_html, render_table, summarize_frame
from .registry import SchemaRegistry, default_registry, load_registry_file
from .repair import (
    Gazetteer,
    NormalizationTable,
    RepairRejection,
    RepairReport,
    default_normalization_table,
    pending_candidates,
    repair,
    validate_frame,
)


class SoundnessError(ValueError):
    """Frame failed server-side re-validation; it never reaches the executor."""

    def __init__(self, violations):
        self.violations = violations
        super().__init__("frame fails validation: " +
                         "; ".join(str(v) for v in violations))


class AmbiguousAnchor(ValueError):
    """Anchor resolution surfaced candidates; a user pick is required."""

    def __init__(self, candidates: list[dict], report: RepairReport):
        self.candidates = candidates
        self.report = report
        super().__init__("ambiguous anchor reference; pick a candidate")


@dataclass
class QueryOutcome:
    query: str
    raw_frame: SemanticFrame
    repaired_frame: SemanticFrame
    repair_report: RepairReport
    graph: ExecGraph
    graph_text: str
    result: ResultSet
    nl_summary: str
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {
            "query": self.query,
            "raw_frame": frame_to_obj(self.raw_frame),
            "repaired_frame": frame_to_obj(self.repaired_frame),
            "repair_report": self.repair_report.to_obj(),
            "graph_audit_text": self.graph_text,
            "graph": self.graph.to_obj(),
            "result_counts": self.result.summary_counts(),
            "ranking": ([row.to_obj() for row in self.result.ranking_rows]
                        if self.result.ranking_rows is not None else None),
            "provenance": [p.to_obj() for p in self.result.provenance],
            "nl_summary": self.nl_summary,
            "dataset_version": self.result.dataset_version,
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
        }


class QueryEngine:
    def __init__(self, registry: SchemaRegistry, dataset, gazetteer: Gazetteer,
                 table: NormalizationTable, backend: InterpreterBackend,
                 audit: AuditLog | None = None):
        self.registry = registry
        self.dataset = dataset
        self.gazetteer = gazetteer
        self.table = table
        self.backend = backend
        self.audit = audit or AuditLog()
        self.prompt = build_system_prompt(registry)

    @classmethod
    def from_data_dir(cls, data_dir: str, registry_path: str | None = None,
                      backend: InterpreterBackend | None = None,
                      audit_path: str | None = None) -> "QueryEngine":
        import json
        import os

        from .geo.store import Dataset

        registry = load_registry_file(registry_path) if registry_path else default_registry()
        dataset = Dataset.load_dir(data_dir, registry)
        gazetteer = Gazetteer.from_dataset(dataset)
        places_path = os.path.join(data_dir, "places.json")
        if os.path.exists(places_path):
            with open(places_path, "r", encoding="utf-8") as fh:
                gazetteer = gazetteer.merged(Gazetteer.from_places(json.load(fh)))
        return cls(
            registry=registry, dataset=dataset, gazetteer=gazetteer,
            table=default_normalization_table(),
            backend=backend or InterpreterBackend(kind="rule_based"),
            audit=AuditLog(audit_path),
        )

    # -- stages ---------------------------------------------------------------

    def interpret_query(self, query: str):
        out = interpret(self.backend, self.prompt, query)
        self.audit.record("interpret", query_hash=text_hash(query),
                          backend=out.backend_kind,
                          latency_ms=round(out.latency_s * 1000, 3),
                          raw_hash=out.raw_hash())
        return out

    def repair_frame(self, frame: SemanticFrame,
                     anchor_pick: int | None = None) -> tuple[SemanticFrame, RepairReport]:
        fixed, report = repair(self.registry, self.table, self.gazetteer, frame,
                               anchor_pick=anchor_pick)
        pending = pending_candidates(fixed)
        if pending:
            candidates = [
                {"reference": ref.name, "index": i,
                 "candidates": [{"name": c.name, "location": list(c.location)}
                                for c in ref.candidates]}
                for i, ref in pending
            ]
            raise AmbiguousAnchor(candidates, report)
        return fixed, report

    def execute_frame(self, frame: SemanticFrame) -> tuple[ResultSet, ExecGraph]:
        """Re-validates unconditionally: the executor is unreachable otherwise."""
        violations = validate_frame(self.registry, frame)
        if violations:
            self.audit.record("execute", status="rejected",
                              frame_hash=text_hash(frame_to_json(frame)),
                              violations=[str(v) for v in violations])
            raise SoundnessError(violations)
        unresolved = [r.name for r in frame.references if r.resolved_location is None]
        if unresolved:
            self.audit.record("execute", status="rejected",
                              frame_hash=text_hash(frame_to_json(frame)),
                              violations=[f"unresolved reference {n!r}" for n in unresolved])
            raise SoundnessError([f"unresolved reference {n!r}" for n in unresolved])
        graph = compile_frame(frame, self.registry)
        faults = check_graph(graph)
        if faults:
            raise CompileError("; ".join(faults))
        result = execute(graph, self.dataset, frame_echo=frame)
        self.audit.record(
            "execute", status="ok",
            frame_hash=text_hash(frame_to_json(frame)),
            dataset_version=result.dataset_version,
            provenance=[p.to_obj() for p in result.provenance],
        )
        return result, graph

    # -- one-shot query ---------------------------------------------------------

    def run_query(self, query: str, anchor_pick: int | None = None) -> QueryOutcome:
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        interp = self.interpret_query(query)
        timings["interpret"] = (time.perf_counter() - t0) * 1000
        raw = interp.frame
        if not raw.supported:
            raise InterpretationFailure(
                "query is outside the supported analytical schema")

        t1 = time.perf_counter()
        fixed, report = self.repair_frame(raw, anchor_pick=anchor_pick)
        timings["repair"] = (time.perf_counter() - t1) * 1000

        t2 = time.perf_counter()
        result, graph = self.execute_frame(fixed)
        timings["execute"] = (time.perf_counter() - t2) * 1000

        summary = summarize_frame(fixed, report)
        outcome = QueryOutcome(
            query=query, raw_frame=raw, repaired_frame=fixed, repair_report=report,
            graph=graph, graph_text=graph_to_text(graph), result=result,
            nl_summary=summary, timings_ms=timings,
        )
        self.audit.record(
            "query", query_hash=text_hash(query), backend=self.backend.kind,
            raw_frame_hash=text_hash(frame_to_json(raw)),
            repaired_frame_hash=text_hash(frame_to_json(fixed)),
            repair_actions=[a.to_obj() for a in report.actions],
            dataset_version=result.dataset_version,
            node_timings={p.node_id: round(p.elapsed_ms, 3) for p in result.provenance},
            timings_ms={k: round(v, 3) for k, v in timings.items()},
        )
        return outcome

    # -- artifact writing ---------------------------------------------------------

    def write_artifacts(self, outcome: QueryOutcome, out_dir: str,
                        fmt: str = "geojson") -> list[str]:
        import json
        import os

        os.makedirs(out_dir, exist_ok=True)
        written = []

        def put(name: str, content: str):
            path = os.path.join(out_dir, name)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(content)
            written.append(path)

        put("map.geojson", render_map(outcome.result))
        if fmt == "html":
            put("map.html", render_map_html(outcome.result))
        table_fmt = fmt if fmt in ("csv", "json") else "csv"
        put(f"table.{table_fmt}", render_table(outcome.result, table_fmt))
        put("summary.txt", outcome.nl_summary + "\n")
        put("graph.txt", outcome.graph_text + "\n")
        put("response.json", json.dumps(outcome.to_obj(), indent=2, sort_keys=True))
        return written
