"""Desk-scale evaluation harness: 80 queries in nine groups against a fixture.

Each case runs interpret (or a raw-frame override) -> repair -> compile ->
check -> execute. Intent completeness is canonical-frame equality with the
case's ground truth; execution success is completing without error; the
repaired flag is the repair report's. Per-case failures are recorded, never
thrown.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .executor import execute
from .frames import SemanticFrame, frame_diff, frame_from_obj, frame_to_obj, frames_equal
from .graph import check_graph, compile_frame
from .interpreter import InterpreterBackend, SystemPrompt, build_system_prompt, interpret
from .outputs import render_map, render_table
from .registry import SchemaRegistry
from .repair import Gazetteer, NormalizationTable, RepairRejection, pending_candidates, repair

GROUPS = ("G1", "G2", "G3", "G4", "G5", "G6", "G7", "G8", "G9")

GROUP_NAMES = {
    "G1": "Entity Retrieval",
    "G2": "Spatial Scoping",
    "G3": "Attribute Filter",
    "G4": "Temporal Filter",
    "G5": "Spatial Rel.",
    "G6": "Infra. Ranking",
    "G7": "Town Ranking",
    "G8": "Road Seg. Ranking",
    "G9": "Combined",
}

# shipped suite sizes per group
GROUP_SIZES = {"G1": 6, "G2": 8, "G3": 12, "G4": 7, "G5": 5,
               "G6": 10, "G7": 8, "G8": 8, "G9": 16}


@dataclass
class EvalCase:
    id: str
    group: str
    query: str
    ground_truth: SemanticFrame
    expect_repair: bool = False
    raw_frame_override: SemanticFrame | None = None

    def to_obj(self) -> dict:
        return {
            "id": self.id, "group": self.group, "query": self.query,
            "expect_repair": self.expect_repair,
            "ground_truth": frame_to_obj(self.ground_truth),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "EvalCase":
        return cls(
            id=obj["id"], group=obj["group"], query=obj["query"],
            ground_truth=frame_from_obj(obj["ground_truth"]),
            expect_repair=bool(obj.get("expect_repair", False)),
        )


@dataclass
class CaseResult:
    id: str
    group: str
    intent_complete: bool
    exec_success: bool
    repaired: bool
    latency_ms: float
    action_counts: dict = field(default_factory=dict)
    error: str | None = None
    diff: list = field(default_factory=list)

    def to_obj(self, with_latency: bool = True) -> dict:
        obj = {
            "id": self.id, "group": self.group,
            "intent_complete": self.intent_complete,
            "exec_success": self.exec_success,
            "repaired": self.repaired,
            "action_counts": dict(sorted(self.action_counts.items())),
            "error": self.error,
            "diff": self.diff,
        }
        if with_latency:
            obj["latency_ms"] = round(self.latency_ms, 3)
        return obj


@dataclass
class EvalReport:
    cases: list[CaseResult]

    def group_rows(self) -> list[dict]:
        rows = []
        for group in GROUPS:
            results = [c for c in self.cases if c.group == group]
            if not results:
                continue
            latencies = [c.latency_ms for c in results]
            rows.append({
                "group": group,
                "category": GROUP_NAMES.get(group, group),
                "n": len(results),
                "avg_s": sum(latencies) / len(latencies) / 1000.0,
                "max_s": max(latencies) / 1000.0,
                "repaired": sum(c.repaired for c in results),
                "intent_complete": sum(c.intent_complete for c in results),
                "exec_success": sum(c.exec_success for c in results),
            })
        return rows

    def totals(self) -> dict:
        latencies = [c.latency_ms for c in self.cases] or [0.0]
        kind_counts: dict[str, int] = {}
        for c in self.cases:
            for kind, n in c.action_counts.items():
                kind_counts[kind] = kind_counts.get(kind, 0) + n
        return {
            "n": len(self.cases),
            "avg_s": sum(latencies) / len(latencies) / 1000.0,
            "max_s": max(latencies) / 1000.0,
            "repaired": sum(c.repaired for c in self.cases),
            "intent_complete": sum(c.intent_complete for c in self.cases),
            "exec_success": sum(c.exec_success for c in self.cases),
            "action_counts": dict(sorted(kind_counts.items())),
        }

    def to_obj(self, with_latency: bool = True) -> dict:
        obj = {
            "cases": [c.to_obj(with_latency) for c in self.cases],
            "totals": {k: v for k, v in self.totals().items()
                       if with_latency or k not in ("avg_s", "max_s")},
        }
        if with_latency:
            obj["groups"] = self.group_rows()
        else:
            obj["groups"] = [
                {k: v for k, v in row.items() if k not in ("avg_s", "max_s")}
                for row in self.group_rows()
            ]
        return obj


def compare_intent(validated: SemanticFrame, truth: SemanticFrame) -> tuple[bool, list[str]]:
    """frames_equal verdict plus a field-level diff for debugging."""
    ok = frames_equal(validated, truth)
    return ok, ([] if ok else frame_diff(validated, truth))


def run_case(case: EvalCase, backend: InterpreterBackend, prompt: SystemPrompt,
             registry: SchemaRegistry, table: NormalizationTable, gazetteer: Gazetteer,
             dataset, artifact_dir: str | None = None) -> CaseResult:
    t0 = time.perf_counter()
    result = CaseResult(id=case.id, group=case.group, intent_complete=False,
                        exec_success=False, repaired=False, latency_ms=0.0)
    try:
        if case.raw_frame_override is not None:
            raw = case.raw_frame_override
        else:
            raw = interpret(backend, prompt, case.query).frame
        fixed, report = repair(registry, table, gazetteer, raw)
        result.repaired = report.repaired
        result.action_counts = report.counts_by_kind()
        if pending_candidates(fixed):
            raise RepairRejection("ambiguous anchor needs a user pick", report)
        result.intent_complete, result.diff = compare_intent(fixed, case.ground_truth)
        graph = compile_frame(fixed, registry)
        faults = check_graph(graph)
        if faults:
            raise ValueError(f"graph faults: {faults}")
        res = execute(graph, dataset, frame_echo=fixed)
        result.exec_success = True
        if artifact_dir is not None:
            os.makedirs(artifact_dir, exist_ok=True)
            with open(os.path.join(artifact_dir, f"{case.id}.map.geojson"), "w",
                      encoding="utf-8") as fh:
                fh.write(render_map(res))
            with open(os.path.join(artifact_dir, f"{case.id}.table.csv"), "w",
                      encoding="utf-8") as fh:
                fh.write(render_table(res, "csv"))
    except Exception as exc:  # per-case failures are data, not crashes
        result.error = f"{type(exc).__name__}: {exc}"
    result.latency_ms = (time.perf_counter() - t0) * 1000.0
    return result


def run_suite(cases: list[EvalCase], backend: InterpreterBackend,
              registry: SchemaRegistry, table: NormalizationTable,
              gazetteer: Gazetteer, dataset,
              overrides: dict[str, SemanticFrame] | None = None,
              artifact_dir: str | None = None) -> EvalReport:
    prompt = build_system_prompt(registry)
    results = []
    for case in cases:
        if overrides and case.id in overrides:
            case = EvalCase(id=case.id, group=case.group, query=case.query,
                            ground_truth=case.ground_truth,
                            expect_repair=case.expect_repair,
                            raw_frame_override=overrides[case.id])
        results.append(run_case(case, backend, prompt, registry, table,
                                gazetteer, dataset, artifact_dir=artifact_dir))
    return EvalReport(cases=results)


def report_render(report: EvalReport) -> str:
    """Markdown results table: per-group rows plus an overall row."""
    lines = [
        "| Group | Category | n | Avg (s) | Max (s) | Repaired | Intent | Exec |",
        "|---|---|---:|---:|---:|---:|---:|---:|",
    ]
    for row in report.group_rows():
        lines.append(
            f"| {row['group']} | {row['category']} | {row['n']} | {row['avg_s']:.2f} "
            f"| {row['max_s']:.2f} | {row['repaired']} | {row['intent_complete']} "
            f"| {row['exec_success']} |"
        )
    t = report.totals()
    lines.append(
        f"| **Overall** |  | **{t['n']}** | **{t['avg_s']:.2f}** | **{t['max_s']:.2f}** "
        f"| **{t['repaired']}** | **{t['intent_complete']}** | **{t['exec_success']}** |"
    )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# shipped suite loading

def _eval_data_dir() -> "os.PathLike":
    from importlib.resources import files

    return files("crashquery.data").joinpath("eval")


def load_cases(directory=None) -> list[EvalCase]:
    base = directory if directory is not None else _eval_data_dir().joinpath("cases")
    names = sorted(os.listdir(base)) if isinstance(base, (str, os.PathLike)) else sorted(
        p.name for p in base.iterdir())
    cases = []
    for name in names:
        if not name.endswith(".json"):
            continue
        path = os.path.join(str(base), name)
        with open(path, "r", encoding="utf-8") as fh:
            cases.append(EvalCase.from_obj(json.load(fh)))
    return sorted(cases, key=lambda c: (GROUPS.index(c.group), c.id))


def load_overrides(directory=None) -> dict[str, SemanticFrame]:
    base = directory if directory is not None else _eval_data_dir().joinpath("overrides")
    out = {}
    for name in sorted(os.listdir(str(base))):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(str(base), name), "r", encoding="utf-8") as fh:
            out[name[: -len(".json")]] = frame_from_obj(json.load(fh))
    return out
