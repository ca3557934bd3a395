"""HTTP service: staged pipeline endpoints for the web console.

    POST /query     {text, anchor_pick?} -> full QueryResponse
    POST /interpret {text}               -> raw frame + latency
    POST /repair    {frame}              -> repaired frame + repair report
    POST /execute   {frame}              -> results (422 unless the frame
                                            passes validation: soundness gate)
    GET  /registry, /dataset/version, /health

Stage endpoints exist so a client can show the raw-vs-repaired diff; the
repair report is part of every query response, empty or not.
"""

from __future__ import annotations

import json

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import AmbiguousAnchor, QueryEngine, SoundnessError
from .frames import FrameParseError, FrameShapeError, frame_from_obj, frame_to_obj
from .geo.store import ExecutionDataError
from .executor import ExecutionTypeError
from .graph import CompileError, graph_to_text
from .interpreter import InterpretationFailure, InterpreterUnavailable
from .outputs import render_map, render_table
from .repair import RepairRejection


class QueryBody(BaseModel):
    text: str
    anchor_pick: int | None = None


class InterpretBody(BaseModel):
    text: str


def create_app(engine: QueryEngine, console_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="crashquery", version="0.1.0")

    @app.exception_handler(RepairRejection)
    async def _repair_rejected(request, exc: RepairRejection):
        return JSONResponse(status_code=422, content={
            "error": "repair_rejected", "detail": str(exc),
            "repair_report": exc.report.to_obj(),
        })

    @app.exception_handler(AmbiguousAnchor)
    async def _ambiguous(request, exc: AmbiguousAnchor):
        return JSONResponse(status_code=422, content={
            "error": "ambiguous_anchor", "detail": str(exc),
            "candidates": exc.candidates,
            "repair_report": exc.report.to_obj(),
        })

    @app.exception_handler(SoundnessError)
    async def _unsound(request, exc: SoundnessError):
        return JSONResponse(status_code=422, content={
            "error": "invalid_frame", "detail": str(exc),
            "violations": [str(v) for v in exc.violations],
        })

    @app.exception_handler(InterpreterUnavailable)
    async def _unavailable(request, exc):
        return JSONResponse(status_code=502, content={
            "error": "interpreter_unavailable", "detail": str(exc)})

    @app.exception_handler(InterpretationFailure)
    async def _interp_failed(request, exc):
        return JSONResponse(status_code=502, content={
            "error": "interpretation_failure", "detail": str(exc)})

    @app.exception_handler(FrameParseError)
    async def _bad_json(request, exc):
        return JSONResponse(status_code=400, content={
            "error": "malformed_frame", "detail": str(exc)})

    @app.exception_handler(FrameShapeError)
    async def _bad_shape(request, exc):
        return JSONResponse(status_code=400, content={
            "error": "malformed_frame", "detail": str(exc)})

    @app.exception_handler(CompileError)
    async def _compile_error(request, exc):
        return JSONResponse(status_code=422, content={
            "error": "compile_error", "detail": str(exc)})

    @app.exception_handler(ExecutionDataError)
    async def _exec_data(request, exc):
        return JSONResponse(status_code=500, content={
            "error": "execution_error", "detail": str(exc)})

    @app.exception_handler(ExecutionTypeError)
    async def _exec_type(request, exc):
        return JSONResponse(status_code=500, content={
            "error": "execution_error", "detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "dataset_version": engine.dataset.version}

    @app.get("/dataset/version")
    def dataset_version():
        return {"dataset_version": engine.dataset.version}

    @app.get("/registry")
    def registry():
        reg = engine.registry
        return {
            "version": reg.version,
            "entities": [
                {
                    "name": e.name, "geometry": e.geometry_kind,
                    "scope_capable": e.scope_capable, "anchor_capable": e.anchor_capable,
                    "fields": [
                        {"name": f.name, "kind": f.value_kind,
                         "values": list(f.canonical_values) or None,
                         "unit": f.unit, "nullable": f.nullable}
                        for f in e.fields
                    ],
                }
                for e in reg.entities
            ],
            "relations": list(reg.relations),
            "operators": list(reg.operators),
            "roles": list(reg.roles),
            "ranking_metrics": list(reg.ranking_metrics),
        }

    @app.post("/interpret")
    def interpret_text(body: InterpretBody):
        out = engine.interpret_query(body.text)
        return {
            "raw_frame": frame_to_obj(out.frame),
            "backend": out.backend_kind,
            "latency_ms": round(out.latency_s * 1000, 3),
        }

    @app.post("/repair")
    def repair_frame(frame: dict):
        fixed, report = engine.repair_frame(frame_from_obj(frame))
        return {
            "repaired_frame": frame_to_obj(fixed),
            "repair_report": report.to_obj(),
        }

    @app.post("/execute")
    def execute_frame(frame: dict):
        parsed = frame_from_obj(frame)
        result, graph = engine.execute_frame(parsed)
        return {
            "result_counts": result.summary_counts(),
            "ranking": ([row.to_obj() for row in result.ranking_rows]
                        if result.ranking_rows is not None else None),
            "map": json.loads(render_map(result)),
            "table_csv": render_table(result, "csv"),
            "graph_audit_text": graph_to_text(graph),
            "provenance": [p.to_obj() for p in result.provenance],
            "dataset_version": result.dataset_version,
        }

    @app.post("/query")
    def query(body: QueryBody):
        outcome = engine.run_query(body.text, anchor_pick=body.anchor_pick)
        response = outcome.to_obj()
        response["map"] = json.loads(render_map(outcome.result))
        response["table_csv"] = render_table(outcome.result, "csv")
        return response

    if console_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app
