"""HTTP service: submit evaluations, poll state, stream progress events, and
fetch finished reports."""

from __future__ import annotations

import json
import time
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel, Field

from .config import AppConfig, build_environment
from .errors import JobStateError, NotFoundError, ValidationError
from .jobs import JobRunner, JobState, JobStore, payload_digest
from .models import parse_partial_date
from .runner import MODULES

EVENT_POLL_INTERVAL = 0.1


class SubmitRequest(BaseModel):
    idea_text: str
    idea_id: str = "idea"
    cutoff_date: Optional[str] = None
    modules: list[str] = Field(default_factory=lambda: list(MODULES))
    use_cache: bool = True


def create_app(
    config: AppConfig,
    store: Optional[JobStore] = None,
    runner: Optional[JobRunner] = None,
) -> FastAPI:
    app = FastAPI(title="scholareval", version="0.1.0")
    app.state.store = store or JobStore(config.jobs_dir)
    app.state.runner = runner or JobRunner(
        app.state.store,
        environment_factory=lambda: build_environment(config),
        max_workers=config.max_parallel,
        job_timeout=config.job_timeout,
    )

    @app.exception_handler(ValidationError)
    async def _validation_handler(_: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/evaluations", status_code=202)
    def submit(request: SubmitRequest):
        if not request.idea_text.strip():
            raise ValidationError("idea text must be non-empty")
        if not request.modules:
            raise ValidationError("at least one module must be requested")
        unknown = set(request.modules) - set(MODULES)
        if unknown:
            raise ValidationError(f"unknown modules: {sorted(unknown)}")
        if request.cutoff_date:
            parse_partial_date(request.cutoff_date)
        digest = (
            payload_digest(request.idea_text, request.cutoff_date, request.modules)
            if request.use_cache
            else ""
        )
        record, created = app.state.store.create(
            idea_id=request.idea_id,
            idea_text=request.idea_text,
            cutoff_date=request.cutoff_date,
            modules=request.modules,
            digest=digest,
        )
        if created:
            app.state.runner.submit(record.job_id)
        return {"job_id": record.job_id}

    @app.get("/evaluations/{job_id}")
    def job_state(job_id: str):
        try:
            record = app.state.store.get(job_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "job_id": record.job_id,
            "idea_id": record.idea_id,
            "modules": record.modules,
            "state": record.state.value,
            "stage": record.stage,
            "error": record.error,
            "created_at": record.created_at,
            "finished_at": record.finished_at,
        }

    @app.get("/evaluations/{job_id}/events")
    def event_stream(job_id: str):
        store: JobStore = app.state.store
        try:
            store.get(job_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

        def generate() -> Iterator[str]:
            offset = 0
            while True:
                events = store.read_events(job_id, offset=offset)
                terminal = False
                for event in events:
                    payload = json.dumps(event.to_dict())
                    yield f"event: progress\ndata: {payload}\n\n"
                    if event.stage == "terminal":
                        terminal = True
                offset += len(events)
                if terminal:
                    return
                record = store.get(job_id)
                if record.state in (JobState.DONE, JobState.FAILED):
                    # Log already drained and no terminal marker will come.
                    if not store.read_events(job_id, offset=offset):
                        return
                time.sleep(EVENT_POLL_INTERVAL)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/evaluations/{job_id}/report")
    def report(job_id: str, format: str = Query("markdown")):
        store: JobStore = app.state.store
        try:
            if format == "markdown":
                return PlainTextResponse(
                    store.load_report_markdown(job_id), media_type="text/markdown"
                )
            if format == "structured":
                return JSONResponse(store.load_report_structured(job_id))
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except JobStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        raise HTTPException(status_code=400, detail=f"unknown format: {format!r}")

    return app
