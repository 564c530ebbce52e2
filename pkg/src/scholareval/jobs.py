"""Durable evaluation jobs: on-disk persistence, append-only event logs,
idempotent resubmission, and a bounded worker pool.

Every job owns a directory with its record, event log, and report artifacts.
Jobs found in the running state when the store opens are marked failed
("interrupted"): a crashed run is never silently resumed with mixed state.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterator, Optional, Sequence

from .config import RunEnvironment
from .errors import JobStateError, NotFoundError, ValidationError
from .events import ProgressEvent
from .models import EvaluationReport, ResearchIdea, parse_partial_date
from .report import report_to_json, serialize_report
from .runner import run_evaluation


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_TRANSITIONS = {
    JobState.QUEUED: {JobState.RUNNING, JobState.FAILED},
    JobState.RUNNING: {JobState.DONE, JobState.FAILED},
    JobState.DONE: set(),
    JobState.FAILED: set(),
}


@dataclass
class JobRecord:
    job_id: str
    idea_id: str
    idea_text: str
    cutoff_date: Optional[str]
    modules: list[str]
    state: JobState = JobState.QUEUED
    stage: str = ""
    error: Optional[str] = None
    created_at: float = field(default_factory=time.time)
    finished_at: Optional[float] = None
    payload_digest: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "job_id": self.job_id,
            "idea_id": self.idea_id,
            "idea_text": self.idea_text,
            "cutoff_date": self.cutoff_date,
            "modules": self.modules,
            "state": self.state.value,
            "stage": self.stage,
            "error": self.error,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
            "payload_digest": self.payload_digest,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "JobRecord":
        return cls(
            job_id=payload["job_id"],
            idea_id=payload["idea_id"],
            idea_text=payload["idea_text"],
            cutoff_date=payload.get("cutoff_date"),
            modules=list(payload.get("modules", [])),
            state=JobState(payload.get("state", "queued")),
            stage=payload.get("stage", ""),
            error=payload.get("error"),
            created_at=payload.get("created_at", 0.0),
            finished_at=payload.get("finished_at"),
            payload_digest=payload.get("payload_digest", ""),
        )

    def idea(self) -> ResearchIdea:
        cutoff = parse_partial_date(self.cutoff_date) if self.cutoff_date else None
        return ResearchIdea(id=self.idea_id, text=self.idea_text, cutoff_date=cutoff)


def payload_digest(
    idea_text: str, cutoff: Optional[str], modules: Sequence[str], extra: str = ""
) -> str:
    body = json.dumps(
        {"idea": idea_text, "cutoff": cutoff, "modules": sorted(modules), "extra": extra},
        sort_keys=True,
    )
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


class JobStore:
    """Directory-backed job persistence; state transitions are serialized."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._digest_index: dict[str, str] = {}
        for record in self._scan():
            if record.state in (JobState.RUNNING, JobState.QUEUED):
                record.state = JobState.FAILED
                record.error = "interrupted"
                record.finished_at = time.time()
                self._write(record)
            if record.payload_digest:
                self._digest_index.setdefault(record.payload_digest, record.job_id)

    def _scan(self) -> Iterator[JobRecord]:
        for path in sorted(self.root.glob("*/job.json")):
            yield JobRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def _dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _write(self, record: JobRecord) -> None:
        target = self._dir(record.job_id)
        target.mkdir(parents=True, exist_ok=True)
        # Atomic replace: a concurrent reader sees the old or new record,
        # never a partially written file.
        scratch = target / "job.json.tmp"
        scratch.write_text(json.dumps(record.to_dict(), indent=2), encoding="utf-8")
        os.replace(scratch, target / "job.json")

    def create(
        self,
        idea_id: str,
        idea_text: str,
        cutoff_date: Optional[str],
        modules: Sequence[str],
        digest: str = "",
    ) -> tuple[JobRecord, bool]:
        """Create a job, or return the cached one for an identical payload.

        Returns (record, created); created is False on an idempotent hit.
        """
        if not idea_text or not idea_text.strip():
            raise ValidationError("idea text must be non-empty")
        if not modules:
            raise ValidationError("at least one module must be requested")
        if cutoff_date:
            parse_partial_date(cutoff_date)
        with self._lock:
            if digest and digest in self._digest_index:
                return self.get(self._digest_index[digest]), False
            record = JobRecord(
                job_id=uuid.uuid4().hex[:12],
                idea_id=idea_id,
                idea_text=idea_text,
                cutoff_date=cutoff_date,
                modules=list(modules),
                payload_digest=digest,
            )
            self._write(record)
            (self._dir(record.job_id) / "events.jsonl").touch()
            if digest:
                self._digest_index[digest] = record.job_id
            return record, True

    def get(self, job_id: str) -> JobRecord:
        path = self._dir(job_id) / "job.json"
        if not path.exists():
            raise NotFoundError(f"unknown job: {job_id}")
        return JobRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def transition(
        self,
        job_id: str,
        state: JobState,
        stage: str = "",
        error: Optional[str] = None,
    ) -> JobRecord:
        with self._lock:
            record = self.get(job_id)
            if state is not record.state:
                if state not in _TRANSITIONS[record.state]:
                    raise JobStateError(
                        f"illegal transition {record.state.value} -> {state.value}"
                    )
                record.state = state
            record.stage = stage
            if error is not None:
                record.error = error
            if state in (JobState.DONE, JobState.FAILED):
                record.finished_at = time.time()
            self._write(record)
            return record

    # -- events -------------------------------------------------------------

    def append_event(self, job_id: str, event: ProgressEvent) -> None:
        path = self._dir(job_id) / "events.jsonl"
        if not path.parent.exists():
            raise NotFoundError(f"unknown job: {job_id}")
        with self._lock:
            with path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event.to_dict()) + "\n")

    def read_events(self, job_id: str, offset: int = 0) -> list[ProgressEvent]:
        path = self._dir(job_id) / "events.jsonl"
        if not path.exists():
            raise NotFoundError(f"unknown job: {job_id}")
        events = []
        with path.open(encoding="utf-8") as handle:
            for i, line in enumerate(handle):
                if i >= offset and line.strip():
                    events.append(ProgressEvent.from_dict(json.loads(line)))
        return events

    # -- report artifacts ---------------------------------------------------

    def save_report(self, job_id: str, report: EvaluationReport) -> None:
        target = self._dir(job_id)
        if not target.exists():
            raise NotFoundError(f"unknown job: {job_id}")
        markdown = serialize_report(report)
        (target / "report.md").write_text(markdown, encoding="utf-8")
        (target / "report.json").write_text(report_to_json(report), encoding="utf-8")

    def load_report_markdown(self, job_id: str) -> str:
        return self._load_artifact(job_id, "report.md")

    def load_report_structured(self, job_id: str) -> dict:
        return json.loads(self._load_artifact(job_id, "report.json"))

    def _load_artifact(self, job_id: str, name: str) -> str:
        record = self.get(job_id)
        if record.state is not JobState.DONE:
            raise JobStateError(
                f"job {job_id} is {record.state.value}; report not available"
            )
        return (self._dir(job_id) / name).read_text(encoding="utf-8")


class JobRunner:
    """Runs queued jobs on a bounded worker pool with a hard per-job timeout."""

    def __init__(
        self,
        store: JobStore,
        environment_factory: Callable[[], RunEnvironment],
        max_workers: int = 2,
        job_timeout: float = 1800.0,
    ):
        self.store = store
        self._factory = environment_factory
        self._timeout = job_timeout
        self._pool = concurrent.futures.ThreadPoolExecutor(max_workers=max_workers)
        self._inner = concurrent.futures.ThreadPoolExecutor(max_workers=max_workers)

    def submit(self, job_id: str) -> concurrent.futures.Future:
        return self._pool.submit(self._run, job_id)

    def run_sync(self, job_id: str) -> JobRecord:
        self._run(job_id)
        return self.store.get(job_id)

    def _run(self, job_id: str) -> None:
        record = self.store.get(job_id)
        self.store.transition(job_id, JobState.RUNNING, stage="starting")

        def emit(stage: str, detail: str = "", **counts: int) -> None:
            self.store.append_event(
                job_id, ProgressEvent(stage=stage, detail=detail, counts=counts)
            )
            self.store.transition(job_id, JobState.RUNNING, stage=stage)

        try:
            env = self._factory()
            future = self._inner.submit(
                run_evaluation, record.idea(), record.modules, env, emit
            )
            report = future.result(timeout=self._timeout)
            self.store.save_report(job_id, report)
            self.store.append_event(
                job_id, ProgressEvent(stage="terminal", detail="done")
            )
            self.store.transition(job_id, JobState.DONE, stage="done")
        except concurrent.futures.TimeoutError:
            reason = f"timeout after {self._timeout:.0f}s"
            self.store.append_event(
                job_id, ProgressEvent(stage="terminal", detail=f"failed: {reason}")
            )
            self.store.transition(job_id, JobState.FAILED, error=reason)
        except Exception as exc:
            self.store.append_event(
                job_id, ProgressEvent(stage="terminal", detail=f"failed: {exc}")
            )
            self.store.transition(job_id, JobState.FAILED, error=str(exc))

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False)
        self._inner.shutdown(wait=False)
