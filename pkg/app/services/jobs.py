"""
Asynchronous tool execution on a thread pool, with results kept for polling.
"""
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Dict, Optional

from prometheus_client import Gauge
from pydantic import BaseModel, Field

from app.core.errors import CodeBadgerError, UnknownJob
from app.core.logging_config import get_logger

logger = get_logger("jobs")

JOBS_IN_FLIGHT = Gauge("jobs_in_flight", "Jobs queued or running")


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_RANK = {JobState.QUEUED: 0, JobState.RUNNING: 1, JobState.DONE: 2, JobState.FAILED: 2}


def _now() -> datetime:
    return datetime.now(timezone.utc)


class Job(BaseModel):
    job_id: str
    tool: str
    session_id: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    state: JobState = JobState.QUEUED
    result: Any = None
    error: Optional[Dict[str, Any]] = None
    created_at: datetime = Field(default_factory=_now)
    started_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None

    @property
    def finished(self) -> bool:
        return self.state in (JobState.DONE, JobState.FAILED)


class JobQueue:
    def __init__(self, workers: int = 4, ttl_seconds: int = 3600):
        self.ttl_seconds = ttl_seconds
        self._executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="cpg-job")
        self._lock = threading.Lock()
        self._jobs: Dict[str, Job] = {}
        self._finished_at: Dict[str, float] = {}

    def submit(self, tool: str, fn: Callable[[], Any], session_id: Optional[str] = None, params: Optional[dict] = None) -> Job:
        job = Job(job_id=uuid.uuid4().hex, tool=tool, session_id=session_id, params=params or {})
        with self._lock:
            self._purge()
            self._jobs[job.job_id] = job
        JOBS_IN_FLIGHT.inc()
        logger.info("job_submitted", job_id=job.job_id, tool=tool, session_id=session_id)
        self._executor.submit(self._run, job.job_id, fn)
        return job

    def _transition(self, job_id: str, state: JobState, **fields) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if _RANK[state] <= _RANK[job.state]:
                raise RuntimeError(f"job {job_id} cannot move from {job.state.value} to {state.value}")
            self._jobs[job_id] = job.model_copy(update={"state": state, **fields})
            if state in (JobState.DONE, JobState.FAILED):
                self._finished_at[job_id] = time.monotonic()

    def _run(self, job_id: str, fn: Callable[[], Any]) -> None:
        self._transition(job_id, JobState.RUNNING, started_at=_now())
        try:
            result = fn()
        except CodeBadgerError as e:
            logger.warning("job_failed", job_id=job_id, code=e.code, error=e.message)
            self._transition(job_id, JobState.FAILED, error=e.to_dict(), finished_at=_now())
        except Exception as e:
            logger.error("job_crashed", job_id=job_id, error=str(e), exc_info=True)
            error = {"code": "internal_error", "message": str(e), "detail": None}
            self._transition(job_id, JobState.FAILED, error=error, finished_at=_now())
        else:
            self._transition(job_id, JobState.DONE, result=result, finished_at=_now())
            logger.info("job_done", job_id=job_id)
        finally:
            JOBS_IN_FLIGHT.dec()

    def get(self, job_id: str) -> Job:
        with self._lock:
            self._purge()
            job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"unknown job {job_id}", detail={"job_id": job_id})
        return job

    def _purge(self) -> None:
        cutoff = time.monotonic() - self.ttl_seconds
        for job_id in [j for j, t in self._finished_at.items() if t < cutoff]:
            self._jobs.pop(job_id, None)
            self._finished_at.pop(job_id, None)

    def counts(self) -> Dict[str, int]:
        with self._lock:
            out = {s.value: 0 for s in JobState}
            for job in self._jobs.values():
                out[job.state.value] += 1
            return out

    def shutdown(self, wait: bool = True) -> None:
        self._executor.shutdown(wait=wait)
