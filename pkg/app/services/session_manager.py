"""
Analysis sessions: one per create call, each pointing at an immutable Cpg from the cache.
"""
import hashlib
import shutil
import subprocess
import threading
import time
import uuid
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from app.core.config import Settings
from app.core.errors import BuildFailed, CodeBadgerError, ConfigError, IoError, SessionNotReady, UnknownSession, ValidationFailed
from app.core.logging_config import get_logger
from app.cpg.graph import Cpg
from app.frontend.source import load_sources
from app.services.cache import CpgCache, source_hash
from app.services.jobs import JobQueue

logger = get_logger("session_manager")

SUPPORTED_LANGUAGES = ("c",)
_GIT_PREFIXES = ("http://", "https://", "git@", "ssh://", "git://")


class SessionStatus(str, Enum):
    BUILDING = "building"
    READY = "ready"
    FAILED = "failed"


class Session(BaseModel):
    session_id: str
    source_root: str
    language: str = "c"
    source_hash: Optional[str] = None
    status: SessionStatus = SessionStatus.BUILDING
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    cache_hit: Optional[bool] = None
    job_id: Optional[str] = None
    report: List[Dict[str, Any]] = Field(default_factory=list)

    def summary(self) -> Dict[str, Any]:
        out = {
            "session_id": self.session_id,
            "status": self.status.value,
            "source_hash": self.source_hash,
            "language": self.language,
        }
        if self.cache_hit is not None:
            out["cache_hit"] = self.cache_hit
        if self.job_id is not None:
            out["job_id"] = self.job_id
        return out


def is_git_url(source: str) -> bool:
    return source.startswith(_GIT_PREFIXES) or source.endswith(".git")


class _CloneFailed(Exception):
    pass


@retry(
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=1, min=1, max=8),
    retry=retry_if_exception_type(_CloneFailed),
    reraise=True,
)
# transient network failures are retried; a bad URL fails three times and surfaces as IoError
def clone_repository(url: str, dest: Path) -> Path:
    if dest.exists():
        shutil.rmtree(dest, ignore_errors=True)
    dest.parent.mkdir(parents=True, exist_ok=True)
    proc = subprocess.run(
        ["git", "clone", "--depth", "1", "--quiet", url, str(dest)],
        capture_output=True, text=True, timeout=600,
    )
    if proc.returncode != 0:
        logger.warning("git_clone_failed", url=url, stderr=proc.stderr.strip()[-500:])
        raise _CloneFailed(proc.stderr.strip())
    return dest


class SessionManager:
    def __init__(self, settings: Settings, cache: Optional[CpgCache] = None, jobs: Optional[JobQueue] = None):
        self.settings = settings
        self.cache = cache or CpgCache(settings.cache_root, settings.cache_entries)
        self.jobs = jobs or JobQueue(settings.worker_count, settings.job_ttl_seconds)
        self._lock = threading.Lock()
        self._sessions: Dict[str, Session] = {}
        self._cpgs: Dict[str, Cpg] = {}
        self._last_used: Dict[str, float] = {}

    # --- lifecycle ---

    def _materialize(self, source: str) -> Path:
        if is_git_url(source):
            if not self.settings.allow_git:
                raise ConfigError("git sources are disabled (allow_git is false)", detail={"source": source})
            dest = Path(self.settings.git_workdir) / hashlib.sha256(source.encode("utf-8")).hexdigest()[:16]
            try:
                return clone_repository(source, dest)
            except (_CloneFailed, subprocess.SubprocessError, OSError) as e:
                raise IoError(f"cannot clone {source}: {e}", detail={"source": source})
        return Path(source)

    def create(self, source: str, language: str = "c", async_build: bool = False) -> Session:
        if language not in SUPPORTED_LANGUAGES:
            raise ValidationFailed(
                f"unsupported language {language}",
                detail=[{"key": "language", "message": f"must be one of {', '.join(SUPPORTED_LANGUAGES)}"}],
            )
        root = self._materialize(source)
        files = load_sources(root, self.settings.source_glob)
        session = Session(
            session_id=uuid.uuid4().hex,
            source_root=str(root),
            language=language,
            source_hash=source_hash(files, language),
        )
        with self._lock:
            self._expire_idle()
            self._sessions[session.session_id] = session
            self._last_used[session.session_id] = time.monotonic()
        logger.info("session_created", session_id=session.session_id, files=len(files), async_build=async_build)

        if async_build:
            job = self.jobs.submit(
                "create_cpg_session",
                lambda: self._build(session.session_id, files, language),
                session_id=session.session_id,
                params={"source": source, "language": language},
            )
            return self._update(session.session_id, job_id=job.job_id)
        try:
            self._build(session.session_id, files, language)
        except CodeBadgerError:
            # a failed synchronous build leaves no session behind
            with self._lock:
                self._sessions.pop(session.session_id, None)
                self._last_used.pop(session.session_id, None)
            raise
        return self.get(session.session_id)

    def _update(self, session_id: str, **fields) -> Session:
        with self._lock:
            return self._update_locked(session_id, **fields)

    def _update_locked(self, session_id: str, **fields) -> Session:
        current = self._sessions.get(session_id)
        if current is None:
            # closed or expired while its build was running
            raise UnknownSession(f"unknown session {session_id}", detail={"session_id": session_id})
        session = current.model_copy(update=fields)
        self._sessions[session_id] = session
        return session

    def _build(self, session_id: str, files, language: str) -> Dict[str, Any]:
        try:
            cpg, hit = self.cache.get_or_build(files, language)
        except BuildFailed as e:
            self._update(session_id, status=SessionStatus.FAILED, report=e.report)
            raise
        except CodeBadgerError as e:
            self._update(session_id, status=SessionStatus.FAILED, report=[e.to_dict()])
            raise
        with self._lock:
            session = self._update_locked(session_id, status=SessionStatus.READY, cache_hit=hit)
            self._cpgs[session_id] = cpg
        return session.summary()

    def get(self, session_id: str) -> Session:
        with self._lock:
            self._expire_idle()
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"unknown session {session_id}", detail={"session_id": session_id})
            self._last_used[session_id] = time.monotonic()
            return session

    def cpg(self, session_id: str) -> Cpg:
        session = self.get(session_id)
        if session.status == SessionStatus.BUILDING:
            raise SessionNotReady(f"session {session_id} is still building", detail={"job_id": session.job_id})
        if session.status == SessionStatus.FAILED:
            raise BuildFailed(session.report)
        with self._lock:
            return self._cpgs[session_id]

    def close(self, session_id: str) -> Dict[str, Any]:
        with self._lock:
            if self._sessions.pop(session_id, None) is None:
                raise UnknownSession(f"unknown session {session_id}", detail={"session_id": session_id})
            self._cpgs.pop(session_id, None)
            self._last_used.pop(session_id, None)
        logger.info("session_closed", session_id=session_id)
        return {"session_id": session_id, "closed": True}

    def _expire_idle(self) -> None:
        cutoff = time.monotonic() - self.settings.session_ttl_seconds
        for sid in [s for s, t in self._last_used.items() if t < cutoff]:
            if self._sessions[sid].status == SessionStatus.BUILDING:
                continue
            self._sessions.pop(sid, None)
            self._cpgs.pop(sid, None)
            self._last_used.pop(sid, None)
            logger.info("session_expired", session_id=sid)

    def counts(self) -> Dict[str, int]:
        with self._lock:
            out = {s.value: 0 for s in SessionStatus}
            for session in self._sessions.values():
                out[session.status.value] += 1
            return out

    def shutdown(self) -> None:
        self.jobs.shutdown(wait=False)
