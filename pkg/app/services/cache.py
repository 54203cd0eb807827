"""
On-disk CPG cache keyed by source hash and language.

Layout: ``<cache_root>/<hash>-<language>.cpg``. Eviction is least-recently-used by entry
count; the order is seeded from file mtimes at start-up. One lock per key means racing
creators of the same codebase build it once.
"""
import hashlib
import os
import threading
import time
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Sequence, Tuple

from prometheus_client import Counter, Histogram

from app.core.errors import BuildFailed, IoError
from app.core.logging_config import get_logger
from app.cpg import serialize
from app.cpg.builder import build_cpg, build_report
from app.cpg.graph import Cpg
from app.frontend.parser import parse_codebase
from app.frontend.source import SourceFile

logger = get_logger("cpg_cache")

CPG_BUILDS = Counter("cpg_builds_total", "CPG builds from source")
CPG_CACHE_HITS = Counter("cpg_cache_hits_total", "CPG loads served from the cache")
CPG_BUILD_DURATION = Histogram("cpg_build_duration_seconds", "Wall time of one CPG build")


def source_hash(files: Sequence[SourceFile], language: str) -> str:
    """sha256 over (path, content) pairs in path order plus the language tag."""
    digest = hashlib.sha256()
    for f in sorted(files, key=lambda f: f.path):
        digest.update(f.path.encode("utf-8"))
        digest.update(b"\0")
        digest.update(f.content.encode("utf-8"))
        digest.update(b"\0")
    digest.update(language.encode("utf-8"))
    return digest.hexdigest()


class CpgCache:
    def __init__(self, root: Path, max_entries: int = 64):
        self.root = Path(root)
        self.max_entries = max_entries
        self.build_count = 0
        self.hit_count = 0
        self._lock = threading.Lock()
        self._key_locks: Dict[str, threading.Lock] = {}
        self._lru: "OrderedDict[str, None]" = OrderedDict()
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            existing = sorted(self.root.glob("*.cpg"), key=lambda p: (p.stat().st_mtime, p.name))
        except OSError as e:
            raise IoError(f"cache root {self.root} is not usable: {e}", detail={"path": str(self.root)})
        for p in existing:
            self._lru[p.stem] = None

    def __len__(self) -> int:
        with self._lock:
            return len(self._lru)

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.cpg"

    def _key_lock(self, key: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(key, threading.Lock())

    def _touch(self, key: str) -> None:
        with self._lock:
            self._lru[key] = None
            self._lru.move_to_end(key)
            while len(self._lru) > self.max_entries:
                victim, _ = self._lru.popitem(last=False)
                lock = self._key_locks.get(victim)
                if lock is not None and not lock.locked():
                    del self._key_locks[victim]
                try:
                    self.path_for(victim).unlink()
                except FileNotFoundError:
                    pass
                logger.info("cpg_cache_evicted", key=victim)

    def _load(self, key: str):
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            return serialize.loads(path.read_text(encoding="utf-8"))
        except (IoError, OSError, ValueError) as e:
            logger.warning("cpg_cache_corrupt", key=key, error=str(e))
            path.unlink(missing_ok=True)
            return None

    def _store(self, key: str, cpg: Cpg) -> None:
        path = self.path_for(key)
        tmp = path.with_suffix(f".tmp-{os.getpid()}-{threading.get_ident()}")
        try:
            tmp.write_text(serialize.dumps(cpg), encoding="utf-8")
            os.replace(tmp, path)
        except OSError as e:
            tmp.unlink(missing_ok=True)
            logger.error("cpg_cache_write_failed", key=key, error=str(e))

    def get_or_build(self, files: Sequence[SourceFile], language: str = "c") -> Tuple[Cpg, bool]:
        """The Cpg for ``files`` and whether it came from the cache. Raises BuildFailed on parse errors."""
        digest = source_hash(files, language)
        key = f"{digest}-{language}"
        with self._key_lock(key):
            cached = self._load(key)
            if cached is not None:
                self.hit_count += 1
                CPG_CACHE_HITS.inc()
                self._touch(key)
                logger.info("cpg_cache_hit", key=key)
                return cached, True

            logger.info("cpg_build_start", key=key, files=len(files))
            started = time.perf_counter()
            parsed = parse_codebase(files)
            if parsed.errors:
                report = build_report(parsed)
                logger.warning("cpg_build_failed", key=key, errors=len(report))
                raise BuildFailed([r.model_dump() for r in report])
            cpg = build_cpg(parsed, language=language, source_hash=digest)
            CPG_BUILD_DURATION.observe(time.perf_counter() - started)
            CPG_BUILDS.inc()
            self.build_count += 1
            self._store(key, cpg)
            self._touch(key)
            return cpg, False
