import threading
from concurrent.futures import ThreadPoolExecutor

import pytest

from app.core.config import load_settings
from app.core.logging_config import MAX_FIELD_CHARS, clip_long_values
from app.core.errors import (
    BuildFailed,
    CodeBadgerError,
    ConfigError,
    IoError,
    SessionNotReady,
    UnknownJob,
    UnknownSession,
    ValidationFailed,
)
from app.corpus.acceptance import wait_for_job
from app.frontend.source import load_sources
from app.services.cache import CpgCache, source_hash
from app.services.jobs import JobQueue, JobState
from app.services.session_manager import Session, SessionManager, SessionStatus, is_git_url

from conftest import BOUNDS_VULN_ROOT, TOY_ROOT


@pytest.fixture
def manager(settings):
    m = SessionManager(settings)
    yield m
    m.shutdown()


@pytest.fixture
def broken_tree(tmp_path):
    root = tmp_path / "broken"
    root.mkdir()
    (root / "ok.c").write_text("int ok() {\n    return 0;\n}\n")
    (root / "bad.c").write_text("int bad( {\n")
    return root


# --- sessions ---

def test_create_builds_then_reuses_the_cache(settings):
    first = SessionManager(settings)
    second = SessionManager(settings)
    try:
        a = first.create(str(TOY_ROOT))
        b = second.create(str(TOY_ROOT))
        assert a.status == SessionStatus.READY and a.cache_hit is False
        assert b.cache_hit is True
        assert a.source_hash == b.source_hash
        assert (first.cache.build_count, second.cache.build_count) == (1, 0)
        assert len(first.cpg(a.session_id)) == len(second.cpg(b.session_id))
    finally:
        first.shutdown()
        second.shutdown()


def test_sessions_are_independent(manager):
    a = manager.create(str(TOY_ROOT))
    b = manager.create(str(BOUNDS_VULN_ROOT))
    assert a.session_id != b.session_id
    manager.close(a.session_id)
    with pytest.raises(UnknownSession):
        manager.cpg(a.session_id)
    assert manager.cpg(b.session_id).resolve_file("strip.c") == "strip.c"
    with pytest.raises(UnknownSession):
        manager.close(a.session_id)


def test_summary_shape(manager):
    summary = manager.create(str(TOY_ROOT)).summary()
    assert summary["status"] == "ready"
    assert summary["language"] == "c"
    assert summary["cache_hit"] is False
    assert "job_id" not in summary


def test_failed_sync_build_leaves_no_session(manager, broken_tree):
    with pytest.raises(BuildFailed) as exc:
        manager.create(str(broken_tree))
    assert [r["file"] for r in exc.value.report] == ["bad.c"]
    assert exc.value.report[0]["code"] == "parse_error"
    assert manager.counts() == {"building": 0, "ready": 0, "failed": 0}


def test_async_create_reports_through_the_job(manager):
    session = manager.create(str(TOY_ROOT), async_build=True)
    assert session.job_id is not None
    job = wait_for_job(manager.jobs, session.job_id)
    assert job.state == JobState.DONE
    assert job.result["status"] == "ready"
    assert manager.get(session.session_id).status == SessionStatus.READY


def test_async_build_failure_marks_session_failed(manager, broken_tree):
    session = manager.create(str(broken_tree), async_build=True)
    job = wait_for_job(manager.jobs, session.job_id)
    assert job.state == JobState.FAILED
    assert job.error["code"] == "build_failed"
    with pytest.raises(BuildFailed):
        manager.cpg(session.session_id)


def test_building_session_is_not_ready(manager):
    session = Session(session_id="pending", source_root=str(TOY_ROOT), job_id="j1")
    manager._sessions[session.session_id] = session
    manager._last_used[session.session_id] = float("inf")
    with pytest.raises(SessionNotReady):
        manager.cpg("pending")


def test_closing_a_session_while_it_builds(manager, monkeypatch):
    gate = threading.Event()
    real_build = manager.cache.get_or_build

    def held_build(files, language="c"):
        assert gate.wait(5)
        return real_build(files, language)

    monkeypatch.setattr(manager.cache, "get_or_build", held_build)
    session = manager.create(str(TOY_ROOT), async_build=True)
    manager.close(session.session_id)
    gate.set()
    job = wait_for_job(manager.jobs, session.job_id)
    assert job.state == JobState.FAILED
    assert job.error["code"] == "unknown_session"
    assert manager._cpgs == {}
    with pytest.raises(UnknownSession):
        manager.get(session.session_id)


def test_racing_creates_build_once(manager):
    with ThreadPoolExecutor(max_workers=4) as pool:
        sessions = list(pool.map(lambda _: manager.create(str(TOY_ROOT)), range(4)))
    assert manager.cache.build_count == 1
    assert manager.cache.hit_count == 3
    assert len({s.session_id for s in sessions}) == 4
    assert sorted(s.cache_hit for s in sessions) == [False, True, True, True]


def test_jobs_on_one_session_run_side_by_side(manager):
    sid = manager.create(str(TOY_ROOT)).session_id
    both_running = threading.Barrier(2, timeout=5)

    def analysis():
        both_running.wait()
        return len(manager.cpg(sid))

    jobs = [manager.jobs.submit("get_codebase_summary", analysis, session_id=sid) for _ in range(2)]
    finished = [wait_for_job(manager.jobs, j.job_id) for j in jobs]
    assert [j.state for j in finished] == [JobState.DONE, JobState.DONE]
    assert finished[0].result == finished[1].result > 0


def test_idle_sessions_expire(manager):
    session = manager.create(str(TOY_ROOT))
    manager._last_used[session.session_id] -= manager.settings.session_ttl_seconds + 1
    with pytest.raises(UnknownSession):
        manager.get(session.session_id)


def test_source_errors(manager, tmp_path):
    with pytest.raises(IoError):
        manager.create(str(tmp_path / "missing"))
    with pytest.raises(ValidationFailed):
        manager.create(str(TOY_ROOT), language="rust")


def test_git_sources_need_opt_in(manager):
    assert is_git_url("https://example.com/project.git")
    assert not is_git_url(str(TOY_ROOT))
    with pytest.raises(ConfigError):
        manager.create("https://example.com/project.git")


# --- cache ---

def test_source_hash_depends_on_content_and_language():
    files = load_sources(TOY_ROOT)
    assert source_hash(files, "c") == source_hash(list(reversed(files)), "c")
    assert source_hash(files, "c") != source_hash(files, "cpp")


def test_corrupt_cache_entry_is_rebuilt(tmp_path):
    files = load_sources(TOY_ROOT)
    cache = CpgCache(tmp_path / "cache")
    cache.get_or_build(files)
    entry = cache.path_for(f"{source_hash(files, 'c')}-c")
    entry.write_text("garbage", encoding="utf-8")

    fresh = CpgCache(tmp_path / "cache")
    cpg, hit = fresh.get_or_build(files)
    assert not hit and fresh.build_count == 1
    assert cpg.verify_indexes() == []


def test_cache_evicts_least_recently_used(tmp_path):
    cache = CpgCache(tmp_path / "cache", max_entries=1)
    toy = load_sources(TOY_ROOT)
    strip = load_sources(BOUNDS_VULN_ROOT)
    cache.get_or_build(toy)
    cache.get_or_build(strip)
    assert len(cache) == 1
    assert not cache.path_for(f"{source_hash(toy, 'c')}-c").exists()
    assert cache.path_for(f"{source_hash(strip, 'c')}-c").exists()
    assert set(cache._key_locks) == {f"{source_hash(strip, 'c')}-c"}


# --- jobs ---

def test_job_lifecycle():
    queue = JobQueue(workers=1)
    try:
        done = wait_for_job(queue, queue.submit("t", lambda: {"answer": 42}).job_id)
        assert done.state == JobState.DONE and done.result == {"answer": 42}
        assert done.started_at <= done.finished_at

        def boom():
            raise CodeBadgerError("analysis blew up")

        failed = wait_for_job(queue, queue.submit("t", boom).job_id)
        assert failed.state == JobState.FAILED
        assert failed.error["code"] == "internal_error" and failed.error["message"] == "analysis blew up"

        crashed = wait_for_job(queue, queue.submit("t", lambda: 1 / 0).job_id)
        assert crashed.state == JobState.FAILED and crashed.error["code"] == "internal_error"

        with pytest.raises(RuntimeError):
            queue._transition(done.job_id, JobState.RUNNING)
        assert queue.counts()["done"] == 1
    finally:
        queue.shutdown()


def test_unknown_job():
    queue = JobQueue(workers=1)
    with pytest.raises(UnknownJob):
        queue.get("nope")
    queue.shutdown()


def test_finished_jobs_expire():
    queue = JobQueue(workers=1, ttl_seconds=0)
    job = queue.submit("t", lambda: None)
    queue.shutdown(wait=True)
    with pytest.raises(UnknownJob):
        queue.get(job.job_id)


# --- configuration ---

def test_config_file_env_and_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("CODEBADGER_CONFIG", raising=False)
    config = tmp_path / "codebadger.yaml"
    config.write_text("port: 9100\nquery_limit: 7\nsinks: [system]\n")
    monkeypatch.setenv("CODEBADGER_QUERY_LIMIT", "9")

    settings = load_settings(str(config))
    assert settings.port == 9100
    assert settings.query_limit == 9
    assert settings.sinks == ["system"]
    assert load_settings(str(config), port=9200).port == 9200


def test_default_config_file_in_working_directory(tmp_path, monkeypatch):
    monkeypatch.delenv("CODEBADGER_CONFIG", raising=False)
    monkeypatch.chdir(tmp_path)
    (tmp_path / "codebadger.yaml").write_text("worker_count: 3\n")
    assert load_settings().worker_count == 3


@pytest.mark.parametrize("text", ["colour: blue\n", "port: 70000\n", "sinks: []\n", "log_format: xml\n", "- just\n- a list\n"])
def test_bad_config_is_a_config_error(tmp_path, monkeypatch, text):
    monkeypatch.delenv("CODEBADGER_CONFIG", raising=False)
    config = tmp_path / "bad.yaml"
    config.write_text(text)
    with pytest.raises(ConfigError):
        load_settings(str(config))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(str(tmp_path / "absent.yaml"))


def test_long_log_fields_are_clipped():
    event = clip_long_values(None, "info", {"event": "x" * 500, "source": "y" * 500, "files": 3})
    assert event["event"] == "x" * 500
    assert event["source"].startswith("y" * MAX_FIELD_CHARS)
    assert event["source"].endswith(f"...(+{500 - MAX_FIELD_CHARS})")
    assert event["files"] == 3
