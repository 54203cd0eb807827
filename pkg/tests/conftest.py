import pytest
import pytest_asyncio
from httpx import ASGITransport, AsyncClient

from app.core.config import load_settings
from app.corpus.acceptance import corpus_path
from app.cpg.builder import build_cpg_from_files
from app.frontend.source import SourceFile
from app.main import create_app
from app.services.session_manager import SessionManager
from app.services.tools import ToolService

# Relying on pytest-asyncio 'auto' mode from pytest.ini; no custom event loop fixture.

TOY_ROOT = corpus_path("toy")
BOUNDS_VULN_ROOT = corpus_path("bounds/vuln")
BOUNDS_PATCHED_ROOT = corpus_path("bounds/patched")
PROGRAMS_ROOT = corpus_path("programs")
LARGE_ROOT = corpus_path("large")


def make_cpg(text: str, name: str = "t.c"):
    """Cpg of a single in-memory file."""
    return build_cpg_from_files([SourceFile(path=name, content=text)])


def program_cpg(name: str):
    path = PROGRAMS_ROOT / name
    return build_cpg_from_files([SourceFile(path=path.name, content=path.read_text(encoding="utf-8"))])


def line_of(cpg, file: str, line: int):
    """The statement the tools resolve for file:line."""
    from app.analyses.points import resolve_point

    return resolve_point(cpg, file=file, line=line)


# 1. Settings isolated per test: cache and clone dirs live under tmp_path
@pytest.fixture
def settings(tmp_path, monkeypatch):
    monkeypatch.delenv("CODEBADGER_CONFIG", raising=False)
    monkeypatch.chdir(tmp_path)
    return load_settings(
        cache_root=tmp_path / "cache",
        git_workdir=tmp_path / "repos",
        log_level="WARNING",
        worker_count=2,
    )


# 2. Tool service with its own session manager and job pool
@pytest.fixture
def service(settings):
    svc = ToolService(settings, SessionManager(settings))
    yield svc
    svc.sessions.shutdown()


# 3. A ready session over the toy program
@pytest.fixture
def toy_session(service):
    return service.sessions.create(str(TOY_ROOT)).session_id


@pytest.fixture(scope="session")
def toy_cpg():
    from app.frontend.source import load_sources

    return build_cpg_from_files(load_sources(TOY_ROOT))


# 4. HTTP client against the ASGI app, no network
@pytest_asyncio.fixture
async def async_client(settings):
    app = create_app(settings)
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac
    app.state.tools.sessions.shutdown()
