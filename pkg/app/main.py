import socket
import sys
from typing import Optional

import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import Response
from prometheus_client import CONTENT_TYPE_LATEST, REGISTRY, CollectorRegistry, generate_latest
from prometheus_fastapi_instrumentator import Instrumentator

from app.api.routes import CompactJSONResponse, router as api_router
from app.core.config import Settings, get_settings, load_settings
from app.core.errors import CodeBadgerError
from app.core.logging_config import get_logger, setup_logging
from app.services.session_manager import SessionManager
from app.services.tools import ToolService

logger = get_logger("main")


def create_app(settings: Optional[Settings] = None, service: Optional[ToolService] = None) -> FastAPI:
    settings = settings or get_settings()
    app = FastAPI(title=settings.project_name)
    app.state.settings = settings
    app.state.tools = service or ToolService(settings, SessionManager(settings))

    # HTTP metrics get a registry per app; engine counters live on the default one
    http_registry = CollectorRegistry()
    Instrumentator(registry=http_registry).instrument(app)

    @app.get("/metrics", include_in_schema=False)
    async def metrics():
        body = generate_latest(REGISTRY) + generate_latest(http_registry)
        return Response(body, media_type=CONTENT_TYPE_LATEST)

    @app.get("/health")
    async def health_check(request: Request):
        tools: ToolService = request.app.state.tools
        return CompactJSONResponse({
            "status": "ok",
            "sessions": tools.sessions.counts(),
            "jobs": tools.sessions.jobs.counts(),
            "cache_entries": len(tools.sessions.cache),
            "cpg_builds": tools.sessions.cache.build_count,
        })

    @app.on_event("shutdown")
    async def shutdown_event():
        app.state.tools.sessions.shutdown()
        logger.info("shutdown")

    app.include_router(api_router)
    return app


def _port_free(host: str, port: int) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            s.bind((host, port))
        except OSError:
            return False
    return True


def serve(config_path: Optional[str] = None, **overrides) -> int:
    """Run the tool server until interrupted; returns a process exit code."""
    try:
        settings = load_settings(config_path, **overrides)
    except CodeBadgerError as e:
        print(f"codebadger: {e.message}", file=sys.stderr)
        return 2
    setup_logging(settings.log_level, settings.log_format)
    if not _port_free(settings.host, settings.port):
        logger.error("port_unavailable", host=settings.host, port=settings.port)
        print(f"codebadger: {settings.host}:{settings.port} is already in use", file=sys.stderr)
        return 1
    logger.info("startup", host=settings.host, port=settings.port, cache_root=str(settings.cache_root))
    uvicorn.run(create_app(settings), host=settings.host, port=settings.port, log_config=None)
    return 0
