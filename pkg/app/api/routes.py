"""
HTTP surface of the tool protocol: invoke tools, read the manifest and poll jobs.
"""
import asyncio
from typing import Any, Dict, Optional

from fastapi import APIRouter, Body, Request
from fastapi.responses import Response
from pydantic import ValidationError

from app.core.encoding import encode
from app.core.errors import CodeBadgerError, ValidationFailed
from app.schemas.tools import ToolError, ToolRequest, ToolResponse
from app.services.tools import ToolService

router = APIRouter()


class CompactJSONResponse(Response):
    media_type = "application/json"

    def render(self, content: Any) -> bytes:
        return encode(content).encode("utf-8")


def get_service(request: Request) -> ToolService:
    return request.app.state.tools


def _respond(response: ToolResponse) -> CompactJSONResponse:
    return CompactJSONResponse(response.body(), status_code=response.http_status)


@router.get("/tools")
async def list_tools(request: Request):
    """Manifest: every tool with its parameter schema."""
    return CompactJSONResponse({"tools": get_service(request).manifest()})


@router.post("/tools/{name}")
async def invoke_tool(name: str, request: Request, body: Optional[Dict[str, Any]] = Body(default=None)):
    service = get_service(request)
    try:
        tool_request = ToolRequest.model_validate(body or {})
    except ValidationError as e:
        problems = [{"key": ".".join(str(x) for x in err["loc"]), "message": err["msg"]} for err in e.errors()]
        error = ValidationFailed("malformed request body", detail=problems)
        return _respond(ToolResponse(status="error", error=ToolError(**error.to_dict()), http_status=error.http_status))
    response = await asyncio.to_thread(service.dispatch, name, tool_request)
    return _respond(response)


@router.get("/jobs/{job_id}")
async def poll_job(job_id: str, request: Request):
    service = get_service(request)
    try:
        job = service.sessions.jobs.get(job_id)
    except CodeBadgerError as e:
        return _respond(ToolResponse(status="error", error=ToolError(**e.to_dict()), http_status=e.http_status))
    return CompactJSONResponse(job)
