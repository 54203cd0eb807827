"""
The tool registry: every analysis and session operation under its protocol name, with a
parameter model, a handler and the error mapping shared by the HTTP API, jobs and the CLI.
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Type

from prometheus_client import Counter
from pydantic import ValidationError

from app.analyses import bounds, callgraph, dataflow, navigation, query, slicing, taint
from app.analyses.points import point_of, resolve_point
from app.core.config import Settings
from app.core.encoding import encoded_size, to_jsonable
from app.core.errors import CodeBadgerError, ResponseTooLarge, UnknownTool, ValidationFailed
from app.core.logging_config import get_logger
from app.cpg.graph import Cpg
from app.schemas import tools as p
from app.schemas.analysis import Page
from app.schemas.tools import ToolError, ToolRequest, ToolResponse
from app.services.session_manager import SessionManager

logger = get_logger("tools")

TOOL_CALLS = Counter("tool_calls_total", "Tool invocations", ["tool", "status"])


@dataclass(frozen=True)
class Tool:
    name: str
    description: str
    params: Type[p.ToolParams]
    handler: Callable[..., Any]
    needs_session: bool = True
    listing: bool = False

    def manifest_entry(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "requires_session": self.needs_session,
            "params": self.params.model_json_schema(by_alias=True),
        }


TOOLS: Dict[str, Tool] = {}


def tool(name: str, params: Type[p.ToolParams], description: str, needs_session: bool = True, listing: bool = False):
    def register(fn):
        TOOLS[name] = Tool(name, description, params, fn, needs_session, listing)
        return fn
    return register


def _page(items: List[Any], params: p.PageParams, default_limit: int) -> Page:
    limit = params.limit or default_limit
    window = items[params.cursor:params.cursor + limit]
    end = params.cursor + len(window)
    truncated = end < len(items)
    return Page(items=window, total=len(items), truncated=truncated, next_cursor=end if truncated else None)


def _point(cpg: Cpg, params: p.PointParams):
    return resolve_point(cpg, file=params.file, line=params.line, node_id=params.node_id)


# --- session tools ---

@tool("create_cpg_session", p.CreateSessionParams, "Build or load the CPG of a source tree and open a session", needs_session=False)
def _create_session(svc: "ToolService", session_id, params: p.CreateSessionParams):
    return svc.sessions.create(params.source, params.language, params.async_build).summary()


@tool("close_session", p.EmptyParams, "Close a session; its cache entry is kept")
def _close_session(svc: "ToolService", session_id, params):
    return svc.sessions.close(session_id)


@tool("poll_job", p.PollJobParams, "State of an asynchronous job, with its result once done", needs_session=False)
def _poll_job(svc: "ToolService", session_id, params: p.PollJobParams):
    return svc.sessions.jobs.get(params.job_id)


# --- analysis tools ---

@tool("get_codebase_summary", p.EmptyParams, "File, method, call-site and line counts")
def _summary(svc, cpg: Cpg, params):
    return navigation.get_codebase_summary(cpg)


@tool("list_methods", p.ListMethodsParams, "Methods whose name matches a glob", listing=True)
def _list_methods(svc, cpg: Cpg, params: p.ListMethodsParams):
    return _page(navigation.list_methods(cpg, params.pattern), params, svc.settings.query_limit)


@tool("get_method_source", p.MethodSourceParams, "Exact source of a method, plain and line-numbered")
def _method_source(svc, cpg: Cpg, params: p.MethodSourceParams):
    return navigation.get_method_source(cpg, params.name, params.file)


@tool("list_calls", p.ListCallsParams, "Call sites whose callee matches a glob", listing=True)
def _list_calls(svc, cpg: Cpg, params: p.ListCallsParams):
    return _page(navigation.list_calls(cpg, params.pattern, params.within), params, svc.settings.query_limit)


@tool("get_code_snippet", p.SnippetParams, "Verbatim lines of a file")
def _snippet(svc, cpg: Cpg, params: p.SnippetParams):
    return navigation.get_code_snippet(cpg, params.file, params.start_line, params.end_line)


@tool("get_data_dependencies", p.DataDependenciesParams, "Reaching-definition neighbours of a point up to a depth")
def _data_dependencies(svc, cpg: Cpg, params: p.DataDependenciesParams):
    point = _point(cpg, params)
    deps = dataflow.get_data_dependencies(cpg, point, params.direction, params.depth, params.variable)
    return {
        "point": point_of(cpg, point),
        "direction": params.direction,
        "depth": params.depth,
        "dependencies": deps,
    }


@tool("get_program_slice", p.SliceParams, "Backward slice over data and control dependence")
def _slice(svc, cpg: Cpg, params: p.SliceParams):
    return slicing.get_program_slice(cpg, _point(cpg, params))


@tool("find_taint_sources", p.TaintSourcesParams, "Calls matching the source patterns", listing=True)
def _sources(svc, cpg: Cpg, params: p.TaintSourcesParams):
    config = taint.SourceSinkConfig.from_settings(svc.settings, sources=params.sources)
    return _page(taint.find_taint_sources(cpg, config), params, svc.settings.query_limit)


@tool("find_taint_sinks", p.TaintSinksParams, "Calls matching the sink patterns, with relevant argument positions", listing=True)
def _sinks(svc, cpg: Cpg, params: p.TaintSinksParams):
    config = taint.SourceSinkConfig.from_settings(svc.settings, sinks=params.sinks)
    return _page(taint.find_taint_sinks(cpg, config), params, svc.settings.query_limit)


@tool("find_taint_flows", p.TaintFlowsParams, "Shortest source-to-sink data-flow witnesses")
def _flows(svc, cpg: Cpg, params: p.TaintFlowsParams):
    config = taint.SourceSinkConfig.from_settings(svc.settings, sources=params.sources, sinks=params.sinks)
    paths = taint.find_taint_flows(cpg, config, params.max_paths)
    return {"paths": paths, "total": len(paths), "truncated": False}


@tool("find_bounds_checks", p.BoundsChecksParams, "Comparisons bounding an index or size, and whether they precede the access")
def _bounds(svc, cpg: Cpg, params: p.BoundsChecksParams):
    return bounds.find_bounds_checks(cpg, _point(cpg, params), svc.settings.size_arguments)


@tool("get_call_graph", p.CallGraphParams, "Calls reachable from a method up to a depth")
def _call_graph(svc, cpg: Cpg, params: p.CallGraphParams):
    return callgraph.get_call_graph(cpg, params.method, params.depth)


@tool("check_reachability", p.ReachabilityParams, "Whether one method can reach another through calls")
def _reachability(svc, cpg: Cpg, params: p.ReachabilityParams):
    return callgraph.check_reachability(cpg, params.from_method, params.to_method)


@tool("search_literals", p.SearchLiteralsParams, "Integer and string literals matching a glob", listing=True)
def _literals(svc, cpg: Cpg, params: p.SearchLiteralsParams):
    return _page(navigation.search_literals(cpg, params.pattern, params.kind), params, svc.settings.query_limit)


@tool("run_structured_query", p.StructuredQueryParams, "Filter nodes by kind, name and code, then expand along one edge kind")
def _structured_query(svc, cpg: Cpg, params: p.StructuredQueryParams):
    return query.run_structured_query(cpg, params.model_dump(exclude_none=True), svc.settings.query_limit)


_SESSION_TOOLS = {"create_cpg_session", "close_session", "poll_job"}


class ToolService:
    def __init__(self, settings: Settings, sessions: Optional[SessionManager] = None):
        self.settings = settings
        self.sessions = sessions or SessionManager(settings)

    def manifest(self) -> List[Dict[str, Any]]:
        return [t.manifest_entry() for t in TOOLS.values()]

    def get_tool(self, name: str) -> Tool:
        found = TOOLS.get(name)
        if found is None:
            raise UnknownTool(f"unknown tool {name}", detail={"tool": name, "known": sorted(TOOLS)})
        return found

    def validate(self, name: str, session_id: Optional[str], params: Optional[Dict[str, Any]]):
        t = self.get_tool(name)
        if t.needs_session and not session_id:
            raise ValidationFailed(
                f"{name} requires session_id",
                detail=[{"key": "session_id", "message": "Field required"}],
            )
        try:
            parsed = t.params.model_validate(params or {})
        except ValidationError as e:
            problems = [
                {"key": ".".join(str(x) for x in err["loc"]) or "params", "message": err["msg"]}
                for err in e.errors()
            ]
            raise ValidationFailed(f"invalid parameters for {name}", detail=problems)
        return t, parsed

    def run(self, t: Tool, session_id: Optional[str], params: p.ToolParams) -> Any:
        if t.name in _SESSION_TOOLS:
            result = t.handler(self, session_id, params)
        else:
            result = t.handler(self, self.sessions.cpg(session_id), params)
        return self._guard(t, params, to_jsonable(result))

    def call(self, name: str, session_id: Optional[str] = None, params: Optional[Dict[str, Any]] = None) -> Any:
        """Validate and run synchronously; raises CodeBadgerError."""
        t, parsed = self.validate(name, session_id, params)
        return self.run(t, session_id, parsed)

    def _guard(self, t: Tool, params: p.ToolParams, result: Any) -> Any:
        limit = self.settings.max_response_bytes
        if encoded_size(result) <= limit:
            return result
        if t.listing:
            return _shrink(result, "items", limit, cursor=params.cursor)
        if t.name == "find_taint_flows":
            return _shrink(result, "paths", limit)
        raise ResponseTooLarge(
            f"{t.name} result exceeds {limit} bytes",
            detail={"bytes": encoded_size(result), "limit": limit},
        )

    def dispatch(self, name: str, request: ToolRequest) -> ToolResponse:
        try:
            params = dict(request.params)
            if name == "create_cpg_session" and request.async_:
                params["async"] = True
            t, parsed = self.validate(name, request.session_id, params)
            if request.async_ and name not in _SESSION_TOOLS:
                self.sessions.get(request.session_id)
                job = self.sessions.jobs.submit(
                    name,
                    lambda: self.run(t, request.session_id, parsed),
                    session_id=request.session_id,
                    params=params,
                )
                TOOL_CALLS.labels(tool=name, status="accepted").inc()
                return ToolResponse(status="accepted", job_id=job.job_id, http_status=202)
            result = self.run(t, request.session_id, parsed)
            if name == "create_cpg_session" and result["status"] == "building":
                TOOL_CALLS.labels(tool=name, status="accepted").inc()
                return ToolResponse(
                    status="accepted", job_id=result["job_id"], session_id=result["session_id"], http_status=202,
                )
            TOOL_CALLS.labels(tool=name, status="ok").inc()
            return ToolResponse(status="ok", result=result)
        except CodeBadgerError as e:
            TOOL_CALLS.labels(tool=name, status="error").inc()
            logger.info("tool_error", tool=name, code=e.code, error=e.message)
            return ToolResponse(status="error", error=ToolError(**e.to_dict()), http_status=e.http_status)
        except Exception as e:
            TOOL_CALLS.labels(tool=name, status="error").inc()
            logger.error("tool_crashed", tool=name, error=str(e), exc_info=True)
            return ToolResponse(
                status="error",
                error=ToolError(code="internal_error", message=str(e)),
                http_status=500,
            )


def _shrink(result: Dict[str, Any], key: str, limit: int, cursor: int = 0) -> Dict[str, Any]:
    """Largest non-empty prefix of ``result[key]`` whose encoding fits in ``limit`` bytes."""
    items = result[key]
    lo, hi = 0, len(items)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        trial = {**result, key: items[:mid], "truncated": True}
        if key == "items":
            trial["next_cursor"] = cursor + mid
        if encoded_size(trial) <= limit:
            lo = mid
        else:
            hi = mid - 1
    if lo == 0 and items:
        # a page with no items would leave next_cursor where it was
        raise ResponseTooLarge(
            f"one entry of {key} exceeds {limit} bytes",
            detail={"bytes": encoded_size({**result, key: items[:1]}), "limit": limit, "cursor": cursor},
        )
    out = {**result, key: items[:lo], "truncated": True}
    if key == "items":
        out["next_cursor"] = cursor + lo
    return out
