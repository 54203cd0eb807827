"""
Request/response envelopes of the tool protocol and the parameter model of every tool.
"""
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ToolRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    session_id: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    async_: bool = Field(False, alias="async")


class ToolError(BaseModel):
    code: str
    message: str
    detail: Any = None


class ToolResponse(BaseModel):
    status: Literal["ok", "error", "accepted"]
    result: Any = None
    error: Optional[ToolError] = None
    job_id: Optional[str] = None
    # async create_cpg_session also hands back the session it opened
    session_id: Optional[str] = None
    http_status: int = Field(200, exclude=True)

    def body(self) -> Dict[str, Any]:
        """Only the field that matches the status."""
        if self.status == "ok":
            return {"status": "ok", "result": self.result}
        if self.status == "accepted":
            body = {"status": "accepted", "job_id": self.job_id}
            if self.session_id is not None:
                body["session_id"] = self.session_id
            return body
        return {"status": "error", "error": self.error.model_dump()}


class ToolParams(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PageParams(ToolParams):
    cursor: int = Field(0, ge=0, description="Index of the first item to return")
    limit: Optional[int] = Field(None, ge=1, description="Maximum items per page")


class PointParams(ToolParams):
    file: Optional[str] = Field(None, description="File path or unique basename")
    line: Optional[int] = Field(None, ge=1, description="1-based line")
    node_id: Optional[int] = Field(None, ge=0, description="CPG node id, instead of file and line")

    @model_validator(mode="after")
    def _located(self):
        if self.node_id is None and (self.file is None or self.line is None):
            raise ValueError("either node_id or both file and line are required")
        return self


class CreateSessionParams(ToolParams):
    source: str = Field(..., description="Local directory, or a git URL when allow_git is set")
    language: str = Field("c", description="Source language tag")
    async_build: bool = Field(False, alias="async", description="Build in the background and return a job id")


class EmptyParams(ToolParams):
    pass


class PollJobParams(ToolParams):
    job_id: str


class ListMethodsParams(PageParams):
    pattern: str = Field("*", description="Name glob, '*' wildcard")


class MethodSourceParams(ToolParams):
    name: str
    file: Optional[str] = Field(None, description="Disambiguates methods sharing a name")


class ListCallsParams(PageParams):
    pattern: str = Field("*", description="Callee name glob")
    within: Optional[str] = Field(None, description="Only calls made inside this method")


class SnippetParams(ToolParams):
    file: str
    start_line: int
    end_line: int


class DataDependenciesParams(PointParams):
    direction: Literal["backward", "forward"] = "backward"
    depth: int = Field(1, ge=1)
    variable: Optional[str] = Field(None, description="Restrict the first hop to this variable")


class SliceParams(PointParams):
    direction: Literal["backward"] = "backward"


class TaintSourcesParams(PageParams):
    sources: Optional[List[str]] = Field(None, description="Override the configured source patterns")


class TaintSinksParams(PageParams):
    sinks: Optional[List[str]] = Field(None, description="Override the configured sink patterns")


class TaintFlowsParams(ToolParams):
    sources: Optional[List[str]] = None
    sinks: Optional[List[str]] = None
    max_paths: int = Field(10, ge=1)


class BoundsChecksParams(PointParams):
    pass


class CallGraphParams(ToolParams):
    method: str
    depth: int = Field(2, ge=0)


class ReachabilityParams(ToolParams):
    from_method: str = Field(..., alias="from", description="Calling method name")
    to_method: str = Field(..., alias="to", description="Called method name")


class SearchLiteralsParams(PageParams):
    pattern: str = "*"
    kind: Literal["int", "string", "any"] = "any"


class QueryExpansion(ToolParams):
    edge_kind: str
    direction: str = "forward"
    depth: int = 1


class StructuredQueryParams(ToolParams):
    kind: Optional[str] = Field(None, description="Node kind filter")
    name_glob: Optional[str] = None
    code_contains: Optional[str] = None
    expand: Optional[QueryExpansion] = None
    limit: Optional[int] = None
