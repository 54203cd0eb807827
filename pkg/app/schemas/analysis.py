from typing import Generic, List, Optional, TypeVar

from pydantic import BaseModel, Field

T = TypeVar("T")


class Page(BaseModel, Generic[T]):
    items: List[T]
    total: int
    truncated: bool = False
    next_cursor: Optional[int] = None


class ProgramPoint(BaseModel):
    file: str
    line: int
    node_id: int
    code: str
    method: Optional[str] = None


class SourcePoint(ProgramPoint):
    callee: str
    tainted: List[str] = Field(default_factory=list)


class SinkPoint(ProgramPoint):
    callee: str
    relevant_args: List[int] = Field(default_factory=list)


class TaintStep(BaseModel):
    node_id: int
    file: str
    line: int
    code: str
    variable: Optional[str] = None
    edge_kind: Optional[str] = None
    governors: List[int] = Field(default_factory=list)


class TaintPath(BaseModel):
    source: ProgramPoint
    sink: ProgramPoint
    steps: List[TaintStep]

    @property
    def length(self) -> int:
        return len(self.steps)


class Slice(BaseModel):
    criterion: ProgramPoint
    direction: str = "backward"
    points: List[int]
    lines: List[str]
    code: str


class DataDependency(BaseModel):
    point: ProgramPoint
    variable: str
    hop: int


class BoundsCheck(BaseModel):
    check: ProgramPoint
    relation: str
    operator: str
    variables: List[str]
    dominates_access: bool


class BoundsReport(BaseModel):
    access: ProgramPoint
    variables: List[str]
    checks: List[BoundsCheck]


class CallEdge(BaseModel):
    caller: str
    callee: str
    file: str
    line: int


class CallGraph(BaseModel):
    root: str
    depth: int
    methods: List[str]
    edges: List[CallEdge]


class Reachability(BaseModel):
    source: str
    target: str
    reachable: bool
    path: List[str] = Field(default_factory=list)


class MethodInfo(BaseModel):
    name: str
    file: str
    start_line: int
    end_line: int
    param_count: int
    node_id: int


class MethodSource(BaseModel):
    name: str
    file: str
    start_line: int
    end_line: int
    source: str
    numbered: str


class CallSite(BaseModel):
    caller: str
    callee: str
    file: str
    line: int
    arguments: List[str]
    node_id: int
    resolved: bool


class Snippet(BaseModel):
    file: str
    start_line: int
    end_line: int
    text: str


class LiteralHit(BaseModel):
    value: str
    kind: str
    file: str
    line: int
    node_id: int


class CodebaseSummary(BaseModel):
    files: int
    methods: int
    call_sites: int
    loc: int
    external_callees: List[str]
    parse_errors: int = 0
    warnings: int = 0


class QueryNode(BaseModel):
    id: int
    kind: str
    name: Optional[str] = None
    code: str
    file: str
    line: int
    method: Optional[str] = None


class QueryResult(BaseModel):
    items: List[QueryNode]
    total: int
    truncated: bool
