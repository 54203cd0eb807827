"""
Source/sink discovery and forward taint propagation over data-dependence edges.

Propagation runs breadth-first from each source statement along REACHING_DEF edges,
parameter bindings and return bindings. Visited states are (node, variable) pairs so cyclic
dependence graphs terminate. A sink is hit when the variable arriving at the sink's
statement feeds one of the sink call's relevant arguments.
"""
from collections import deque
from typing import Dict, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, Field, field_validator

from app.analyses.points import point_of
from app.core.config import DEFAULT_SINK_ARGUMENTS, DEFAULT_SINKS, DEFAULT_SOURCES
from app.core.errors import ConfigError
from app.core.logging_config import get_logger
from app.core.patterns import any_match, glob_match
from app.cpg.graph import Cpg
from app.cpg.models import Binding, CpgEdge, CpgNode, EdgeKind, NodeKind
from app.schemas.analysis import SinkPoint, SourcePoint, TaintPath, TaintStep

logger = get_logger("analyses.taint")


class SourceSinkConfig(BaseModel):
    sources: List[str] = Field(default_factory=lambda: list(DEFAULT_SOURCES))
    sinks: List[str] = Field(default_factory=lambda: list(DEFAULT_SINKS))
    sink_arguments: Dict[str, List[int]] = Field(default_factory=lambda: dict(DEFAULT_SINK_ARGUMENTS))

    @field_validator("sources", "sinks")
    @classmethod
    def _non_empty(cls, v: List[str], info):
        if not v or any(not p for p in v):
            raise ConfigError(f"{info.field_name} must be a non-empty list of patterns", detail={"key": info.field_name})
        return v

    @classmethod
    def from_settings(cls, settings, sources=None, sinks=None) -> "SourceSinkConfig":
        return cls(
            sources=list(sources) if sources is not None else list(settings.sources),
            sinks=list(sinks) if sinks is not None else list(settings.sinks),
            sink_arguments=dict(settings.sink_arguments),
        )

    def relevant_args(self, callee: str, arg_count: int) -> List[int]:
        for pattern, positions in self.sink_arguments.items():
            if glob_match(pattern, callee):
                return [p for p in positions if 0 <= p < arg_count]
        return list(range(arg_count))


def _matching_calls(cpg: Cpg, patterns: Sequence[str]) -> List[CpgNode]:
    calls = [c for c in cpg.nodes_of_kind(NodeKind.CALL) if any_match(patterns, c.name)]
    return sorted(calls, key=lambda c: (c.file, c.line, c.col, c.id))


def _sink_point(cpg: Cpg, call: CpgNode, config: SourceSinkConfig) -> SinkPoint:
    stmt = cpg.statement_of(call.id)
    base = point_of(cpg, stmt)
    relevant = config.relevant_args(call.name, len(cpg.arguments(call.id)))
    return SinkPoint(**base.model_dump(), callee=call.name, relevant_args=relevant)


def find_taint_sources(cpg: Cpg, config: SourceSinkConfig) -> List[SourcePoint]:
    out = []
    for call in _matching_calls(cpg, config.sources):
        stmt = cpg.statement_of(call.id)
        tainted = [
            a.name for a in cpg.arguments(call.id)
            if a.kind == NodeKind.IDENTIFIER and a.name in stmt.weak_defines
        ]
        tainted += [v for v in stmt.defines if v not in tainted]
        base = point_of(cpg, stmt)
        out.append(SourcePoint(**base.model_dump(), callee=call.name, tainted=tainted))
    return out


def find_taint_sinks(cpg: Cpg, config: SourceSinkConfig) -> List[SinkPoint]:
    return [_sink_point(cpg, call, config) for call in _matching_calls(cpg, config.sinks)]


class _SinkSite:
    """What reaching a sink call's statement must carry to count as a hit."""

    def __init__(self, cpg: Cpg, call: CpgNode, config: SourceSinkConfig):
        self.call = call
        self.point = _sink_point(cpg, call, config)
        args = cpg.arguments(call.id)
        self.variables: Set[str] = set()
        self.nested_calls: List[CpgNode] = []
        for pos in self.point.relevant_args:
            for n in cpg.subtree(args[pos].id):
                if n.kind == NodeKind.IDENTIFIER:
                    self.variables.add(n.name)
                elif n.kind == NodeKind.CALL:
                    self.nested_calls.append(n)
        self.callees = {cpg.callee_of(c.id) for c in self.nested_calls} - {None}

    def hit_by(self, cpg: Cpg, edge: Optional[CpgEdge]) -> bool:
        if edge is None:
            return False
        if edge.binding == Binding.RETURN:
            return cpg.node(edge.src).method_id in self.callees
        return edge.variable in self.variables


def _governors(cpg: Cpg, node_id: int) -> List[int]:
    return sorted({e.src for e in cpg.in_edges(node_id, EdgeKind.CDG)})


def _step(cpg: Cpg, node_id: int, edge: Optional[CpgEdge]) -> TaintStep:
    n = cpg.node(node_id)
    return TaintStep(
        node_id=n.id, file=n.file, line=n.line, code=n.code,
        variable=edge.variable if edge else None,
        edge_kind=edge.flow_kind if edge else None,
        governors=_governors(cpg, n.id),
    )


State = Tuple[int, Optional[str]]


def _flows_from(cpg: Cpg, source_stmt: CpgNode, source_calls: List[CpgNode], sites: Dict[int, List[_SinkSite]]):
    """Shortest witness from one source statement to every sink call it reaches."""
    found: Dict[int, List[TaintStep]] = {}

    # a source call nested directly in a sink's relevant argument
    for site in sites.get(source_stmt.id, []):
        if any(c.id in {n.id for n in site.nested_calls} for c in source_calls):
            found[site.call.id] = [_step(cpg, source_stmt.id, None)]

    start: State = (source_stmt.id, None)
    parent: Dict[State, Tuple[Optional[State], Optional[CpgEdge]]] = {start: (None, None)}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for e in cpg.out_edges(state[0], EdgeKind.REACHING_DEF):
            # hits are checked per edge; visited states only bound the search
            for site in sites.get(e.dst, []):
                if site.call.id not in found and site.hit_by(cpg, e):
                    found[site.call.id] = _rebuild(cpg, parent, state) + [_step(cpg, e.dst, e)]
            nxt = (e.dst, e.variable)
            if nxt not in parent:
                parent[nxt] = (state, e)
                queue.append(nxt)
    return found


def _rebuild(cpg: Cpg, parent, state: State) -> List[TaintStep]:
    steps = []
    current: Optional[State] = state
    while current is not None:
        prev, edge = parent[current]
        steps.append(_step(cpg, current[0], edge))
        current = prev
    steps.reverse()
    return steps


def find_taint_flows(cpg: Cpg, config: SourceSinkConfig, max_paths: int = 10) -> List[TaintPath]:
    """At most ``max_paths`` witnesses, shortest first, then by source and sink position."""
    if max_paths < 1:
        raise ConfigError("max_paths must be at least 1", detail={"key": "max_paths"})

    sites: Dict[int, List[_SinkSite]] = {}
    site_of: Dict[int, _SinkSite] = {}
    for call in _matching_calls(cpg, config.sinks):
        site_of[call.id] = _SinkSite(cpg, call, config)
        sites.setdefault(call.statement_id, []).append(site_of[call.id])

    by_statement: Dict[int, List[CpgNode]] = {}
    for call in _matching_calls(cpg, config.sources):
        by_statement.setdefault(call.statement_id, []).append(call)

    paths = []
    for stmt_id, calls in by_statement.items():
        stmt = cpg.node(stmt_id)
        source_point = point_of(cpg, stmt)
        for sink_call_id, steps in _flows_from(cpg, stmt, calls, sites).items():
            sink_point = point_of(cpg, cpg.node(site_of[sink_call_id].call.statement_id))
            paths.append(TaintPath(source=source_point, sink=sink_point, steps=steps))

    paths.sort(key=lambda p: (
        len(p.steps), p.source.file, p.source.line, p.sink.file, p.sink.line,
        p.source.node_id, p.sink.node_id,
    ))
    logger.info("taint_flows_found", total=len(paths), returned=min(len(paths), max_paths))
    return paths[:max_paths]
