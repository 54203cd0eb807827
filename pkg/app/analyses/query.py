"""
Structured node queries: a filter over the indexes plus at most one edge expansion.

    {"kind": "Call", "name_glob": "malloc", "code_contains": "+",
     "expand": {"edge_kind": "REACHING_DEF", "direction": "backward", "depth": 1},
     "limit": 100}
"""
from typing import Any, Dict, List, Optional, Set

from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.errors import QueryError
from app.core.patterns import glob_match
from app.cpg.graph import Cpg
from app.cpg.models import CpgNode, EdgeKind, NodeKind
from app.schemas.analysis import QueryNode, QueryResult

MAX_EXPAND_DEPTH = 3
# expression nodes stand in for their statement on statement-level edges
_STATEMENT_EDGES = {EdgeKind.REACHING_DEF, EdgeKind.CDG, EdgeKind.CFG}


class Expansion(BaseModel):
    model_config = ConfigDict(extra="forbid")

    edge_kind: str
    direction: str = "forward"
    depth: int = 1


class StructuredQuery(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Optional[str] = None
    name_glob: Optional[str] = None
    code_contains: Optional[str] = None
    expand: Optional[Expansion] = None
    limit: Optional[int] = None


def _parse(query: Dict[str, Any]) -> StructuredQuery:
    try:
        q = StructuredQuery.model_validate(query)
    except ValidationError as e:
        raise QueryError(
            "malformed query",
            detail=[{"key": ".".join(str(p) for p in err["loc"]), "message": err["msg"]} for err in e.errors()],
        )
    if q.kind is not None and q.kind not in {k.value for k in NodeKind}:
        raise QueryError(f"unknown node kind {q.kind}", detail={"kind": q.kind, "allowed": [k.value for k in NodeKind]})
    if q.expand is not None:
        if q.expand.edge_kind not in {k.value for k in EdgeKind}:
            raise QueryError(
                f"unknown edge kind {q.expand.edge_kind}",
                detail={"edge_kind": q.expand.edge_kind, "allowed": [k.value for k in EdgeKind]},
            )
        if q.expand.direction not in ("forward", "backward"):
            raise QueryError(f"unknown direction {q.expand.direction}", detail={"direction": q.expand.direction})
        if not 1 <= q.expand.depth <= MAX_EXPAND_DEPTH:
            raise QueryError(f"expansion depth must be between 1 and {MAX_EXPAND_DEPTH}", detail={"depth": q.expand.depth})
    if q.limit is not None and q.limit < 1:
        raise QueryError("limit must be positive", detail={"limit": q.limit})
    return q


def _filter(cpg: Cpg, q: StructuredQuery) -> List[CpgNode]:
    if q.kind is not None:
        nodes = cpg.nodes_of_kind(NodeKind(q.kind))
    else:
        nodes = cpg.nodes
    if q.name_glob is not None:
        nodes = [n for n in nodes if n.name is not None and glob_match(q.name_glob, n.name)]
    if q.code_contains is not None:
        nodes = [n for n in nodes if q.code_contains in n.code]
    return nodes


def _expand(cpg: Cpg, seeds: List[CpgNode], expansion: Expansion) -> List[CpgNode]:
    kind = EdgeKind(expansion.edge_kind)
    backward = expansion.direction == "backward"
    frontier: List[int] = []
    for n in seeds:
        if kind in _STATEMENT_EDGES and n.statement_id is not None:
            frontier.append(n.statement_id)
        else:
            frontier.append(n.id)
    frontier = list(dict.fromkeys(frontier))

    found: Dict[int, None] = {}
    seen: Set[int] = set(frontier)
    for _ in range(expansion.depth):
        following = []
        for n in frontier:
            edges = cpg.in_edges(n, kind) if backward else cpg.out_edges(n, kind)
            for e in edges:
                other = e.src if backward else e.dst
                found.setdefault(other, None)
                if other not in seen:
                    seen.add(other)
                    following.append(other)
        frontier = following
    return [cpg.node(i) for i in sorted(found)]


def run_structured_query(cpg: Cpg, query: Dict[str, Any], default_limit: int = 500) -> QueryResult:
    q = _parse(query)
    nodes = _filter(cpg, q)
    if q.expand is not None:
        nodes = _expand(cpg, nodes, q.expand)
    nodes = sorted({n.id: n for n in nodes}.values(), key=lambda n: n.id)
    limit = q.limit or default_limit
    items = [
        QueryNode(
            id=n.id, kind=n.kind.value, name=n.name, code=n.code, file=n.file, line=n.line,
            method=cpg.method_of(n.id).name,
        )
        for n in nodes[:limit]
    ]
    return QueryResult(items=items, total=len(nodes), truncated=len(nodes) > limit)
