"""
Resolution of (file, line) or node ids to statement-level program points.
"""
from typing import List, Optional

from app.core.errors import UnresolvedPoint
from app.cpg.graph import Cpg
from app.cpg.models import CpgNode, NodeKind
from app.schemas.analysis import ProgramPoint


_SYNTHETIC_RANK = {NodeKind.PARAM: 1, NodeKind.METHOD_RETURN: 2}


def point_of(cpg: Cpg, node: CpgNode) -> ProgramPoint:
    method = cpg.method_of(node.id)
    return ProgramPoint(file=node.file, line=node.line, node_id=node.id, code=node.code, method=method.name)


def statements_on_line(cpg: Cpg, file: str, line: int) -> List[CpgNode]:
    found = {}
    for n in cpg.nodes_at(file, line):
        stmt = cpg.statement_of(n.id)
        if stmt is not None and stmt.line == line:
            found[stmt.id] = stmt
    return list(found.values())


def resolve_point(
    cpg: Cpg,
    file: Optional[str] = None,
    line: Optional[int] = None,
    node_id: Optional[int] = None,
) -> CpgNode:
    """The outermost body statement starting on the line: smallest AST depth, then leftmost.

    Params and the synthetic method return only win on lines with no body statement.
    """
    if node_id is not None:
        if not cpg.has_node(node_id):
            raise UnresolvedPoint(f"no node with id {node_id}", detail={"node_id": node_id})
        return cpg.statement_of(node_id) or cpg.node(node_id)

    if file is None or line is None:
        raise UnresolvedPoint("a point needs file and line, or node_id")
    path = cpg.resolve_file(file)
    if path is None:
        raise UnresolvedPoint(f"no file named {file}", detail={"file": file})

    candidates = statements_on_line(cpg, path, line)
    if not candidates:
        methods = [n for n in cpg.nodes_at(path, line) if n.kind == NodeKind.METHOD]
        if methods:
            return methods[0]
        raise UnresolvedPoint(f"no statement at {path}:{line}", detail={"file": path, "line": line})
    return min(candidates, key=lambda n: (_SYNTHETIC_RANK.get(n.kind, 0), n.depth, n.col, n.id))
