"""
Call graph extraction and method reachability.
"""
from typing import List, Optional

import networkx as nx

from app.core.errors import UnknownMethod, ValidationFailed
from app.cpg.graph import Cpg
from app.cpg.models import CpgNode, EdgeKind, NodeKind
from app.schemas.analysis import CallEdge, CallGraph, Reachability


def methods_named(cpg: Cpg, name: str) -> List[CpgNode]:
    found = cpg.nodes_named(name, NodeKind.METHOD)
    if not found:
        raise UnknownMethod(f"no method named {name}", detail={"name": name})
    return found


def _call_nodes(cpg: Cpg, method_id: int) -> List[CpgNode]:
    return [n for n in cpg.method_nodes(method_id) if n.kind == NodeKind.CALL]


def get_call_graph(cpg: Cpg, root: str, depth: int = 2) -> CallGraph:
    """Breadth-first over resolved calls; every call site reached within ``depth`` is one edge."""
    if depth < 0:
        raise ValidationFailed("depth must be non-negative", detail={"depth": depth})
    roots = methods_named(cpg, root)
    visited = {m.id for m in roots}
    order = [m.id for m in roots]
    edges: List[CallEdge] = []
    level = list(order)
    for _ in range(depth):
        following = []
        for m in level:
            caller = cpg.node(m)
            for call in _call_nodes(cpg, m):
                callee_id = cpg.callee_of(call.id)
                if callee_id is None:
                    continue
                edges.append(CallEdge(caller=caller.name, callee=call.name, file=call.file, line=call.line))
                if callee_id not in visited:
                    visited.add(callee_id)
                    order.append(callee_id)
                    following.append(callee_id)
        level = following
    names = list(dict.fromkeys(cpg.node(m).name for m in order))
    return CallGraph(root=root, depth=depth, methods=names, edges=edges)


def method_graph(cpg: Cpg) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(m.id for m in cpg.methods())
    for e in cpg.edges_of_kind(EdgeKind.CALL):
        graph.add_edge(cpg.node(e.src).method_id, e.dst)
    return graph


def check_reachability(cpg: Cpg, source: str, target: str) -> Reachability:
    sources = methods_named(cpg, source)
    targets = methods_named(cpg, target)
    graph = method_graph(cpg)
    best: Optional[List[int]] = None
    for s in sources:
        for t in targets:
            try:
                path = nx.shortest_path(graph, s.id, t.id)
            except nx.NetworkXNoPath:
                continue
            if best is None or len(path) < len(best):
                best = path
    if best is None:
        return Reachability(source=source, target=target, reachable=False)
    return Reachability(source=source, target=target, reachable=True, path=[cpg.node(m).name for m in best])
