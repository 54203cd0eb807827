"""
Statement-level control flow for one method.

The Method node is the entry and its MethodReturn the exit. Parameters are chained right
after the entry so that they act as the definitions of their names. Statements that cannot
be reached from the entry keep their nodes but lose every CFG edge.
"""
from collections import deque
from typing import Dict, List, Sequence, Set, Tuple

from app.cpg.lowering import MethodLowering
from app.cpg.models import CfgFragment, CpgEdge, EdgeKind
from app.frontend.ast import AstKind, AstNode


class _CfgBuilder:
    def __init__(self, lowering: MethodLowering):
        self.lowering = lowering
        self.exit = lowering.method_return_id
        self.edges: Dict[Tuple[int, int], None] = {}

    def link(self, preds: Sequence[int], node: int) -> None:
        for p in preds:
            self.edges.setdefault((p, node), None)

    def visit(self, stmt: AstNode, preds: List[int]) -> List[int]:
        kind = stmt.kind
        if kind == AstKind.BLOCK:
            for child in stmt.children:
                preds = self.visit(child, preds)
            return preds

        node = self.lowering.node_for(stmt)
        self.link(preds, node)

        if kind == AstKind.RETURN:
            self.link([node], self.exit)
            return []

        if kind == AstKind.IF:
            then_exits = self.visit(stmt.children[1], [node])
            else_exits = self.visit(stmt.children[2], [node]) if len(stmt.children) > 2 else [node]
            return list(dict.fromkeys(then_exits + else_exits))

        if kind == AstKind.WHILE:
            body_exits = self.visit(stmt.children[1], [node])
            self.link(body_exits, node)
            return [node]

        return [node]

    def build(self) -> CfgFragment:
        lowering = self.lowering
        entry = lowering.method_id
        frontier = [entry]
        for pid in lowering.param_ids:
            self.link(frontier, pid)
            frontier = [pid]
        frontier = self.visit(lowering.ast.body, frontier)
        self.link(frontier, self.exit)

        reachable = _reachable(entry, self.edges)
        edges = [
            CpgEdge(src=s, dst=d, kind=EdgeKind.CFG)
            for (s, d) in self.edges if s in reachable
        ]
        nodes = [n for n in lowering.nodes if n in reachable]
        return CfgFragment(entry=entry, exit=self.exit, nodes=nodes, edges=edges)


def _reachable(entry: int, edges) -> Set[int]:
    succ: Dict[int, List[int]] = {}
    for s, d in edges:
        succ.setdefault(s, []).append(d)
    seen = {entry}
    queue = deque([entry])
    while queue:
        n = queue.popleft()
        for m in succ.get(n, ()):
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


def build_cfg(lowering: MethodLowering) -> CfgFragment:
    return _CfgBuilder(lowering).build()
