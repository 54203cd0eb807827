"""
Backward program slicing over data and control dependence.
"""
from typing import Dict, List, Set

from app.analyses.points import point_of
from app.cpg.graph import Cpg
from app.cpg.models import CpgNode, EdgeKind, NodeKind
from app.schemas.analysis import Slice


def slice_points(cpg: Cpg, criterion: int) -> Set[int]:
    """
    Least fixed point containing the criterion and closed under REACHING_DEF predecessors,
    CDG governors and the call sites of every method that holds a point.
    """
    points = {criterion}
    worklist = [criterion]
    entered: Set[int] = set()
    while worklist:
        n = worklist.pop()
        preds = [e.src for e in cpg.in_edges(n, EdgeKind.REACHING_DEF)]
        preds += [e.src for e in cpg.in_edges(n, EdgeKind.CDG)]
        method_id = cpg.method_of(n).id
        if method_id not in entered:
            entered.add(method_id)
            preds += [call.statement_id for call in cpg.call_sites_of(method_id)]
        for p in preds:
            if p not in points:
                points.add(p)
                worklist.append(p)
    return points


def render_slice(cpg: Cpg, points: Set[int]) -> List[str]:
    """Source lines of the points as ``file:line: text``, grouped by method in file/line order."""
    by_method: Dict[int, List[CpgNode]] = {}
    for p in points:
        node = cpg.node(p)
        by_method.setdefault(cpg.method_of(p).id, []).append(node)

    out: List[str] = []
    methods = sorted(by_method, key=lambda m: (cpg.node(m).file, cpg.node(m).line, m))
    for m in methods:
        method = cpg.node(m)
        source = cpg.file(method.file)
        line_numbers: Set[int] = set()
        for node in by_method[m]:
            if node.kind == NodeKind.METHOD:
                line_numbers.add(node.line)
            else:
                line_numbers.update(range(node.line, node.end_line + 1))
        out.append(f"// {method.name} ({method.file})")
        for line in sorted(line_numbers):
            out.append(f"{method.file}:{line}: {source.line_text(line)}")
    return out


def get_program_slice(cpg: Cpg, criterion: CpgNode) -> Slice:
    points = slice_points(cpg, criterion.id)
    lines = render_slice(cpg, points)
    return Slice(
        criterion=point_of(cpg, criterion),
        direction="backward",
        points=sorted(points),
        lines=lines,
        code="\n".join(lines) + "\n",
    )
