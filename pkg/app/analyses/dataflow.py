from typing import Dict, List, Optional, Tuple

from app.analyses.points import point_of
from app.core.errors import ValidationFailed
from app.cpg.graph import Cpg
from app.cpg.models import CpgNode, EdgeKind
from app.schemas.analysis import DataDependency

DIRECTIONS = ("backward", "forward")


def dependency_hops(
    cpg: Cpg,
    start: CpgNode,
    direction: str = "backward",
    depth: int = 1,
    variable: Optional[str] = None,
) -> Dict[Tuple[int, str], int]:
    """(node, variable) -> smallest hop count, walking REACHING_DEF edges up to ``depth``."""
    if direction not in DIRECTIONS:
        raise ValidationFailed(f"direction must be one of {', '.join(DIRECTIONS)}", detail={"direction": direction})
    if depth < 1:
        raise ValidationFailed("depth must be at least 1", detail={"depth": depth})

    hops: Dict[Tuple[int, str], int] = {}
    seen = {start.id}
    level = [start.id]
    for hop in range(1, depth + 1):
        following = []
        for n in level:
            edges = cpg.in_edges(n, EdgeKind.REACHING_DEF) if direction == "backward" else cpg.out_edges(n, EdgeKind.REACHING_DEF)
            for e in edges:
                if hop == 1 and variable is not None and e.variable != variable:
                    continue
                other = e.src if direction == "backward" else e.dst
                hops.setdefault((other, e.variable), hop)
                if other not in seen:
                    seen.add(other)
                    following.append(other)
        level = following
    return hops


def get_data_dependencies(
    cpg: Cpg,
    point: CpgNode,
    direction: str = "backward",
    depth: int = 1,
    variable: Optional[str] = None,
) -> List[DataDependency]:
    hops = dependency_hops(cpg, point, direction, depth, variable)
    deps = [
        DataDependency(point=point_of(cpg, cpg.node(n)), variable=v, hop=h)
        for (n, v), h in hops.items()
    ]
    deps.sort(key=lambda d: (d.hop, d.point.file, d.point.line, d.point.node_id, d.variable))
    return deps
