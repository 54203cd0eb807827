"""
Control dependence from the post-dominator tree.

For every CFG edge (b, s) where b has at least two successors, each node on the
post-dominator tree path from s up to (excluding) ipdom(b) is control dependent on b.
"""
from typing import Dict, List, Tuple

from app.cpg.dominators import DominatorTree
from app.cpg.models import CfgFragment, CpgEdge, EdgeKind


def post_dominator_tree(cfg: CfgFragment) -> DominatorTree:
    return DominatorTree.compute(
        cfg.exit, cfg.nodes, ((e.src, e.dst) for e in cfg.edges), reverse=True,
    )


def dominator_tree(cfg: CfgFragment) -> DominatorTree:
    return DominatorTree.compute(cfg.entry, cfg.nodes, ((e.src, e.dst) for e in cfg.edges))


def build_cdg(cfg: CfgFragment, pdom: DominatorTree) -> List[CpgEdge]:
    succ: Dict[int, List[int]] = {}
    for e in cfg.edges:
        succ.setdefault(e.src, []).append(e.dst)

    found: Dict[Tuple[int, int], None] = {}
    for branch, targets in succ.items():
        if len(targets) < 2 or branch not in pdom:
            continue
        stop = pdom.parent(branch)
        for s in targets:
            runner = s
            while runner is not None and runner != stop and runner != cfg.exit:
                found.setdefault((branch, runner), None)
                runner = pdom.parent(runner)
    return [CpgEdge(src=b, dst=d, kind=EdgeKind.CDG) for b, d in sorted(found)]
