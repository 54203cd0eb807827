"""
Reaching definitions and the data-dependence edges derived from them.

A statement generates (stmt, v) for every variable it defines. Only strong definitions kill
earlier definitions of the same variable; weak ones (array element writes, arrays passed to
calls) are may-definitions and leave the incoming set intact.
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Tuple

from app.cpg.models import AnalysisWarning, CfgFragment, CpgEdge, CpgNode, EdgeKind, NodeKind

Definition = Tuple[int, str]


@dataclass
class DataFlowResult:
    edges: List[CpgEdge]
    reaching_in: Dict[int, FrozenSet[Definition]]
    warnings: List[AnalysisWarning] = field(default_factory=list)


def reaching_definitions(cfg: CfgFragment, nodes: Mapping[int, CpgNode]) -> Dict[int, FrozenSet[Definition]]:
    """IN set of every CFG node, iterated to a fixpoint."""
    preds: Dict[int, List[int]] = {n: [] for n in cfg.nodes}
    succs: Dict[int, List[int]] = {n: [] for n in cfg.nodes}
    for e in cfg.edges:
        preds[e.dst].append(e.src)
        succs[e.src].append(e.dst)

    gen = {n: frozenset((n, v) for v in nodes[n].all_defines) for n in cfg.nodes}
    kill = {n: frozenset(nodes[n].defines) for n in cfg.nodes}
    out: Dict[int, FrozenSet[Definition]] = {n: gen[n] for n in cfg.nodes}
    reaching_in: Dict[int, FrozenSet[Definition]] = {n: frozenset() for n in cfg.nodes}

    work = deque(cfg.nodes)
    queued = set(cfg.nodes)
    while work:
        n = work.popleft()
        queued.discard(n)
        incoming = frozenset().union(*(out[p] for p in preds[n])) if preds[n] else frozenset()
        reaching_in[n] = incoming
        new_out = gen[n] | frozenset(d for d in incoming if d[1] not in kill[n])
        if new_out != out[n]:
            out[n] = new_out
            for s in succs[n]:
                if s not in queued:
                    work.append(s)
                    queued.add(s)
    return reaching_in


def build_ddg(cfg: CfgFragment, nodes: Mapping[int, CpgNode]) -> DataFlowResult:
    reaching_in = reaching_definitions(cfg, nodes)
    edges: List[CpgEdge] = []
    warnings: List[AnalysisWarning] = []
    for n in cfg.nodes:
        node = nodes[n]
        for var in node.uses:
            defs = sorted(d for d, v in reaching_in[n] if v == var)
            # an array handed to a call may be filled by the callee
            if not defs and node.kind != NodeKind.METHOD_RETURN and var not in node.weak_defines:
                warnings.append(AnalysisWarning(
                    file=node.file, line=node.line,
                    message=f"'{var}' may be used before it is defined",
                ))
            for d in defs:
                edges.append(CpgEdge(src=d, dst=n, kind=EdgeKind.REACHING_DEF, variable=var))
    edges.sort(key=lambda e: (e.src, e.dst, e.variable))
    return DataFlowResult(edges=edges, reaching_in=reaching_in, warnings=warnings)
