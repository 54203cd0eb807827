"""
Brute-force reference implementations used to check the production analyses.

They trade speed for obviousness: reaching definitions by path enumeration, control
dependence and dominance from explicit node sets, taint and slicing as plain fixpoints.
None of them shares code with the traversals they check.
"""
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

from app.analyses.taint import SourceSinkConfig
from app.core.patterns import any_match, glob_match
from app.cpg.graph import Cpg
from app.cpg.models import Binding, CfgFragment, CpgEdge, EdgeKind, NodeKind

DefUse = Tuple[int, int, str]


def _successors(cfg: CfgFragment) -> Dict[int, List[int]]:
    succ: Dict[int, List[int]] = {n: [] for n in cfg.nodes}
    for e in cfg.edges:
        succ[e.src].append(e.dst)
    return succ


def _predecessors(cfg: CfgFragment) -> Dict[int, List[int]]:
    pred: Dict[int, List[int]] = {n: [] for n in cfg.nodes}
    for e in cfg.edges:
        pred[e.dst].append(e.src)
    return pred


def reaching_definition_pairs(cpg: Cpg, method_id: int) -> Set[DefUse]:
    """
    Every (def, use, variable) found on some entry path that visits each node at most twice.

    A def-clear path from d to u plus a simple prefix from the entry to d never needs a
    third visit of any node, so the enumeration is complete.
    """
    cfg = cpg.cfg(method_id)
    succ = _successors(cfg)
    found: Set[DefUse] = set()
    path: List[int] = [cfg.entry]
    visits: Dict[int, int] = {cfg.entry: 1}

    def record(use_node: int) -> None:
        for var in cpg.node(use_node).uses:
            for d in reversed(path[:-1]):
                node = cpg.node(d)
                if var in node.defines or var in node.weak_defines:
                    found.add((d, use_node, var))
                if var in node.defines:
                    break

    def walk(n: int) -> None:
        for s in succ[n]:
            if visits.get(s, 0) >= 2:
                continue
            visits[s] = visits.get(s, 0) + 1
            path.append(s)
            record(s)
            walk(s)
            path.pop()
            visits[s] -= 1

    walk(cfg.entry)
    return found


def _set_fixpoint(nodes: List[int], start: int, flow: Dict[int, List[int]]) -> Dict[int, FrozenSet[int]]:
    """Classic iterative dominator sets; ``flow`` gives the nodes each node meets over."""
    universe = frozenset(nodes)
    sets: Dict[int, FrozenSet[int]] = {n: universe for n in nodes}
    sets[start] = frozenset({start})
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == start:
                continue
            incoming = [sets[p] for p in flow[n]]
            new = frozenset({n}) | (frozenset.intersection(*incoming) if incoming else frozenset())
            if new != sets[n]:
                sets[n] = new
                changed = True
    return sets


def dominator_sets(cpg: Cpg, method_id: int) -> Dict[int, FrozenSet[int]]:
    cfg = cpg.cfg(method_id)
    return _set_fixpoint(cfg.nodes, cfg.entry, _predecessors(cfg))


def post_dominator_sets(cpg: Cpg, method_id: int) -> Dict[int, FrozenSet[int]]:
    cfg = cpg.cfg(method_id)
    return _set_fixpoint(cfg.nodes, cfg.exit, _successors(cfg))


def control_dependence_pairs(cpg: Cpg, method_id: int) -> Set[Tuple[int, int]]:
    """
    (branch, node) when the branch has a successor post-dominated by the node and the node
    does not strictly post-dominate the branch. Loop headers depend on themselves.
    """
    cfg = cpg.cfg(method_id)
    succ = _successors(cfg)
    pdom = post_dominator_sets(cpg, method_id)
    found: Set[Tuple[int, int]] = set()
    for branch, targets in succ.items():
        if len(targets) < 2:
            continue
        for y in cfg.nodes:
            if y == cfg.exit:
                continue
            strictly = y != branch and y in pdom[branch]
            if not strictly and any(y in pdom[s] for s in targets):
                found.add((branch, y))
    return found


def exit_reachable(cpg: Cpg, method_id: int) -> bool:
    """True when every CFG node can reach the exit; set-based oracles need it."""
    cfg = cpg.cfg(method_id)
    pred = _predecessors(cfg)
    seen = {cfg.exit}
    stack = [cfg.exit]
    while stack:
        n = stack.pop()
        for p in pred.get(n, []):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen == set(cfg.nodes)


def _relevant_positions(config: SourceSinkConfig, callee: str, count: int) -> List[int]:
    for pattern, positions in config.sink_arguments.items():
        if glob_match(pattern, callee):
            return [p for p in positions if p < count]
    return list(range(count))


def _below(cpg: Cpg, node_id: int) -> List[int]:
    return [n.id for n in cpg.subtree(node_id)]


def taint_pairs(cpg: Cpg, config: SourceSinkConfig) -> Set[Tuple[Tuple[str, int], Tuple[str, int]]]:
    """((source file, line), (sink file, line)) for every source statement that reaches a sink call."""
    calls = cpg.nodes_of_kind(NodeKind.CALL)
    source_statements = sorted({c.statement_id for c in calls if any_match(config.sources, c.name)})
    sinks = [c for c in calls if any_match(config.sinks, c.name)]

    arg_edges: Dict[int, List[CpgEdge]] = {}
    for e in cpg.edges_of_kind(EdgeKind.ARG):
        arg_edges.setdefault(e.src, []).append(e)
    call_target = {e.src: e.dst for e in cpg.edges_of_kind(EdgeKind.CALL)}

    sink_info = []
    for call in sinks:
        args = [e.dst for e in sorted(arg_edges.get(call.id, []), key=lambda e: e.index)]
        variables: Set[str] = set()
        nested: Set[int] = set()
        for pos in _relevant_positions(config, call.name, len(args)):
            for n in _below(cpg, args[pos]):
                node = cpg.node(n)
                if node.kind == NodeKind.IDENTIFIER:
                    variables.add(node.name)
                elif node.kind == NodeKind.CALL:
                    nested.add(n)
        sink_info.append((call, variables, nested, {call_target[n] for n in nested if n in call_target}))

    flow_edges: Dict[int, List[CpgEdge]] = {}
    for e in cpg.edges_of_kind(EdgeKind.REACHING_DEF):
        flow_edges.setdefault(e.src, []).append(e)

    def hits(edge: CpgEdge, variables: Set[str], callees: Set[int]) -> bool:
        if edge.binding == Binding.RETURN:
            return cpg.node(edge.src).method_id in callees
        return edge.variable in variables

    pairs = set()
    for stmt_id in source_statements:
        stmt = cpg.node(stmt_id)
        reached = {(stmt_id, None)}
        changed = True
        while changed:
            changed = False
            for node_id, _ in list(reached):
                for e in flow_edges.get(node_id, []):
                    if (e.dst, e.variable) not in reached:
                        reached.add((e.dst, e.variable))
                        changed = True
        traversed = [e for node_id in {n for n, _ in reached} for e in flow_edges.get(node_id, [])]
        for call, variables, nested, callees in sink_info:
            sink_stmt = cpg.node(call.statement_id)
            direct = call.statement_id == stmt_id and any(
                any_match(config.sources, cpg.node(n).name) for n in nested
            )
            if direct or any(e.dst == call.statement_id and hits(e, variables, callees) for e in traversed):
                pairs.add(((stmt.file, stmt.line), (sink_stmt.file, sink_stmt.line)))
    return pairs


def slice_closure(cpg: Cpg, criterion: int) -> Set[int]:
    """Least set holding the criterion and closed under dependence and call-site predecessors."""
    points = {criterion}
    changed = True
    dependence = cpg.edges_of_kind(EdgeKind.REACHING_DEF) + cpg.edges_of_kind(EdgeKind.CDG)
    calls = cpg.edges_of_kind(EdgeKind.CALL)
    while changed:
        changed = False
        before = len(points)
        points |= {e.src for e in dependence if e.dst in points}
        methods = {cpg.method_of(p).id for p in points}
        points |= {cpg.node(e.src).statement_id for e in calls if e.dst in methods}
        changed = len(points) != before
    return points


def is_closed(cpg: Cpg, points: Iterable[int]) -> bool:
    points = set(points)
    dependence = cpg.edges_of_kind(EdgeKind.REACHING_DEF) + cpg.edges_of_kind(EdgeKind.CDG)
    if any(e.dst in points and e.src not in points for e in dependence):
        return False
    methods = {cpg.method_of(p).id for p in points}
    return all(
        cpg.node(e.src).statement_id in points
        for e in cpg.edges_of_kind(EdgeKind.CALL) if e.dst in methods
    )
