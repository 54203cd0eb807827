"""
Call resolution and the interprocedural edges built on it.

A call resolves by name to a defined method, preferring one in the caller's own file and
otherwise the first definition in file order. Unresolved calls stay external.
"""
from typing import Dict, List, Mapping, Optional, Sequence

from app.cpg.ddg import DataFlowResult
from app.cpg.lowering import MethodLowering
from app.cpg.models import Binding, CpgEdge, CpgNode, EdgeKind, NodeKind


class CallResolver:
    def __init__(self, methods: Sequence[MethodLowering]):
        self._by_name: Dict[str, List[MethodLowering]] = {}
        for m in methods:
            self._by_name.setdefault(m.name, []).append(m)

    def resolve(self, name: str, caller_file: str) -> Optional[MethodLowering]:
        candidates = self._by_name.get(name)
        if not candidates:
            return None
        for m in candidates:
            if m.ast.span.file == caller_file:
                return m
        return candidates[0]


def child_map(nodes: Mapping[int, CpgNode]) -> Dict[int, List[CpgNode]]:
    kids: Dict[int, List[CpgNode]] = {}
    for n in nodes.values():
        if n.parent_id is not None:
            kids.setdefault(n.parent_id, []).append(n)
    for group in kids.values():
        group.sort(key=lambda n: n.order)
    return kids


def _subtree(kids: Mapping[int, List[CpgNode]], root: CpgNode) -> List[CpgNode]:
    out, stack = [], [root]
    while stack:
        n = stack.pop()
        out.append(n)
        stack.extend(reversed(kids.get(n.id, [])))
    return out


def build_call_graph(
    methods: Sequence[MethodLowering],
    flows: Mapping[int, DataFlowResult],
) -> List[CpgEdge]:
    """CALL and ARG edges plus parameter and return binding edges.

    ``flows`` maps a method id to its intraprocedural data-flow result.
    """
    resolver = CallResolver(methods)
    edges: List[CpgEdge] = []
    for caller in methods:
        nodes = caller.nodes
        kids = child_map(nodes)
        for call_id in caller.call_ids:
            call = nodes[call_id]
            args = kids.get(call_id, [])
            for i, arg in enumerate(args):
                edges.append(CpgEdge(src=call_id, dst=arg.id, kind=EdgeKind.ARG, index=i))

            callee = resolver.resolve(call.name, call.file)
            if callee is None:
                continue
            edges.append(CpgEdge(src=call_id, dst=callee.method_id, kind=EdgeKind.CALL))

            site = call.statement_id
            reaching = flows[caller.method_id].reaching_in.get(site)
            if reaching is None:
                # call site unreachable inside its caller
                continue
            edges.extend(_param_bindings(kids, args, callee, site, reaching))
            edges.extend(_return_bindings(callee, flows[callee.method_id], site))
    return edges


def _param_bindings(kids, args, callee: MethodLowering, site: int, reaching) -> List[CpgEdge]:
    out: List[CpgEdge] = []
    for i, arg in enumerate(args):
        if i >= len(callee.param_ids):
            break
        param_id = callee.param_ids[i]
        seen = set()
        subtree = _subtree(kids, arg)
        for ident in subtree:
            if ident.kind != NodeKind.IDENTIFIER or ident.name in seen:
                continue
            seen.add(ident.name)
            for d, v in sorted(reaching):
                if v == ident.name:
                    out.append(CpgEdge(
                        src=d, dst=param_id, kind=EdgeKind.REACHING_DEF,
                        variable=v, binding=Binding.PARAM,
                    ))
        if any(n.kind == NodeKind.CALL for n in subtree):
            # a nested call's result is computed at the call site itself
            out.append(CpgEdge(
                src=site, dst=param_id, kind=EdgeKind.REACHING_DEF,
                variable=callee.nodes[param_id].name, binding=Binding.PARAM,
            ))
    return out


def _return_bindings(callee: MethodLowering, flow: DataFlowResult, site: int) -> List[CpgEdge]:
    mr = callee.method_return_id
    variables = sorted({e.variable for e in flow.edges if e.dst == mr})
    return [
        CpgEdge(src=mr, dst=site, kind=EdgeKind.REACHING_DEF, variable=v, binding=Binding.RETURN)
        for v in variables
    ]
