"""
The immutable Code Property Graph and its query indexes.
"""
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from app.core.patterns import glob_match
from app.cpg.cdg import dominator_tree, post_dominator_tree
from app.cpg.dominators import DominatorTree
from app.cpg.models import AnalysisWarning, BuildIssue, CfgFragment, CpgEdge, CpgNode, EdgeKind, NodeKind
from app.frontend.source import SourceFile


class Cpg:
    def __init__(
        self,
        files: Sequence[SourceFile],
        nodes: Iterable[CpgNode],
        edges: Iterable[CpgEdge],
        language: str = "c",
        source_hash: str = "",
        report: Sequence[BuildIssue] = (),
        warnings: Sequence[AnalysisWarning] = (),
    ):
        self.language = language
        self.source_hash = source_hash
        self._files: Dict[str, SourceFile] = {f.path: f for f in sorted(files, key=lambda f: f.path)}
        self._nodes: Dict[int, CpgNode] = {n.id: n for n in sorted(nodes, key=lambda n: n.id)}
        self._edges: Tuple[CpgEdge, ...] = tuple(edges)
        self.report: Tuple[BuildIssue, ...] = tuple(report)
        self.warnings: Tuple[AnalysisWarning, ...] = tuple(warnings)
        self._index()

    def _index(self) -> None:
        self._by_kind: Dict[NodeKind, List[int]] = defaultdict(list)
        self._by_name: Dict[str, List[int]] = defaultdict(list)
        self._by_line: Dict[Tuple[str, int], List[int]] = defaultdict(list)
        self._children: Dict[int, List[int]] = defaultdict(list)
        for n in self._nodes.values():
            self._by_kind[n.kind].append(n.id)
            if n.name is not None:
                self._by_name[n.name].append(n.id)
            self._by_line[(n.file, n.line)].append(n.id)
            if n.parent_id is not None:
                self._children[n.parent_id].append(n.id)
        for kids in self._children.values():
            kids.sort(key=lambda i: (self._nodes[i].order, i))

        self._out: Dict[EdgeKind, Dict[int, List[CpgEdge]]] = {k: defaultdict(list) for k in EdgeKind}
        self._in: Dict[EdgeKind, Dict[int, List[CpgEdge]]] = {k: defaultdict(list) for k in EdgeKind}
        for e in self._edges:
            self._out[e.kind][e.src].append(e)
            self._in[e.kind][e.dst].append(e)

        self._exit: Dict[int, int] = {}
        for mr in self._by_kind.get(NodeKind.METHOD_RETURN, []):
            self._exit[self._nodes[mr].method_id] = mr
        self._dom: Dict[int, DominatorTree] = {}
        self._pdom: Dict[int, DominatorTree] = {}
        for m in self.methods():
            fragment = self.cfg(m.id)
            self._dom[m.id] = dominator_tree(fragment)
            self._pdom[m.id] = post_dominator_tree(fragment)

    # --- nodes ---

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def nodes(self) -> List[CpgNode]:
        return list(self._nodes.values())

    @property
    def edges(self) -> Tuple[CpgEdge, ...]:
        return self._edges

    def node(self, node_id: int) -> CpgNode:
        return self._nodes[node_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._nodes

    def nodes_of_kind(self, kind: NodeKind) -> List[CpgNode]:
        return [self._nodes[i] for i in self._by_kind.get(kind, [])]

    def nodes_named(self, name: str, kind: Optional[NodeKind] = None) -> List[CpgNode]:
        out = [self._nodes[i] for i in self._by_name.get(name, [])]
        return [n for n in out if kind is None or n.kind == kind]

    def nodes_matching(self, pattern: str, kind: Optional[NodeKind] = None) -> List[CpgNode]:
        """Nodes whose name matches a `*` glob."""
        names = [name for name in self._by_name if glob_match(pattern, name)]
        ids = sorted(i for name in names for i in self._by_name[name])
        return [self._nodes[i] for i in ids if kind is None or self._nodes[i].kind == kind]

    def nodes_at(self, file: str, line: int) -> List[CpgNode]:
        return [self._nodes[i] for i in self._by_line.get((file, line), [])]

    def children(self, node_id: int) -> List[CpgNode]:
        return [self._nodes[i] for i in self._children.get(node_id, [])]

    def subtree(self, node_id: int) -> List[CpgNode]:
        out, stack = [], [node_id]
        while stack:
            n = stack.pop()
            out.append(self._nodes[n])
            stack.extend(reversed(self._children.get(n, [])))
        return out

    def statement_of(self, node_id: int) -> Optional[CpgNode]:
        sid = self._nodes[node_id].statement_id
        return self._nodes[sid] if sid is not None else None

    # --- methods ---

    def methods(self) -> List[CpgNode]:
        return self.nodes_of_kind(NodeKind.METHOD)

    def method_of(self, node_id: int) -> CpgNode:
        n = self._nodes[node_id]
        return n if n.kind == NodeKind.METHOD else self._nodes[n.method_id]

    def method_nodes(self, method_id: int) -> List[CpgNode]:
        return [self._nodes[e.dst] for e in self._out[EdgeKind.CONTAINS].get(method_id, [])]

    def method_exit(self, method_id: int) -> int:
        return self._exit[method_id]

    def params(self, method_id: int) -> List[CpgNode]:
        return sorted(
            (n for n in self.children(method_id) if n.kind == NodeKind.PARAM), key=lambda n: n.order,
        )

    def cfg(self, method_id: int) -> CfgFragment:
        nodes = [method_id] + [n.id for n in self.method_nodes(method_id)]
        reachable = {method_id}
        edges = []
        for n in nodes:
            for e in self._out[EdgeKind.CFG].get(n, []):
                edges.append(e)
                reachable.add(e.dst)
        return CfgFragment(
            entry=method_id,
            exit=self._exit[method_id],
            nodes=[n for n in nodes if n in reachable],
            edges=edges,
        )

    def dominators(self, method_id: int) -> DominatorTree:
        return self._dom[method_id]

    def post_dominators(self, method_id: int) -> DominatorTree:
        return self._pdom[method_id]

    def callee_of(self, call_id: int) -> Optional[int]:
        out = self._out[EdgeKind.CALL].get(call_id)
        return out[0].dst if out else None

    def call_sites_of(self, method_id: int) -> List[CpgNode]:
        return [self._nodes[e.src] for e in self._in[EdgeKind.CALL].get(method_id, [])]

    def arguments(self, call_id: int) -> List[CpgNode]:
        out = sorted(self._out[EdgeKind.ARG].get(call_id, []), key=lambda e: e.index)
        return [self._nodes[e.dst] for e in out]

    # --- edges ---

    def out_edges(self, node_id: int, kind: EdgeKind) -> List[CpgEdge]:
        return list(self._out[kind].get(node_id, []))

    def in_edges(self, node_id: int, kind: EdgeKind) -> List[CpgEdge]:
        return list(self._in[kind].get(node_id, []))

    def edges_of_kind(self, kind: EdgeKind) -> List[CpgEdge]:
        return [e for e in self._edges if e.kind == kind]

    # --- files ---

    @property
    def files(self) -> List[SourceFile]:
        return list(self._files.values())

    def file(self, path: str) -> SourceFile:
        return self._files[path]

    def resolve_file(self, name: str) -> Optional[str]:
        """Exact path, else a unique basename match."""
        if name in self._files:
            return name
        matches = [p for p in self._files if p.rsplit("/", 1)[-1] == name]
        return matches[0] if len(matches) == 1 else None

    def verify_indexes(self) -> List[str]:
        """Full re-scan of nodes and edges against the indexes; returns the problems found."""
        problems = []
        for n in self._nodes.values():
            if n.id not in self._by_line.get((n.file, n.line), []):
                problems.append(f"node {n.id} missing from line index")
            if n.name is not None and n.id not in self._by_name.get(n.name, []):
                problems.append(f"node {n.id} missing from name index")
            if n.id not in self._by_kind.get(n.kind, []):
                problems.append(f"node {n.id} missing from kind index")
            if n.kind != NodeKind.METHOD and (n.method_id not in self._nodes or self._nodes[n.method_id].kind != NodeKind.METHOD):
                problems.append(f"node {n.id} has no enclosing method")
        for e in self._edges:
            if e.src not in self._nodes or e.dst not in self._nodes:
                problems.append(f"dangling {e.kind.value} edge {e.src}->{e.dst}")
            elif e not in self._out[e.kind].get(e.src, []):
                problems.append(f"edge {e.src}->{e.dst} missing from adjacency")
        return problems
