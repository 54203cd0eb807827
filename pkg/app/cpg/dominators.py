"""
Dominator and post-dominator trees over a method's CFG, computed with networkx.
"""
from typing import Dict, Iterable, Optional, Set, Tuple

import networkx as nx


class DominatorTree:
    """Immediate-dominator map; ``root`` maps to None."""

    def __init__(self, root: int, idom: Dict[int, Optional[int]]):
        self.root = root
        self.idom = idom

    @classmethod
    def compute(cls, root: int, nodes: Iterable[int], edges: Iterable[Tuple[int, int]], reverse: bool = False) -> "DominatorTree":
        graph = nx.DiGraph()
        graph.add_nodes_from(nodes)
        graph.add_edges_from((d, s) if reverse else (s, d) for s, d in edges)
        if root not in graph:
            graph.add_node(root)
        raw = nx.immediate_dominators(graph, root)
        idom: Dict[int, Optional[int]] = {n: d for n, d in raw.items() if n != root}
        idom[root] = None
        return cls(root, idom)

    def __contains__(self, node: int) -> bool:
        return node in self.idom

    def parent(self, node: int) -> Optional[int]:
        return self.idom.get(node)

    def dominates(self, a: int, b: int) -> bool:
        """True when a dominates b (reflexive). Nodes outside the tree dominate nothing."""
        if a not in self.idom or b not in self.idom:
            return False
        node: Optional[int] = b
        while node is not None:
            if node == a:
                return True
            node = self.idom[node]
        return False

    def strictly_dominates(self, a: int, b: int) -> bool:
        return a != b and self.dominates(a, b)

    def dominators(self, node: int) -> Set[int]:
        out: Set[int] = set()
        current = node if node in self.idom else None
        while current is not None:
            out.add(current)
            current = self.idom[current]
        return out

    def to_dict(self) -> Dict[str, Optional[int]]:
        return {str(k): v for k, v in sorted(self.idom.items())}
