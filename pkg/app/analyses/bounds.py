"""
Locates comparisons that bound an array index or a size argument, and tells whether each
check runs before the access on every path (dominance).
"""
from typing import Dict, List, Mapping, Set

from app.analyses.dataflow import dependency_hops
from app.analyses.points import point_of
from app.core.config import DEFAULT_SIZE_ARGUMENTS
from app.core.errors import NotABoundsContext
from app.core.patterns import glob_match
from app.cpg.graph import Cpg
from app.cpg.models import RELATIONAL_OPERATORS, CpgNode, NodeKind
from app.schemas.analysis import BoundsCheck, BoundsReport


def _identifiers(cpg: Cpg, node_id: int) -> Set[str]:
    return {n.name for n in cpg.subtree(node_id) if n.kind == NodeKind.IDENTIFIER}


def _size_position(size_arguments: Mapping[str, int], callee: str):
    for pattern, pos in size_arguments.items():
        if glob_match(pattern, callee):
            return pos
    return None


def access_variables(cpg: Cpg, access: CpgNode, size_arguments: Mapping[str, int]) -> Set[str]:
    """Index variables of every subscript and size variables of every size-carrying call."""
    found: Set[str] = set()
    expressions = [n for n in cpg.subtree(access.id) if n.statement_id == access.id]
    for n in expressions:
        if n.kind == NodeKind.OPERATOR and n.name == "[]":
            base, index = cpg.children(n.id)
            found |= _identifiers(cpg, index.id)
        elif n.kind == NodeKind.CALL:
            pos = _size_position(size_arguments, n.name)
            args = cpg.arguments(n.id)
            if pos is not None and pos < len(args):
                found |= _identifiers(cpg, args[pos].id)
    return found


def find_bounds_checks(cpg: Cpg, access: CpgNode, size_arguments: Mapping[str, int] = None) -> BoundsReport:
    size_arguments = DEFAULT_SIZE_ARGUMENTS if size_arguments is None else size_arguments
    index_vars = access_variables(cpg, access, size_arguments)
    if not index_vars:
        raise NotABoundsContext(
            f"{access.file}:{access.line} has no array index or size variable",
            detail={"file": access.file, "line": access.line},
        )

    related = set(index_vars)
    for var in sorted(index_vars):
        related |= {v for (_, v) in dependency_hops(cpg, access, "backward", 2, variable=var)}

    method_id = cpg.method_of(access.id).id
    dom = cpg.dominators(method_id)
    checks: Dict[int, BoundsCheck] = {}
    for n in cpg.method_nodes(method_id):
        if n.kind != NodeKind.OPERATOR or n.name not in RELATIONAL_OPERATORS:
            continue
        mentioned = _identifiers(cpg, n.id) & related
        if not mentioned:
            continue
        stmt = cpg.statement_of(n.id)
        checks[n.id] = BoundsCheck(
            check=point_of(cpg, stmt),
            relation=n.code,
            operator=n.name,
            variables=sorted(mentioned),
            dominates_access=stmt.id == access.id or dom.dominates(stmt.id, access.id),
        )
    ordered: List[BoundsCheck] = [
        checks[k] for k in sorted(checks, key=lambda k: (checks[k].check.file, checks[k].check.line, k))
    ]
    return BoundsReport(access=point_of(cpg, access), variables=sorted(related), checks=ordered)
