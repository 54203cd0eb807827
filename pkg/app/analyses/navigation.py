"""
Code navigation: methods, calls, snippets, literals and a codebase summary.
"""
from typing import List, Optional

from app.core.errors import AmbiguousMethod, RangeError, UnknownMethod, ValidationFailed
from app.core.patterns import glob_match
from app.cpg.graph import Cpg
from app.cpg.models import CpgNode, NodeKind
from app.schemas.analysis import (
    CallSite,
    CodebaseSummary,
    LiteralHit,
    MethodInfo,
    MethodSource,
    Snippet,
)

LITERAL_KINDS = ("int", "string", "any")


def _method_info(cpg: Cpg, m: CpgNode) -> MethodInfo:
    return MethodInfo(
        name=m.name, file=m.file, start_line=m.line, end_line=m.end_line,
        param_count=len(cpg.params(m.id)), node_id=m.id,
    )


def list_methods(cpg: Cpg, pattern: str = "*") -> List[MethodInfo]:
    methods = cpg.nodes_matching(pattern, NodeKind.METHOD)
    methods.sort(key=lambda m: (m.file, m.line, m.id))
    return [_method_info(cpg, m) for m in methods]


def get_method_source(cpg: Cpg, name: str, file: Optional[str] = None) -> MethodSource:
    candidates = cpg.nodes_named(name, NodeKind.METHOD)
    if file is not None:
        path = cpg.resolve_file(file) or file
        candidates = [m for m in candidates if m.file == path]
    if not candidates:
        raise UnknownMethod(f"no method named {name}", detail={"name": name, "file": file})
    if len(candidates) > 1:
        raise AmbiguousMethod(
            f"{len(candidates)} methods are named {name}",
            detail=[{"file": m.file, "line": m.line} for m in candidates],
        )
    m = candidates[0]
    source = cpg.file(m.file)
    width = len(str(m.end_line))
    numbered = "\n".join(
        f"{n:>{width}}  {source.line_text(n)}" for n in range(m.line, m.end_line + 1)
    )
    return MethodSource(
        name=m.name, file=m.file, start_line=m.line, end_line=m.end_line,
        source=m.code, numbered=numbered,
    )


def list_calls(cpg: Cpg, pattern: str = "*", within: Optional[str] = None) -> List[CallSite]:
    scope = None
    if within is not None:
        scope = {m.id for m in cpg.nodes_named(within, NodeKind.METHOD)}
        if not scope:
            raise UnknownMethod(f"no method named {within}", detail={"name": within})

    out = []
    for call in cpg.nodes_matching(pattern, NodeKind.CALL):
        if scope is not None and call.method_id not in scope:
            continue
        out.append(CallSite(
            caller=cpg.node(call.method_id).name,
            callee=call.name,
            file=call.file,
            line=call.line,
            arguments=[a.code for a in cpg.arguments(call.id)],
            node_id=call.id,
            resolved=cpg.callee_of(call.id) is not None,
        ))
    out.sort(key=lambda c: (c.file, c.line, c.node_id))
    return out


def get_code_snippet(cpg: Cpg, file: str, start_line: int, end_line: int) -> Snippet:
    path = cpg.resolve_file(file)
    if path is None:
        raise RangeError(f"no file named {file}", detail={"file": file})
    source = cpg.file(path)
    if start_line < 1 or end_line < start_line or end_line > source.line_count:
        raise RangeError(
            f"lines {start_line}-{end_line} are outside {path} (1-{source.line_count})",
            detail={"file": path, "start_line": start_line, "end_line": end_line, "line_count": source.line_count},
        )
    return Snippet(file=path, start_line=start_line, end_line=end_line, text=source.text(start_line, end_line))


def search_literals(cpg: Cpg, pattern: str = "*", kind: str = "any") -> List[LiteralHit]:
    if kind not in LITERAL_KINDS:
        raise ValidationFailed(f"kind must be one of {', '.join(LITERAL_KINDS)}", detail={"kind": kind})
    hits = []
    for lit in cpg.nodes_of_kind(NodeKind.LITERAL):
        if kind != "any" and lit.literal_kind != kind:
            continue
        if glob_match(pattern, lit.value):
            hits.append(LiteralHit(value=lit.value, kind=lit.literal_kind, file=lit.file, line=lit.line, node_id=lit.id))
    hits.sort(key=lambda h: (h.file, h.line, h.node_id))
    return hits


def get_codebase_summary(cpg: Cpg) -> CodebaseSummary:
    calls = cpg.nodes_of_kind(NodeKind.CALL)
    external = sorted({c.name for c in calls if cpg.callee_of(c.id) is None})
    return CodebaseSummary(
        files=len(cpg.files),
        methods=len(cpg.methods()),
        call_sites=len(calls),
        loc=sum(f.line_count for f in cpg.files),
        external_callees=external,
        parse_errors=len(cpg.report),
        warnings=len(cpg.warnings),
    )
