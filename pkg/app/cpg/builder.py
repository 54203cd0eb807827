"""
Builds the Cpg for a parsed codebase.
"""
import time
from typing import Dict, List, Optional

from app.core.errors import LexError
from app.core.logging_config import get_logger
from app.cpg.callgraph import build_call_graph
from app.cpg.cdg import build_cdg, post_dominator_tree
from app.cpg.cfg import build_cfg
from app.cpg.ddg import DataFlowResult, build_ddg
from app.cpg.graph import Cpg
from app.cpg.lowering import IdAllocator, MethodLowering, ast_edges, contains_edges, lower_method
from app.cpg.models import AnalysisWarning, BuildIssue, CpgEdge, CpgNode
from app.frontend.parser import ParseResult, parse_codebase

logger = get_logger("cpg.builder")


def build_report(parsed: ParseResult) -> List[BuildIssue]:
    issues = []
    for err in parsed.errors:
        loc = err.location
        issues.append(BuildIssue(
            file=loc.file, line=loc.line, col=loc.col,
            code="lex_error" if isinstance(err, LexError) else "parse_error",
            message=err.message,
        ))
    return issues


def build_cpg(parsed: ParseResult, language: str = "c", source_hash: str = "") -> Cpg:
    """Lowers every method, then layers CFG, data, control and call edges on top."""
    started = time.perf_counter()
    files = {f.path: f for f in parsed.files}
    function_names = {fn.name for fn in parsed.root.functions()}
    next_id = IdAllocator()

    methods: List[MethodLowering] = []
    for unit in parsed.root.children:
        for fn in unit.children:
            methods.append(lower_method(fn, files[unit.span.file], next_id, function_names))

    nodes: Dict[int, CpgNode] = {}
    edges: List[CpgEdge] = []
    warnings: List[AnalysisWarning] = []
    flows: Dict[int, DataFlowResult] = {}
    for m in methods:
        nodes.update(m.nodes)
        warnings.extend(m.warnings)
        cfg = build_cfg(m)
        flow = build_ddg(cfg, m.nodes)
        flows[m.method_id] = flow
        warnings.extend(w for w in flow.warnings if w not in warnings)
        edges.extend(ast_edges(m.nodes))
        edges.extend(cfg.edges)
        edges.extend(flow.edges)
        edges.extend(build_cdg(cfg, post_dominator_tree(cfg)))
        edges.extend(contains_edges(m))
    edges.extend(build_call_graph(methods, flows))

    report = build_report(parsed)
    for w in warnings:
        logger.info("analysis_warning", file=w.file, line=w.line, message=w.message)
    logger.info(
        "cpg_built",
        methods=len(methods),
        nodes=len(nodes),
        edges=len(edges),
        parse_errors=len(report),
        seconds=round(time.perf_counter() - started, 4),
    )
    return Cpg(
        files=parsed.files,
        nodes=nodes.values(),
        edges=edges,
        language=language,
        source_hash=source_hash,
        report=report,
        warnings=warnings,
    )


def build_cpg_from_files(files, language: str = "c", source_hash: Optional[str] = None) -> Cpg:
    return build_cpg(parse_codebase(files), language=language, source_hash=source_hash or "")
