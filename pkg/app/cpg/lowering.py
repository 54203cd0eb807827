"""
Lowers one FunctionDef into CPG nodes and computes statement-level def/use sets.

Statement granularity: every simple statement, parameter, branch header and return is one
statement node; expression nodes hang below it and point to it through ``statement_id``.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set

from app.cpg.models import RETURN_VAR, AnalysisWarning, CpgEdge, CpgNode, EdgeKind, NodeKind
from app.frontend.ast import AstKind, AstNode
from app.frontend.source import SourceFile


class IdAllocator:
    def __init__(self, start: int = 0):
        self._next = start

    def __call__(self) -> int:
        value = self._next
        self._next += 1
        return value


@dataclass
class Symbol:
    name: str
    kind: str  # "param" | "local"
    is_array: bool
    node_id: int


@dataclass
class MethodLowering:
    ast: AstNode
    method_id: int
    method_return_id: int
    param_ids: List[int]
    statement_ids: Dict[int, int]
    symbols: Dict[str, Symbol]
    nodes: Dict[int, CpgNode]
    call_ids: List[int]
    warnings: List[AnalysisWarning] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.ast.name

    def node_for(self, ast_node: AstNode) -> int:
        return self.statement_ids[ast_node.id]


_EXPRESSION_KINDS = {
    AstKind.CALL: NodeKind.CALL,
    AstKind.IDENTIFIER: NodeKind.IDENTIFIER,
    AstKind.INT_LITERAL: NodeKind.LITERAL,
    AstKind.STRING_LITERAL: NodeKind.LITERAL,
    AstKind.BINARY_OP: NodeKind.OPERATOR,
    AstKind.UNARY_OP: NodeKind.OPERATOR,
    AstKind.ARRAY_INDEX: NodeKind.OPERATOR,
}


class _Lowerer:
    def __init__(self, fn: AstNode, file: SourceFile, next_id: IdAllocator, function_names: Set[str]):
        self.fn = fn
        self.file = file
        self.next_id = next_id
        self.function_names = function_names
        self.fields: Dict[int, dict] = {}
        self.statement_ids: Dict[int, int] = {}
        self.symbols: Dict[str, Symbol] = {}
        self.call_ids: List[int] = []
        self.warnings: List[AnalysisWarning] = []
        self.returns_value = False
        self.method_id = -1

    def new(self, kind: NodeKind, ast: AstNode, parent: Optional[int], depth: int, **extra) -> int:
        node_id = self.next_id()
        self.fields[node_id] = dict(
            id=node_id,
            kind=kind,
            code=ast.code,
            file=ast.span.file,
            line=ast.span.start_line,
            col=ast.span.start_col,
            end_line=ast.span.end_line,
            method_id=None if kind == NodeKind.METHOD else self.method_id,
            parent_id=parent,
            depth=depth,
            **extra,
        )
        return node_id

    def lower(self) -> MethodLowering:
        fn = self.fn
        self.method_id = self.new(NodeKind.METHOD, fn, None, 0, name=fn.name, type_name=fn.type_name)

        param_ids = []
        for i, p in enumerate(fn.params):
            pid = self.new(
                NodeKind.PARAM, p, self.method_id, 1, name=p.name, order=i,
                type_name=p.type_name, is_array=p.is_array, array_size=p.array_size,
                defines=(p.name,),
            )
            self.fields[pid]["statement_id"] = pid
            self.symbols[p.name] = Symbol(p.name, "param", p.is_array, pid)
            param_ids.append(pid)

        for decl in fn.body.walk():
            if decl.kind == AstKind.VAR_DECL and decl.name not in self.symbols:
                self.symbols[decl.name] = Symbol(decl.name, "local", decl.is_array, -1)

        self.statement(fn.body, self.method_id, 1, order=len(param_ids))

        end_line = fn.span.end_line
        mr_id = self.next_id()
        written_arrays = sorted({
            v for f in self.fields.values() if f.get("statement_id") == f["id"] and f["kind"] != NodeKind.PARAM
            for v in f.get("defines", ()) + f.get("weak_defines", ())
            if v in self.symbols and self.symbols[v].kind == "param" and self.symbols[v].is_array
        })
        uses = ((RETURN_VAR,) if self.returns_value else ()) + tuple(written_arrays)
        self.fields[mr_id] = dict(
            id=mr_id, kind=NodeKind.METHOD_RETURN, name=fn.name, code="RET",
            file=fn.span.file, line=end_line, col=fn.span.end_col, end_line=end_line,
            method_id=self.method_id, parent_id=self.method_id, depth=1,
            order=len(param_ids) + 1, statement_id=mr_id, uses=uses, type_name=fn.type_name,
        )

        nodes = {nid: CpgNode(**f) for nid, f in self.fields.items()}
        return MethodLowering(
            ast=fn,
            method_id=self.method_id,
            method_return_id=mr_id,
            param_ids=param_ids,
            statement_ids=self.statement_ids,
            symbols=self.symbols,
            nodes=nodes,
            call_ids=self.call_ids,
            warnings=self.warnings,
        )

    # --- statements ---

    def statement(self, stmt: AstNode, parent: int, depth: int, order: int = 0) -> None:
        kind = stmt.kind
        if kind == AstKind.BLOCK:
            bid = self.new(NodeKind.BLOCK, stmt, parent, depth, order=order)
            for i, child in enumerate(stmt.children):
                self.statement(child, bid, depth + 1, order=i)
            return

        if kind == AstKind.EXPR_STMT:
            sid = self.expression(stmt.children[0], parent, depth, order, statement_id=None)
            self.statement_ids[stmt.id] = sid
            self.finish_statement(sid, exprs=[stmt.children[0]])
            return

        if kind in (AstKind.IF, AstKind.WHILE):
            header = self.file.content[stmt.span.start:stmt.header_end]
            header_line, _ = self.file.position(stmt.header_end)
            sid = self.new(
                NodeKind.CONTROL_STRUCTURE, stmt, parent, depth, order=order,
                name="if" if kind == AstKind.IF else "while",
            )
            self.fields[sid].update(code=header, end_line=header_line, statement_id=sid)
            self.statement_ids[stmt.id] = sid
            cond = stmt.children[0]
            self.expression(cond, sid, depth + 1, 0, statement_id=sid)
            self.finish_statement(sid, exprs=[cond])
            for i, child in enumerate(stmt.children[1:], start=1):
                self.statement(child, sid, depth + 1, order=i)
            return

        if kind == AstKind.VAR_DECL:
            sid = self.new(
                NodeKind.LOCAL, stmt, parent, depth, order=order, name=stmt.name,
                type_name=stmt.type_name, is_array=stmt.is_array, array_size=stmt.array_size,
                statement_id=None,
            )
            self.fields[sid]["statement_id"] = sid
            self.statement_ids[stmt.id] = sid
            if self.symbols[stmt.name].node_id < 0:
                self.symbols[stmt.name].node_id = sid
            for i, child in enumerate(stmt.children):
                self.expression(child, sid, depth + 1, i, statement_id=sid)
            init = stmt.init
            self.finish_statement(sid, exprs=[init] if init is not None else [], strong=[stmt.name] if init is not None else [])
            return

        if kind == AstKind.ASSIGN:
            target, value = stmt.children
            sid = self.new(NodeKind.ASSIGN, stmt, parent, depth, order=order, name=stmt.name)
            self.fields[sid]["statement_id"] = sid
            self.statement_ids[stmt.id] = sid
            self.expression(target, sid, depth + 1, 0, statement_id=sid)
            self.expression(value, sid, depth + 1, 1, statement_id=sid)
            self.check_declared(target.name, target)
            if target.kind == AstKind.IDENTIFIER:
                self.finish_statement(sid, exprs=[value], strong=[target.name])
            else:
                # a[i] = e writes one element: a may-definition of the whole array
                self.finish_statement(sid, exprs=[target.children[1], value], weak=[target.name])
            return

        if kind == AstKind.RETURN:
            sid = self.new(NodeKind.RETURN, stmt, parent, depth, order=order)
            self.fields[sid]["statement_id"] = sid
            self.statement_ids[stmt.id] = sid
            for i, child in enumerate(stmt.children):
                self.expression(child, sid, depth + 1, i, statement_id=sid)
            if stmt.children:
                self.returns_value = True
                self.finish_statement(sid, exprs=stmt.children, strong=[RETURN_VAR])
            else:
                self.finish_statement(sid, exprs=[])
            return

        raise AssertionError(f"unexpected statement kind {kind}")

    def finish_statement(self, sid: int, exprs: List[AstNode], strong=(), weak=()) -> None:
        uses: List[str] = []
        weak_defs: List[str] = list(weak)
        for expr in exprs:
            for ident in _identifiers(expr):
                self.check_declared(ident.name, ident)
                if ident.name not in uses:
                    uses.append(ident.name)
            for call in _calls(expr):
                for arg in call.children:
                    if arg.kind == AstKind.IDENTIFIER:
                        sym = self.symbols.get(arg.name)
                        if sym is not None and sym.is_array and arg.name not in weak_defs:
                            weak_defs.append(arg.name)
        strong = tuple(strong)
        self.fields[sid].update(
            defines=strong,
            weak_defines=tuple(v for v in weak_defs if v not in strong),
            uses=tuple(uses),
        )

    def check_declared(self, name: str, ast: AstNode) -> None:
        if name in self.symbols:
            return
        message = f"undeclared identifier '{name}' in {self.fn.name}"
        if name in self.function_names:
            message = f"function name '{name}' used as a value in {self.fn.name}"
        warning = AnalysisWarning(file=ast.span.file, line=ast.span.start_line, message=message)
        if warning not in self.warnings:
            self.warnings.append(warning)

    # --- expressions ---

    def expression(self, expr: AstNode, parent: int, depth: int, order: int, statement_id: Optional[int]) -> int:
        kind = _EXPRESSION_KINDS[expr.kind]
        extra = {}
        if expr.kind in (AstKind.CALL, AstKind.IDENTIFIER):
            extra["name"] = expr.name
        elif expr.kind == AstKind.ARRAY_INDEX:
            extra["name"] = "[]"
        elif expr.kind in (AstKind.BINARY_OP, AstKind.UNARY_OP):
            extra["name"] = expr.op
        elif expr.kind == AstKind.INT_LITERAL:
            extra.update(value=expr.value, literal_kind="int")
        elif expr.kind == AstKind.STRING_LITERAL:
            extra.update(value=expr.value, literal_kind="string")

        node_id = self.new(kind, expr, parent, depth, order=order, **extra)
        # an expression statement is its own top expression
        self.fields[node_id]["statement_id"] = statement_id if statement_id is not None else node_id
        if kind == NodeKind.CALL:
            self.call_ids.append(node_id)
        stmt = self.fields[node_id]["statement_id"]
        for i, child in enumerate(expr.children):
            self.expression(child, node_id, depth + 1, i, statement_id=stmt)
        return node_id


def _identifiers(expr: AstNode) -> Iterator[AstNode]:
    for node in expr.walk():
        if node.kind == AstKind.IDENTIFIER:
            yield node


def _calls(expr: AstNode) -> Iterator[AstNode]:
    for node in expr.walk():
        if node.kind == AstKind.CALL:
            yield node


def lower_method(fn: AstNode, file: SourceFile, next_id: IdAllocator, function_names: Set[str]) -> MethodLowering:
    return _Lowerer(fn, file, next_id, function_names).lower()


def ast_edges(nodes: Dict[int, CpgNode]) -> List[CpgEdge]:
    return [
        CpgEdge(src=n.parent_id, dst=n.id, kind=EdgeKind.AST)
        for n in nodes.values() if n.parent_id is not None
    ]


def contains_edges(lowering: MethodLowering) -> List[CpgEdge]:
    return [
        CpgEdge(src=lowering.method_id, dst=n.id, kind=EdgeKind.CONTAINS)
        for n in lowering.nodes.values() if n.id != lowering.method_id
    ]
