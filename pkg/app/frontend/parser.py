"""
Recursive-descent parser for Mini-C.

    unit      := function*
    function  := ('int' | 'char' | 'void') ID '(' params ')' block
    params    := 'void' | [param (',' param)*]
    param     := ('int' | 'char') ID ['[' [INT] ']']
    block     := '{' stmt* '}'
    stmt      := block | decl | if | while | return | expr ['=' expr] ';'
    decl      := ('int' | 'char') ID ['[' INT ']'] ['=' expr] ';'
    expr      := binary operators || && == != < <= > >= + - * / % (C precedence),
                 unary - !, calls ID(args), indexing ID[expr], literals, identifiers

Parsing is all-or-nothing per file; no nodes are fabricated on error.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

from app.core.errors import LexError, ParseError, ParseFailed
from app.core.logging_config import get_logger
from app.frontend.ast import AstKind, AstNode, Span, assign_ids
from app.frontend.lexer import TYPE_KEYWORDS, Token, decode_string, tokenize
from app.frontend.source import SourceFile

logger = get_logger("frontend.parser")

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]
_RETURN_TYPES = TYPE_KEYWORDS | {"void"}
# bounds parser recursion and the depth of the trees every later pass walks
MAX_NESTING = 64
MAX_AST_DEPTH = 256


class _Parser:
    def __init__(self, file: SourceFile, tokens: List[Token]):
        self.file = file
        self.tokens = tokens
        self.pos = 0
        self.last_end = 0
        self.nesting = 0

    # --- token helpers ---

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in ("kw", "op", "punct") and tok.text in texts

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        self.last_end = tok.end
        return tok

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        if tok is None:
            return ParseError(self.file.location(len(self.file.content)), expected, "end of file")
        return ParseError(tok.loc, expected, f"'{tok.text}'")

    def expect(self, text: str, expected: Optional[str] = None) -> Token:
        if not self.at(text):
            raise self.fail(expected or f"'{text}'")
        return self.advance()

    def expect_id(self, expected: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "id":
            raise self.fail(expected)
        return self.advance()

    @contextmanager
    def nested(self):
        if self.nesting >= MAX_NESTING:
            raise self.fail(f"at most {MAX_NESTING} levels of nesting")
        self.nesting += 1
        try:
            yield
        finally:
            self.nesting -= 1

    def node(self, kind: AstKind, start: int, **attrs) -> AstNode:
        end = self.last_end
        sl, sc = self.file.position(start)
        el, ec = self.file.position(end)
        span = Span(self.file.path, sl, sc, el, ec, start, end)
        return AstNode(kind=kind, span=span, code=self.file.content[start:end], **attrs)

    # --- declarations ---

    def translation_unit(self) -> AstNode:
        functions = []
        while self.peek() is not None:
            functions.append(self.function())
        content = self.file.content
        el, ec = self.file.position(len(content))
        span = Span(self.file.path, 1, 1, el, ec, 0, len(content))
        return AstNode(
            kind=AstKind.TRANSLATION_UNIT, span=span, code=content,
            children=functions, name=self.file.path,
        )

    def function(self) -> AstNode:
        tok = self.peek()
        if not self.at(*_RETURN_TYPES):
            raise self.fail("function definition")
        start = tok.loc.offset
        ret_type = self.advance().text
        name = self.expect_id("function name").text
        self.expect("(")
        params = self.param_list()
        self.expect(")")
        if not self.at("{"):
            raise self.fail("'{'")
        body = self.block()
        return self.node(
            AstKind.FUNCTION_DEF, start,
            children=params + [body], name=name, type_name=ret_type,
        )

    def param_list(self) -> List[AstNode]:
        if self.at(")"):
            return []
        if self.at("void") and self.peek(1) is not None and self.peek(1).text == ")":
            self.advance()
            return []
        params = [self.param()]
        while self.at(","):
            self.advance()
            params.append(self.param())
        return params

    def param(self) -> AstNode:
        if not self.at(*TYPE_KEYWORDS):
            raise self.fail("parameter or ')'")
        start = self.peek().loc.offset
        type_name = self.advance().text
        name = self.expect_id("parameter name").text
        is_array = False
        size = None
        if self.at("["):
            self.advance()
            is_array = True
            if self.peek() is not None and self.peek().kind == "int":
                size = int(self.advance().text)
            self.expect("]")
        return self.node(
            AstKind.PARAM, start, name=name, type_name=type_name,
            is_array=is_array, array_size=size,
        )

    # --- statements ---

    def block(self) -> AstNode:
        start = self.expect("{").loc.offset
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise self.fail("'}'")
            stmts.append(self.statement())
        self.advance()
        return self.node(AstKind.BLOCK, start, children=stmts)

    def statement(self) -> AstNode:
        with self.nested():
            return self._statement()

    def _statement(self) -> AstNode:
        if self.at("{"):
            return self.block()
        if self.at(*TYPE_KEYWORDS):
            return self.declaration()
        if self.at("if"):
            return self.if_statement()
        if self.at("while"):
            return self.while_statement()
        if self.at("return"):
            return self.return_statement()
        if self.at("else"):
            raise self.fail("statement")
        return self.simple_statement()

    def declaration(self) -> AstNode:
        start = self.peek().loc.offset
        type_name = self.advance().text
        name = self.expect_id("variable name").text
        children = []
        is_array = False
        size = None
        if self.at("["):
            self.advance()
            tok = self.peek()
            if tok is None or tok.kind != "int":
                raise self.fail("constant array size")
            self.advance()
            size = int(tok.text)
            children.append(self.node(AstKind.INT_LITERAL, tok.loc.offset, value=tok.text))
            is_array = True
            self.expect("]")
        has_init = False
        if self.at("="):
            self.advance()
            children.append(self.expression())
            has_init = True
        self.expect(";")
        return self.node(
            AstKind.VAR_DECL, start, children=children, name=name, type_name=type_name,
            is_array=is_array, array_size=size, has_init=has_init,
        )

    def if_statement(self) -> AstNode:
        start = self.advance().loc.offset
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        header_end = self.last_end
        then = self.statement()
        children = [cond, then]
        if self.at("else"):
            self.advance()
            children.append(self.statement())
        return self.node(AstKind.IF, start, children=children, header_end=header_end)

    def while_statement(self) -> AstNode:
        start = self.advance().loc.offset
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        header_end = self.last_end
        body = self.statement()
        return self.node(AstKind.WHILE, start, children=[cond, body], header_end=header_end)

    def return_statement(self) -> AstNode:
        start = self.advance().loc.offset
        children = []
        if not self.at(";"):
            children.append(self.expression())
        self.expect(";")
        return self.node(AstKind.RETURN, start, children=children)

    def simple_statement(self) -> AstNode:
        start = self.peek().loc.offset
        expr = self.expression()
        if self.at("="):
            if expr.kind not in (AstKind.IDENTIFIER, AstKind.ARRAY_INDEX):
                raise self.fail("';'")
            self.advance()
            value = self.expression()
            self.expect(";")
            return self.node(AstKind.ASSIGN, start, children=[expr, value], name=expr.name)
        self.expect(";", "';' or '='")
        return self.node(AstKind.EXPR_STMT, start, children=[expr])

    # --- expressions ---

    def expression(self) -> AstNode:
        with self.nested():
            return self._binary(0)

    def _binary(self, level: int) -> AstNode:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        start = self.peek().loc.offset if self.peek() is not None else len(self.file.content)
        left = self._binary(level + 1)
        while self.at(*_BINARY_LEVELS[level]):
            op = self.advance().text
            right = self._binary(level + 1)
            left = self.node(AstKind.BINARY_OP, start, children=[left, right], op=op)
        return left

    def unary(self) -> AstNode:
        if self.at("-", "!"):
            tok = self.advance()
            with self.nested():
                operand = self.unary()
            return self.node(AstKind.UNARY_OP, tok.loc.offset, children=[operand], op=tok.text)
        return self.postfix()

    def postfix(self) -> AstNode:
        tok = self.peek()
        if tok is not None and tok.kind == "id":
            nxt = self.peek(1)
            if nxt is not None and nxt.kind == "punct" and nxt.text == "(":
                return self.call()
            if nxt is not None and nxt.kind == "punct" and nxt.text == "[":
                return self.index()
        return self.primary()

    def call(self) -> AstNode:
        tok = self.advance()
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expression())
            while self.at(","):
                self.advance()
                args.append(self.expression())
        self.expect(")", "',' or ')'")
        return self.node(AstKind.CALL, tok.loc.offset, children=args, name=tok.text)

    def index(self) -> AstNode:
        tok = self.advance()
        base = self.node(AstKind.IDENTIFIER, tok.loc.offset, name=tok.text)
        self.expect("[")
        idx = self.expression()
        self.expect("]")
        return self.node(AstKind.ARRAY_INDEX, tok.loc.offset, children=[base, idx], name=tok.text)

    def primary(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise self.fail("expression")
        if tok.kind == "int":
            self.advance()
            return self.node(AstKind.INT_LITERAL, tok.loc.offset, value=tok.text)
        if tok.kind == "str":
            self.advance()
            return self.node(AstKind.STRING_LITERAL, tok.loc.offset, value=decode_string(tok.text))
        if tok.kind == "id":
            self.advance()
            return self.node(AstKind.IDENTIFIER, tok.loc.offset, name=tok.text)
        if self.at("("):
            self.advance()
            inner = self.expression()
            self.expect(")")
            return inner
        raise self.fail("expression")


def _check_depth(file: SourceFile, unit: AstNode) -> None:
    stack = [(unit, 0)]
    while stack:
        node, depth = stack.pop()
        if depth > MAX_AST_DEPTH:
            raise ParseError(
                file.location(node.span.start),
                f"an expression at most {MAX_AST_DEPTH} levels deep",
                f"{depth} levels",
            )
        stack.extend((c, depth + 1) for c in node.children)


def parse_file(file: SourceFile) -> AstNode:
    """TranslationUnit for one file; raises LexError or ParseError."""
    tokens = tokenize(file)
    parser = _Parser(file, tokens)
    try:
        unit = parser.translation_unit()
    except RecursionError:
        raise parser.fail(f"at most {MAX_NESTING} levels of nesting") from None
    _check_depth(file, unit)
    return unit


def _root(units: Sequence[AstNode]) -> AstNode:
    span = Span("", 0, 0, 0, 0, 0, 0)
    return assign_ids(AstNode(kind=AstKind.ROOT, span=span, code="", children=list(units)))


@dataclass
class ParseResult:
    root: AstNode
    files: List[SourceFile]
    errors: List[Union[LexError, ParseError]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def parse_codebase(files: Sequence[SourceFile]) -> ParseResult:
    """Parses every file, keeping the files that succeed and collecting the rest as errors."""
    units, errors = [], []
    for f in sorted(files, key=lambda f: f.path):
        try:
            units.append(parse_file(f))
        except (LexError, ParseError) as e:
            logger.warning("parse_failed", file=f.path, error=e.message)
            errors.append(e)
    return ParseResult(root=_root(units), files=sorted(files, key=lambda f: f.path), errors=errors)


def parse(files: Sequence[SourceFile]) -> AstNode:
    result = parse_codebase(files)
    if result.errors:
        raise ParseFailed(result.errors)
    return result.root
