from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Tuple


class AstKind(str, Enum):
    ROOT = "Root"
    TRANSLATION_UNIT = "TranslationUnit"
    FUNCTION_DEF = "FunctionDef"
    PARAM = "Param"
    VAR_DECL = "VarDecl"
    ASSIGN = "Assign"
    BINARY_OP = "BinaryOp"
    UNARY_OP = "UnaryOp"
    CALL = "Call"
    IDENTIFIER = "Identifier"
    INT_LITERAL = "IntLiteral"
    STRING_LITERAL = "StringLiteral"
    ARRAY_INDEX = "ArrayIndex"
    IF = "If"
    WHILE = "While"
    RETURN = "Return"
    BLOCK = "Block"
    EXPR_STMT = "ExprStmt"


STATEMENT_KINDS = frozenset({
    AstKind.VAR_DECL, AstKind.ASSIGN, AstKind.IF, AstKind.WHILE,
    AstKind.RETURN, AstKind.BLOCK, AstKind.EXPR_STMT,
})


@dataclass(frozen=True)
class Span:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int
    start: int
    end: int


@dataclass
class AstNode:
    kind: AstKind
    span: Span
    code: str
    children: List["AstNode"] = field(default_factory=list)
    name: Optional[str] = None
    op: Optional[str] = None
    value: Optional[str] = None
    type_name: Optional[str] = None
    is_array: bool = False
    array_size: Optional[int] = None
    has_init: bool = False
    header_end: Optional[int] = None
    id: int = -1

    @property
    def loc(self) -> Tuple[str, int, int, int, int]:
        s = self.span
        return (s.file, s.start_line, s.start_col, s.end_line, s.end_col)

    @property
    def child_ids(self) -> List[int]:
        return [c.id for c in self.children]

    @property
    def init(self) -> Optional["AstNode"]:
        return self.children[-1] if self.has_init else None

    @property
    def params(self) -> List["AstNode"]:
        return [c for c in self.children if c.kind == AstKind.PARAM]

    @property
    def body(self) -> Optional["AstNode"]:
        if self.kind == AstKind.FUNCTION_DEF:
            return self.children[-1]
        return None

    def walk(self) -> Iterator["AstNode"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def functions(self) -> Iterator["AstNode"]:
        for node in self.walk():
            if node.kind == AstKind.FUNCTION_DEF:
                yield node


def assign_ids(root: AstNode) -> AstNode:
    for i, node in enumerate(root.walk()):
        node.id = i
    return root
