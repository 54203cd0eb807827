"""
Typed graph elements of the Code Property Graph.
"""
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

RETURN_VAR = "$ret"


class NodeKind(str, Enum):
    METHOD = "Method"
    PARAM = "Param"
    LOCAL = "Local"
    CALL = "Call"
    OPERATOR = "Operator"
    IDENTIFIER = "Identifier"
    LITERAL = "Literal"
    ASSIGN = "Assign"
    CONTROL_STRUCTURE = "ControlStructure"
    RETURN = "Return"
    METHOD_RETURN = "MethodReturn"
    BLOCK = "Block"


class EdgeKind(str, Enum):
    AST = "AST"
    CFG = "CFG"
    REACHING_DEF = "REACHING_DEF"
    CDG = "CDG"
    CALL = "CALL"
    ARG = "ARG"
    CONTAINS = "CONTAINS"


class Binding(str, Enum):
    PARAM = "param"
    RETURN = "return"


RELATIONAL_OPERATORS = frozenset({"<", "<=", ">", ">=", "==", "!="})


class CpgNode(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    kind: NodeKind
    name: Optional[str] = None
    code: str
    file: str
    line: int
    col: int
    end_line: int
    method_id: Optional[int] = None
    parent_id: Optional[int] = None
    statement_id: Optional[int] = None
    depth: int = 0
    order: int = 0
    defines: Tuple[str, ...] = ()
    weak_defines: Tuple[str, ...] = ()
    uses: Tuple[str, ...] = ()
    type_name: Optional[str] = None
    is_array: bool = False
    array_size: Optional[int] = None
    value: Optional[str] = None
    literal_kind: Optional[str] = None

    @property
    def is_statement(self) -> bool:
        return self.statement_id == self.id

    @property
    def all_defines(self) -> Tuple[str, ...]:
        return self.defines + tuple(v for v in self.weak_defines if v not in self.defines)


class CpgEdge(BaseModel):
    model_config = ConfigDict(frozen=True)

    src: int
    dst: int
    kind: EdgeKind
    variable: Optional[str] = None
    index: Optional[int] = None
    binding: Optional[Binding] = None

    @property
    def flow_kind(self) -> str:
        """Label used in taint path steps."""
        if self.binding == Binding.PARAM:
            return "PARAM_BINDING"
        if self.binding == Binding.RETURN:
            return "RETURN_BINDING"
        return self.kind.value


class AnalysisWarning(BaseModel):
    model_config = ConfigDict(frozen=True)

    file: str
    line: int
    message: str


class BuildIssue(BaseModel):
    """One file that failed to lex or parse."""

    model_config = ConfigDict(frozen=True)

    file: str
    line: int
    col: int
    code: str
    message: str


class CfgFragment(BaseModel):
    entry: int
    exit: int
    nodes: List[int]
    edges: List[CpgEdge]
