"""
Lexer for Mini-C.

Tokens: keywords, C-style identifiers, decimal integers, double-quoted strings with
\\n \\t \\\\ \\" escapes, operators and punctuation. ``//`` and ``/* */`` comments are skipped.
"""
import re
from dataclasses import dataclass
from typing import List

from app.core.errors import LexError
from app.frontend.source import Location, SourceFile

KEYWORDS = frozenset({"int", "char", "void", "if", "else", "while", "return"})
TYPE_KEYWORDS = frozenset({"int", "char"})

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}

_TOKEN_SPEC = [
    ("ws", r"[ \t\r\n]+"),
    ("line_comment", r"//[^\n]*"),
    ("block_comment", r"/\*[\s\S]*?\*/"),
    ("open_comment", r"/\*"),
    ("str", r'"(?:[^"\\\n]|\\.)*"'),
    ("open_str", r'"'),
    ("int", r"[0-9]+"),
    ("name", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("op", r"&&|\|\||==|!=|<=|>=|[-+*/%<>=!]"),
    ("punct", r"[;,(){}\[\]]"),
    ("illegal", r"[\s\S]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))
_SKIP = {"ws", "line_comment", "block_comment"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    loc: Location
    end: int

    def __str__(self) -> str:
        return f"{self.kind}:{self.text}"


def decode_string(text: str) -> str:
    """Value of a string literal token (quotes stripped, escapes applied)."""
    out = []
    i = 1
    while i < len(text) - 1:
        ch = text[i]
        if ch == "\\":
            out.append(_ESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(file: SourceFile) -> List[Token]:
    tokens: List[Token] = []
    for m in _MASTER.finditer(file.content):
        kind = m.lastgroup
        if kind in _SKIP:
            continue
        text = m.group(0)
        loc = file.location(m.start())
        if kind == "open_comment":
            raise LexError(loc, "unterminated block comment")
        if kind == "open_str":
            raise LexError(loc, "unterminated string literal")
        if kind == "illegal":
            raise LexError(loc, f"illegal character {text!r}")
        if kind == "str":
            i = 1
            while i < len(text) - 1:
                if text[i] == "\\":
                    if text[i + 1] not in _ESCAPES:
                        raise LexError(file.location(m.start() + i), f"invalid escape '\\{text[i + 1]}'")
                    i += 2
                else:
                    i += 1
        if kind == "name":
            kind = "kw" if text in KEYWORDS else "id"
        tokens.append(Token(kind, text, loc, m.end()))
    return tokens
