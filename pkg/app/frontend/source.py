"""
Source files of an analyzed codebase, with a line index for location math.
"""
import bisect
import fnmatch
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

from app.core.errors import IoError
from app.core.logging_config import get_logger

logger = get_logger("frontend.source")


@dataclass(frozen=True)
class Location:
    file: str
    line: int
    col: int
    offset: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class SourceFile:
    path: str
    content: str
    line_index: Tuple[Tuple[int, int], ...] = field(init=False, repr=False, compare=False)
    _starts: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = _index_lines(self.content)
        object.__setattr__(self, "line_index", index)
        object.__setattr__(self, "_starts", tuple(s for s, _ in index))

    @property
    def line_count(self) -> int:
        return len(self.line_index)

    def line_text(self, line: int) -> str:
        start, end = self.line_index[line - 1]
        return self.content[start:end].rstrip("\r")

    def lines(self, start_line: int, end_line: int) -> List[str]:
        return [self.line_text(n) for n in range(start_line, end_line + 1)]

    def text(self, start_line: int, end_line: int) -> str:
        """Verbatim content of a line range, including the final newline when present."""
        start = self.line_index[start_line - 1][0]
        if end_line < self.line_count:
            return self.content[start:self.line_index[end_line][0]]
        return self.content[start:]

    def position(self, offset: int) -> Tuple[int, int]:
        """1-based (line, col) of a character offset; offsets past the end clamp to the last line."""
        if not self.line_index:
            return 1, offset + 1
        i = max(bisect.bisect_right(self._starts, offset) - 1, 0)
        return i + 1, offset - self._starts[i] + 1

    def location(self, offset: int) -> Location:
        line, col = self.position(offset)
        return Location(self.path, line, col, offset)

    def offset_of(self, line: int, col: int) -> int:
        if not self.line_index:
            return col - 1
        return self.line_index[line - 1][0] + col - 1


def _index_lines(content: str) -> Tuple[Tuple[int, int], ...]:
    index = []
    start = 0
    while True:
        nl = content.find("\n", start)
        if nl < 0:
            break
        index.append((start, nl))
        start = nl + 1
    if start < len(content):
        index.append((start, len(content)))
    return tuple(index)


def load_sources(root: Path, glob: str = "*.c") -> List[SourceFile]:
    """
    Reads every file under ``root`` matching ``glob`` in lexicographic relative-path order.
    Files whose resolved path leaves ``root`` (symlinks) are skipped.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"source root is not a directory: {root}", detail={"path": str(root)})
    real_root = root.resolve()

    files = []
    try:
        candidates = sorted(p for p in root.rglob("*") if p.is_file())
    except OSError as e:
        raise IoError(f"cannot enumerate {root}: {e}")

    for p in candidates:
        rel = p.relative_to(root).as_posix()
        if not fnmatch.fnmatchcase(p.name, glob):
            continue
        resolved = p.resolve()
        if real_root != resolved and real_root not in resolved.parents:
            logger.warning("source_outside_root", path=rel)
            continue
        try:
            content = p.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            raise IoError(f"{rel} is not valid UTF-8 text", detail={"path": rel})
        except OSError as e:
            raise IoError(f"cannot read {rel}: {e}", detail={"path": rel})
        files.append(SourceFile(path=rel, content=content))

    files.sort(key=lambda f: f.path)
    logger.info("sources_loaded", root=str(root), files=len(files))
    return files
