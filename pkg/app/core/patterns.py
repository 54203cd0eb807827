"""
Name patterns: ``*`` matches any run of characters, everything else is literal and
matching is case-sensitive.
"""
import re
from functools import lru_cache
from typing import Iterable, Pattern


@lru_cache(maxsize=512)
def compile_glob(pattern: str) -> Pattern[str]:
    return re.compile(".*".join(re.escape(part) for part in pattern.split("*")), re.DOTALL)


def glob_match(pattern: str, name: str) -> bool:
    return compile_glob(pattern).fullmatch(name) is not None


def any_match(patterns: Iterable[str], name: str) -> bool:
    return any(glob_match(p, name) for p in patterns)
