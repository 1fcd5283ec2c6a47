"""
Line Normalization and n-gram Similarity
Token n-gram sets and Jaccard similarity used to pair near-duplicate programs
"""

import re
from typing import AbstractSet, List, Sequence, Set, Tuple

# identifier runs, or any single non-space symbol
_TOKEN_PATTERN = re.compile(r"\w+|[^\w\s]")

NGram = Tuple[str, ...]


def normalize_lines(raw_source: str) -> List[str]:
    """
    Split source text into lines

    Args:
        raw_source: Program text with LF or CRLF line endings

    Returns:
        Lines with trailing whitespace removed and trailing empty lines dropped
    """
    text = raw_source.replace("\r\n", "\n").replace("\r", "\n")
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def tokenize_code(text: str) -> List[str]:
    return _TOKEN_PATTERN.findall(text)


def tokenize_lines(lines: Sequence[str]) -> List[str]:
    """Concatenated token stream of all lines; line breaks carry no token"""
    tokens: List[str] = []
    for line in lines:
        tokens.extend(tokenize_code(line))
    return tokens


def ngram_set(lines: Sequence[str], n: int) -> Set[NGram]:
    """
    Set of contiguous n-token windows over the program's token stream

    Args:
        lines: Program lines
        n: Window size (n >= 1)

    Returns:
        Set of n-gram tuples; empty when there are fewer than n tokens
    """
    if n < 1:
        raise ValueError(f"n-gram size must be positive, got {n}")
    tokens = tokenize_lines(lines)
    return {tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)}


def jaccard(set_a: AbstractSet, set_b: AbstractSet) -> float:
    """|A ∩ B| / |A ∪ B|; two empty sets count as identical"""
    union = set_a | set_b
    if not union:
        return 1.0
    return len(set_a & set_b) / len(union)


def program_similarity(lines_a: Sequence[str], lines_b: Sequence[str], n: int = 3) -> float:
    return jaccard(ngram_set(lines_a, n), ngram_set(lines_b, n))
