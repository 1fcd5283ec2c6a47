"""
Line Diffing and Prefix Slicing
Locates where an erroneous program first departs from its correct twin and
cuts both programs into labeled prefixes at that line
"""

import logging
from typing import List, Optional, Sequence, Tuple

from app.schemas.models import CodePair, DivergenceSource, FragmentSample, Label, Split, Submission
from app.utils.exceptions import NoDivergenceError, SliceError

logger = logging.getLogger(__name__)


def lcs_alignment(xs: Sequence[str], ys: Sequence[str]) -> List[Tuple[int, int]]:
    """
    Matched index pairs of a longest common subsequence

    Args:
        xs: First line sequence
        ys: Second line sequence

    Returns:
        Ascending list of 0-based (x_index, y_index) pairs of identical lines
    """
    m, n = len(xs), len(ys)
    # suffix[i][j] = LCS length of xs[i:] and ys[j:]
    suffix = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        row, below = suffix[i], suffix[i + 1]
        for j in range(n - 1, -1, -1):
            if xs[i] == ys[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])

    pairs: List[Tuple[int, int]] = []
    i = j = 0
    while i < m and j < n:
        if xs[i] == ys[j] and suffix[i][j] == suffix[i + 1][j + 1] + 1:
            pairs.append((i, j))
            i += 1
            j += 1
        elif suffix[i + 1][j] >= suffix[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def diff_line_indices(correct_lines: Sequence[str], erroneous_lines: Sequence[str]) -> List[int]:
    """
    1-based erroneous-side indices where the two programs differ

    Equal-length programs are compared position by position. Otherwise lines
    are aligned by LCS: every unaligned erroneous line is reported, and a run
    of correct-side lines missing from the erroneous program is reported at
    the erroneous line that follows it (len + 1 at the end) unless an
    unaligned erroneous line in the same gap already covers it.
    """
    if len(correct_lines) == len(erroneous_lines):
        return [
            i for i, (c_line, e_line) in enumerate(zip(correct_lines, erroneous_lines), 1)
            if c_line != e_line
        ]

    pairs = lcs_alignment(correct_lines, erroneous_lines)
    indices = set()
    # sentinel closing the last gap
    anchors = pairs + [(len(correct_lines), len(erroneous_lines))]
    prev_c, prev_e = -1, -1
    for c_idx, e_idx in anchors:
        missing_correct = c_idx - prev_c - 1
        extra_erroneous = range(prev_e + 1, e_idx)
        indices.update(e + 1 for e in extra_erroneous)
        if missing_correct > 0 and not extra_erroneous:
            indices.add(e_idx + 1)
        prev_c, prev_e = c_idx, e_idx
    return sorted(indices)


def diff_indices(correct: Submission, erroneous: Submission) -> List[int]:
    """Index set D of a code pair; empty for identical programs"""
    return diff_line_indices(correct.source_lines, erroneous.source_lines)


def first_divergence(indices: Sequence[int]) -> int:
    """i* = min D"""
    if not indices:
        raise NoDivergenceError("no divergence")
    return min(indices)


def counterpart_index(
    correct_lines: Sequence[str],
    erroneous_lines: Sequence[str],
    e_idx: int,
) -> Optional[int]:
    """
    0-based correct-side line standing opposite erroneous line e_idx

    Equal-length programs pair lines by position. Otherwise an LCS-aligned
    line maps to its partner, or to the first correct line missing just
    before it; an unaligned line maps into the correct lines of the same
    gap by offset, falling back to the next aligned correct line.

    Returns:
        Correct-side index, or None when the gap has no correct line at all
    """
    if len(correct_lines) == len(erroneous_lines):
        return e_idx

    anchors = lcs_alignment(correct_lines, erroneous_lines) + [(len(correct_lines), len(erroneous_lines))]
    prev_c, prev_e = -1, -1
    for c_idx, a_idx in anchors:
        if a_idx >= e_idx:
            gap = c_idx - prev_c - 1
            if a_idx == e_idx:
                return prev_c + 1 if gap > 0 else c_idx
            if gap > 0:
                return prev_c + 1 + min(e_idx - prev_e - 1, gap - 1)
            return c_idx if c_idx < len(correct_lines) else None
        prev_c, prev_e = c_idx, a_idx
    return None


def slice_pair(
    pair: CodePair,
    question: str = "",
    split: Split = Split.TRAIN,
) -> Tuple[FragmentSample, FragmentSample]:
    """
    Cut a pair into its correct and incorrect semantic prefixes

    Both prefixes share the erroneous program's first i*-1 lines and end with
    line i* of their own program, so they differ exactly in the final line.
    The correct final line is the counterpart of erroneous line i* under the
    line alignment. For positional divergences the shared lines equal the
    correct program's.

    Args:
        pair: Code pair with its divergence line
        question: Problem statement attached to the fragments
        split: Split assigned to the pair's problem

    Returns:
        (correct fragment labeled 1, incorrect fragment labeled 0)
    """
    cut = pair.divergence_line
    correct_lines = pair.correct.source_lines
    erroneous_lines = pair.erroneous.source_lines
    limit = len(erroneous_lines)
    if pair.divergence_source == DivergenceSource.POSITIONAL_DIFF:
        limit = min(limit, len(correct_lines))
    if cut < 1 or cut > limit:
        raise SliceError(
            f"divergence line {cut} outside the program",
            details={"reason": "divergence_out_of_range", "pair_id": pair.pair_id},
        )

    counterpart = counterpart_index(correct_lines, erroneous_lines, cut - 1)
    if counterpart is None:
        raise SliceError(
            f"line {cut} has no counterpart in the correct program",
            details={"reason": "no_counterpart", "pair_id": pair.pair_id},
        )

    shared = list(erroneous_lines[:cut - 1])
    correct_final = correct_lines[counterpart]
    erroneous_final = erroneous_lines[cut - 1]
    if correct_final == erroneous_final:
        raise SliceError(
            f"line {cut} is identical in both programs",
            details={"reason": "degenerate_slice", "pair_id": pair.pair_id},
        )

    common = dict(problem_id=pair.correct.problem_id, question=question, pair_id=pair.pair_id, split=split)
    correct_fragment = FragmentSample(prefix_lines=shared + [correct_final], label=Label.CORRECT, **common)
    incorrect_fragment = FragmentSample(prefix_lines=shared + [erroneous_final], label=Label.INCORRECT, **common)

    logger.debug(
        f"[SLICE] {pair.pair_id}: cut at line {cut} against correct line {counterpart + 1} "
        f"({pair.divergence_source.value})"
    )
    return correct_fragment, incorrect_fragment
