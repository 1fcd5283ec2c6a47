"""
Submission Pairing
Matches each erroneous submission with its most similar correct submission
"""

import logging
from typing import Dict, List, Sequence, Tuple

from app.corpus.similarity import jaccard, ngram_set
from app.schemas.models import Submission, SubmissionMatch

logger = logging.getLogger(__name__)

PoolKey = Tuple[str, str]


def make_pair_id(erroneous: Submission, index: int) -> str:
    return f"{erroneous.problem_id}/{erroneous.user_id}/{index}"


def pair_submissions(
    correct_pool: Sequence[Submission],
    erroneous_pool: Sequence[Submission],
    threshold: float = 0.9,
    n: int = 3,
) -> List[SubmissionMatch]:
    """
    Pair erroneous submissions with near-duplicate correct ones

    Each erroneous submission is matched with the correct submission of
    highest n-gram Jaccard similarity (earliest in the pool on ties) and kept
    only when the similarity is strictly above the threshold.

    Args:
        correct_pool: Correct submissions of one user on one problem
        erroneous_pool: Erroneous submissions of the same user and problem
        threshold: Minimum similarity (exclusive)
        n: n-gram size

    Returns:
        Retained matches in erroneous-pool order
    """
    if not correct_pool or not erroneous_pool:
        return []

    correct_grams = [ngram_set(sub.source_lines, n) for sub in correct_pool]
    matches: List[SubmissionMatch] = []

    for index, erroneous in enumerate(erroneous_pool):
        grams = ngram_set(erroneous.source_lines, n)
        best_score, best_idx = -1.0, -1
        for idx, candidate in enumerate(correct_grams):
            score = jaccard(candidate, grams)
            if score > best_score:
                best_score, best_idx = score, idx

        pair_id = make_pair_id(erroneous, index)
        if best_score > threshold:
            matches.append(SubmissionMatch(
                pair_id=pair_id,
                correct=correct_pool[best_idx],
                erroneous=erroneous,
                jaccard=best_score,
            ))
        else:
            logger.debug(f"[PAIR] {pair_id}: best similarity {best_score:.3f} not above {threshold}")

    return matches


def group_pools(
    correct: Sequence[Submission],
    erroneous: Sequence[Submission],
) -> Dict[PoolKey, Tuple[List[Submission], List[Submission]]]:
    """Group verified submissions by (problem_id, user_id), preserving input order"""
    pools: Dict[PoolKey, Tuple[List[Submission], List[Submission]]] = {}
    for submission in correct:
        pools.setdefault((submission.problem_id, submission.user_id), ([], []))[0].append(submission)
    for submission in erroneous:
        pools.setdefault((submission.problem_id, submission.user_id), ([], []))[1].append(submission)
    return pools
