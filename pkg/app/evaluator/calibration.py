"""
Evaluator Calibration
Binary cross-entropy and fragment-level accuracy of an evaluator over a labeled corpus
"""

import logging
from typing import List, Sequence

import numpy as np

from app.evaluator.base import SemanticEvaluator, classify
from app.schemas.models import CalibrationReport, Decision, EvaluatorRequest, FragmentSample, Label
from app.utils.exceptions import MetricsError, TransportError

logger = logging.getLogger(__name__)

EPSILON = 1e-7


def bce_loss(labels: Sequence[int], scores: Sequence[float]) -> float:
    """
    Mean binary cross-entropy with scores clamped to [eps, 1 - eps]

    Args:
        labels: 0/1 ground truth
        scores: Predicted probabilities of label 1

    Returns:
        Non-negative loss
    """
    if len(labels) != len(scores):
        raise ValueError(f"length mismatch: {len(labels)} labels, {len(scores)} scores")
    if not labels:
        raise ValueError("bce_loss needs at least one sample")
    y = np.asarray(labels, dtype=np.float64)
    p = np.clip(np.asarray(scores, dtype=np.float64), EPSILON, 1.0 - EPSILON)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _rate(numerator: int, denominator: int):
    return numerator / denominator if denominator else None


async def fragment_accuracy_report(
    client: SemanticEvaluator,
    corpus: Sequence[FragmentSample],
    threshold: float = 0.5,
) -> CalibrationReport:
    """
    Score every fragment and summarize against its label

    Fragments whose scoring fails on transport are counted as errors and left
    out of every rate.
    """
    if not corpus:
        raise MetricsError("calibration corpus is empty")

    labels: List[int] = []
    scores: List[float] = []
    tp = tn = fp = fn = errors = 0

    for fragment in corpus:
        request = EvaluatorRequest(question=fragment.question, prefix_lines=fragment.prefix_lines)
        try:
            score = await client.score(request)
        except TransportError as e:
            logger.error(f"[CALIBRATE] {fragment.pair_id}: {e.message}")
            errors += 1
            continue

        accepted = classify(score, threshold) == Decision.ACCEPT
        positive = fragment.label == Label.CORRECT
        if accepted and positive:
            tp += 1
        elif accepted:
            fp += 1
        elif positive:
            fn += 1
        else:
            tn += 1
        labels.append(int(fragment.label))
        scores.append(score.value)

    scored = tp + tn + fp + fn
    report = CalibrationReport(
        accuracy=_rate(tp + tn, scored),
        false_positive_rate=_rate(fp, fp + tn),
        false_negative_rate=_rate(fn, fn + tp),
        bce=bce_loss(labels, scores) if labels else None,
        threshold=threshold,
        true_positives=tp,
        true_negatives=tn,
        false_positives=fp,
        false_negatives=fn,
        errors=errors,
    )
    logger.info(f"[CALIBRATE] {scored} fragments scored, {errors} errors, accuracy={report.accuracy}")
    return report
