"""Evaluator Module - Semantic evaluator contract, clients and calibration"""

from app.evaluator.base import SemanticEvaluator, build_evaluator, classify, score_fragment
from app.evaluator.calibration import bce_loss, fragment_accuracy_report

__all__ = [
    "SemanticEvaluator",
    "build_evaluator",
    "classify",
    "score_fragment",
    "bce_loss",
    "fragment_accuracy_report",
]
