"""
Error Taxonomy
Maps verifier outcomes to none/syntax/runtime/semantic and counts failing tasks
"""

from typing import Dict, Optional, Sequence

from app.schemas.models import ErrorClass, TaskResult, VerifierOutcome, VerifierStatus

_ERROR_CLASSES = {
    VerifierStatus.PASS: ErrorClass.NONE,
    VerifierStatus.SYNTAX_ERROR: ErrorClass.SYNTAX,
    VerifierStatus.RUNTIME_ERROR: ErrorClass.RUNTIME,
    VerifierStatus.TIMEOUT: ErrorClass.RUNTIME,
    VerifierStatus.WRONG_OUTPUT: ErrorClass.SEMANTIC,
}

FAILURE_CLASSES = (ErrorClass.SYNTAX, ErrorClass.RUNTIME, ErrorClass.SEMANTIC)


def classify_error(outcome: VerifierOutcome) -> ErrorClass:
    return _ERROR_CLASSES[outcome.status]


def greedy_error(task: TaskResult) -> Optional[ErrorClass]:
    """Class of the task's first sample; None when it was never verified"""
    outcome = task.samples[0].verifier
    return classify_error(outcome) if outcome is not None else None


def error_histogram(results: Sequence[TaskResult]) -> Dict[str, int]:
    """
    Failing tasks per error class

    Each task counts once, under the class of its first sample.
    """
    counts = {cls.value: 0 for cls in FAILURE_CLASSES}
    for task in results:
        error = greedy_error(task)
        if error is not None and error != ErrorClass.NONE:
            counts[error.value] += 1
    return counts


def semantic_error_rate(results: Sequence[TaskResult]) -> float:
    if not results:
        return 0.0
    return error_histogram(results)[ErrorClass.SEMANTIC.value] / len(results)


def relative_reduction(rate: float, baseline_rate: float) -> Optional[float]:
    """(baseline - rate) / baseline; undefined for a zero baseline"""
    if baseline_rate == 0:
        return None
    return (baseline_rate - rate) / baseline_rate
