"""
Pass@k
Unbiased pass@k estimator per task and averaged over tasks
"""

from typing import Dict, Sequence, Tuple

import numpy as np

from app.schemas.models import TaskResult, VerifierStatus
from app.utils.exceptions import MetricsError


def pass_at_k(n: int, c: int, k: int) -> float:
    """
    1 - C(n-c, k) / C(n, k) in product form

    Args:
        n: Samples generated
        c: Samples passing every test
        k: Draw size

    Returns:
        Probability that a size-k draw holds at least one passing sample
    """
    if n < 1 or k < 1 or c < 0:
        raise MetricsError(f"invalid pass@k arguments n={n}, c={c}, k={k}")
    if c > n:
        raise MetricsError(f"c={c} exceeds n={n}")
    if k > n:
        raise MetricsError(f"k={k} exceeds n={n}")
    if n - c < k:
        return 1.0
    return float(1.0 - np.prod(1.0 - k / np.arange(n - c + 1, n + 1)))


def count_passing(task: TaskResult) -> int:
    return sum(
        1 for sample in task.samples
        if sample.verifier is not None and sample.verifier.status == VerifierStatus.PASS
    )


def task_pass_at_k(task: TaskResult, k: int) -> float:
    n = len(task.samples)
    if k > n:
        raise MetricsError(f"task {task.task_id}: k={k} exceeds n={n}", details={"task_id": task.task_id})
    return pass_at_k(n, count_passing(task), k)


def mean_pass_at_k(results: Sequence[TaskResult], k: int) -> Tuple[Dict[str, float], float]:
    """Per-task pass@k and its mean over tasks"""
    if not results:
        raise MetricsError("no task results")
    per_task = {task.task_id: task_pass_at_k(task, k) for task in results}
    return per_task, float(np.mean(list(per_task.values())))
