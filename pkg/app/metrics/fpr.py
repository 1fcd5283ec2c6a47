"""
Rollback False-Positive Rate
Per-task share of rollbacks whose flagged prefix was in fact acceptable
"""

import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.schemas.models import GenerationTrace, Judgment, RollbackOracle
from app.utils.exceptions import MetricsError
from app.utils.helpers import ensure_dir_exists

FPR_COLUMNS = ["task_id", "method", "rollbacks", "false_positives", "fpr"]


def judge_rollbacks(trace: GenerationTrace, oracle: RollbackOracle, task_id: str) -> Tuple[int, int]:
    """(N rollbacks, M judged false positives); every rollback must be judged"""
    total = len(trace.rollback_events())
    false_positives = 0
    for ordinal in range(total):
        judgment = oracle.judgment(task_id, ordinal)
        if judgment is None:
            raise MetricsError(
                f"oracle does not cover rollback {ordinal} of task {task_id}",
                details={"task_id": task_id, "rollback_index": ordinal},
            )
        if judgment == Judgment.FALSE_POSITIVE:
            false_positives += 1
    return total, false_positives


def rollback_fpr(trace: GenerationTrace, oracle: RollbackOracle, task_id: str) -> Optional[float]:
    """
    M / N over the trace's rollback events

    Returns:
        The rate, or None when the trace has no rollback
    """
    total, false_positives = judge_rollbacks(trace, oracle, task_id)
    if total == 0:
        return None
    return false_positives / total


def fpr_rows(traces: Dict[str, GenerationTrace], oracle: RollbackOracle, method: str) -> List[Dict]:
    """Per-task rows sorted by task id; tasks without rollbacks are left out"""
    rows = []
    for task_id in sorted(traces):
        total, false_positives = judge_rollbacks(traces[task_id], oracle, task_id)
        if total == 0:
            continue
        rows.append({
            "task_id": task_id,
            "method": method,
            "rollbacks": total,
            "false_positives": false_positives,
            "fpr": false_positives / total,
        })
    return rows


def fpr_summary(rows: Sequence[Dict], cutoff: float = 0.40) -> Dict:
    """Mean per-task FPR and the share of tasks at or below the cutoff"""
    if not rows:
        return {"tasks": 0, "mean_fpr": None, "share_at_or_below_cutoff": None, "cutoff": cutoff}
    rates = np.array([row["fpr"] for row in rows], dtype=np.float64)
    return {
        "tasks": len(rows),
        "mean_fpr": float(rates.mean()),
        "share_at_or_below_cutoff": float((rates <= cutoff).mean()),
        "cutoff": cutoff,
    }


def write_fpr_csv(path: str, rows: Sequence[Dict]) -> None:
    ensure_dir_exists(str(Path(path).parent))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=FPR_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
