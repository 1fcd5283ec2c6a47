"""
Cost Report
Per-method pass@1, token and latency summary with a plain-text table renderer
"""

import logging
from typing import Dict, List, Sequence

import numpy as np
from tabulate import tabulate

from app.metrics.passk import task_pass_at_k
from app.schemas.models import CostReport, MethodCost, TaskResult

logger = logging.getLogger(__name__)


def method_cost(method: str, results: Sequence[TaskResult]) -> MethodCost:
    """
    Summarize one method

    Samples missing token or time metadata are excluded from the means and
    counted in excluded_samples.
    """
    tokens: List[int] = []
    walls: List[int] = []
    excluded = 0
    for task in results:
        for sample in task.samples:
            token_cost, wall_cost = sample.token_cost(), sample.wall_cost()
            if token_cost is None or wall_cost is None:
                excluded += 1
                continue
            tokens.append(token_cost)
            walls.append(wall_cost)

    if excluded:
        logger.warning(f"⚠️  [COST] {method}: {excluded} samples without cost metadata excluded")

    wall_array = np.array(walls, dtype=np.float64)
    return MethodCost(
        method=method,
        pass_at_1=float(np.mean([task_pass_at_k(task, 1) for task in results])) if results else 0.0,
        mean_tokens=float(np.mean(tokens)) if tokens else 0.0,
        mean_wall_ms=float(wall_array.mean()) if walls else 0.0,
        p50_wall_ms=float(np.percentile(wall_array, 50)) if walls else 0.0,
        p90_wall_ms=float(np.percentile(wall_array, 90)) if walls else 0.0,
        total_tokens=int(sum(tokens)),
        samples=len(tokens),
        excluded_samples=excluded,
    )


def cost_report(results: Dict[str, Sequence[TaskResult]]) -> CostReport:
    """CostReport with one row per method, ordered by method name"""
    return CostReport(methods=[method_cost(method, results[method]) for method in sorted(results)])


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Aligned plain-text table; floats rendered with four decimals, None as '-'"""
    # columns holding strings stay verbatim (ids like "007", preformatted numbers)
    text_columns = [i for i in range(len(headers)) if any(isinstance(row[i], str) for row in rows)]
    table = tabulate(
        [list(row) for row in rows],
        headers=list(headers),
        tablefmt="simple",
        floatfmt=".4f",
        missingval="-",
        disable_numparse=text_columns or False,
    )
    return table + "\n"


def format_cost_table(report: CostReport) -> str:
    headers = ["method", "pass@1", "mean_tokens", "mean_wall_ms", "p50_wall_ms", "p90_wall_ms", "samples", "excluded"]
    rows = [
        [m.method, m.pass_at_1, m.mean_tokens, m.mean_wall_ms, m.p50_wall_ms, m.p90_wall_ms, m.samples, m.excluded_samples]
        for m in report.methods
    ]
    return format_table(headers, rows)
