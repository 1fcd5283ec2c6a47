"""Metrics Module - Pass@k, error taxonomy, rollback false-positive rate and cost reports"""

from app.metrics.cost import cost_report, format_cost_table
from app.metrics.errors import classify_error, error_histogram
from app.metrics.fpr import rollback_fpr
from app.metrics.passk import pass_at_k

__all__ = [
    "cost_report",
    "format_cost_table",
    "classify_error",
    "error_histogram",
    "rollback_fpr",
    "pass_at_k",
]
