"""Guard Module - Line-level decode supervision with pluggable backtracking policies"""

from app.guard.engine import GuardEngine, run_batch, run_guarded
from app.guard.policies import POLICIES, is_evaluable_line, select_best_attempt
from app.guard.trace import read_trace, write_trace

__all__ = [
    "GuardEngine",
    "run_batch",
    "run_guarded",
    "POLICIES",
    "is_evaluable_line",
    "select_best_attempt",
    "read_trace",
    "write_trace",
]
