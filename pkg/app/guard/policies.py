"""
Backtracking Policies
What a guarded session does after a prefix is rejected
"""

from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from app.config.run_config import GuardConfig
from app.schemas.models import AttemptRecord, BiasMap, Policy


class LineAction(str, Enum):
    RESAMPLE = "resample"            # roll back to the start of the line
    KEEP_BEST = "keep_best"          # attempts exhausted, keep the best one
    RESTART = "restart"              # clear the program, start again at line 1
    RESTORE_BEST = "restore_best"    # restart budget spent, restore the best round
    KEEP_REJECTED = "keep_rejected"  # no rollbacks left, keep the line as is


class SessionState(BaseModel):
    """Mutable state of one guarded session"""
    accepted_lines: List[str] = Field(default_factory=list)
    current_attempts: List[AttemptRecord] = Field(default_factory=list)
    tokens_used: int = 0
    lines_emitted: int = 0
    active_biases: BiasMap = Field(default_factory=BiasMap)
    rejection_history: List[int] = Field(default_factory=list)
    restarts: int = 0
    restarts_exhausted: bool = False

    @property
    def line_index(self) -> int:
        return len(self.accepted_lines) + 1


class PolicyDecision(BaseModel):
    action: LineAction
    bias: BiasMap = Field(default_factory=BiasMap)
    penalties: List[Tuple[int, float]] = Field(default_factory=list)
    kept: Optional[AttemptRecord] = None


def is_evaluable_line(text: str, comment_prefixes: Sequence[str] = ("#", "//")) -> bool:
    """False for blank lines and comment-only lines"""
    stripped = text.strip()
    if not stripped:
        return False
    return not any(stripped.startswith(prefix) for prefix in comment_prefixes)


def select_best_attempt(attempts: Sequence[AttemptRecord]) -> AttemptRecord:
    """argmax over scores; the earliest attempt wins ties"""
    best = attempts[0]
    for attempt in attempts[1:]:
        if attempt.score is not None and (best.score is None or attempt.score.value > best.score.value):
            best = attempt
    return best


def _attempts_left(state: SessionState, config: GuardConfig) -> bool:
    return len(state.current_attempts) < config.max_resamples


def policy_semguard_penalty(state: SessionState, rejected: AttemptRecord, config: GuardConfig) -> PolicyDecision:
    """Roll back and multiply lambda into the rejected line's first token"""
    if not _attempts_left(state, config):
        return PolicyDecision(action=LineAction.KEEP_BEST, kept=select_best_attempt(state.current_attempts))

    token = rejected.line.first_content_token
    if token is None:
        return PolicyDecision(action=LineAction.RESAMPLE, bias=state.active_biases)
    return PolicyDecision(
        action=LineAction.RESAMPLE,
        bias=state.active_biases.penalize(token, config.penalty_lambda),
        penalties=[(token, config.penalty_lambda)],
    )


def policy_semguard_random(state: SessionState, rejected: AttemptRecord, config: GuardConfig) -> PolicyDecision:
    """Roll back and resample without any bias"""
    if not _attempts_left(state, config):
        return PolicyDecision(action=LineAction.KEEP_BEST, kept=select_best_attempt(state.current_attempts))
    return PolicyDecision(action=LineAction.RESAMPLE)


def policy_edp(state: SessionState, rejected: AttemptRecord, config: GuardConfig) -> PolicyDecision:
    """
    Roll back with a decaying multi-line penalty

    The bias is rebuilt from the session's rejection history: the k-th most
    recent rejected first token gets lambda^(1/k), k = 1..d with
    d = min(3, t - 1, history length). Expects the current rejection to be in
    the history already.
    """
    if not _attempts_left(state, config):
        return PolicyDecision(action=LineAction.KEEP_BEST, kept=select_best_attempt(state.current_attempts))

    depth = min(3, state.line_index - 1, len(state.rejection_history))
    bias = BiasMap()
    penalties: List[Tuple[int, float]] = []
    for k in range(1, depth + 1):
        factor = config.penalty_lambda ** (1.0 / k)
        token = state.rejection_history[-k]
        bias = bias.penalize(token, factor)
        penalties.append((token, factor))
    return PolicyDecision(action=LineAction.RESAMPLE, bias=bias, penalties=penalties)


def policy_full_restart(state: SessionState, rejected: AttemptRecord, config: GuardConfig) -> PolicyDecision:
    """Regenerate from line 1, at most max_resamples times per session"""
    if state.restarts_exhausted:
        return PolicyDecision(action=LineAction.KEEP_REJECTED, kept=rejected)
    if state.restarts < config.max_resamples:
        return PolicyDecision(action=LineAction.RESTART)
    return PolicyDecision(action=LineAction.RESTORE_BEST)


PolicyFn = Callable[[SessionState, AttemptRecord, GuardConfig], PolicyDecision]

POLICIES: Dict[Policy, PolicyFn] = {
    Policy.SEMGUARD_PENALTY: policy_semguard_penalty,
    Policy.SEMGUARD_RANDOM: policy_semguard_random,
    Policy.EDP: policy_edp,
    Policy.FULL_RESTART: policy_full_restart,
}
