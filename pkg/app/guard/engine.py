"""
Guarded Decoding Engine
Grows a program line by line, scores each prefix and backtracks on rejection
"""

import asyncio
import logging
from typing import Any, Awaitable, Callable, List, Optional, Sequence, Tuple, TypeVar

from app.config.run_config import GuardConfig
from app.evaluator.base import SemanticEvaluator, classify
from app.generator.base import LineGenerator
from app.guard.policies import POLICIES, LineAction, SessionState, is_evaluable_line
from app.guard.trace import TraceRecorder, make_clock
from app.schemas.models import (
    AttemptRecord,
    AttemptVerdict,
    BiasMap,
    Decision,
    EvaluatorRequest,
    EventKind,
    GuardResult,
    LineProposal,
    Outcome,
    SamplingParams,
)
from app.utils.helpers import derive_seed

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class _Restart(Exception):
    """Internal signal: the program was cleared or replaced, continue at the new line index"""


class _Finished(Exception):
    """Internal signal: the generator ended the program"""


class _BudgetExhausted(Exception):
    pass


def render_code(lines: Sequence[str]) -> str:
    return "\n".join(lines) + "\n" if lines else ""


class GuardEngine:
    """One guarded decoding session per run() call"""

    def __init__(self, generator: LineGenerator, evaluator: Optional[SemanticEvaluator], config: GuardConfig):
        """
        Initialize guard engine

        Args:
            generator: Line proposer
            evaluator: Prefix scorer; unused by the unguided policy
            config: Threshold, penalty, attempt budget, policy and budgets
        """
        self.generator = generator
        self.evaluator = evaluator
        self.config = config
        self.policy_fn = POLICIES.get(config.policy)

    async def run(self, question: str) -> GuardResult:
        """
        Run one session

        Args:
            question: Problem statement passed to both clients

        Returns:
            GuardResult with code, full trace and outcome
        """
        self.state = SessionState()
        self.recorder = TraceRecorder(make_clock(self.config.clock))
        self.restart_round = 0
        # (first rejected score, program of the round, rejected attempt index)
        self.rounds: List[Tuple[float, List[str], int]] = []

        outcome, error = Outcome.COMPLETED, None
        logger.debug(f"[GUARD] Session start (policy={self.config.policy.value}, seed={self.config.seed})")

        try:
            while True:
                if self._over_budget(self.state.line_index):
                    raise _BudgetExhausted()
                try:
                    kept = await self._generate_line(question)
                except _Restart:
                    continue
                self.state.accepted_lines.append(kept.text)
                self.state.current_attempts = []
                self.state.active_biases = BiasMap()
                if kept.finished_program:
                    raise _Finished()
        except _Finished:
            pass
        except _BudgetExhausted:
            outcome = Outcome.BUDGET_EXHAUSTED
            logger.warning(f"⚠️  [GUARD] Budget exhausted at line {self.state.line_index}")
        except Exception as e:
            outcome, error = Outcome.FAILED, str(e)
            logger.error(f"[GUARD] Session failed at line {self.state.line_index}: {error}")
            self.recorder.emit(EventKind.SESSION_FAILED, self.state.line_index, 0)

        if outcome != Outcome.FAILED:
            self.recorder.emit(EventKind.SESSION_DONE, len(self.state.accepted_lines), 0)

        trace = self.recorder.build()
        logger.debug(
            f"[GUARD] Session {outcome.value}: {len(self.state.accepted_lines)} lines, "
            f"{trace.totals.tokens} tokens, {trace.totals.rollbacks} rollbacks"
        )
        return GuardResult(
            code=render_code(self.state.accepted_lines),
            trace=trace,
            outcome=outcome,
            error=error,
        )

    def _over_budget(self, line_index: int) -> bool:
        return line_index > self.config.max_lines or self.state.tokens_used >= self.config.max_total_tokens

    def _sampling(self, line_index: int, attempt_index: int) -> SamplingParams:
        return SamplingParams(
            temperature=self.config.temperature,
            top_p=self.config.top_p,
            seed=derive_seed(self.config.seed, self.restart_round, line_index, attempt_index),
        )

    def _needs_score(self, line_index: int, proposal: LineProposal) -> bool:
        if self.policy_fn is None or self.evaluator is None:
            return False
        # the first line is never scored
        return line_index >= 2 and is_evaluable_line(proposal.text, self.config.comment_prefixes)

    async def _generate_line(self, question: str) -> LineProposal:
        """Propose, score and backtrack until line t is decided"""
        state, recorder = self.state, self.recorder
        t = state.line_index
        attempt_index = 0

        while True:
            if attempt_index > 0 and state.tokens_used >= self.config.max_total_tokens:
                raise _BudgetExhausted()
            attempt_index += 1

            proposal = await self.generator.propose(
                question, list(state.accepted_lines), state.active_biases, self._sampling(t, attempt_index)
            )
            state.tokens_used += proposal.token_count
            state.lines_emitted += 1
            recorder.emit(
                EventKind.LINE_PROPOSED, t, attempt_index,
                token_id=proposal.first_content_token, tokens_delta=proposal.token_count,
            )

            if proposal.finished_program and not proposal.text:
                raise _Finished()

            if not self._needs_score(t, proposal):
                recorder.emit(EventKind.LINE_ACCEPTED, t, attempt_index)
                return proposal

            score = await self.evaluator.score(
                EvaluatorRequest(question=question, prefix_lines=state.accepted_lines + [proposal.text])
            )
            recorder.emit(EventKind.PREFIX_SCORED, t, attempt_index, score=score.value)
            attempt = AttemptRecord(attempt_index=attempt_index, line=proposal, score=score)
            state.current_attempts.append(attempt)

            if classify(score, self.config.threshold) == Decision.ACCEPT:
                attempt.verdict = AttemptVerdict.ACCEPTED
                recorder.emit(EventKind.LINE_ACCEPTED, t, attempt_index)
                return proposal

            logger.debug(f"[GUARD] Line {t} attempt {attempt_index} rejected (score={score.value:.3f})")
            if proposal.first_content_token is not None:
                state.rejection_history.append(proposal.first_content_token)

            decision = self.policy_fn(state, attempt, self.config)

            if decision.action == LineAction.RESAMPLE:
                recorder.emit(EventKind.ROLLBACK, t, attempt_index)
                for token, _factor in decision.penalties:
                    recorder.emit(EventKind.PENALTY_APPLIED, t, attempt_index, token_id=token)
                state.active_biases = decision.bias
                continue

            if decision.action == LineAction.KEEP_BEST:
                kept = decision.kept
                kept.verdict = AttemptVerdict.KEPT_BEST
                recorder.emit(EventKind.BEST_KEPT, t, kept.attempt_index, score=kept.score.value)
                return kept.line

            if decision.action == LineAction.KEEP_REJECTED:
                attempt.verdict = AttemptVerdict.KEPT_BEST
                recorder.emit(EventKind.BEST_KEPT, t, attempt_index, score=score.value)
                return proposal

            self.rounds.append((score.value, state.accepted_lines + [proposal.text], attempt_index))
            if decision.action == LineAction.RESTART:
                self._restart(attempt_index)
            else:
                self._restore_best_round()
            raise _Restart()

    def _restart(self, attempt_index: int) -> None:
        state = self.state
        state.restarts += 1
        self.restart_round += 1
        self.recorder.emit(EventKind.ROLLBACK, 1, attempt_index)
        logger.debug(f"[GUARD] Restart {state.restarts}/{self.config.max_resamples} from line 1")
        state.accepted_lines = []
        state.current_attempts = []
        state.active_biases = BiasMap()

    def _restore_best_round(self) -> None:
        state = self.state
        best_score, best_lines, best_attempt = self.rounds[0]
        for round_score, lines, attempt_index in self.rounds[1:]:
            if round_score > best_score:
                best_score, best_lines, best_attempt = round_score, lines, attempt_index
        state.accepted_lines = list(best_lines)
        state.current_attempts = []
        state.active_biases = BiasMap()
        state.restarts_exhausted = True
        self.recorder.emit(EventKind.BEST_KEPT, len(best_lines), best_attempt, score=best_score)
        logger.debug(f"[GUARD] Restart budget spent; restored a {len(best_lines)}-line round")


async def run_guarded(
    question: str,
    generator: LineGenerator,
    evaluator: Optional[SemanticEvaluator],
    config: GuardConfig,
) -> GuardResult:
    return await GuardEngine(generator, evaluator, config).run(question)


async def run_batch(
    items: Sequence[T],
    worker: Callable[[T], Awaitable[R]],
    jobs: int = 1,
    key: Callable[[T], Any] = str,
) -> List[Tuple[T, R]]:
    """
    Run independent sessions concurrently

    Args:
        items: Work items (tasks, or task/sample pairs)
        worker: Coroutine function producing one result per item
        jobs: Maximum sessions in flight
        key: Sort key of an item

    Returns:
        (item, result) pairs ordered by key, whatever the completion order
    """
    semaphore = asyncio.Semaphore(max(1, jobs))

    async def _guarded(item: T) -> R:
        async with semaphore:
            return await worker(item)

    results = await asyncio.gather(*[_guarded(item) for item in items])
    return sorted(zip(items, results), key=lambda pair: key(pair[0]))
