"""
Tests for the guarded decoding engine and its backtracking policies
"""

from typing import List

import pytest

from app.evaluator.base import SemanticEvaluator
from app.evaluator.scripted import ScriptedEvaluator
from app.generator.scripted import ScriptedGenerator
from app.guard.engine import GuardEngine, render_code, run_batch, run_guarded
from app.guard.policies import (
    LineAction,
    SessionState,
    is_evaluable_line,
    policy_full_restart,
    select_best_attempt,
)
from app.guard.trace import LogicalClock, TraceRecorder, read_trace, write_trace
from app.schemas.models import (
    AttemptRecord,
    EvaluatorScore,
    EventKind,
    GeneratorScenario,
    LineProposal,
    Outcome,
    Policy,
    ScriptedEvaluatorTable,
)
from app.utils.exceptions import EvaluatorTransportError
from conftest import GOLDEN, guard_config, planted_scenario


def golden_clients():
    return (
        ScriptedGenerator.from_file(str(GOLDEN / "scenario.json")),
        ScriptedEvaluator.from_file(str(GOLDEN / "evaluator_table.json")),
    )


def scripted_clients(scenario: dict, table: dict):
    return (
        ScriptedGenerator(GeneratorScenario.model_validate(scenario)),
        ScriptedEvaluator(ScriptedEvaluatorTable.model_validate(table)),
    )


def kinds(events) -> List[str]:
    return [event.kind.value for event in events]


async def test_golden_session_trace_matches_golden_files(tmp_path):
    generator, evaluator = golden_clients()
    result = await GuardEngine(generator, evaluator, guard_config()).run("Balance the brackets.")

    assert result.outcome == Outcome.COMPLETED
    assert result.code == (GOLDEN / "expected_code.py").read_text(encoding="utf-8")

    trace_path = tmp_path / "trace.jsonl"
    write_trace(str(trace_path), result.trace)
    assert trace_path.read_bytes() == (GOLDEN / "expected_trace.jsonl").read_bytes()


async def test_golden_session_penalties_and_totals():
    generator, evaluator = golden_clients()
    result = await run_guarded("Balance the brackets.", generator, evaluator, guard_config())
    trace = result.trace

    penalties = [(e.line_index, e.token_id) for e in trace.events if e.kind == EventKind.PENALTY_APPLIED]
    assert penalties == [(5, 66), (9, 65), (9, 65)]
    assert [e.line_index for e in trace.rollback_events()] == [5, 9, 9]
    assert (trace.totals.tokens, trace.totals.wall_ms, trace.totals.rollbacks) == (106, 49, 3)
    assert trace.totals.tokens == sum(event.tokens_delta for event in trace.events)

    scored_line_9 = [e.score for e in trace.events if e.kind == EventKind.PREFIX_SCORED and e.line_index == 9]
    assert scored_line_9 == [0.31, 0.31, 0.83]


async def test_trace_round_trips_through_jsonl(tmp_path):
    generator, evaluator = golden_clients()
    result = await run_guarded("q", generator, evaluator, guard_config())
    path = tmp_path / "trace.jsonl"
    write_trace(str(path), result.trace)
    assert read_trace(str(path)) == result.trace


async def test_sessions_are_reproducible():
    first = await run_guarded("q", *golden_clients(), guard_config())
    second = await run_guarded("q", *golden_clients(), guard_config())
    assert first.trace == second.trace
    assert first.code == second.code


async def test_wall_clock_is_non_decreasing_with_monotonic_clock():
    result = await run_guarded("q", *golden_clients(), guard_config(clock="monotonic"))
    walls = [event.wall_ms for event in result.trace.events]
    assert walls == sorted(walls)


async def test_first_line_is_never_scored():
    generator, evaluator = golden_clients()
    result = await run_guarded("q", generator, evaluator, guard_config())
    first_line = [e for e in result.trace.events if e.line_index == 1]
    assert kinds(first_line) == ["line_proposed", "line_accepted"]


async def test_comment_and_blank_lines_skip_the_evaluator():
    scenario = {
        "end_after": 4,
        "lines": [
            {"alternatives": [{"text": "x = 1", "first_token": 1}]},
            {"alternatives": [{"text": "# comment", "first_token": 2}]},
            {"alternatives": [{"text": "", "first_token": None}]},
            {"alternatives": [{"text": "print(x)", "first_token": 3}]},
        ],
    }
    # prefixes ending in the comment or the blank line would be rejected if asked
    table = {"default": 0.9, "entries": {"x = 1\n# comment": 0.0, "x = 1\n# comment\n": 0.0}}
    generator, evaluator = scripted_clients(scenario, table)
    result = await run_guarded("q", generator, evaluator, guard_config())

    scored = [e.line_index for e in result.trace.events if e.kind == EventKind.PREFIX_SCORED]
    assert scored == [4]
    assert result.code == "x = 1\n# comment\n\nprint(x)\n"


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

def planted_clients(index: int = 0):
    planted = planted_scenario(index)
    return planted, scripted_clients(planted["scenario"], planted["table"])


async def test_penalty_policy_recovers_planted_fault():
    planted, (generator, evaluator) = planted_clients()
    result = await run_guarded("q", generator, evaluator, guard_config(Policy.SEMGUARD_PENALTY))
    assert planted["correct"] in result.code.splitlines()
    assert result.trace.totals.rollbacks == 1


async def test_random_policy_keeps_best_after_budget():
    planted, (generator, evaluator) = planted_clients()
    result = await run_guarded("q", generator, evaluator, guard_config(Policy.SEMGUARD_RANDOM))

    assert result.code.splitlines()[-1] == planted["faulty"]
    assert result.trace.totals.rollbacks == 2
    assert not any(e.kind == EventKind.PENALTY_APPLIED for e in result.trace.events)
    kept = [e for e in result.trace.events if e.kind == EventKind.BEST_KEPT]
    assert len(kept) == 1
    assert (kept[0].attempt_index, kept[0].score) == (1, 0.2)


async def test_full_restart_restores_best_round():
    planted, (generator, evaluator) = planted_clients()
    result = await run_guarded("q", generator, evaluator, guard_config(Policy.FULL_RESTART))
    program_length = len(planted["scenario"]["lines"])

    rollbacks = result.trace.rollback_events()
    assert len(rollbacks) == 3
    assert all(event.line_index == 1 for event in rollbacks)

    kept = [e for e in result.trace.events if e.kind == EventKind.BEST_KEPT]
    assert [(e.line_index, e.score) for e in kept] == [(program_length, 0.2)]
    assert result.code.splitlines()[-1] == planted["faulty"]
    assert result.outcome == Outcome.COMPLETED


async def test_edp_decays_penalty_over_recent_rejections():
    scenario = {
        "end_after": 4,
        "lines": [
            {"alternatives": [{"text": "a = 1", "first_token": 1}]},
            {"alternatives": [{"text": "b = 2", "first_token": 2}]},
            {"alternatives": [{"text": "c = 3", "first_token": 3}]},
            {"alternatives": [
                {"text": "print(a)", "first_token": 5, "weight": 1.0},
                {"text": "print(b)", "first_token": 6, "weight": 0.95},
                {"text": "print(c)", "first_token": 7, "weight": 0.5},
            ]},
        ],
    }
    head = "a = 1\nb = 2\nc = 3\n"
    table = {"default": 0.9, "entries": {head + "print(a)": 0.2, head + "print(b)": 0.3}}
    generator, evaluator = scripted_clients(scenario, table)
    result = await run_guarded("q", generator, evaluator, guard_config(Policy.EDP))

    penalized = [e.token_id for e in result.trace.events if e.kind == EventKind.PENALTY_APPLIED]
    # second rejection: 0.8 on token 6 and 0.8 ** 0.5 on token 5, which puts token 5 back on top
    assert penalized == [5, 6, 5]
    proposed = [e.token_id for e in result.trace.events if e.kind == EventKind.LINE_PROPOSED and e.line_index == 4]
    assert proposed == [5, 6, 5]

    kept = [e for e in result.trace.events if e.kind == EventKind.BEST_KEPT]
    assert [(e.attempt_index, e.score) for e in kept] == [(2, 0.3)]
    assert result.code.splitlines()[-1] == "print(b)"


async def test_unguided_policy_never_calls_the_evaluator():
    planted, (generator, _) = planted_clients()
    result = await run_guarded("q", generator, None, guard_config(Policy.UNGUIDED))

    assert not any(e.kind == EventKind.PREFIX_SCORED for e in result.trace.events)
    assert result.code.splitlines()[-1] == planted["faulty"]


# ---------------------------------------------------------------------------
# Budgets and failures
# ---------------------------------------------------------------------------

async def test_line_budget_ends_the_session():
    result = await run_guarded("q", *golden_clients(), guard_config(max_lines=2))
    assert result.outcome == Outcome.BUDGET_EXHAUSTED
    assert result.code == "n = int(input())\ns = input()\n"
    assert result.trace.events[-1].kind == EventKind.SESSION_DONE


async def test_token_budget_ends_the_session():
    result = await run_guarded("q", *golden_clients(), guard_config(max_total_tokens=19))
    assert result.outcome == Outcome.BUDGET_EXHAUSTED
    # 8 + 6 + 5 tokens reach the budget before line 4
    assert result.trace.totals.tokens == 19
    assert len(result.code.splitlines()) == 3


async def test_missing_alternative_fails_the_session():
    scenario = {"end_after": 3, "lines": [{"alternatives": [{"text": "x = 1", "first_token": 1}]}]}
    generator, evaluator = scripted_clients(scenario, {"default": 0.9})
    result = await run_guarded("q", generator, evaluator, guard_config())

    assert result.outcome == Outcome.FAILED
    assert "no alternative" in result.error
    assert result.code == "x = 1\n"
    last = result.trace.events[-1]
    assert (last.kind, last.line_index, last.attempt_index) == (EventKind.SESSION_FAILED, 2, 0)


class BrokenEvaluator(SemanticEvaluator):
    async def score(self, request):
        raise EvaluatorTransportError("evaluator unreachable")


async def test_evaluator_outage_fails_the_session():
    generator, _ = golden_clients()
    result = await run_guarded("q", generator, BrokenEvaluator(), guard_config())
    assert result.outcome == Outcome.FAILED
    assert result.error == "evaluator unreachable"
    assert not any(e.kind == EventKind.PREFIX_SCORED for e in result.trace.events)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("x = 1", True),
    ("", False),
    ("    ", False),
    ("   # note", False),
    ("// note", False),
])
def test_is_evaluable_line(text, expected):
    assert is_evaluable_line(text) is expected


def attempt(index: int, score: float) -> AttemptRecord:
    return AttemptRecord(
        attempt_index=index,
        line=LineProposal(text=f"line {index}", first_content_token=index),
        score=EvaluatorScore(value=score),
    )


def test_select_best_attempt_prefers_earliest_on_ties():
    attempts = [attempt(1, 0.3), attempt(2, 0.4), attempt(3, 0.4)]
    assert select_best_attempt(attempts).attempt_index == 2


def test_full_restart_policy_stages():
    config = guard_config(Policy.FULL_RESTART, max_resamples=2)
    rejected = attempt(1, 0.1)

    assert policy_full_restart(SessionState(restarts=1), rejected, config).action == LineAction.RESTART
    assert policy_full_restart(SessionState(restarts=2), rejected, config).action == LineAction.RESTORE_BEST
    exhausted = SessionState(restarts=2, restarts_exhausted=True)
    assert policy_full_restart(exhausted, rejected, config).action == LineAction.KEEP_REJECTED


def test_render_code():
    assert render_code([]) == ""
    assert render_code(["a", "b"]) == "a\nb\n"


def test_logical_clock_recorder():
    recorder = TraceRecorder(LogicalClock())
    recorder.emit(EventKind.LINE_PROPOSED, 1, 1, token_id=4, tokens_delta=3)
    recorder.emit(EventKind.ROLLBACK, 1, 1)
    trace = recorder.build()
    assert [e.wall_ms for e in trace.events] == [1, 2]
    assert (trace.totals.tokens, trace.totals.rollbacks, trace.totals.wall_ms) == (3, 1, 2)


async def test_run_batch_orders_by_key():
    async def worker(item: str) -> str:
        return item.upper()

    pairs = await run_batch(["c", "a", "b"], worker, jobs=2)
    assert pairs == [("a", "A"), ("b", "B"), ("c", "C")]
