"""
Pydantic Models for Domain Records
Defines data schemas for corpora, decoding sessions, traces and reports
"""

import math
from enum import Enum, IntEnum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------

class Verdict(str, Enum):
    """Label a submission arrives with"""
    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNKNOWN = "unknown"


class VerifierStatus(str, Enum):
    PASS = "pass"
    SYNTAX_ERROR = "syntax_error"
    RUNTIME_ERROR = "runtime_error"
    WRONG_OUTPUT = "wrong_output"
    TIMEOUT = "timeout"


class DivergenceSource(str, Enum):
    POSITIONAL_DIFF = "positional_diff"
    LLM_LOCALIZED = "llm_localized"
    MANUAL = "manual"


class Label(IntEnum):
    INCORRECT = 0
    CORRECT = 1


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class Policy(str, Enum):
    """Backtracking policy of a guarded session"""
    SEMGUARD_PENALTY = "semguard_penalty"
    SEMGUARD_RANDOM = "semguard_random"
    FULL_RESTART = "full_restart"
    EDP = "edp"
    UNGUIDED = "unguided"


class AttemptVerdict(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    KEPT_BEST = "kept_best"


class EventKind(str, Enum):
    LINE_PROPOSED = "line_proposed"
    PREFIX_SCORED = "prefix_scored"
    ROLLBACK = "rollback"
    PENALTY_APPLIED = "penalty_applied"
    LINE_ACCEPTED = "line_accepted"
    BEST_KEPT = "best_kept"
    SESSION_DONE = "session_done"
    SESSION_FAILED = "session_failed"


class Outcome(str, Enum):
    COMPLETED = "completed"
    BUDGET_EXHAUSTED = "budget_exhausted"
    FAILED = "failed"


class ErrorClass(str, Enum):
    NONE = "none"
    SYNTAX = "syntax"
    RUNTIME = "runtime"
    SEMANTIC = "semantic"


class Judgment(str, Enum):
    JUSTIFIED = "justified"
    FALSE_POSITIVE = "false_positive"


# ---------------------------------------------------------------------------
# Corpus records
# ---------------------------------------------------------------------------

class Submission(BaseModel):
    """A program submission as an ordered line sequence"""
    problem_id: str
    user_id: str
    verdict: Verdict = Verdict.UNKNOWN
    source_lines: List[str] = Field(..., description="Newline-free, right-stripped lines")

    @field_validator("source_lines")
    @classmethod
    def _check_lines(cls, lines: List[str]) -> List[str]:
        if not lines:
            raise ValueError("source_lines must be non-empty")
        for line in lines:
            if "\n" in line or "\r" in line:
                raise ValueError("source lines must not contain newline characters")
        return lines

    @property
    def source(self) -> str:
        return "\n".join(self.source_lines) + "\n"


class IOCase(BaseModel):
    """One stdin/expected-stdout pair"""
    stdin: str = ""
    expected_stdout: str


class RunnerConfig(BaseModel):
    """How to execute a program: command template with {src} and optional {stdin}"""
    command_template: str = "python3 {src}"
    timeout_ms: int = Field(default=2000, gt=0)
    source_suffix: str = ".py"
    syntax_markers: List[str] = Field(
        default_factory=lambda: ["SyntaxError", "IndentationError", "TabError"]
    )
    compile_template: Optional[str] = Field(
        default=None, description="Optional compile step; failure means syntax_error"
    )


class VerifierOutcome(BaseModel):
    status: VerifierStatus
    stdout: str = ""
    elapsed_ms: int = Field(default=0, ge=0)


class SubmissionMatch(BaseModel):
    """A retained correct/erroneous match before its divergence is located"""
    pair_id: str
    correct: Submission
    erroneous: Submission
    jaccard: float = Field(..., ge=0.0, le=1.0)


class CodePair(BaseModel):
    """Matched correct/erroneous submissions with their divergence"""
    pair_id: str
    correct: Submission
    erroneous: Submission
    jaccard: float = Field(..., ge=0.0, le=1.0)
    diff_indices: List[int]
    divergence_line: int = Field(..., ge=1)
    divergence_source: DivergenceSource = DivergenceSource.POSITIONAL_DIFF

    @model_validator(mode="after")
    def _check_divergence(self) -> "CodePair":
        if not self.diff_indices:
            raise ValueError("diff_indices must be non-empty")
        if self.diff_indices != sorted(set(self.diff_indices)):
            raise ValueError("diff_indices must be strictly ascending")
        if self.divergence_line > len(self.erroneous.source_lines):
            raise ValueError("divergence_line exceeds erroneous program length")
        if (self.divergence_source == DivergenceSource.POSITIONAL_DIFF
                and self.divergence_line != self.diff_indices[0]):
            raise ValueError("positional divergence must equal min(diff_indices)")
        return self


class FragmentSample(BaseModel):
    """A labeled code prefix; serialized field set is fixed"""
    problem_id: str
    question: str
    prefix_lines: List[str]
    label: Label
    pair_id: str
    split: Split

    @field_validator("prefix_lines")
    @classmethod
    def _non_empty(cls, lines: List[str]) -> List[str]:
        if not lines:
            raise ValueError("prefix_lines must be non-empty")
        return lines

    def to_record(self) -> Dict:
        return {
            "problem_id": self.problem_id,
            "question": self.question,
            "prefix_lines": list(self.prefix_lines),
            "label": int(self.label),
            "pair_id": self.pair_id,
            "split": self.split.value,
        }


class LocalizationPrompt(BaseModel):
    text: str
    pair_id: str


# ---------------------------------------------------------------------------
# Evaluator / generator records
# ---------------------------------------------------------------------------

class EvaluatorRequest(BaseModel):
    question: str
    prefix_lines: List[str]

    @field_validator("prefix_lines")
    @classmethod
    def _non_empty(cls, lines: List[str]) -> List[str]:
        if not lines:
            raise ValueError("prefix_lines must be non-empty")
        return lines

    @property
    def prefix(self) -> str:
        return "\n".join(self.prefix_lines)


class EvaluatorScore(BaseModel):
    value: float = Field(..., ge=0.0, le=1.0)


class ScriptedEvaluatorTable(BaseModel):
    """Fixed prefix -> score table of the scripted evaluator"""
    entries: Dict[str, float] = Field(default_factory=dict)
    default_score: float = Field(default=0.9, ge=0.0, le=1.0, alias="default")

    model_config = {"populate_by_name": True}

    @field_validator("entries")
    @classmethod
    def _check_scores(cls, entries: Dict[str, float]) -> Dict[str, float]:
        for key, value in entries.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"score for prefix {key!r} must be in [0, 1]")
        return entries


class CalibrationReport(BaseModel):
    """Fragment-level evaluator quality; a false positive is an accepted incorrect fragment"""
    accuracy: Optional[float] = None
    false_positive_rate: Optional[float] = None
    false_negative_rate: Optional[float] = None
    bce: Optional[float] = None
    threshold: float = 0.5
    true_positives: int = 0
    true_negatives: int = 0
    false_positives: int = 0
    false_negatives: int = 0
    errors: int = 0

    @property
    def scored(self) -> int:
        return self.true_positives + self.true_negatives + self.false_positives + self.false_negatives


class TokenDistribution(BaseModel):
    """Next-token distribution as ordered (token_id, p) pairs"""
    probs: List[Tuple[int, float]]

    @field_validator("probs")
    @classmethod
    def _check_probs(cls, probs: List[Tuple[int, float]]) -> List[Tuple[int, float]]:
        ids = [token for token, _ in probs]
        if len(ids) != len(set(ids)):
            raise ValueError("token ids must be unique")
        if any(p < 0 or math.isnan(p) for _, p in probs):
            raise ValueError("probabilities must be non-negative")
        if probs and abs(math.fsum(p for _, p in probs) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")
        return probs

    def as_dict(self) -> Dict[int, float]:
        return dict(self.probs)


class BiasMap(BaseModel):
    """Multiplicative first-position factors keyed by token id"""
    entries: Dict[int, float] = Field(default_factory=dict)

    @field_validator("entries")
    @classmethod
    def _check_factors(cls, entries: Dict[int, float]) -> Dict[int, float]:
        for token, factor in entries.items():
            if not 0.0 < factor <= 1.0:
                raise ValueError(f"bias factor for token {token} must be in (0, 1]")
        return entries

    def is_empty(self) -> bool:
        return not self.entries

    def factor(self, token_id: Optional[int]) -> float:
        if token_id is None:
            return 1.0
        return self.entries.get(token_id, 1.0)

    def penalize(self, token_id: int, factor: float) -> "BiasMap":
        """Return a new map with factor multiplied into the token's entry"""
        merged = dict(self.entries)
        merged[token_id] = merged.get(token_id, 1.0) * factor
        return BiasMap(entries=merged)

    def to_logit_bias(self) -> Dict[str, float]:
        """Additive log-bias ln(f) per token, keyed by string id for JSON"""
        return {str(token): math.log(factor) for token, factor in sorted(self.entries.items())}


class SamplingParams(BaseModel):
    temperature: float = Field(default=0.8, gt=0.0)
    top_p: float = Field(default=0.95, gt=0.0, le=1.0)
    seed: int = 0


class LineProposal(BaseModel):
    text: str = ""
    first_content_token: Optional[int] = None
    token_count: int = Field(default=1, ge=1)
    finished_program: bool = False

    @field_validator("text")
    @classmethod
    def _no_newline(cls, text: str) -> str:
        if "\n" in text:
            raise ValueError("a proposed line must not contain a newline")
        return text


class ScenarioAlternative(BaseModel):
    text: str
    first_token: Optional[int] = None
    weight: float = Field(default=1.0, gt=0.0)
    tokens: Optional[int] = Field(default=None, ge=1)

    @field_validator("text")
    @classmethod
    def _no_newline(cls, text: str) -> str:
        if "\n" in text:
            raise ValueError("a scripted line must not contain a newline")
        return text


class ScenarioLine(BaseModel):
    alternatives: List[ScenarioAlternative] = Field(default_factory=list)


class GeneratorScenario(BaseModel):
    """Scripted generator file: candidate lines per line index"""
    lines: List[ScenarioLine] = Field(default_factory=list)
    end_after: int = Field(..., ge=0)
    mode: Literal["rank", "sample"] = "rank"


# ---------------------------------------------------------------------------
# Decoding sessions and traces
# ---------------------------------------------------------------------------

class AttemptRecord(BaseModel):
    attempt_index: int = Field(..., ge=1)
    line: LineProposal
    score: Optional[EvaluatorScore] = None
    verdict: AttemptVerdict = AttemptVerdict.REJECTED


class TraceEvent(BaseModel):
    kind: EventKind
    line_index: int
    attempt_index: int
    score: Optional[float] = None
    token_id: Optional[int] = None
    tokens_delta: int = 0
    wall_ms: int = 0

    def to_record(self) -> Dict:
        return self.model_dump(mode="json", exclude_none=True)


class TraceTotals(BaseModel):
    tokens: int = 0
    wall_ms: int = 0
    rollbacks: int = 0


class GenerationTrace(BaseModel):
    events: List[TraceEvent] = Field(default_factory=list)
    totals: TraceTotals = Field(default_factory=TraceTotals)

    def rollback_events(self) -> List[TraceEvent]:
        return [event for event in self.events if event.kind == EventKind.ROLLBACK]


class GuardResult(BaseModel):
    code: str
    trace: GenerationTrace
    outcome: Outcome
    error: Optional[str] = None


class GenerationTask(BaseModel):
    """One line of a tasks JSONL file"""
    task_id: str
    question: str
    tests: List[IOCase] = Field(default_factory=list)
    scenario: Optional[str] = Field(default=None, description="Scripted scenario path")
    evaluator_table: Optional[str] = Field(default=None, description="Scripted table path")


# ---------------------------------------------------------------------------
# Metrics records
# ---------------------------------------------------------------------------

class TaskSample(BaseModel):
    code: str = ""
    verifier: Optional[VerifierOutcome] = None
    trace: Optional[GenerationTrace] = None
    tokens: Optional[int] = None
    wall_ms: Optional[int] = None

    def token_cost(self) -> Optional[int]:
        if self.trace is not None:
            return self.trace.totals.tokens
        return self.tokens

    def wall_cost(self) -> Optional[int]:
        if self.trace is not None:
            return self.trace.totals.wall_ms
        return self.wall_ms


class TaskResult(BaseModel):
    task_id: str
    samples: List[TaskSample]

    @field_validator("samples")
    @classmethod
    def _non_empty(cls, samples: List[TaskSample]) -> List[TaskSample]:
        if not samples:
            raise ValueError("samples must be non-empty")
        return samples


class ResultRecord(BaseModel):
    """One line of a results JSONL file"""
    task_id: str
    method: str
    sample_index: int
    status: Optional[VerifierStatus] = None
    error_class: Optional[ErrorClass] = None
    tokens: Optional[int] = None
    wall_ms: Optional[int] = None
    outcome: Optional[Outcome] = None

    def to_record(self) -> Dict:
        return self.model_dump(mode="json")


class RollbackOracle(BaseModel):
    """Ground-truth judgments per task, indexed by rollback ordinal (0-based)"""
    judgments: Dict[str, Dict[int, Judgment]] = Field(default_factory=dict)

    def judgment(self, task_id: str, rollback_index: int) -> Optional[Judgment]:
        return self.judgments.get(task_id, {}).get(rollback_index)


class MethodCost(BaseModel):
    method: str
    pass_at_1: float = Field(..., ge=0.0)
    mean_tokens: float = Field(..., ge=0.0)
    mean_wall_ms: float = Field(..., ge=0.0)
    p50_wall_ms: float = 0.0
    p90_wall_ms: float = 0.0
    total_tokens: int = 0
    samples: int = 0
    excluded_samples: int = 0


class CostReport(BaseModel):
    methods: List[MethodCost] = Field(default_factory=list)

    def row(self, method: str) -> Optional[MethodCost]:
        for entry in self.methods:
            if entry.method == method:
                return entry
        return None


class RunManifest(BaseModel):
    command: str
    config_hash: str
    tool_version: str
    started_at: str
    finished_at: Optional[str] = None
    input_digests: Dict[str, str] = Field(default_factory=dict)
    outcome: Dict = Field(default_factory=dict)
