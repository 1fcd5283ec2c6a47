"""
Run Configuration
Single JSON config file parsed into pydantic models; CLI flags override it
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator

from app.schemas.models import Policy, RunnerConfig
from app.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class GuardConfig(BaseModel):
    """All decode-supervision knobs"""
    threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    penalty_lambda: float = Field(default=0.8, gt=0.0, lt=1.0, alias="lambda")
    max_resamples: int = Field(default=3, ge=1)
    policy: Policy = Policy.SEMGUARD_PENALTY
    max_lines: int = Field(default=200, ge=1)
    max_total_tokens: int = Field(default=4096, ge=1)
    seed: int = 0
    temperature: float = Field(default=0.8, gt=0.0)
    top_p: float = Field(default=0.95, gt=0.0, le=1.0)
    comment_prefixes: List[str] = Field(default_factory=lambda: ["#", "//"])
    clock: Literal["monotonic", "logical"] = "monotonic"

    model_config = {"populate_by_name": True}


class ClientConfig(BaseModel):
    """Endpoint or scripted file for a generator/evaluator client"""
    kind: Literal["scripted", "remote"] = "scripted"
    url: Optional[str] = None
    path: Optional[str] = Field(default=None, description="Scenario or table file")
    timeout_s: float = Field(default=30.0, gt=0.0)
    max_retries: int = Field(default=3, ge=0)
    backoff_s: float = Field(default=0.5, ge=0.0)

    @model_validator(mode="after")
    def _check_target(self) -> "ClientConfig":
        if self.kind == "remote" and not self.url:
            raise ValueError("remote client requires url")
        return self


class SplitRatios(BaseModel):
    train: float = Field(default=437, ge=0)
    validation: float = Field(default=441, ge=0)
    test: float = Field(default=120, ge=0)

    @model_validator(mode="after")
    def _check_total(self) -> "SplitRatios":
        if self.train + self.validation + self.test <= 0:
            raise ValueError("split ratios must not all be zero")
        return self


class CorpusConfig(BaseModel):
    submissions: Optional[str] = None
    tests: Optional[str] = None
    questions: Optional[str] = None
    answers: Optional[str] = None
    ngram_n: int = Field(default=3, ge=1)
    threshold: float = Field(default=0.9, ge=0.0, le=1.0)
    split_ratios: SplitRatios = Field(default_factory=SplitRatios)
    multi_line_strategy: Literal["localize", "first_diff"] = "localize"


class BenchConfig(BaseModel):
    policies: List[Policy] = Field(
        default_factory=lambda: [Policy.SEMGUARD_PENALTY, Policy.FULL_RESTART]
    )
    samples_per_task: int = Field(default=1, ge=1)
    repeats: int = Field(default=1, ge=1)
    baseline: Optional[str] = None
    oracle: Optional[str] = Field(default=None, description="Rollback oracle JSON")


class CalibrationConfig(BaseModel):
    threshold: float = Field(default=0.5, gt=0.0, lt=1.0)


class RunConfig(BaseModel):
    """Fully-resolved run configuration"""
    seed: int = 0
    jobs: int = Field(default=1, ge=1)
    out_dir: str = "runs"
    tasks: Optional[str] = None
    runner: RunnerConfig = Field(default_factory=RunnerConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    guard: GuardConfig = Field(default_factory=GuardConfig)
    generator: ClientConfig = Field(default_factory=ClientConfig)
    evaluator: ClientConfig = Field(default_factory=ClientConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)

    def canonical_json(self) -> str:
        """Stable serialization used for the config hash"""
        return json.dumps(
            self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":")
        )


_PATH_FIELDS = {
    "corpus": ("submissions", "tests", "questions", "answers"),
    "generator": ("path",),
    "evaluator": ("path",),
    "bench": ("oracle",),
}


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else (base / path))


def load_run_config(config_path: str, overrides: Optional[Dict] = None) -> RunConfig:
    """
    Load a JSON run config and apply CLI overrides

    Args:
        config_path: Path to the JSON config file
        overrides: Flat overrides (policy, seed, jobs, out_dir, tasks); None values ignored

    Returns:
        Validated RunConfig with paths resolved against the config directory
    """
    path = Path(config_path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {config_path}")
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"unreadable config file {config_path}: {e}")

    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")

    base = path.parent
    for section, keys in _PATH_FIELDS.items():
        block = raw.get(section)
        if isinstance(block, dict):
            for key in keys:
                if isinstance(block.get(key), str):
                    block[key] = _resolve(base, block[key])
    for key in ("tasks", "out_dir"):
        if isinstance(raw.get(key), str):
            raw[key] = _resolve(base, raw[key])

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "policy" in overrides:
        raw.setdefault("guard", {})["policy"] = overrides["policy"]
    if "seed" in overrides:
        raw["seed"] = overrides["seed"]
    if "seed" in raw:
        # one seed drives every random choice of the run
        raw.setdefault("guard", {})["seed"] = raw["seed"]
    for key in ("jobs", "out_dir", "tasks"):
        if key in overrides:
            raw[key] = overrides[key]

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config {config_path}", details={"errors": str(e)})

    logger.debug(f"[CONFIG] Loaded {config_path} (policy={config.guard.policy.value}, seed={config.seed})")
    return config
