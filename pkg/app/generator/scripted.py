"""
Scripted Generator
Deterministic test double choosing among scenario alternatives under a bias
"""

import json
import logging
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from app.corpus.similarity import tokenize_code
from app.generator.base import LineGenerator
from app.generator.sampling import apply_bias, apply_temperature, apply_top_p, sample_token
from app.schemas.models import (
    BiasMap,
    GeneratorScenario,
    LineProposal,
    SamplingParams,
    ScenarioAlternative,
    TokenDistribution,
)
from app.utils.exceptions import ConfigurationError, ScenarioExhaustedError
from app.utils.helpers import read_json

logger = logging.getLogger(__name__)


def default_token_count(text: str) -> int:
    """Code tokens of the line plus one for the newline"""
    return len(tokenize_code(text)) + 1


def alternative_distribution(alternatives: Sequence[ScenarioAlternative], bias: BiasMap) -> TokenDistribution:
    """
    Alternatives as a distribution over their indices, first-token penalty applied

    Token ids may repeat across alternatives, so the distribution is keyed by
    alternative index and the bias map is re-keyed the same way.
    """
    weights = np.array([alt.weight for alt in alternatives], dtype=np.float64)
    dist = TokenDistribution(probs=[(i, float(w)) for i, w in enumerate(weights / weights.sum())])
    factors = {i: bias.factor(alt.first_token) for i, alt in enumerate(alternatives)}
    return apply_bias(dist, BiasMap(entries={i: f for i, f in factors.items() if f < 1.0}))


def effective_weights(alternatives: Sequence[ScenarioAlternative], bias: BiasMap) -> np.ndarray:
    """Renormalized alternative weights after the first-token penalty"""
    return np.array([p for _, p in alternative_distribution(alternatives, bias).probs], dtype=np.float64)


class ScriptedGenerator(LineGenerator):
    """
    Replays a scenario file

    Line t draws from the scenario's t-th candidate list. ``rank`` mode takes
    the highest effective weight (earliest on ties); ``sample`` mode applies
    temperature and top-p to the biased distribution, then draws with the
    attempt seed.
    """

    def __init__(self, scenario: GeneratorScenario):
        self.scenario = scenario

    @classmethod
    def from_file(cls, path: str) -> "ScriptedGenerator":
        try:
            scenario = GeneratorScenario.model_validate(read_json(path))
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise ConfigurationError(f"invalid generator scenario {path}: {e}")
        logger.debug(f"[GENERATOR] Loaded scenario {path} ({len(scenario.lines)} lines, mode={scenario.mode})")
        return cls(scenario)

    def _choose(self, alternatives: Sequence[ScenarioAlternative], bias: BiasMap, sampling: SamplingParams) -> int:
        dist = alternative_distribution(alternatives, bias)
        if self.scenario.mode == "rank":
            return int(np.argmax([p for _, p in dist.probs]))
        scaled = apply_temperature([(i, float(np.log(p))) for i, p in dist.probs], sampling.temperature)
        nucleus = apply_top_p(scaled, sampling.top_p)
        return sample_token(nucleus, np.random.default_rng(sampling.seed))

    async def propose(
        self,
        question: str,
        prefix_lines: Sequence[str],
        bias: BiasMap,
        sampling: SamplingParams,
    ) -> LineProposal:
        line_index = len(prefix_lines) + 1
        if line_index > self.scenario.end_after:
            return LineProposal(text="", finished_program=True, token_count=1)

        if line_index > len(self.scenario.lines) or not self.scenario.lines[line_index - 1].alternatives:
            raise ScenarioExhaustedError("no alternative", details={"line_index": line_index})

        alternatives = self.scenario.lines[line_index - 1].alternatives
        chosen = alternatives[self._choose(alternatives, bias, sampling)]
        return LineProposal(
            text=chosen.text,
            first_content_token=chosen.first_token,
            token_count=chosen.tokens or default_token_count(chosen.text),
            finished_program=False,
        )
