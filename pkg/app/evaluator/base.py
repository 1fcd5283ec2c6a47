"""
Semantic Evaluator Contract
Scores a (question, partial program) pair with a confidence in [0, 1]
"""

import logging
from abc import ABC, abstractmethod
from typing import Optional

import httpx

from app.config.run_config import ClientConfig
from app.schemas.models import Decision, EvaluatorRequest, EvaluatorScore
from app.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class SemanticEvaluator(ABC):
    """Any evaluator the guard engine can consult"""

    @abstractmethod
    async def score(self, request: EvaluatorRequest) -> EvaluatorScore:
        """Score one prefix; raises EvaluatorTransportError instead of guessing"""

    async def close(self) -> None:
        return None


async def score_fragment(client: SemanticEvaluator, request: EvaluatorRequest) -> EvaluatorScore:
    return await client.score(request)


def classify(score: EvaluatorScore, threshold: float = 0.5) -> Decision:
    """Accept iff the score is strictly above the threshold"""
    return Decision.ACCEPT if score.value > threshold else Decision.REJECT


def build_evaluator(
    config: ClientConfig,
    table_path: Optional[str] = None,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> SemanticEvaluator:
    """
    Create the evaluator described by a client config

    Args:
        config: Client section of the run config
        table_path: Scripted table overriding config.path (per-task tables)
        transport: Injected HTTP transport for the remote client

    Returns:
        Scripted or remote evaluator
    """
    if config.kind == "scripted":
        from app.evaluator.scripted import ScriptedEvaluator

        path = table_path or config.path
        if not path:
            raise ConfigurationError("scripted evaluator requires a table path")
        return ScriptedEvaluator.from_file(path)

    from app.evaluator.remote import RemoteEvaluator
    return RemoteEvaluator.from_config(config, transport=transport)
