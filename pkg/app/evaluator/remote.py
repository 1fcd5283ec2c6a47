"""
Remote Evaluator Client
Scores prefixes through POST /v1/score
"""

import logging
from typing import Dict, Optional

import httpx

from app.config.run_config import ClientConfig
from app.config.settings import settings
from app.evaluator.base import SemanticEvaluator
from app.schemas.models import EvaluatorRequest, EvaluatorScore
from app.utils.exceptions import EvaluatorTransportError
from app.utils.http_client import JsonApiClient

logger = logging.getLogger(__name__)

SCORE_PATH = "/v1/score"


def _parse_score(body: Dict) -> EvaluatorScore:
    # a missing or out-of-range score is a protocol error, never a default
    return EvaluatorScore(value=float(body["score"]))


class RemoteEvaluator(SemanticEvaluator):
    """HTTP evaluator; request {question, prefix}, reply {score}"""

    def __init__(self, api: JsonApiClient):
        self.api = api

    @classmethod
    def from_config(
        cls,
        config: ClientConfig,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ) -> "RemoteEvaluator":
        api = JsonApiClient(
            base_url=config.url,
            timeout_s=config.timeout_s,
            max_retries=config.max_retries,
            backoff_s=config.backoff_s,
            api_key=settings.evaluator_api_key,
            transport=transport,
            error_cls=EvaluatorTransportError,
        )
        logger.info(f"✅ Initialized remote evaluator at {config.url}")
        return cls(api)

    async def score(self, request: EvaluatorRequest) -> EvaluatorScore:
        payload = {"question": request.question, "prefix": request.prefix}
        return await self.api.post(SCORE_PATH, payload, _parse_score)

    async def close(self) -> None:
        await self.api.close()
