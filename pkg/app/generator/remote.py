"""
Remote Generator Client
Requests the next line through POST /v1/propose with a first-position logit bias
"""

import logging
from typing import Dict, Optional, Sequence

import httpx

from app.config.run_config import ClientConfig
from app.config.settings import settings
from app.generator.base import LineGenerator
from app.schemas.models import BiasMap, LineProposal, SamplingParams
from app.utils.exceptions import GeneratorTransportError
from app.utils.http_client import JsonApiClient

logger = logging.getLogger(__name__)

PROPOSE_PATH = "/v1/propose"


def _parse_proposal(body: Dict) -> LineProposal:
    token = body.get("first_token_id")
    return LineProposal(
        text=str(body["line"]),
        first_content_token=int(token) if token is not None else None,
        token_count=int(body.get("token_count", 1)),
        finished_program=bool(body.get("finished", False)),
    )


class RemoteGenerator(LineGenerator):
    """
    HTTP generator

    Multiplicative factors f become additive log-biases ln(f) on their token
    ids; the server applies them to the first sampled position only and stops
    at LF.
    """

    def __init__(self, api: JsonApiClient):
        self.api = api

    @classmethod
    def from_config(
        cls,
        config: ClientConfig,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ) -> "RemoteGenerator":
        api = JsonApiClient(
            base_url=config.url,
            timeout_s=config.timeout_s,
            max_retries=config.max_retries,
            backoff_s=config.backoff_s,
            api_key=settings.generator_api_key,
            transport=transport,
            error_cls=GeneratorTransportError,
        )
        logger.info(f"✅ Initialized remote generator at {config.url}")
        return cls(api)

    async def propose(
        self,
        question: str,
        prefix_lines: Sequence[str],
        bias: BiasMap,
        sampling: SamplingParams,
    ) -> LineProposal:
        payload = {
            "question": question,
            "prefix": "\n".join(prefix_lines),
            "logit_bias": bias.to_logit_bias(),
            "stop": "\n",
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "seed": sampling.seed,
        }
        return await self.api.post(PROPOSE_PATH, payload, _parse_proposal)

    async def close(self) -> None:
        await self.api.close()
