"""
JSON-over-HTTP Client
Async POST with bounded exponential-backoff retries for the remote model clients
"""

import logging
from typing import Any, Callable, Dict, Optional, Type, TypeVar

import httpx
from pydantic import ValidationError
from tenacity import (
    AsyncRetrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from app.utils.exceptions import TransportError

logger = logging.getLogger(__name__)

T = TypeVar("T")


class JsonApiClient:
    """Thin wrapper over httpx.AsyncClient; every failure surfaces as a TransportError"""

    def __init__(
        self,
        base_url: str,
        timeout_s: float = 30.0,
        max_retries: int = 3,
        backoff_s: float = 0.5,
        api_key: Optional[str] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        error_cls: Type[TransportError] = TransportError,
    ):
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.client = httpx.AsyncClient(
            base_url=base_url.rstrip("/"),
            timeout=timeout_s,
            headers=headers,
            transport=transport,
        )
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.error_cls = error_cls

    async def _post_once(self, path: str, payload: Dict[str, Any], parse: Callable[[Dict], T]) -> T:
        try:
            response = await self.client.post(path, json=payload)
            response.raise_for_status()
            body = response.json()
            if not isinstance(body, dict):
                raise ValueError("response body is not a JSON object")
            return parse(body)
        except httpx.HTTPStatusError as e:
            raise self.error_cls(
                f"{path} returned HTTP {e.response.status_code}",
                details={"status_code": e.response.status_code},
            )
        except httpx.HTTPError as e:
            raise self.error_cls(f"{path} unreachable: {e.__class__.__name__}")
        except (ValueError, KeyError, TypeError, ValidationError) as e:
            raise self.error_cls(f"{path} returned a malformed body: {e}")

    async def post(self, path: str, payload: Dict[str, Any], parse: Callable[[Dict], T]) -> T:
        """
        POST a JSON payload and parse the JSON reply

        Args:
            path: Endpoint path such as /v1/score
            payload: Request body
            parse: Converts the reply object; any exception it raises counts as malformed

        Returns:
            Parsed reply

        Raises:
            TransportError subclass after max_retries failed retries
        """
        retrying = AsyncRetrying(
            stop=stop_after_attempt(self.max_retries + 1),
            wait=wait_exponential(multiplier=self.backoff_s, max=30),
            retry=retry_if_exception_type(self.error_cls),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            reraise=True,
        )
        async for attempt in retrying:
            with attempt:
                return await self._post_once(path, payload, parse)
        raise self.error_cls(f"{path}: no attempt made")

    async def close(self) -> None:
        await self.client.aclose()
