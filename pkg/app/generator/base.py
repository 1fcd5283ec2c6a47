"""
Line Generator Contract
Proposes the next program line given the accepted prefix and a first-token bias
"""

import logging
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import httpx

from app.config.run_config import ClientConfig
from app.schemas.models import BiasMap, LineProposal, SamplingParams
from app.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class LineGenerator(ABC):
    """Any generator the guard engine can drive"""

    @abstractmethod
    async def propose(
        self,
        question: str,
        prefix_lines: Sequence[str],
        bias: BiasMap,
        sampling: SamplingParams,
    ) -> LineProposal:
        """
        Propose line len(prefix_lines) + 1

        The bias applies to the first sampled token position only.
        """

    async def close(self) -> None:
        return None


async def propose_line(
    client: LineGenerator,
    question: str,
    prefix_lines: Sequence[str],
    bias: BiasMap,
    sampling: SamplingParams,
) -> LineProposal:
    return await client.propose(question, prefix_lines, bias, sampling)


def build_generator(
    config: ClientConfig,
    scenario_path: Optional[str] = None,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> LineGenerator:
    """
    Create the generator described by a client config

    Args:
        config: Client section of the run config
        scenario_path: Scripted scenario overriding config.path (per-task scenarios)
        transport: Injected HTTP transport for the remote client

    Returns:
        Scripted or remote generator
    """
    if config.kind == "scripted":
        from app.generator.scripted import ScriptedGenerator

        path = scenario_path or config.path
        if not path:
            raise ConfigurationError("scripted generator requires a scenario path")
        return ScriptedGenerator.from_file(path)

    from app.generator.remote import RemoteGenerator
    return RemoteGenerator.from_config(config, transport=transport)
