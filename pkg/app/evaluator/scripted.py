"""
Scripted Evaluator
Deterministic test double scoring prefixes from a fixed table
"""

import json
import logging
from typing import Sequence

from pydantic import ValidationError

from app.evaluator.base import SemanticEvaluator
from app.schemas.models import EvaluatorRequest, EvaluatorScore, ScriptedEvaluatorTable
from app.utils.exceptions import ConfigurationError
from app.utils.helpers import read_json

logger = logging.getLogger(__name__)


def prefix_key(lines: Sequence[str]) -> str:
    """Table key of a prefix: right-stripped lines joined with LF"""
    return "\n".join(line.rstrip() for line in lines)


class ScriptedEvaluator(SemanticEvaluator):
    """
    Table lookup keyed on the exact prefix text

    The question is ignored; a table miss returns the default score.
    """

    def __init__(self, table: ScriptedEvaluatorTable):
        self.table = table
        # normalize keys written with CRLF or trailing blanks
        self._entries = {
            prefix_key(key.replace("\r\n", "\n").split("\n")): value
            for key, value in table.entries.items()
        }

    @classmethod
    def from_file(cls, path: str) -> "ScriptedEvaluator":
        try:
            table = ScriptedEvaluatorTable.model_validate(read_json(path))
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise ConfigurationError(f"invalid evaluator table {path}: {e}")
        logger.debug(f"[EVALUATOR] Loaded {len(table.entries)} scripted entries from {path}")
        return cls(table)

    async def score(self, request: EvaluatorRequest) -> EvaluatorScore:
        value = self._entries.get(prefix_key(request.prefix_lines), self.table.default_score)
        return EvaluatorScore(value=value)
