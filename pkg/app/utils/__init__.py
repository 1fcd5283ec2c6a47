"""Utilities Module - Helper functions and utilities"""

from app.utils.exceptions import LineGuardError
from app.utils.helpers import derive_seed, setup_logging, write_jsonl

__all__ = ["setup_logging", "derive_seed", "write_jsonl", "LineGuardError"]
