"""
Utility Functions
Common utilities for logging, stable hashing, digests and JSON/JSONL files
"""

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List

from app.config.settings import settings

_LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(name: str) -> logging.Logger:
    """
    Setup logging configuration

    Handlers are attached to the top-level ``app`` logger once, so every
    module logger obtained with ``logging.getLogger(__name__)`` shares them.

    Args:
        name: Logger name

    Returns:
        Configured logger instance
    """
    root = logging.getLogger("app")
    root.setLevel(settings.log_level.upper())

    if not getattr(root, "_lineguard_configured", False):
        formatter = logging.Formatter(_LOG_FORMAT)

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        root.addHandler(console_handler)

        if settings.log_to_file:
            log_path = Path(settings.log_path)
            log_path.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(
                log_path / f"app_{datetime.now(timezone.utc).strftime('%Y%m%d')}.log",
                encoding="utf-8",
            )
            file_handler.setFormatter(formatter)
            root.addHandler(file_handler)

        root._lineguard_configured = True

    return logging.getLogger(name)


def utc_now() -> str:
    """ISO timestamp for manifests"""
    return datetime.now(timezone.utc).isoformat()


def stable_hash(*parts: Any) -> int:
    """
    Platform-independent 64-bit hash of the given parts

    Python's built-in hash() is salted per process, so seeds and split
    assignment go through sha256 instead.
    """
    payload = "\x1f".join(str(part) for part in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def derive_seed(seed: int, *parts: Any) -> int:
    """Seed for one attempt/sample, distinct per part tuple and reproducible"""
    return stable_hash(seed, *parts) % (2 ** 32)


def unit_interval(value: str) -> float:
    """Map a string to [0, 1) through its stable hash"""
    return stable_hash(value) / float(2 ** 64)


def file_digest(path: str) -> str:
    """sha256 of a file's content"""
    sha256_hash = hashlib.sha256()
    with open(path, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def ensure_dir_exists(path: str) -> Path:
    """
    Ensure directory exists, create if not

    Args:
        path: Directory path

    Returns:
        Path object
    """
    dir_path = Path(path)
    dir_path.mkdir(parents=True, exist_ok=True)
    return dir_path


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_json(path: str, data: Any) -> None:
    """Write pretty JSON with sorted keys and a trailing newline"""
    ensure_dir_exists(str(Path(path).parent))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def iter_jsonl(path: str) -> Iterator[Dict]:
    """Yield one object per non-blank line"""
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_number}: malformed JSON ({e.msg})")


def read_jsonl(path: str) -> List[Dict]:
    return list(iter_jsonl(path))


def dumps_record(record: Dict) -> str:
    return json.dumps(record, ensure_ascii=False)


def write_jsonl(path: str, records: Iterable[Dict]) -> int:
    """Write records one per line (LF endings); returns the record count"""
    ensure_dir_exists(str(Path(path).parent))
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(dumps_record(record) + "\n")
            count += 1
    return count
