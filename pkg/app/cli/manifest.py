"""
Run Manifests
Config hash, input digests and outcome summary written by every command
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, Optional

from app import __version__
from app.schemas.models import RunManifest
from app.utils.helpers import file_digest, text_digest, utc_now, write_json

logger = logging.getLogger(__name__)


def config_hash(canonical_json: str) -> str:
    return text_digest(canonical_json)


def input_digests(paths: Iterable[Optional[str]]) -> Dict[str, str]:
    """sha256 per existing input file, keyed by path"""
    digests: Dict[str, str] = {}
    for path in paths:
        if path and Path(path).is_file():
            digests[str(path)] = file_digest(path)
    return digests


def start_manifest(command: str, canonical_json: str, inputs: Iterable[Optional[str]]) -> RunManifest:
    return RunManifest(
        command=command,
        config_hash=config_hash(canonical_json),
        tool_version=__version__,
        started_at=utc_now(),
        input_digests=input_digests(inputs),
    )


def finish_manifest(manifest: RunManifest, out_dir: str, outcome: Dict) -> str:
    """Stamp the finish time and outcome and write manifest_<command>.json"""
    manifest.finished_at = utc_now()
    manifest.outcome = outcome
    path = Path(out_dir) / f"manifest_{manifest.command.replace(' ', '_')}.json"
    write_json(str(path), manifest.model_dump(mode="json"))
    logger.info(f"[MANIFEST] Wrote {path} (config {manifest.config_hash[:12]})")
    return str(path)
