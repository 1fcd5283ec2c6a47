"""CLI Module - Command-line front end and run manifests"""

from app.cli.commands import build_parser, main
from app.cli.manifest import finish_manifest, start_manifest

__all__ = ["build_parser", "main", "finish_manifest", "start_manifest"]
