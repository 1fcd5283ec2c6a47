"""Generator Module - Line generator contract, clients and sampling math"""

from app.generator.base import LineGenerator, build_generator, propose_line
from app.generator.sampling import apply_bias, apply_temperature, apply_token_penalty, apply_top_p

__all__ = [
    "LineGenerator",
    "build_generator",
    "propose_line",
    "apply_bias",
    "apply_temperature",
    "apply_token_penalty",
    "apply_top_p",
]
