"""
Sampling Math
Token-penalty renormalization, temperature scaling and nucleus filtering over
next-token distributions
"""

from typing import Sequence, Tuple

import numpy as np

from app.schemas.models import BiasMap, TokenDistribution


def _to_arrays(dist: TokenDistribution) -> Tuple[np.ndarray, np.ndarray]:
    ids = np.array([token for token, _ in dist.probs], dtype=np.int64)
    probs = np.array([p for _, p in dist.probs], dtype=np.float64)
    return ids, probs


def _from_arrays(ids: np.ndarray, probs: np.ndarray) -> TokenDistribution:
    return TokenDistribution(probs=[(int(t), float(p)) for t, p in zip(ids, probs)])


def apply_token_penalty(dist: TokenDistribution, k: int, lam: float) -> TokenDistribution:
    """
    Scale token k by lam and renormalize

    The penalized mass becomes lam*p_k / (1 - (1 - lam)*p_k); every other
    token keeps its ratio to the rest.

    Args:
        dist: Next-token distribution
        k: Penalized token id
        lam: Penalty factor in (0, 1)

    Returns:
        Renormalized distribution in the same token order
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"penalty factor must be in (0, 1), got {lam}")
    ids, probs = _to_arrays(dist)
    hits = np.flatnonzero(ids == k)
    if hits.size == 0:
        raise ValueError(f"token {k} not in distribution")
    probs[hits[0]] *= lam
    return _from_arrays(ids, probs / probs.sum())


def apply_bias(dist: TokenDistribution, bias: BiasMap) -> TokenDistribution:
    """Apply every factor of a bias map at once, then renormalize"""
    if bias.is_empty():
        return dist
    ids, probs = _to_arrays(dist)
    factors = np.array([bias.factor(int(t)) for t in ids], dtype=np.float64)
    scaled = probs * factors
    total = scaled.sum()
    if total <= 0.0:
        raise ValueError("bias removed all probability mass")
    return _from_arrays(ids, scaled / total)


def apply_temperature(logprobs: Sequence[Tuple[int, float]], temperature: float) -> TokenDistribution:
    """
    Softmax of log-probabilities divided by the temperature

    Args:
        logprobs: (token_id, log p) pairs
        temperature: T > 0

    Returns:
        Normalized distribution
    """
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    ids = np.array([token for token, _ in logprobs], dtype=np.int64)
    scaled = np.array([lp for _, lp in logprobs], dtype=np.float64) / temperature
    scaled -= scaled.max()
    weights = np.exp(scaled)
    return _from_arrays(ids, weights / weights.sum())


def apply_top_p(dist: TokenDistribution, top_p: float) -> TokenDistribution:
    """Keep the smallest high-probability set reaching top_p, renormalized; order preserved"""
    if not 0.0 < top_p <= 1.0:
        raise ValueError(f"top_p must be in (0, 1], got {top_p}")
    ids, probs = _to_arrays(dist)
    if top_p >= 1.0:
        return dist
    order = np.argsort(-probs, kind="stable")
    cumulative = np.cumsum(probs[order])
    cutoff = int(np.searchsorted(cumulative, top_p)) + 1
    keep = np.zeros_like(probs, dtype=bool)
    keep[order[:cutoff]] = True
    kept = np.where(keep, probs, 0.0)
    return _from_arrays(ids[keep], kept[keep] / kept.sum())


def sample_token(dist: TokenDistribution, rng: np.random.Generator) -> int:
    ids, probs = _to_arrays(dist)
    return int(rng.choice(ids, p=probs))
