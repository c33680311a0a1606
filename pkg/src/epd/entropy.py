"""Membership probability and Bernoulli entropy over box-relative distances.

The membership link is a logistic in the two normalized distances:
p = sigmoid(a - b * d_c_norm + c * d_e_norm). Center-proximal points score
near p=1, boundary-proximal near p=0, and the uncertainty belt between them
is where the Bernoulli entropy peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidParameterError
from .geometry import BBox, NormalizedDistances, Point2, normalized_distances

# Interior guard for the entropy logs per the numerically-safe form; the
# exact endpoints are handled before clamping so H(0) == H(1) == 0 exactly.
_P_EPS = 1e-15

_LOG_BASES = ("natural", "base2")


@dataclass(frozen=True)
class EntropyParams:
    """Logistic link coefficients and entropy log base."""

    a: float = 0.0
    b: float = 2.2
    c: float = 2.2
    log_base: str = "natural"

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.b < 0 or self.c < 0:
            raise InvalidParameterError("b and c must be >= 0")
        if self.log_base not in _LOG_BASES:
            raise InvalidParameterError(f"log_base must be one of {_LOG_BASES}")

    def max_entropy(self) -> float:
        return math.log(2.0) if self.log_base == "natural" else 1.0


@dataclass(frozen=True)
class ScoredPoint:
    """A candidate point with its membership probability and entropy."""

    point: Point2
    p: float
    entropy: float
    origin: str  # "internal" | "external" | "ray"
    sequence_index: int

    def to_dict(self) -> dict:
        return {
            "point": [self.point.x, self.point.y],
            "p": self.p,
            "entropy": self.entropy,
            "origin": self.origin,
            "sequence_index": self.sequence_index,
        }


def _sigmoid(z: float) -> float:
    # Split on sign so exp never overflows.
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def membership_probability(nd: NormalizedDistances, params: EntropyParams) -> float:
    """p = sigmoid(a - b * d_c_norm + c * d_e_norm), strictly inside (0, 1)."""
    return _sigmoid(params.a - params.b * nd.d_c_norm + params.c * nd.d_e_norm)


def shannon_entropy(p: float, log_base: str = "natural") -> float:
    """Bernoulli entropy of p, with the 0 * log 0 = 0 convention.

    Returns exactly 0.0 at p <= 0 and p >= 1; interior values are clamped to
    [1e-15, 1 - 1e-15] before the logs.
    """
    if log_base not in _LOG_BASES:
        raise InvalidParameterError(f"log_base must be one of {_LOG_BASES}")
    if p <= 0.0 or p >= 1.0:
        return 0.0
    p = min(max(p, _P_EPS), 1.0 - _P_EPS)
    h = -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)
    if log_base == "base2":
        h /= math.log(2.0)
    return h


def score_point(pt: Point2, bbox: BBox, params: EntropyParams,
                origin: str, sequence_index: int) -> ScoredPoint:
    """Annotate one point with membership probability and entropy."""
    nd = normalized_distances(pt, bbox)
    p = membership_probability(nd, params)
    return ScoredPoint(
        point=pt,
        p=p,
        entropy=shannon_entropy(p, params.log_base),
        origin=origin,
        sequence_index=sequence_index,
    )


def rank_by_entropy(points: list[ScoredPoint], k: int | None = None) -> list[ScoredPoint]:
    """Entropy-descending order, ties broken by ascending sequence_index."""
    if k is None:
        k = len(points)
    if k < 0:
        raise InvalidParameterError("k must be >= 0")
    ordered = sorted(points, key=lambda sp: (-sp.entropy, sp.sequence_index))
    return ordered[:k]
