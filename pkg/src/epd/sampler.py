"""Arc-length sampling of spiral paths and candidate-set construction.

The adaptive sampler walks the path in arc length with a step of
beta * k_i, where beta is the larger box extent and k_i is a per-vertex
coefficient driven by the normalized radial gradient. Mapping modes:

  inverse (default): k = k_min + (k_max - k_min) * (1 - g_norm); fast radial
      growth shrinks the step, concentrating samples where the radius moves.
  literal: k = k_min + (k_max - k_min) * g_norm; the opposite coupling, kept
      selectable for comparison runs.

Each sample position gets a uniform jitter in [-epsilon*beta, epsilon*beta],
is clamped to the path, and resolved to a point by linear interpolation.
Too few samples triggers up to three beta halvings before giving up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import EntropyParams, ScoredPoint, score_point
from .errors import InsufficientSamplesError, InvalidParameterError
from .geometry import BBox, Point2, center_and_axes, normalized_distances
from .spiral import RadialProfile, SpiralPath

DENSITY_MAPPINGS = ("inverse", "literal")
STRATEGIES = ("spiral", "ray", "random")

_MAX_HALVINGS = 3


@dataclass(frozen=True)
class SamplerConfig:
    k_min: float = 0.5
    k_max: float = 1.5
    epsilon: float = 0.2
    budget_k: int = 4
    density_mapping: str = "inverse"
    strategy: str = "spiral"
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.k_min <= self.k_max):
            raise InvalidParameterError("need 0 < k_min <= k_max")
        if not (0 <= self.epsilon < 1):
            raise InvalidParameterError("epsilon must lie in [0, 1)")
        if self.budget_k < 1:
            raise InvalidParameterError("budget_k must be >= 1")
        if self.density_mapping not in DENSITY_MAPPINGS:
            raise InvalidParameterError(f"density_mapping must be one of {DENSITY_MAPPINGS}")
        if self.strategy not in STRATEGIES:
            raise InvalidParameterError(f"strategy must be one of {STRATEGIES}")


@dataclass(frozen=True, eq=False)
class AdaptiveSamples:
    """Sampler output: interpolated points plus the bookkeeping behind them.

    Arrays share one ordering (arc position ascending). raw_positions holds
    the pre-jitter walk positions in the same order, coefficients the step
    coefficient looked up at each raw position. beta is the step scale the
    successful attempt used (halved from the initial value when retries fired).
    """

    points: np.ndarray          # (M, 2)
    arc_positions: np.ndarray   # (M,), jittered, clamped, ascending
    raw_positions: np.ndarray   # (M,)
    coefficients: np.ndarray    # (M,)
    beta: float
    bias: float
    attempts: int


@dataclass(frozen=True)
class CandidateSet:
    """Dual candidate queues: external is boundary-proximal, internal center-proximal."""

    external: list[ScoredPoint]
    internal: list[ScoredPoint]
    sample_trace: list[tuple[float, float]] = field(default_factory=list)

    def all_points(self) -> list[ScoredPoint]:
        return list(self.external) + list(self.internal)

    def to_dict(self) -> dict:
        return {
            "external": [sp.to_dict() for sp in self.external],
            "internal": [sp.to_dict() for sp in self.internal],
            "sample_trace": [[s, k] for s, k in self.sample_trace],
        }


def dynamic_coefficients(profile: RadialProfile, config: SamplerConfig) -> np.ndarray:
    """Per-vertex step coefficients in [k_min, k_max] from the gradient profile."""
    g = profile.g_norm if config.density_mapping == "literal" else 1.0 - profile.g_norm
    return config.k_min + (config.k_max - config.k_min) * g


def _nearest_index(cum_arc: np.ndarray, s: float) -> int:
    """Index of the vertex whose arc position is nearest s; ties go lower."""
    j = int(np.searchsorted(cum_arc, s))
    if j <= 0:
        return 0
    if j >= len(cum_arc):
        return len(cum_arc) - 1
    # Tie (equidistant) resolves to the lower index via <=.
    if s - cum_arc[j - 1] <= cum_arc[j] - s:
        return j - 1
    return j


def interpolate_at_arc(points: np.ndarray, cum_arc: np.ndarray, s: float) -> tuple[float, float]:
    """Point at arc position s by linear interpolation between bracketing vertices."""
    if not (cum_arc[0] <= s <= cum_arc[-1]):
        raise InvalidParameterError(f"arc position {s} outside [0, {cum_arc[-1]}]")
    x = float(np.interp(s, cum_arc, points[:, 0]))
    y = float(np.interp(s, cum_arc, points[:, 1]))
    return x, y


def adaptive_sample(path: SpiralPath, coeffs: np.ndarray, bbox: BBox,
                    config: SamplerConfig, rng: np.random.Generator) -> AdaptiveSamples:
    """Walk the path with gradient-coupled steps; jitter, clamp, interpolate.

    Needs at least 2 * budget_k samples; beta halves on shortfall, at most
    three times, after which InsufficientSamplesError is raised.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != path.points.shape[0]:
        raise InvalidParameterError("one coefficient per path vertex required")
    cum = path.cumulative_arc
    s_total = float(cum[-1])
    if s_total <= 0.0:
        raise InsufficientSamplesError("path has zero arc length")
    beta0 = max(bbox.width, bbox.height)
    required = 2 * config.budget_k

    beta = beta0
    for attempt in range(1, _MAX_HALVINGS + 2):
        bias = float(rng.uniform(0.0, beta))
        raw = []
        s = bias
        while s <= s_total:
            raw.append(s)
            s = s + beta * coeffs[_nearest_index(cum, s)]
        if len(raw) >= required:
            raw_arr = np.asarray(raw, dtype=float)
            jitter = rng.uniform(-config.epsilon * beta, config.epsilon * beta, len(raw))
            perturbed = np.clip(raw_arr + jitter, 0.0, s_total)
            order = np.argsort(perturbed, kind="stable")
            raw_arr = raw_arr[order]
            perturbed = perturbed[order]
            ks = np.asarray([coeffs[_nearest_index(cum, v)] for v in raw_arr], dtype=float)
            pts = np.asarray([interpolate_at_arc(path.points, cum, v) for v in perturbed],
                             dtype=float)
            return AdaptiveSamples(
                points=pts,
                arc_positions=perturbed,
                raw_positions=raw_arr,
                coefficients=ks,
                beta=beta,
                bias=bias,
                attempts=attempt,
            )
        beta = beta / 2.0
    raise InsufficientSamplesError(
        f"could not draw {required} samples from a path of length {s_total:.3f} "
        f"(beta halved {_MAX_HALVINGS} times from {beta0:.3f})")


def split_internal_external(samples: AdaptiveSamples, bbox: BBox, config: SamplerConfig,
                            entropy_params: EntropyParams | None = None) -> CandidateSet:
    """Order-statistic split on normalized center distance.

    One total order by (d_c_norm, sequence index) ascending; the first
    budget_k samples become the internal queue, the last budget_k the
    external queue. The two index sets are disjoint by construction, and the
    external mean distance exceeds the internal mean whenever any spread
    exists.
    """
    n = samples.points.shape[0]
    k = config.budget_k
    if n < 2 * k:
        raise InsufficientSamplesError(f"need at least {2 * k} samples, got {n}")
    params = entropy_params if entropy_params is not None else EntropyParams()

    d_c = np.empty(n, dtype=float)
    for i in range(n):
        d_c[i] = normalized_distances(Point2(*samples.points[i]), bbox).d_c_norm
    order = sorted(range(n), key=lambda i: (d_c[i], i))

    def scored(i: int, origin: str) -> ScoredPoint:
        return score_point(Point2(*samples.points[i]), bbox, params, origin, i)

    internal = [scored(i, "internal") for i in order[:k]]
    external = [scored(i, "external") for i in reversed(order[-k:])]
    trace = [(float(s), float(c))
             for s, c in zip(samples.arc_positions, samples.coefficients)]
    return CandidateSet(external=external, internal=internal, sample_trace=trace)


def ray_based_candidates(bbox: BBox, config: SamplerConfig, rng: np.random.Generator,
                         entropy_params: EntropyParams | None = None) -> CandidateSet:
    """Deterministic dual queues on axis rays, spaced beta/4 per step.

    External candidates step inward from the four edge midpoints, internal
    candidates step outward from the center along +/-x then +/-y. The rng
    argument is reserved for API symmetry; construction is deterministic.
    A candidate falling outside the closed box raises
    InsufficientSamplesError (the box is too small for budget_k steps).
    """
    del rng  # deterministic strategy
    params = entropy_params if entropy_params is not None else EntropyParams()
    center, _, _ = center_and_axes(bbox)
    step = max(bbox.width, bbox.height) / 4.0
    k = config.budget_k

    def build(pts: list[tuple[float, float]], origin: str, seq0: int) -> list[ScoredPoint]:
        out = []
        for i, (x, y) in enumerate(pts):
            p = Point2(x, y)
            if not bbox.contains(p):
                raise InsufficientSamplesError(
                    f"box too small for {k} ray steps of {step:.3f}")
            out.append(score_point(p, bbox, params, origin, seq0 + i))
        return out

    ext_pts, int_pts = [], []
    for j in range(k):
        depth = (j // 4 + 1) * step
        edge = j % 4  # left, top, right, bottom
        if edge == 0:
            ext_pts.append((bbox.x_min + depth, center.y))
        elif edge == 1:
            ext_pts.append((center.x, bbox.y_min + depth))
        elif edge == 2:
            ext_pts.append((bbox.x_max - depth, center.y))
        else:
            ext_pts.append((center.x, bbox.y_max - depth))
        direction = j % 4  # +x, -x, +y, -y
        offset = (j // 4 + 1) * step
        if direction == 0:
            int_pts.append((center.x + offset, center.y))
        elif direction == 1:
            int_pts.append((center.x - offset, center.y))
        elif direction == 2:
            int_pts.append((center.x, center.y + offset))
        else:
            int_pts.append((center.x, center.y - offset))

    return CandidateSet(
        external=build(ext_pts, "ray", 0),
        internal=build(int_pts, "ray", k),
        sample_trace=[],
    )


def random_candidates(bbox: BBox, config: SamplerConfig, rng: np.random.Generator,
                      entropy_params: EntropyParams | None = None) -> CandidateSet:
    """Uniform points in the box, no geometric structure: the bench baseline.

    2 * budget_k draws; the first budget_k land in the external queue, the
    rest in the internal queue, so queue membership carries no spatial
    information for this strategy.
    """
    params = entropy_params if entropy_params is not None else EntropyParams()
    k = config.budget_k
    xs = rng.uniform(bbox.x_min, bbox.x_max, 2 * k)
    ys = rng.uniform(bbox.y_min, bbox.y_max, 2 * k)
    pts = [score_point(Point2(float(x), float(y)), bbox, params,
                       "external" if i < k else "internal", i)
           for i, (x, y) in enumerate(zip(xs, ys))]
    return CandidateSet(external=pts[:k], internal=pts[k:], sample_trace=[])
