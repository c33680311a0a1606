"""Superellipse spiral paths inside a bounding box.

The path turns n_turns times while its radius follows a sigmoid schedule
r(t) = 1 / (1 + exp(-k * (t - t0))), t in [0, 1], so probes linger near the
center early and sweep the box periphery late. Each raw ellipse point is
rescaled onto the superellipse of exponent n at radius r, which bulges
toward the corners relative to the inscribed ellipse while staying strictly
inside the box (r < 1 always, since the sigmoid never reaches 1).

The path's normalized superellipse radius at step i equals r(t_i) exactly;
tests lean on that identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError
from .geometry import BBox, center_and_axes

DIRECTIONS = ("clockwise", "counterclockwise")
TERMINALS = ("top", "bottom", "left", "right")

# Image coordinates run y-down, so the screen-top side is the -y half plane.
_TERMINAL_PHASE = {
    "right": 0.0,
    "bottom": math.pi / 2.0,
    "left": math.pi,
    "top": 3.0 * math.pi / 2.0,
}
# Visually clockwise on screen = angle increasing when y points down.
_DIRECTION_SIGN = {"clockwise": 1.0, "counterclockwise": -1.0}


@dataclass(frozen=True)
class SpiralConfig:
    """Shape parameters for one spiral; "random" defers the choice to the pipeline."""

    n_turns: int = 8
    n_points: int = 3000
    exponent_n: float = 5.0
    k_sigmoid: float = 8.0
    t0: float = 0.5
    direction: str = "clockwise"
    terminal: str = "right"

    def __post_init__(self):
        if self.n_turns < 1:
            raise InvalidParameterError("n_turns must be >= 1")
        if self.n_points < 2:
            raise InvalidParameterError("n_points must be >= 2")
        if self.exponent_n < 2:
            raise InvalidParameterError("exponent_n must be >= 2")
        if not (self.k_sigmoid > 0 and math.isfinite(self.k_sigmoid)):
            raise InvalidParameterError("k_sigmoid must be positive and finite")
        if not (0.0 < self.t0 < 1.0):
            raise InvalidParameterError("t0 must lie in (0, 1)")
        if self.direction not in DIRECTIONS + ("random",):
            raise InvalidParameterError(f"direction must be one of {DIRECTIONS} or 'random'")
        if self.terminal not in TERMINALS + ("random",):
            raise InvalidParameterError(f"terminal must be one of {TERMINALS} or 'random'")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Center distances along the path plus their normalized gradient.

    g is the central-difference derivative of d_norm in the path parameter
    (one-sided at both ends); g_norm is its min-max rescaling.
    """

    d: np.ndarray
    d_norm: np.ndarray
    g: np.ndarray
    g_norm: np.ndarray


@dataclass(frozen=True, eq=False)
class SpiralPath:
    points: np.ndarray         # (N, 2) float64, strictly inside the source box
    cumulative_arc: np.ndarray  # (N,), cumulative_arc[0] == 0, non-decreasing
    radial: RadialProfile


def radial_schedule(t, config: SpiralConfig):
    """Sigmoid radius r(t); accepts scalars or arrays, returns same shape."""
    scalar = np.isscalar(t) or np.ndim(t) == 0
    z = config.k_sigmoid * (np.atleast_1d(np.asarray(t, dtype=float)) - config.t0)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if scalar:
        return float(out[0])
    return out


def superellipse_radius(x: float, y: float, bbox: BBox, exponent: float) -> float:
    """Normalized superellipse radius of (x, y): 1.0 on the box-inscribed shape."""
    center, a, b = center_and_axes(bbox)
    return (abs((x - center.x) / a) ** exponent
            + abs((y - center.y) / b) ** exponent) ** (1.0 / exponent)


def cumulative_arc_length(points: np.ndarray) -> np.ndarray:
    """Cumulative Euclidean arc length; starts at 0, one entry per vertex."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise InsufficientDataError("need an (N, 2) array with N >= 1")
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    out = np.empty(pts.shape[0], dtype=float)
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


def radial_profile(points: np.ndarray, bbox: BBox) -> RadialProfile:
    """Center-distance profile over a path of >= 3 vertices."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise InsufficientDataError("radial profile needs at least 3 path vertices")
    center, _, _ = center_and_axes(bbox)
    d = np.hypot(pts[:, 0] - center.x, pts[:, 1] - center.y)
    d_norm = _minmax(d)
    dt = 1.0 / (pts.shape[0] - 1)
    g = np.gradient(d_norm, dt)
    return RadialProfile(d=d, d_norm=d_norm, g=g, g_norm=_minmax(g))


def _minmax(v: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi - lo <= 0.0:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def generate_spiral(bbox: BBox, config: SpiralConfig) -> SpiralPath:
    """Build the spiral path for bbox. direction/terminal must be concrete."""
    if config.direction == "random" or config.terminal == "random":
        raise InvalidParameterError(
            "direction/terminal 'random' must be resolved before generation")
    center, a, b = center_and_axes(bbox)
    n = config.n_points
    t = np.arange(n, dtype=float) / (n - 1)
    theta = (_DIRECTION_SIGN[config.direction] * 2.0 * math.pi * config.n_turns * t
             + _TERMINAL_PHASE[config.terminal])
    r = radial_schedule(t, config)

    # Raw ellipse point, then rescale onto the superellipse at the same r:
    # the angular profile (|cos|^n + |sin|^n)^(1/n) is divided back out, so
    # the final normalized radius is r exactly.
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    x_e = a * r * cos_t
    y_e = b * r * sin_t
    phi_norm = (np.abs(x_e / a) ** config.exponent_n
                + np.abs(y_e / b) ** config.exponent_n) ** (1.0 / config.exponent_n)
    alpha_scale = r / phi_norm
    xs = center.x + x_e * alpha_scale
    ys = center.y + y_e * alpha_scale

    points = np.column_stack([xs, ys])
    return SpiralPath(
        points=points,
        cumulative_arc=cumulative_arc_length(points),
        radial=radial_profile(points, bbox),
    )


def enumerate_configurations(base: SpiralConfig | None = None) -> list[SpiralConfig]:
    """All 8 (direction, terminal) variants: 4 clockwise then 4 counterclockwise,
    terminals ordered (top, bottom, left, right) within each block."""
    if base is None:
        base = SpiralConfig()
    return [replace(base, direction=d, terminal=p)
            for d in DIRECTIONS for p in TERMINALS]


def choose_configuration(rng: np.random.Generator) -> tuple[str, str]:
    """Uniform draw over the 8 (direction, terminal) combinations."""
    idx = int(rng.integers(8))
    return DIRECTIONS[idx // 4], TERMINALS[idx % 4]
