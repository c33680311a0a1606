"""Boxes, points, normalized distances, coordinate conversion, perturbation.

Coordinates are continuous image pixels, x right, y down. Boxes are closed
regions: a point on the boundary counts as inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError, InvalidParameterError, OutOfRegionError

# Slack for containment checks: interpolation between in-box vertices can
# land a float one ulp outside, which must not read as out-of-region.
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        # Coerce numpy scalars so serialized output is plain floats.
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, x_min < x_max and y_min < y_max enforced."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidGeometryError(f"non-finite bbox {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidGeometryError(f"degenerate bbox {vals}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, pt: Point2, eps: float = _EDGE_EPS) -> bool:
        return (self.x_min - eps <= pt.x <= self.x_max + eps
                and self.y_min - eps <= pt.y <= self.y_max + eps)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidGeometryError(f"non-positive dims {self.width}x{self.height}")


@dataclass(frozen=True)
class NormalizedDistances:
    """Unitless distances of a point from box center and nearest edge.

    d_c_norm is 0 at the center and 1 at a corner; d_e_norm is 0 on the
    boundary and 1 at the center. Both clamped to [0, 1].
    """

    d_c_norm: float
    d_e_norm: float


@dataclass(frozen=True)
class PerturbationRegime:
    """Box-expansion regime for the robustness bench.

    kind: "tight" (identity), "mild_one_side" (one uniformly chosen side
    moved outward by mild_fraction of its extent), "severe_per_side" (each
    side moved outward by an independent U(severe_low, severe_high) fraction).
    Expansion only; results are clipped to the image frame afterwards.
    """

    kind: str
    mild_fraction: float = 0.10
    severe_low: float = 0.05
    severe_high: float = 0.15

    def __post_init__(self):
        if self.kind not in ("tight", "mild_one_side", "severe_per_side"):
            raise InvalidParameterError(f"unknown perturbation kind {self.kind!r}")
        if self.mild_fraction < 0:
            raise InvalidParameterError("mild_fraction must be >= 0")
        if not (0 <= self.severe_low <= self.severe_high):
            raise InvalidParameterError("need 0 <= severe_low <= severe_high")


def center_and_axes(bbox: BBox) -> tuple[Point2, float, float]:
    """Center point and half-extents (a = half width, b = half height)."""
    cx = (bbox.x_min + bbox.x_max) / 2.0
    cy = (bbox.y_min + bbox.y_max) / 2.0
    return Point2(cx, cy), bbox.width / 2.0, bbox.height / 2.0


def normalized_distances(pt: Point2, bbox: BBox) -> NormalizedDistances:
    """Center distance over the half-diagonal, edge distance over min half-extent.

    Raises OutOfRegionError when pt is outside the closed box.
    """
    if not bbox.contains(pt):
        raise OutOfRegionError(f"point ({pt.x}, {pt.y}) outside bbox {bbox.as_tuple()}")
    center, a, b = center_and_axes(bbox)
    d_c = math.hypot(pt.x - center.x, pt.y - center.y)
    d_c_norm = d_c / math.sqrt(a * a + b * b)
    d_e = min(pt.x - bbox.x_min, bbox.x_max - pt.x,
              pt.y - bbox.y_min, bbox.y_max - pt.y)
    d_e_norm = d_e / min(a, b)
    clamp = lambda v: min(1.0, max(0.0, v))
    return NormalizedDistances(clamp(d_c_norm), clamp(d_e_norm))


def convert_relative_to_absolute(bbox: BBox, dims: ImageDims, alpha: float = 1000.0) -> BBox:
    """Map box coords from the [0, alpha] relative frame to absolute pixels."""
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    sx = dims.width / alpha
    sy = dims.height / alpha
    return BBox(
        x_min=min(max(bbox.x_min * sx, 0.0), float(dims.width)),
        y_min=min(max(bbox.y_min * sy, 0.0), float(dims.height)),
        x_max=min(max(bbox.x_max * sx, 0.0), float(dims.width)),
        y_max=min(max(bbox.y_max * sy, 0.0), float(dims.height)),
    )


def convert_absolute_to_relative(bbox: BBox, dims: ImageDims, alpha: float = 1000.0) -> BBox:
    """Inverse of convert_relative_to_absolute (no quantization)."""
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    sx = alpha / dims.width
    sy = alpha / dims.height
    return BBox(
        x_min=min(max(bbox.x_min * sx, 0.0), alpha),
        y_min=min(max(bbox.y_min * sy, 0.0), alpha),
        x_max=min(max(bbox.x_max * sx, 0.0), alpha),
        y_max=min(max(bbox.y_max * sy, 0.0), alpha),
    )


def _expand_sides(bbox: BBox, factors: tuple[float, float, float, float],
                  dims: ImageDims) -> BBox:
    """Expand (left, top, right, bottom) by factor * matching extent, clip to frame."""
    fl, ft, fr, fb = factors
    w, h = bbox.width, bbox.height
    return BBox(
        x_min=max(bbox.x_min - fl * w, 0.0),
        y_min=max(bbox.y_min - ft * h, 0.0),
        x_max=min(bbox.x_max + fr * w, float(dims.width)),
        y_max=min(bbox.y_max + fb * h, float(dims.height)),
    )


def perturb_bbox(bbox: BBox, regime: PerturbationRegime, dims: ImageDims,
                 rng: np.random.Generator) -> BBox:
    """Expand bbox per the regime; never shrinks, clips to the image frame.

    Severe draws its four factors in one uniform(low, high, 4) call ordered
    (left, top, right, bottom).
    """
    if regime.kind == "tight":
        return _expand_sides(bbox, (0.0, 0.0, 0.0, 0.0), dims)
    if regime.kind == "mild_one_side":
        side = int(rng.integers(4))
        factors = [0.0, 0.0, 0.0, 0.0]
        factors[side] = regime.mild_fraction
        return _expand_sides(bbox, tuple(factors), dims)
    factors = rng.uniform(regime.severe_low, regime.severe_high, 4)
    return _expand_sides(bbox, tuple(float(f) for f in factors), dims)


def parse_regime(name: str) -> PerturbationRegime:
    """Regime from its CLI name; accepts the short aliases mild / severe."""
    aliases = {"mild": "mild_one_side", "severe": "severe_per_side"}
    return PerturbationRegime(kind=aliases.get(name, name))
