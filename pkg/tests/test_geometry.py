"""Boxes, distances, coordinate conversion, perturbation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from epd import (BBox, ImageDims, InvalidGeometryError, InvalidParameterError,
                 OutOfRegionError, PerturbationRegime, Point2,
                 convert_absolute_to_relative, convert_relative_to_absolute,
                 normalized_distances, perturb_bbox)
from epd.geometry import center_and_axes, parse_regime


class _FixedFactorRng:
    """Stands in for a Generator when a test needs chosen expansion factors."""

    def __init__(self, factors):
        self.factors = np.asarray(factors, dtype=float)

    def uniform(self, low, high, size=None):
        assert size == len(self.factors)
        return self.factors


def test_point_coerces_and_validates():
    p = Point2(np.float64(1.5), 2)
    assert type(p.x) is float and type(p.y) is float
    assert p.as_tuple() == (1.5, 2.0)
    with pytest.raises(InvalidGeometryError):
        Point2(float("nan"), 0.0)
    with pytest.raises(InvalidGeometryError):
        Point2(0.0, float("inf"))


def test_bbox_validates_and_measures():
    box = BBox(10, 20, 110, 70)
    assert box.width == 100.0 and box.height == 50.0
    center, a, b = center_and_axes(box)
    assert center.as_tuple() == (60.0, 45.0)
    assert (a, b) == (50.0, 25.0)
    for bad in [(0, 0, 0, 1), (0, 0, 1, 0), (5, 5, 4, 6), (0, 0, float("nan"), 1)]:
        with pytest.raises(InvalidGeometryError):
            BBox(*bad)


def test_bbox_contains_is_closed():
    box = BBox(0, 0, 10, 10)
    assert box.contains(Point2(0, 0))
    assert box.contains(Point2(10, 10))
    assert box.contains(Point2(10 + 1e-12, 5))  # interpolation slack
    assert not box.contains(Point2(10.1, 5))


def test_normalized_distances_known_point():
    # Box [0,0,100,100]: point (75, 50) sits halfway out along +x.
    nd = normalized_distances(Point2(75, 50), BBox(0, 0, 100, 100))
    assert abs(nd.d_c_norm - math.sqrt(2) / 4) < 1e-12
    assert abs(nd.d_e_norm - 0.5) < 1e-12


def test_normalized_distances_extremes():
    box = BBox(10, 10, 110, 60)
    center, _, _ = center_and_axes(box)
    nd_center = normalized_distances(center, box)
    assert nd_center.d_c_norm == 0.0
    assert nd_center.d_e_norm == 1.0
    nd_corner = normalized_distances(Point2(10, 10), box)
    assert nd_corner.d_c_norm == 1.0
    assert nd_corner.d_e_norm == 0.0
    nd_edge = normalized_distances(Point2(50, 10), box)
    assert nd_edge.d_e_norm == 0.0


def test_normalized_distances_rejects_outside():
    with pytest.raises(OutOfRegionError):
        normalized_distances(Point2(200, 50), BBox(0, 0, 100, 100))


def test_normalized_distances_in_unit_range_fuzz():
    rng = np.random.default_rng(42)
    for _ in range(2000):
        x0, y0 = rng.uniform(-50, 50, 2)
        w, h = rng.uniform(0.5, 200, 2)
        box = BBox(x0, y0, x0 + w, y0 + h)
        pt = Point2(rng.uniform(box.x_min, box.x_max),
                    rng.uniform(box.y_min, box.y_max))
        nd = normalized_distances(pt, box)
        assert 0.0 <= nd.d_c_norm <= 1.0
        assert 0.0 <= nd.d_e_norm <= 1.0


def test_convert_relative_absolute_example():
    out = convert_relative_to_absolute(BBox(250, 250, 750, 750),
                                       ImageDims(640, 480), alpha=1000.0)
    assert out.as_tuple() == (160.0, 120.0, 480.0, 360.0)


def test_convert_round_trip_and_monotonicity():
    dims = ImageDims(4096, 4096)
    rng = np.random.default_rng(7)
    prev = None
    for _ in range(500):
        x0, y0 = rng.uniform(0, 900, 2)
        w, h = rng.uniform(1, 99, 2)
        rel = BBox(x0, y0, x0 + w, y0 + h)
        absolute = convert_relative_to_absolute(rel, dims, 1000.0)
        back = convert_absolute_to_relative(absolute, dims, 1000.0)
        for got, want in zip(back.as_tuple(), rel.as_tuple()):
            assert abs(got - want) <= 0.5  # pure affine: exact to float eps
        if prev is not None and prev.x_min < rel.x_min:
            assert convert_relative_to_absolute(prev, dims).x_min <= absolute.x_min
        prev = rel


def test_convert_rejects_bad_alpha():
    with pytest.raises(InvalidParameterError):
        convert_relative_to_absolute(BBox(0, 0, 1, 1), ImageDims(10, 10), alpha=0.0)


def test_perturb_mild_moves_chosen_side_out():
    box = BBox(10, 10, 110, 110)
    dims = ImageDims(640, 480)
    regime = PerturbationRegime("mild_one_side")
    seen = set()
    for seed in range(40):
        out = perturb_bbox(box, regime, dims, np.random.default_rng(seed))
        moved = [abs(g - w) > 1e-12
                 for g, w in zip(out.as_tuple(), box.as_tuple())]
        assert sum(moved) == 1
        seen.add(moved.index(True))
        # 10% of the matching extent, outward.
        deltas = [box.x_min - out.x_min, box.y_min - out.y_min,
                  out.x_max - box.x_max, out.y_max - box.y_max]
        assert abs(max(deltas) - 10.0) < 1e-12
    assert seen == {0, 1, 2, 3}  # all four sides reachable


def test_perturb_mild_clips_at_frame():
    out = perturb_bbox(BBox(10, 10, 110, 110), PerturbationRegime("mild_one_side"),
                       ImageDims(115, 115), np.random.default_rng(0))
    t = out.as_tuple()
    assert t[0] >= 0 and t[1] >= 0 and t[2] <= 115 and t[3] <= 115


def test_perturb_zero_factors_is_identity():
    regime = PerturbationRegime("severe_per_side", severe_low=0.0, severe_high=0.0)
    box = BBox(10, 10, 110, 110)
    out = perturb_bbox(box, regime, ImageDims(640, 480), np.random.default_rng(1))
    assert out.as_tuple() == box.as_tuple()


def test_perturb_severe_per_side_arithmetic():
    rng = _FixedFactorRng([0.05, 0.10, 0.15, 0.10])  # left, top, right, bottom
    out = perturb_bbox(BBox(10, 10, 110, 110), PerturbationRegime("severe_per_side"),
                       ImageDims(640, 480), rng)
    assert out.as_tuple() == (5.0, 0.0, 125.0, 120.0)


def test_perturb_severe_contains_input_fuzz():
    regime = PerturbationRegime("severe_per_side")
    dims = ImageDims(1000, 1000)
    rng = np.random.default_rng(3)
    for _ in range(300):
        x0, y0 = rng.uniform(50, 400, 2)
        w, h = rng.uniform(10, 300, 2)
        box = BBox(x0, y0, x0 + w, y0 + h)
        out = perturb_bbox(box, regime, dims, rng)
        assert out.x_min <= box.x_min and out.y_min <= box.y_min
        assert out.x_max >= box.x_max and out.y_max >= box.y_max
        assert out.x_min >= 0 and out.y_min >= 0
        assert out.x_max <= 1000 and out.y_max <= 1000


def test_tight_regime_is_identity():
    box = BBox(5, 5, 50, 40)
    out = perturb_bbox(box, PerturbationRegime("tight"), ImageDims(100, 100),
                       np.random.default_rng(0))
    assert out.as_tuple() == box.as_tuple()


def test_parse_regime_names_and_aliases():
    assert parse_regime("tight").kind == "tight"
    assert parse_regime("mild").kind == "mild_one_side"
    assert parse_regime("severe").kind == "severe_per_side"
    assert parse_regime("severe_per_side").kind == "severe_per_side"
    with pytest.raises(InvalidParameterError):
        parse_regime("extreme")


def test_regime_validates_parameters():
    with pytest.raises(InvalidParameterError):
        PerturbationRegime("severe_per_side", severe_low=0.2, severe_high=0.1)
    with pytest.raises(InvalidParameterError):
        PerturbationRegime("mild_one_side", mild_fraction=-0.1)
