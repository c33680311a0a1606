"""Membership probability, Bernoulli entropy, entropy ranking."""

from __future__ import annotations

import math

import numpy as np
import pytest

from epd import (BBox, EntropyParams, InvalidParameterError, Point2, ScoredPoint,
                 membership_probability, rank_by_entropy, score_point,
                 shannon_entropy)
from epd.geometry import NormalizedDistances


def test_params_validate():
    with pytest.raises(InvalidParameterError):
        EntropyParams(b=-1.0)
    with pytest.raises(InvalidParameterError):
        EntropyParams(log_base="base10")
    with pytest.raises(InvalidParameterError):
        EntropyParams(a=float("nan"))
    assert EntropyParams().max_entropy() == math.log(2.0)
    assert EntropyParams(log_base="base2").max_entropy() == 1.0


def test_membership_probability_known_values():
    params = EntropyParams()  # a=0, b=2.2, c=2.2
    # Center: d_c=0, d_e=1 -> sigmoid(2.2).
    p_center = membership_probability(NormalizedDistances(0.0, 1.0), params)
    assert abs(p_center - 0.9002495108803148) < 1e-15
    # Corner: d_c=1, d_e=0 -> sigmoid(-2.2), the mirror value.
    p_corner = membership_probability(NormalizedDistances(1.0, 0.0), params)
    assert abs(p_center + p_corner - 1.0) < 1e-15
    # Balanced distances cancel: sigmoid(0) = 0.5.
    assert membership_probability(NormalizedDistances(0.5, 0.5), params) == 0.5


def test_membership_probability_monotone_fuzz():
    params = EntropyParams()
    rng = np.random.default_rng(11)
    for _ in range(5000):
        d_c, d_e = rng.uniform(0, 1, 2)
        step = rng.uniform(1e-6, 0.3)
        base = membership_probability(NormalizedDistances(d_c, d_e), params)
        if d_c + step <= 1.0:
            worse = membership_probability(NormalizedDistances(d_c + step, d_e), params)
            assert worse < base
        if d_e + step <= 1.0:
            better = membership_probability(NormalizedDistances(d_c, d_e + step), params)
            assert better > base


def test_entropy_endpoints_exact():
    assert shannon_entropy(0.0) == 0.0
    assert shannon_entropy(1.0) == 0.0
    assert shannon_entropy(-0.1) == 0.0
    assert shannon_entropy(1.1) == 0.0


def test_entropy_known_values():
    assert abs(shannon_entropy(0.5) - math.log(2.0)) < 1e-15
    assert abs(shannon_entropy(0.2) - 0.5004024235381879) < 1e-15
    assert shannon_entropy(0.5, log_base="base2") == 1.0
    with pytest.raises(InvalidParameterError):
        shannon_entropy(0.5, log_base="nats")


def test_entropy_symmetry_grid():
    for i in range(1, 1000):
        p = i / 1000.0
        assert abs(shannon_entropy(p) - shannon_entropy(1.0 - p)) <= 1e-12


def test_entropy_peaks_at_half():
    h_half = shannon_entropy(0.5)
    for p in np.linspace(0.01, 0.99, 99):
        if p != 0.5:
            assert shannon_entropy(float(p)) <= h_half


def test_score_point_combines_stages():
    box = BBox(0, 0, 100, 100)
    sp = score_point(Point2(50, 50), box, EntropyParams(), "internal", 3)
    assert sp.origin == "internal" and sp.sequence_index == 3
    assert abs(sp.p - 0.9002495108803148) < 1e-15
    assert sp.entropy == shannon_entropy(sp.p)
    d = sp.to_dict()
    assert d["point"] == [50.0, 50.0]
    assert set(d) == {"point", "p", "entropy", "origin", "sequence_index"}


def test_rank_by_entropy_orders_and_breaks_ties():
    mk = lambda h, i: ScoredPoint(Point2(i, i), 0.5, h, "external", i)
    pts = [mk(0.2, 0), mk(0.9, 1), mk(0.2, 2), mk(0.9, 3), mk(0.5, 4)]
    ranked = rank_by_entropy(pts)
    assert [sp.sequence_index for sp in ranked] == [1, 3, 4, 0, 2]
    top2 = rank_by_entropy(pts, k=2)
    assert [sp.sequence_index for sp in top2] == [1, 3]
    with pytest.raises(InvalidParameterError):
        rank_by_entropy(pts, k=-1)
