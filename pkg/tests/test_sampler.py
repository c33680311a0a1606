"""Tests for arc-length sampling and candidate-set construction."""

import numpy as np
import pytest

from epd.errors import InsufficientSamplesError, InvalidParameterError
from epd.geometry import BBox
from epd.sampler import (
    AdaptiveSamples,
    CandidateSet,
    SamplerConfig,
    _nearest_index,
    adaptive_sample,
    dynamic_coefficients,
    interpolate_at_arc,
    random_candidates,
    ray_based_candidates,
    split_internal_external,
)
from epd.spiral import SpiralConfig, SpiralPath, generate_spiral, radial_profile


def _line_path(length: float, n: int = 1001) -> SpiralPath:
    # Straight horizontal segment: arc positions equal x coordinates exactly.
    xs = np.linspace(0.0, length, n)
    pts = np.column_stack([xs, np.zeros(n)])
    return SpiralPath(points=pts, cumulative_arc=xs.copy(),
                      radial=radial_profile(pts, BBox(-1, -1, length + 1, 1)))


def test_sampler_config_validation():
    SamplerConfig()
    with pytest.raises(InvalidParameterError):
        SamplerConfig(k_min=0.0)
    with pytest.raises(InvalidParameterError):
        SamplerConfig(k_min=2.0, k_max=1.0)
    with pytest.raises(InvalidParameterError):
        SamplerConfig(epsilon=1.0)
    with pytest.raises(InvalidParameterError):
        SamplerConfig(epsilon=-0.1)
    with pytest.raises(InvalidParameterError):
        SamplerConfig(budget_k=0)
    with pytest.raises(InvalidParameterError):
        SamplerConfig(density_mapping="other")
    with pytest.raises(InvalidParameterError):
        SamplerConfig(strategy="grid")


def test_dynamic_coefficients_range_and_modes():
    path = generate_spiral(BBox(0, 0, 120, 80), SpiralConfig(n_points=500))
    inv = dynamic_coefficients(path.radial, SamplerConfig(density_mapping="inverse"))
    lit = dynamic_coefficients(path.radial, SamplerConfig(density_mapping="literal"))
    for k in (inv, lit):
        assert k.min() == 0.5 and k.max() == 1.5
    # The two modes mirror each other about the band midpoint.
    assert np.allclose(inv + lit, 2.0)
    # Where the gradient is at its normalized peak, inverse is slowest.
    peak = int(np.argmax(path.radial.g_norm))
    assert inv[peak] == 0.5 and lit[peak] == 1.5


def test_nearest_index_ties_go_lower():
    arc = np.array([0.0, 1.0, 2.0, 4.0])
    assert _nearest_index(arc, -3.0) == 0
    assert _nearest_index(arc, 0.4) == 0
    assert _nearest_index(arc, 0.5) == 0   # tie resolves down
    assert _nearest_index(arc, 0.6) == 1
    assert _nearest_index(arc, 3.0) == 2   # tie resolves down
    assert _nearest_index(arc, 9.0) == 3


def test_interpolate_at_arc_midpoint_and_bounds():
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    arc = np.array([0.0, 2.0])
    assert interpolate_at_arc(pts, arc, 1.0) == (1.0, 0.0)
    assert interpolate_at_arc(pts, arc, 0.0) == (0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        interpolate_at_arc(pts, arc, 2.5)
    with pytest.raises(InvalidParameterError):
        interpolate_at_arc(pts, arc, -0.1)


def test_sample_count_formula_unit_coefficients():
    # k == 1 everywhere and no jitter: the walk is bias + beta * j, so the
    # sample count is floor((S_total - bias) / beta) + 1.
    path = _line_path(1000.0)
    coeffs = np.ones(path.points.shape[0])
    cfg = SamplerConfig(k_min=1.0, k_max=1.0, epsilon=0.0, budget_k=4)
    box = BBox(0, 0, 100, 50)  # beta = 100
    samples = adaptive_sample(path, coeffs, box, cfg, np.random.default_rng(3))
    assert samples.attempts == 1
    assert samples.beta == 100.0
    assert 0.0 < samples.bias < 100.0
    n = samples.points.shape[0]
    assert n == int((1000.0 - samples.bias) // 100.0) + 1 == 10
    expected = samples.bias + 100.0 * np.arange(10)
    assert np.allclose(samples.raw_positions, expected)
    assert np.array_equal(samples.arc_positions, samples.raw_positions)
    assert np.all(samples.coefficients == 1.0)
    # On the straight line the x coordinate is the arc position itself.
    assert np.allclose(samples.points[:, 0], samples.arc_positions)
    assert np.all(samples.points[:, 1] == 0.0)


def test_coefficient_mismatch_rejected():
    path = _line_path(100.0, n=50)
    with pytest.raises(InvalidParameterError):
        adaptive_sample(path, np.ones(49), BBox(0, 0, 10, 10),
                        SamplerConfig(), np.random.default_rng(0))


def test_beta_halving_until_enough_samples():
    # Path of length 150 in a 100x100 box: betas 100, 50, 25 yield at most
    # 2, 3, and 6 samples; 12.5 yields 12 >= 8, so attempt 4 succeeds.
    path = _line_path(150.0, n=301)
    coeffs = np.ones(301)
    cfg = SamplerConfig(k_min=1.0, k_max=1.0, epsilon=0.0, budget_k=4)
    samples = adaptive_sample(path, coeffs, BBox(0, 0, 100, 100), cfg,
                              np.random.default_rng(11))
    assert samples.attempts == 4
    assert samples.beta == 12.5
    assert samples.points.shape[0] >= 8
    assert 0.0 < samples.bias < 12.5


def test_sampling_gives_up_after_halvings():
    path = _line_path(5.0, n=11)
    coeffs = np.ones(11)
    cfg = SamplerConfig(k_min=1.0, k_max=1.0, epsilon=0.0, budget_k=4)
    with pytest.raises(InsufficientSamplesError):
        adaptive_sample(path, coeffs, BBox(0, 0, 100, 100), cfg,
                        np.random.default_rng(7))


def test_jitter_bounds_and_ordering():
    rng = np.random.default_rng(21)
    box = BBox(0, 0, 60, 40)
    cfg = SamplerConfig(epsilon=0.2, budget_k=4)
    for seed in range(25):
        path = generate_spiral(box, SpiralConfig(n_points=900))
        coeffs = dynamic_coefficients(path.radial, cfg)
        samples = adaptive_sample(path, coeffs, box, cfg,
                                  np.random.default_rng(seed))
        s_total = path.cumulative_arc[-1]
        # Jittered positions stay within epsilon * beta of their raw walk
        # positions (clipping can only pull them closer) and inside the path.
        gap = np.abs(samples.arc_positions - samples.raw_positions)
        assert np.all(gap <= cfg.epsilon * samples.beta + 1e-12)
        assert np.all(samples.arc_positions >= 0.0)
        assert np.all(samples.arc_positions <= s_total + 1e-12)
        assert np.all(np.diff(samples.arc_positions) >= 0)
        assert np.all((samples.coefficients >= cfg.k_min)
                      & (samples.coefficients <= cfg.k_max))
    del rng


def test_adaptive_sample_deterministic_per_seed():
    box = BBox(5, 5, 125, 65)
    path = generate_spiral(box, SpiralConfig(n_points=700))
    cfg = SamplerConfig()
    coeffs = dynamic_coefficients(path.radial, cfg)
    a = adaptive_sample(path, coeffs, box, cfg, np.random.default_rng(99))
    b = adaptive_sample(path, coeffs, box, cfg, np.random.default_rng(99))
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.arc_positions, b.arc_positions)
    assert a.bias == b.bias and a.beta == b.beta


def _samples_from_points(pts: np.ndarray) -> AdaptiveSamples:
    n = pts.shape[0]
    arc = np.arange(n, dtype=float)
    return AdaptiveSamples(points=pts, arc_positions=arc, raw_positions=arc,
                           coefficients=np.ones(n), beta=1.0, bias=0.0, attempts=1)


def test_split_orders_by_center_distance():
    box = BBox(0, 0, 100, 100)
    xs = [50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0, 90.0]
    pts = np.array([[x, 50.0] for x in xs])
    samples = _samples_from_points(pts)
    cand = split_internal_external(samples, box, SamplerConfig(budget_k=2))
    assert [sp.sequence_index for sp in cand.internal] == [0, 1]
    # External queue runs farthest first.
    assert [sp.sequence_index for sp in cand.external] == [7, 6]
    assert all(sp.origin == "internal" for sp in cand.internal)
    assert all(sp.origin == "external" for sp in cand.external)
    assert cand.internal[0].point.x == 50.0
    assert cand.external[0].point.x == 90.0
    assert len(cand.sample_trace) == 8
    assert len(cand.all_points()) == 4


def test_split_tie_break_by_sequence():
    # All candidates at the same distance: the split falls back to input order.
    box = BBox(0, 0, 100, 100)
    pts = np.tile(np.array([[50.0, 40.0]]), (8, 1))
    cand = split_internal_external(_samples_from_points(pts), box,
                                   SamplerConfig(budget_k=4))
    assert [sp.sequence_index for sp in cand.internal] == [0, 1, 2, 3]
    assert [sp.sequence_index for sp in cand.external] == [7, 6, 5, 4]


def test_split_mean_separation_fuzz():
    rng = np.random.default_rng(17)
    box = BBox(0, 0, 200, 120)
    cfg = SamplerConfig(budget_k=4)
    for _ in range(100):
        pts = np.column_stack([rng.uniform(0, 200, 16), rng.uniform(0, 120, 16)])
        cand = split_internal_external(_samples_from_points(pts), box, cfg)
        d_int = [np.hypot(sp.point.x - 100, sp.point.y - 60) for sp in cand.internal]
        d_ext = [np.hypot(sp.point.x - 100, sp.point.y - 60) for sp in cand.external]
        assert max(d_int) <= min(d_ext) + 1e-12
        seq = {sp.sequence_index for sp in cand.all_points()}
        assert len(seq) == 8


def test_split_requires_enough_samples():
    pts = np.array([[10.0, 10.0], [20.0, 20.0], [30.0, 30.0]])
    with pytest.raises(InsufficientSamplesError):
        split_internal_external(_samples_from_points(pts), BBox(0, 0, 50, 50),
                                SamplerConfig(budget_k=2))


def test_ray_candidates_square_exact_positions():
    box = BBox(0, 0, 100, 100)
    cand = ray_based_candidates(box, SamplerConfig(budget_k=4),
                                np.random.default_rng(0))
    ext = [(sp.point.x, sp.point.y) for sp in cand.external]
    ints = [(sp.point.x, sp.point.y) for sp in cand.internal]
    # step = 25: edge insets cycle left, top, right, bottom.
    assert ext == [(25.0, 50.0), (50.0, 25.0), (75.0, 50.0), (50.0, 75.0)]
    # center offsets cycle +x, -x, +y, -y.
    assert ints == [(75.0, 50.0), (25.0, 50.0), (50.0, 75.0), (50.0, 25.0)]
    assert [sp.sequence_index for sp in cand.external] == [0, 1, 2, 3]
    assert [sp.sequence_index for sp in cand.internal] == [4, 5, 6, 7]
    assert all(sp.origin == "ray" for sp in cand.all_points())
    assert cand.sample_trace == []


def test_ray_candidates_second_ring_depth():
    box = BBox(0, 0, 80, 80)  # step = 20
    cand = ray_based_candidates(box, SamplerConfig(budget_k=5),
                                np.random.default_rng(0))
    # The fifth external candidate starts the second ring: depth 2 * step.
    assert (cand.external[4].point.x, cand.external[4].point.y) == (40.0, 40.0)
    assert (cand.internal[4].point.x, cand.internal[4].point.y) == (80.0, 40.0)


def test_ray_candidates_contained_for_moderate_aspect():
    rng = np.random.default_rng(33)
    cfg = SamplerConfig(budget_k=4)
    for _ in range(50):
        w = rng.uniform(10, 300)
        h = w * rng.uniform(0.5, 2.0)
        x0, y0 = rng.uniform(-50, 50, 2)
        box = BBox(x0, y0, x0 + w, y0 + h)
        cand = ray_based_candidates(box, cfg, rng)
        for sp in cand.all_points():
            assert box.contains(sp.point)


def test_ray_candidates_reject_extreme_aspect():
    # step = 25 exceeds the 20-unit half height: the +y internal ray exits.
    with pytest.raises(InsufficientSamplesError):
        ray_based_candidates(BBox(0, 0, 100, 40), SamplerConfig(budget_k=4),
                             np.random.default_rng(0))


def test_random_candidates_shape_and_determinism():
    box = BBox(10, 20, 110, 80)
    cfg = SamplerConfig(budget_k=4)
    a = random_candidates(box, cfg, np.random.default_rng(5))
    b = random_candidates(box, cfg, np.random.default_rng(5))
    assert len(a.external) == len(a.internal) == 4
    assert [sp.sequence_index for sp in a.all_points()] == list(range(8))
    assert all(sp.origin == "external" for sp in a.external)
    assert all(sp.origin == "internal" for sp in a.internal)
    for sp in a.all_points():
        assert box.contains(sp.point)
    assert [(sp.point.x, sp.point.y) for sp in a.all_points()] == \
           [(sp.point.x, sp.point.y) for sp in b.all_points()]


def test_candidate_set_to_dict_round_shape():
    box = BBox(0, 0, 100, 100)
    cand = ray_based_candidates(box, SamplerConfig(budget_k=4),
                                np.random.default_rng(0))
    d = cand.to_dict()
    assert set(d) == {"external", "internal", "sample_trace"}
    assert len(d["external"]) == 4
    assert set(d["external"][0]) == {"point", "p", "entropy", "origin",
                                     "sequence_index"}
