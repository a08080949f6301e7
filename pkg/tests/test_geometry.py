import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import cdist

from drocc.errors import EmptySampleSet, PoolTooSmall
from drocc.geometry import (GenerationMode, SampleSet, SupportBox, covering_radius,
                            grid_half_diagonal, quantize_greedy, sample_uniform)


def dense_beta_1d(points, resolution=200001):
    """Brute force sup-inf over a fine grid of the unit interval."""
    grid = np.linspace(0.0, 1.0, resolution)
    return float(np.max(np.min(np.abs(grid[:, None] - np.ravel(points)[None, :]), axis=1)))


def test_support_box_defaults():
    box = SupportBox([0.0, -1.0], [2.0, 1.0])
    assert box.dim == 2
    assert box.m_xi == pytest.approx(np.sqrt(5.0))
    with pytest.raises(ValueError):
        SupportBox([1.0], [0.0])
    with pytest.raises(ValueError):
        SupportBox([0.0], [1.0], m_xi=0.5)


def test_single_uniform_point_inside():
    s = sample_uniform(SupportBox.unit(1), 1, seed=3)
    assert len(s) == 1
    assert 0.0 <= s.points[0, 0] <= 1.0
    assert s.generation_mode is GenerationMode.UNIFORM


def test_uniform_deterministic():
    a = sample_uniform(SupportBox.unit(2), 50, seed=11)
    b = sample_uniform(SupportBox.unit(2), 50, seed=11)
    np.testing.assert_array_equal(a.points, b.points)
    c = sample_uniform(SupportBox.unit(2), 50, seed=12)
    assert not np.array_equal(a.points, c.points)


def test_uniform_mean_square():
    s = sample_uniform(SupportBox.unit(2), 1000, seed=5)
    assert np.all(np.abs(s.points.mean(axis=0) - 0.5) < 0.05)


def test_sample_set_rejects_duplicates():
    with pytest.raises(ValueError):
        SampleSet(np.array([[0.1], [0.1]]), 0, GenerationMode.UNIFORM)


def test_quantizer_single_point_near_center():
    s = quantize_greedy(SupportBox.unit(1), 1, 4000, seed=0)
    assert abs(s.points[0, 0] - 0.5) < 5e-3


def test_quantizer_exhausts_pool():
    box = SupportBox.unit(2)
    s = quantize_greedy(box, 30, 30, seed=4)
    pool = sample_uniform(box, 30, seed=4)
    assert sorted(map(tuple, s.points)) == sorted(map(tuple, pool.points))


def test_quantizer_pool_too_small():
    with pytest.raises(PoolTooSmall):
        quantize_greedy(SupportBox.unit(1), 10, 5, seed=0)


def test_quantizer_prefix_nesting():
    box = SupportBox.unit(2)
    big = quantize_greedy(box, 40, 400, seed=9)
    small = quantize_greedy(box, 20, 400, seed=9)
    np.testing.assert_array_equal(big.points[:20], small.points)


def test_quantizer_beats_uniform_median():
    box = SupportBox.unit(2)
    q = [covering_radius(box, quantize_greedy(box, 16, 400, s), 201) for s in range(20)]
    u = [covering_radius(box, sample_uniform(box, 16, 1000 + s), 201) for s in range(20)]
    assert np.median(q) <= np.median(u)


def test_quantizer_pool_radius_against_random_subsets():
    # greedy k-center versus a random k-subset of the same pool
    box = SupportBox.unit(2)
    wins = 0
    for s in range(20):
        pool = sample_uniform(box, 200, s).points
        greedy = quantize_greedy(box, 12, 200, s).points
        pick = np.random.default_rng(s).choice(200, 12, replace=False)
        r_greedy = cdist(pool, greedy).min(axis=1).max()
        r_random = cdist(pool, pool[pick]).min(axis=1).max()
        wins += r_greedy <= r_random
    assert wins >= 16


def test_beta_two_points():
    s = SampleSet(np.array([[0.25], [0.75]]), 0, GenerationMode.UNIFORM)
    assert covering_radius(SupportBox.unit(1), s) == pytest.approx(0.25, abs=1e-15)


def test_beta_center_of_square():
    box = SupportBox.unit(2)
    s = SampleSet(np.array([[0.5, 0.5]]), 0, GenerationMode.UNIFORM)
    beta = covering_radius(box, s, 401)
    true = np.sqrt(2) / 2
    assert beta <= true + 1e-12
    assert true <= beta + grid_half_diagonal(box, 401)


def test_beta_two_resolutions():
    box = SupportBox.unit(2)
    s = sample_uniform(box, 20, seed=1)
    coarse = covering_radius(box, s, 401)
    fine = covering_radius(box, s, 801)
    assert abs(coarse - fine) <= grid_half_diagonal(box, 401)


def test_beta_empty():
    with pytest.raises(EmptySampleSet):
        covering_radius(SupportBox.unit(1), np.zeros((0, 1)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12, unique=True))
def test_beta_1d_matches_dense_grid(xs):
    s = SampleSet(np.array(xs).reshape(-1, 1), 0, GenerationMode.UNIFORM)
    assert covering_radius(SupportBox.unit(1), s) == pytest.approx(dense_beta_1d(xs), abs=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_beta_monotone_under_additions(seed):
    box = SupportBox.unit(2)
    big = sample_uniform(box, 30, seed)
    small = SampleSet(big.points[:15], seed, GenerationMode.UNIFORM)
    assert covering_radius(box, big, 101) <= covering_radius(box, small, 101) + 1e-15


def test_beta_slope_uniform_square():
    box = SupportBox.unit(2)
    sizes = 2 ** np.arange(7, 12)
    slopes = []
    for seed in range(5):
        betas = [covering_radius(box, sample_uniform(box, int(n), seed), 201) for n in sizes]
        slopes.append(np.polyfit(np.log(sizes), np.log(betas), 1)[0])
    assert -0.5 - 0.35 <= np.median(slopes) <= -0.5 + 0.35
