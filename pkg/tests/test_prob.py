import math

import numpy as np
import pytest

from fusegram import prob
from fusegram.errors import ConfigError, DataError, NumericError


def test_single_mass():
    pv = prob.to_prob(np.array([1.0] + [0.0] * 13), epsilon=0)
    expected = np.zeros(14)
    expected[0] = 1.0
    assert np.array_equal(pv.probs, expected)


def test_all_equal_gives_uniform():
    pv = prob.to_prob(np.full(14, 42.0), epsilon=1e-10)
    assert np.allclose(pv.probs, 1.0 / 14.0, atol=1e-12)


def test_direct_normalization():
    pv = prob.to_prob(np.array([2.0, 1.0] + [0.0] * 12), epsilon=0)
    assert pv.probs[0] == pytest.approx(2 / 3, abs=1e-15)
    assert pv.probs[1] == pytest.approx(1 / 3, abs=1e-15)
    assert np.all(pv.probs[2:] == 0)


def test_degenerate_requires_epsilon():
    with pytest.raises(NumericError, match="degenerate"):
        prob.to_prob(np.full(14, 3.0), epsilon=0)


def test_sums_to_one_and_nonneg():
    rng = np.random.default_rng(0)
    for _ in range(200):
        pv = prob.to_prob(rng.standard_normal(14), epsilon=1e-10)
        assert abs(pv.probs.sum() - 1.0) <= 1e-12
        assert np.all(pv.probs > 0)


def test_epsilon_floor_bound():
    rng = np.random.default_rng(1)
    eps = 1e-6
    floor = eps / (1.0 + 14 * eps)
    for _ in range(100):
        pv = prob.to_prob(rng.standard_normal(14), epsilon=eps)
        assert pv.probs.min() >= floor - 1e-18


def test_shift_invariance():
    rng = np.random.default_rng(2)
    for _ in range(100):
        ch = rng.standard_normal(14)
        a = prob.to_prob(ch, epsilon=1e-10)
        b = prob.to_prob(ch + 123.456, epsilon=1e-10)
        assert np.abs(a.probs - b.probs).max() <= 1e-12


def test_kde_smoothed_mode():
    ch = np.zeros(14)
    ch[6] = 10.0
    pv = prob.to_prob(ch, mode="kde_smoothed", epsilon=1e-10, bandwidth=1.0)
    assert abs(pv.probs.sum() - 1.0) <= 1e-12
    assert pv.probs[6] == pv.probs.max()
    # smoothing spreads mass to the neighbors
    assert pv.probs[5] > 1e-3 and pv.probs[7] > 1e-3
    assert pv.probs[5] == pytest.approx(pv.probs[7], rel=1e-9)


def test_kde_smoothed_needs_bandwidth():
    with pytest.raises(ConfigError, match="bandwidth"):
        prob.to_prob(np.arange(14.0), mode="kde_smoothed", epsilon=1e-10)


def test_unknown_mode():
    with pytest.raises(ConfigError, match="mode"):
        prob.to_prob(np.arange(14.0), mode="weird")


def test_smoothing_preserves_mass():
    rng = np.random.default_rng(3)
    for bw in (0.3, 1.0, 5.0, 20.0):
        v = rng.uniform(0, 1, 14)
        out = prob._reflect_smooth(v, bw)
        assert out.sum() == pytest.approx(v.sum(), abs=1e-12)
        assert np.all(out >= 0)


def test_silverman_insufficient_data():
    with pytest.raises(DataError):
        prob.silverman_bandwidth([1.0])


def test_silverman_zero_spread():
    with pytest.raises(NumericError, match="zero spread"):
        prob.silverman_bandwidth([2.0, 2.0, 2.0])


def test_silverman_closed_form():
    values = np.array([0.0, 2.0, 4.0])  # sample std exactly 2
    h = prob.silverman_bandwidth(values)
    assert h == pytest.approx(1.06 * 2.0 * 3 ** (-0.2), abs=1e-14)


def test_silverman_large_n_anchor():
    rng = np.random.default_rng(10)
    values = rng.standard_normal(100_000)
    h = prob.silverman_bandwidth(values)
    # sigma-hat ~= 1, n^(-1/5) = 0.1 exactly at n = 100000
    assert h == pytest.approx(0.106, abs=2e-3)


def test_silverman_homogeneous():
    rng = np.random.default_rng(11)
    values = rng.standard_normal(500)
    h1 = prob.silverman_bandwidth(values)
    h2 = prob.silverman_bandwidth(3.0 * values)
    assert h2 == pytest.approx(3.0 * h1, rel=1e-12)


def test_kde_single_value_symmetric_peak():
    grid = np.linspace(-4, 6, 501)
    est = prob.kde_density([1.0], 0.5, grid)
    peak = grid[np.argmax(est.density)]
    assert peak == pytest.approx(1.0, abs=grid[1] - grid[0])
    # symmetry about the value
    left = np.interp(1.0 - 0.7, grid, est.density)
    right = np.interp(1.0 + 0.7, grid, est.density)
    assert left == pytest.approx(right, rel=1e-9)


def test_kde_two_bumps_integrates_to_one():
    h = 0.01
    grid = prob.make_grid([-1.0, 1.0], h, num=4001)
    est = prob.kde_density([-1.0, 1.0], h, grid)
    integral = np.trapezoid(est.density, est.grid)
    assert integral == pytest.approx(1.0, abs=1e-3)
    # near-disjoint bumps: density between them is negligible
    assert np.interp(0.0, grid, est.density) < 1e-6


def test_kde_matches_normal_density():
    rng = np.random.default_rng(12)
    values = rng.standard_normal(1000)
    h = prob.silverman_bandwidth(values)
    grid = prob.make_grid(values, h, num=1001)
    est = prob.kde_density(values, h, grid)
    truth = np.exp(-0.5 * grid**2) / math.sqrt(2 * math.pi)
    assert np.abs(est.density - truth).max() <= 0.05


def test_kde_rejects_bad_inputs():
    with pytest.raises(DataError):
        prob.kde_density([], 1.0, np.linspace(0, 1, 10))
    with pytest.raises(DataError, match="sorted"):
        prob.kde_density([0.0], 1.0, np.array([1.0, 0.0, 2.0]))
    with pytest.raises(ConfigError):
        prob.kde_density([0.0], -1.0, np.linspace(0, 1, 10))


def test_density_integral_invariant():
    rng = np.random.default_rng(13)
    for _ in range(5):
        values = rng.standard_normal(50) * rng.uniform(0.5, 3)
        h = prob.silverman_bandwidth(values)
        grid = prob.make_grid(values, h, num=2001)
        est = prob.kde_density(values, h, grid)
        assert np.trapezoid(est.density, grid) == pytest.approx(1.0, abs=1e-3)
