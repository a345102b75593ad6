"""Per-sample probability distributions and Gaussian kernel density tools.

The divergence kernels consume a pair of discrete distributions (P, Q),
one per sample, built over the channel states.  Two constructions are
supported: plain shift-and-normalize, and a variant that first smooths
the channel sequence with a discrete Gaussian.  Both apply an epsilon
floor so geometric/harmonic midpoints never vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FusedSample
from .errors import ConfigError, DataError, NumericError

DEFAULT_EPSILON = 1e-10


@dataclass
class ProbVector:
    """Non-negative vector over N states summing to 1."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]


@dataclass
class ProbConfig:
    """How to turn samples into distributions (see to_prob)."""

    mode: str = "normalize"
    epsilon: float | None = None  # None: take the kernel spec's epsilon
    bandwidth: float | None = None


@dataclass
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def _channels(sample) -> np.ndarray:
    values = sample.channels if isinstance(sample, FusedSample) else sample
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise DataError("expected a 1-D channel vector")
    if not np.isfinite(values).all():
        raise NumericError("non-finite channel value")
    return values


def _reflect_smooth(values: np.ndarray, bandwidth: float) -> np.ndarray:
    """Convolve with a discrete Gaussian, reflecting mass at the edges.

    Out-of-range destinations are folded back into the support, so the
    total mass of ``values`` is preserved exactly.
    """
    n = values.size
    radius = max(1, int(math.ceil(4.0 * bandwidth)))
    offsets = np.arange(-radius, radius + 1)
    weights = np.exp(-0.5 * (offsets / bandwidth) ** 2)
    weights /= weights.sum()
    out = np.zeros(n)
    for off, w in zip(offsets, weights):
        dest = np.arange(n) + off
        # symmetric reflection is periodic with period 2n
        dest = np.mod(dest, 2 * n)
        dest = np.where(dest >= n, 2 * n - 1 - dest, dest)
        np.add.at(out, dest, w * values)
    return out


def to_prob(sample, mode: str = "normalize", epsilon: float = DEFAULT_EPSILON,
            bandwidth: float | None = None) -> ProbVector:
    """Build the per-sample distribution over channel states.

    normalize mode shifts the channels so the minimum maps to zero and
    normalizes.  kde_smoothed mode additionally convolves the shifted
    sequence with a discrete Gaussian of the given bandwidth before
    normalizing.  In both modes every state then receives an epsilon
    floor (followed by renormalization), guaranteeing strictly positive
    entries whenever epsilon > 0.
    """
    if epsilon < 0:
        raise ConfigError("epsilon must be >= 0")
    w = _channels(sample)
    w = w - w.min()
    if mode == "kde_smoothed":
        if bandwidth is None or bandwidth <= 0:
            raise ConfigError("kde_smoothed mode requires bandwidth > 0")
        w = _reflect_smooth(w, bandwidth)
    elif mode != "normalize":
        raise ConfigError(f"unknown prob mode {mode!r}")
    total = w.sum()
    if total > 0:
        w = w / total
    elif epsilon == 0:
        raise NumericError("degenerate distribution; use epsilon > 0")
    if epsilon > 0:
        w = w + epsilon
        w = w / w.sum()
    return ProbVector(w)


def silverman_bandwidth(values) -> float:
    """Rule-of-thumb Gaussian bandwidth: 1.06 * std * n^(-1/5)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise DataError("silverman_bandwidth needs at least 2 values")
    std = values.std(ddof=1)
    if std == 0:
        raise NumericError("zero spread; bandwidth undefined")
    return 1.06 * float(std) * values.size ** (-0.2)


def make_grid(values, bandwidth: float, num: int = 512) -> np.ndarray:
    """Evaluation grid spanning the data +- 4 bandwidths."""
    values = np.asarray(values, dtype=float)
    return np.linspace(
        values.min() - 4.0 * bandwidth, values.max() + 4.0 * bandwidth, num
    )


def kde_density(values, bandwidth: float, grid) -> DensityEstimate:
    """Gaussian kernel density estimate evaluated on a sorted grid."""
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if values.size == 0:
        raise DataError("kde_density needs at least one value")
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be > 0")
    if grid.size < 2 or (np.diff(grid) < 0).any():
        raise DataError("grid must be sorted ascending")
    z = (grid[:, None] - values[None, :]) / bandwidth
    phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    density = phi.sum(axis=1) / (values.size * bandwidth)
    return DensityEstimate(grid=grid, density=density, bandwidth=bandwidth)
