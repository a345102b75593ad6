"""Texture descriptors and dimensionality reduction.

The holistic descriptor convolves a grayscale image with a bank of
zero-DC log-polar Gabor filters (4 scales x 8 orientations, applied in
the frequency domain with periodic boundaries) and averages response
magnitudes over a 4x4 spatial grid: 4 * 8 * 16 = 512 values, ordered
scale-major, then orientation, then row-major block.

Orientations are sampled every 45 degrees around the full circle, so a
quarter-turn of the image shifts the orientation index by exactly 2.
For real images the spectrum is Hermitian, making channels o and o+4
carry equal magnitudes; the redundancy is the price of exact quarter-
turn covariance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from . import codec
from .data import LabeledDataset

GIST_SCALES = 4
GIST_ORIENTATIONS = 8
GIST_GRID = 4
GIST_DIM = GIST_SCALES * GIST_ORIENTATIONS * GIST_GRID * GIST_GRID

_bank_cache: dict = {}


def resize_nearest(image, side: int = 256) -> np.ndarray:
    """Nearest-neighbor upscale of a square image.

    When ``side`` is a multiple of the source side this is exact block
    replication (each 4x4 source pixel becomes a 64x64 block at 256).
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise DataError("resize_nearest expects a square image")
    src = img.shape[0]
    idx = (np.arange(side) * src) // side
    return img[np.ix_(idx, idx)]


def gabor_bank(side: int, scales: int = GIST_SCALES,
               orientations: int = GIST_ORIENTATIONS) -> np.ndarray:
    """Frequency-domain filter bank, shape (scales*orientations, side, side).

    Log-polar Gabors: a Gaussian ridge around the scale's center
    frequency times a Gaussian in (wrapped) angle around each
    orientation.  The DC bin is forced to zero in every filter.
    """
    key = (side, scales, orientations)
    if key in _bank_cache:
        return _bank_cache[key]
    freqs = np.fft.fftfreq(side)
    fx = freqs[None, :]
    fy = freqs[:, None]
    fr = np.sqrt(fx**2 + fy**2)
    theta = np.arctan2(fy, fx)

    bank = np.empty((scales * orientations, side, side))
    for s in range(scales):
        f_center = 0.3 / (1.85**s)
        radial = np.exp(-3.5 * (fr / f_center - 1.0) ** 2)
        for o in range(orientations):
            angle = 2.0 * math.pi * o / orientations
            delta = np.mod(theta - angle + math.pi, 2.0 * math.pi) - math.pi
            g = radial * np.exp(-2.0 * math.pi * delta**2)
            g[0, 0] = 0.0
            bank[s * orientations + o] = g
    _bank_cache[key] = bank
    return bank


def _prefilter(img: np.ndarray) -> np.ndarray:
    # log intensity, then local contrast normalization via a broad
    # Gaussian low-pass in the frequency domain
    img = np.log1p(img)
    side = img.shape[0]
    freqs = np.fft.fftfreq(side)
    fr2 = freqs[None, :] ** 2 + freqs[:, None] ** 2
    lowpass = np.exp(-fr2 / (2.0 * 0.02**2))
    spectrum = np.fft.fft2(img)
    background = np.real(np.fft.ifft2(spectrum * lowpass))
    detail = img - background
    local_energy = np.real(np.fft.ifft2(np.fft.fft2(detail**2) * lowpass))
    return detail / (0.2 + np.sqrt(np.abs(local_energy)))


def gist(image, scales: int = GIST_SCALES,
         orientations: int = GIST_ORIENTATIONS, grid: int = GIST_GRID,
         prefilter: bool = False) -> np.ndarray:
    """Gabor-bank descriptor pooled over a grid of image blocks.

    The image must be square with a side divisible by ``grid``.  Output
    length is scales * orientations * grid**2 (512 at the defaults).
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise DataError("gist expects a square image")
    side = img.shape[0]
    if side % grid != 0:
        raise DataError(
            f"image side {side} is not divisible by grid {grid}"
        )
    if prefilter:
        img = _prefilter(img)
    block = side // grid
    spectrum = np.fft.fft2(img)
    bank = gabor_bank(side, scales, orientations)
    out = np.empty(scales * orientations * grid * grid)
    for f, g in enumerate(bank):
        magnitude = np.abs(np.fft.ifft2(spectrum * g))
        pooled = magnitude.reshape(grid, block, grid, block).mean(axis=(1, 3))
        out[f * grid * grid:(f + 1) * grid * grid] = pooled.ravel()
    return out


def gist_features(dataset: LabeledDataset, side: int | None = 256,
                  prefilter: bool = False) -> np.ndarray:
    """Encode every sample to its 4x4 image, optionally upscale, and
    extract descriptors.  Returns an (n, 512) matrix."""
    rows = []
    for sample in dataset.samples:
        img = codec.encode(sample).grid().astype(float)
        if side is not None and side != img.shape[0]:
            img = resize_nearest(img, side)
        rows.append(gist(img, prefilter=prefilter))
    return np.array(rows)


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray   # (rank, d) orthonormal rows
    ratios: np.ndarray       # non-increasing, sums to 1 (or [0] degenerate)
    rank: int


def pca_fit(data) -> PcaModel:
    """Principal components via SVD of the centered data matrix."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("pca_fit needs an (n >= 2, d) matrix")
    mean = X.mean(axis=0)
    centered = X - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eig = svals**2 / (X.shape[0] - 1)
    total = eig.sum()
    if total == 0:
        return PcaModel(
            mean=mean,
            components=np.zeros((0, X.shape[1])),
            ratios=np.zeros(1),
            rank=0,
        )
    rank = int((svals > svals[0] * 1e-12).sum())
    return PcaModel(
        mean=mean,
        components=vt[:rank],
        ratios=eig[:rank] / total,
        rank=rank,
    )


def pca_transform(model: PcaModel, data, k: int | None = None) -> np.ndarray:
    X = np.asarray(data, dtype=float)
    k = model.rank if k is None else k
    if not 0 <= k <= model.rank:
        raise ConfigError(f"k must be in [0, rank={model.rank}]")
    return (X - model.mean) @ model.components[:k].T


def pca_reconstruct(model: PcaModel, transformed) -> np.ndarray:
    T = np.asarray(transformed, dtype=float)
    k = T.shape[-1]
    return T @ model.components[:k] + model.mean


def pca_select_k(model: PcaModel, variance_threshold: float) -> int:
    """Smallest k whose cumulative explained variance reaches the
    threshold; falls back to the full rank if rounding keeps the
    cumulative sum below it."""
    if not 0.0 < variance_threshold <= 1.0:
        raise ConfigError("variance_threshold must be in (0, 1]")
    cumulative = np.cumsum(model.ratios)
    hits = np.nonzero(cumulative >= variance_threshold)[0]
    return int(hits[0]) + 1 if hits.size else model.rank


def save_pca(model: PcaModel, path) -> None:
    payload = {
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "ratios": model.ratios.tolist(),
        "rank": model.rank,
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_pca(path) -> PcaModel:
    with open(path) as f:
        payload = json.load(f)
    return PcaModel(
        mean=np.array(payload["mean"]),
        components=np.array(payload["components"]),
        ratios=np.array(payload["ratios"]),
        rank=int(payload["rank"]),
    )
