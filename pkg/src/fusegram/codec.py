"""Invertible signal-image encoding.

A 14-channel sample is zero-padded to 16 values, min-max scaled to the
8-bit range, and laid out as a 4x4 image.  The (min, max) scale pair
travels out-of-band (binary container or PGM sidecar) so the original
signal can be recovered to within half a quantization step.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .data import FusedSample, N_CHANNELS
from .errors import DataError, NumericError

IMAGE_SIDE = 4
PAD_COUNT = 2
N_PIXELS = IMAGE_SIDE * IMAGE_SIDE
SIE_MAGIC = b"SIE1"
_SIE_HEADER = struct.Struct("<HHHdd")


@dataclass
class EncodedImage:
    """4x4 grid of 8-bit intensities plus the scale metadata."""

    pixels: np.ndarray  # 16 ints in [0, 255], row-major
    scale_min: float
    scale_max: float
    pad_count: int = PAD_COUNT

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=int)
        if self.pixels.shape != (N_PIXELS,):
            raise DataError(
                f"expected {N_PIXELS} pixels, got shape {self.pixels.shape}"
            )
        if ((self.pixels < 0) | (self.pixels > 255)).any():
            raise DataError("pixel outside [0, 255]")
        if self.scale_min > self.scale_max:
            raise DataError("scale_min exceeds scale_max")
        if self.pad_count != PAD_COUNT:
            raise DataError(f"pad_count must be {PAD_COUNT}")

    def grid(self) -> np.ndarray:
        return self.pixels.reshape(IMAGE_SIDE, IMAGE_SIDE)


def _round_half_away(x: float) -> int:
    # round-half-away-from-zero: symmetric and locale-independent
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def encode(sample) -> EncodedImage:
    """Encode a 14-channel sample as a 4x4 8-bit image.

    The two pad zeros participate in the min/max, so 0 is always inside
    the recorded scale range.  A constant all-zero padded vector maps to
    all-zero pixels with min = max recording the constant.
    """
    channels = sample.channels if isinstance(sample, FusedSample) else sample
    channels = np.asarray(channels, dtype=float)
    if channels.shape != (N_CHANNELS,):
        raise DataError(f"expected {N_CHANNELS} channels")
    if not np.isfinite(channels).all():
        raise NumericError("non-finite channel value")
    padded = np.concatenate([channels, np.zeros(PAD_COUNT)])
    lo, hi = float(padded.min()), float(padded.max())
    if hi == lo:
        pixels = np.zeros(N_PIXELS, dtype=int)
    else:
        scaled = 255.0 * (padded - lo) / (hi - lo)
        pixels = np.array([_round_half_away(v) for v in scaled])
    return EncodedImage(pixels=pixels, scale_min=lo, scale_max=hi)


def decode(image: EncodedImage, id: int = 0, label=None) -> FusedSample:
    """Invert encode(): rescale pixels and drop the trailing pads."""
    lo, hi = image.scale_min, image.scale_max
    if hi == lo:
        values = np.full(N_PIXELS, lo, dtype=float)
    else:
        values = lo + image.pixels * (hi - lo) / 255.0
    return FusedSample(values[: N_PIXELS - image.pad_count], label, id)


def roundtrip_bound(image: EncodedImage) -> float:
    """Worst-case per-channel reconstruction error: half a quantization step."""
    return (image.scale_max - image.scale_min) / 510.0


def write_sie(image: EncodedImage, path) -> None:
    """Write the bit-exact binary container (42 bytes)."""
    with open(path, "wb") as f:
        f.write(SIE_MAGIC)
        f.write(
            _SIE_HEADER.pack(
                IMAGE_SIDE,
                IMAGE_SIDE,
                image.pad_count,
                image.scale_min,
                image.scale_max,
            )
        )
        f.write(bytes(int(p) for p in image.pixels))


def read_sie(path) -> EncodedImage:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != SIE_MAGIC:
        raise DataError(f"{path}: bad magic, not a .sie container")
    try:
        width, height, pad_count, lo, hi = _SIE_HEADER.unpack(
            blob[4 : 4 + _SIE_HEADER.size]
        )
        pixels = np.frombuffer(
            blob[4 + _SIE_HEADER.size :], dtype=np.uint8, count=N_PIXELS
        )
    except (struct.error, ValueError) as exc:
        raise DataError(f"{path}: truncated container ({exc})") from None
    if (width, height) != (IMAGE_SIDE, IMAGE_SIDE):
        raise DataError(f"{path}: unsupported image size {width}x{height}")
    return EncodedImage(
        pixels=pixels.astype(int),
        scale_min=lo,
        scale_max=hi,
        pad_count=pad_count,
    )


def write_pgm(image: EncodedImage, path) -> None:
    """Write a P5 PGM plus a JSON sidecar carrying the scale metadata."""
    path = str(path)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (IMAGE_SIDE, IMAGE_SIDE))
        f.write(bytes(int(p) for p in image.pixels))
    sidecar = {
        "scale_min": image.scale_min,
        "scale_max": image.scale_max,
        "pad_count": image.pad_count,
    }
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f)
        f.write("\n")


def read_pgm(path) -> EncodedImage:
    path = str(path)
    with open(path, "rb") as f:
        blob = f.read()
    parts = blob.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM")
    if parts[1].split() != [b"4", b"4"] or parts[2] != b"255":
        raise DataError(f"{path}: unsupported PGM geometry")
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=N_PIXELS)
    with open(path + ".json") as f:
        sidecar = json.load(f)
    return EncodedImage(
        pixels=pixels.astype(int),
        scale_min=float(sidecar["scale_min"]),
        scale_max=float(sidecar["scale_max"]),
        pad_count=int(sidecar.get("pad_count", PAD_COUNT)),
    )
