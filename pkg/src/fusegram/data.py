"""Sensor-record ingestion, 14-channel fusion, splitting, and synthesis.

Raw records carry 16 columns: 8 EMG channels, 3 accelerometer axes,
3 gyroscope axes, a pose code, and a binary gesture label.  Only the
first 14 columns are fused into the feature vector; the pose code is
kept as per-sample metadata and never enters any downstream model.
"""

from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError

N_CHANNELS = 14
N_COLUMNS = 16
_EMG, _ACCEL, _GYRO = slice(0, 8), slice(8, 11), slice(11, 14)


@dataclass
class FusedSample:
    """A fused 14-channel observation: EMG(8) | accel(3) | gyro(3)."""

    channels: np.ndarray
    label: int | None = None
    id: int = 0
    pose: float | None = None

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        if self.channels.shape != (N_CHANNELS,):
            raise DataError(
                f"sample {self.id}: expected {N_CHANNELS} channels, "
                f"got shape {self.channels.shape}"
            )


@dataclass
class LabeledDataset:
    """An ordered collection of fused samples with source provenance."""

    samples: list[FusedSample]
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    @property
    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for s in self.samples:
            if s.label is not None:
                counts[s.label] = counts.get(s.label, 0) + 1
        return counts

    def channel_matrix(self) -> np.ndarray:
        """Stack channels into an (n, 14) matrix in sample order."""
        return np.array([s.channels for s in self.samples], dtype=float)

    def labels(self) -> np.ndarray:
        if any(s.label is None for s in self.samples):
            raise DataError("dataset contains unlabeled samples")
        return np.array([s.label for s in self.samples], dtype=int)


def _parse_row(row: list[str], index: int) -> FusedSample:
    if len(row) != N_COLUMNS:
        raise DataError(
            f"row {index}: expected {N_COLUMNS} columns, got {len(row)}"
        )
    try:
        values = [float(v) for v in row]
    except ValueError as exc:
        raise DataError(f"row {index}: non-numeric field ({exc})") from None
    label = values[15]
    if not float(label).is_integer():
        raise DataError(f"row {index}: non-integral label {label!r}")
    label = int(label)
    if label not in (0, 1):
        raise DataError(f"row {index}: non-binary label {label}")
    return FusedSample(
        channels=np.array(values[:N_CHANNELS]),
        label=label,
        id=index,
        pose=values[14],
    )


def load_csv(path, has_header: bool = False) -> LabeledDataset:
    """Load a 16-column sensor CSV into a LabeledDataset.

    ``path`` may be a filesystem path or ``"-"`` for stdin.  Each row
    must parse to 16 numeric fields; column 16 is the binary label and
    column 15 (pose) is retained as metadata only.
    """
    if path == "-":
        text = sys.stdin.read()
        handle = io.StringIO(text)
        return _load_csv_handle(handle, has_header, source="<stdin>")
    with open(path, newline="") as handle:
        return _load_csv_handle(handle, has_header, source=str(path))


def _load_csv_handle(handle, has_header, source):
    reader = csv.reader(handle)
    samples = []
    for i, row in enumerate(reader):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if has_header and not samples and i == 0:
            continue
        samples.append(_parse_row([c.strip() for c in row], len(samples)))
    return LabeledDataset(samples, provenance={"source": source})


def save_csv(dataset: LabeledDataset, path) -> None:
    """Write a dataset back to the 16-column schema.

    Floats are rendered with 17 significant digits so that
    load_csv(save_csv(d)) reproduces every channel bit-exactly.
    """
    out = sys.stdout if path == "-" else open(path, "w", newline="")
    try:
        for s in dataset.samples:
            pose = 0.0 if s.pose is None else s.pose
            label = 0 if s.label is None else s.label
            fields = [f"{v:.17g}" for v in s.channels]
            fields.append(f"{pose:.17g}")
            fields.append(str(int(label)))
            out.write(",".join(fields) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def subset(dataset: LabeledDataset, indices) -> LabeledDataset:
    """New dataset from selected sample positions, ids reassigned 0..k-1."""
    picked = []
    for new_id, i in enumerate(indices):
        s = dataset.samples[i]
        picked.append(
            FusedSample(s.channels.copy(), s.label, new_id, s.pose)
        )
    prov = dict(dataset.provenance)
    prov["subset_of"] = prov.get("source", "?")
    return LabeledDataset(picked, provenance=prov)


def split(dataset: LabeledDataset, train_fraction: float, seed: int):
    """Stratified random split into (train, test).

    Per class, the test side receives floor((1 - fraction) * n_c)
    samples and the remainder stays in train, so the train side is
    biased by at most one sample per class.  Deterministic for a
    fixed seed.
    """
    if len(dataset) == 0:
        raise DataError("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(
            f"train_fraction must be in (0, 1), got {train_fraction}"
        )
    by_label: dict[int, list[int]] = {}
    for i, s in enumerate(dataset.samples):
        if s.label is None:
            raise DataError("cannot stratify unlabeled samples")
        by_label.setdefault(s.label, []).append(i)

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_label):
        idx = np.array(by_label[label])
        if len(idx) < 2:
            raise DataError(
                f"class {label} has {len(idx)} sample(s); "
                "need >= 2 to stratify"
            )
        shuffled = idx[rng.permutation(len(idx))]
        # tiny guard so exact decimal fractions floor as intended
        n_test = int(np.floor((1.0 - train_fraction) * len(idx) + 1e-9))
        test_idx.extend(shuffled[:n_test].tolist())
        train_idx.extend(shuffled[n_test:].tolist())

    train = subset(dataset, sorted(train_idx))
    test = subset(dataset, sorted(test_idx))
    for part, name in ((train, "train"), (test, "test")):
        part.provenance["split"] = {
            "role": name,
            "train_fraction": train_fraction,
            "seed": seed,
        }
    return train, test


@dataclass
class SynthSpec:
    """Parameters for Gaussian two-class synthesis."""

    n_per_class: int
    class_means: np.ndarray  # shape (2, 14)
    noise_std: float
    seed: int

    def __post_init__(self):
        self.class_means = np.asarray(self.class_means, dtype=float)
        if self.class_means.shape != (2, N_CHANNELS):
            raise ConfigError(
                f"class_means must have shape (2, {N_CHANNELS}), "
                f"got {self.class_means.shape}"
            )
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if self.n_per_class < 1:
            raise ConfigError("n_per_class must be >= 1")


def synthesize(spec: SynthSpec) -> LabeledDataset:
    """Draw Gaussian clusters around the two class means.

    With noise_std = 0 every class-c sample equals class_means[c]
    exactly.  Byte-identical output for identical specs.
    """
    rng = np.random.default_rng(spec.seed)
    samples = []
    for label in (0, 1):
        noise = rng.standard_normal((spec.n_per_class, N_CHANNELS))
        block = spec.class_means[label] + spec.noise_std * noise
        for row in block:
            samples.append(FusedSample(row, label, len(samples), pose=0.0))
    if not np.isfinite(spec.class_means).all():
        raise NumericError("class_means contain non-finite values")
    return LabeledDataset(
        samples,
        provenance={
            "source": "synthesize",
            "seed": spec.seed,
            "n_per_class": spec.n_per_class,
            "noise_std": spec.noise_std,
        },
    )


def default_synth_means(offset: float = 20.0) -> np.ndarray:
    """Two distinct channel profiles: a ramp and an offset reversed ramp.

    The shapes differ (so per-sample distributions differ) and the
    offset separates the clusters in Euclidean distance.
    """
    ramp = np.arange(N_CHANNELS, dtype=float)
    return np.stack([ramp, ramp[::-1] + offset])
