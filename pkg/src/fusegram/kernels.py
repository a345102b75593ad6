"""Chisini-mean Jensen-Shannon divergences and the derived SVM kernels.

The divergence generalizes Jensen-Shannon by replacing the arithmetic
midpoint with a Chisini mean (arithmetic, geometric, or harmonic); its
square root is the metric variant.  Each divergence feeds three kernel
forms built on the Gaussian radial term r = |x_i - x_j|^2 / (2 sigma^2):

    amplified         D * exp(-r)
    scaled            exp(-D * r)
    amplified_scaled  D * exp(-D * r)

Two divergence flavors x three means x three forms gives 18 kernels; a
plain RBF baseline is carried under each of the three mean tags (same
function, distinct dataset-randomization tags) for 21 in total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .data import LabeledDataset
from .errors import ConfigError, DataError, NumericError
from .prob import DEFAULT_EPSILON, ProbConfig, ProbVector, to_prob

FAMILIES = ("cjsd", "mcjsd", "rbf")
MEANS = ("am", "gm", "hm")
FORMS = ("amplified", "scaled", "amplified_scaled", "plain")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    mean: str
    form: str
    sigma: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.mean not in MEANS:
            raise ConfigError(f"unknown Chisini mean {self.mean!r}")
        if self.form not in FORMS:
            raise ConfigError(f"unknown kernel form {self.form!r}")
        if (self.form == "plain") != (self.family == "rbf"):
            raise ConfigError(
                "form 'plain' is reserved for (and required by) family 'rbf'"
            )
        if self.sigma <= 0:
            raise ConfigError("sigma must be > 0")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")

    @property
    def tag(self) -> str:
        return f"{self.family}:{self.mean}:{self.form}"


def parse_kernel_tag(tag: str, sigma: float,
                     epsilon: float = DEFAULT_EPSILON) -> KernelSpec:
    """Parse ``family[:mean[:form]]`` into a KernelSpec.

    "rbf" expands to rbf:am:plain; divergence families need all three
    components, e.g. "mcjsd:am:amplified".
    """
    parts = tag.strip().lower().split(":")
    if parts[0] == "rbf":
        mean = parts[1] if len(parts) > 1 else "am"
        form = parts[2] if len(parts) > 2 else "plain"
        return KernelSpec("rbf", mean, form, sigma, epsilon)
    if len(parts) != 3:
        raise ConfigError(
            f"kernel tag {tag!r} must look like family:mean:form"
        )
    return KernelSpec(parts[0], parts[1], parts[2], sigma, epsilon)


def enumerate_kernels(sigma: float,
                      epsilon: float = DEFAULT_EPSILON) -> list[KernelSpec]:
    """All 21 kernel versions: 18 divergence kernels + 3 RBF tags."""
    specs = [
        KernelSpec(family, mean, form, sigma, epsilon)
        for family, mean, form in product(
            ("cjsd", "mcjsd"),
            MEANS,
            ("amplified", "scaled", "amplified_scaled"),
        )
    ]
    specs.extend(KernelSpec("rbf", mean, "plain", sigma, epsilon)
                 for mean in MEANS)
    return specs


def chisini_mean(p, q, kind: str = "am"):
    """Pointwise arithmetic/geometric/harmonic mean of two non-negative
    arguments.  The harmonic mean of (0, 0) is defined as 0 (its limit).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if kind == "am":
        out = 0.5 * (p + q)
    elif kind == "gm":
        out = np.sqrt(p * q)
    elif kind == "hm":
        s = p + q
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(s > 0, 2.0 * p * q / np.where(s > 0, s, 1.0), 0.0)
    else:
        raise ConfigError(f"unknown Chisini mean {kind!r}")
    return float(out) if out.ndim == 0 else out


def _probs(dist) -> np.ndarray:
    arr = dist.probs if isinstance(dist, ProbVector) else np.asarray(dist)
    arr = np.asarray(arr, dtype=float)
    if (arr < 0).any():
        raise DataError("probability vector has negative entries")
    return arr


def cjsd(P, Q, kind: str = "am") -> float:
    """Chisini-Jensen-Shannon divergence with the given midpoint mean.

    Natural logarithm; 0 * log(0 / M) is taken as 0.  Geometric and
    harmonic midpoints vanish wherever either state is zero, so those
    variants require epsilon-smoothed inputs.
    """
    p = _probs(P)
    q = _probs(Q)
    if p.shape != q.shape:
        raise DataError("P and Q must have the same number of states")
    m = chisini_mean(p, q, kind)
    if np.any((m == 0) & ((p > 0) | (q > 0))):
        raise NumericError(
            "unsmoothed zero state: Chisini midpoint vanished where "
            "probability mass is present"
        )
    safe_m = np.where(m > 0, m, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms_p = np.where(p > 0, p * np.log(p / safe_m), 0.0)
        terms_q = np.where(q > 0, q * np.log(q / safe_m), 0.0)
    return 0.5 * float(terms_p.sum() + terms_q.sum())


def mcjsd(P, Q, kind: str = "am") -> float:
    """Metric variant: square root of the divergence (clamped at 0 to
    absorb roundoff on near-identical inputs)."""
    return float(np.sqrt(max(cjsd(P, Q, kind), 0.0)))


def _divergence(spec: KernelSpec, P, Q) -> float:
    if spec.family == "cjsd":
        return cjsd(P, Q, spec.mean)
    if spec.family == "mcjsd":
        return mcjsd(P, Q, spec.mean)
    return 0.0  # rbf: unused


def kernel_value(spec: KernelSpec, x_i, x_j, P=None, Q=None) -> float:
    """Evaluate one kernel entry for a sample pair.

    P and Q default to to_prob(x) with the spec's epsilon.  The radial
    term is r = |x_i - x_j|^2 / (2 sigma^2).
    """
    xi = np.asarray(x_i.channels if hasattr(x_i, "channels") else x_i,
                    dtype=float)
    xj = np.asarray(x_j.channels if hasattr(x_j, "channels") else x_j,
                    dtype=float)
    diff = xi - xj
    r = float(diff @ diff) / (2.0 * spec.sigma**2)
    if spec.family == "rbf":
        return float(np.exp(-r))
    if P is None:
        P = to_prob(xi, epsilon=spec.epsilon)
    if Q is None:
        Q = to_prob(xj, epsilon=spec.epsilon)
    d = _divergence(spec, P, Q)
    if spec.form == "amplified":
        return d * float(np.exp(-r))
    if spec.form == "scaled":
        return float(np.exp(-d * r))
    if spec.form == "amplified_scaled":
        return d * float(np.exp(-d * r))
    raise ConfigError(f"form {spec.form!r} invalid for family {spec.family!r}")


@dataclass
class GramMatrix:
    values: np.ndarray
    spec: KernelSpec
    sample_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.shape[0]
        if self.values.shape != (n, n):
            raise DataError("Gram matrix must be square")
        if not self.sample_ids:
            self.sample_ids = list(range(n))


def squared_distances(X) -> np.ndarray:
    """Pairwise squared Euclidean distances, exact zeros on the diagonal."""
    X = np.asarray(X, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 0.0)
    return d2


def median_sigma(X) -> float:
    """Median pairwise Euclidean distance (falls back to 1.0 when the
    median vanishes or there are no pairs)."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        return 1.0
    d = np.sqrt(squared_distances(X))
    iu = np.triu_indices(X.shape[0], k=1)
    med = float(np.median(d[iu]))
    return med if med > 0 else 1.0


def divergence_matrix(family: str, mean: str, probs: list) -> np.ndarray:
    """Pairwise divergence matrix over per-sample distributions.

    Upper triangle computed once and mirrored, so symmetry is exact by
    construction; the diagonal is exactly zero.
    """
    if family not in ("cjsd", "mcjsd"):
        raise ConfigError("divergence_matrix needs a divergence family")
    n = len(probs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = cjsd(probs[i], probs[j], mean)
    if family == "mcjsd":
        D = np.sqrt(np.maximum(D, 0.0))
    return D


def gram_from_parts(spec: KernelSpec, D: np.ndarray,
                    dist2: np.ndarray) -> np.ndarray:
    """Assemble a Gram matrix from precomputed divergences and squared
    distances (D is ignored for the RBF family)."""
    r = dist2 / (2.0 * spec.sigma**2)
    if spec.family == "rbf":
        return np.exp(-r)
    if spec.form == "amplified":
        return D * np.exp(-r)
    if spec.form == "scaled":
        return np.exp(-D * r)
    if spec.form == "amplified_scaled":
        return D * np.exp(-D * r)
    raise ConfigError(f"form {spec.form!r} invalid for family {spec.family!r}")


def sample_probs(X, spec: KernelSpec,
                 prob_config: ProbConfig | None = None) -> list[ProbVector]:
    """Per-row distributions under the spec's epsilon (or the config's)."""
    cfg = prob_config or ProbConfig()
    eps = spec.epsilon if cfg.epsilon is None else cfg.epsilon
    return [to_prob(row, mode=cfg.mode, epsilon=eps, bandwidth=cfg.bandwidth)
            for row in np.asarray(X, dtype=float)]


def gram(spec: KernelSpec, dataset, prob_config: ProbConfig | None = None,
         jitter: float = 0.0) -> GramMatrix:
    """Full kernel matrix over a dataset (or raw (n, d) matrix).

    Symmetric by construction.  ``jitter`` adds a constant to the
    diagonal for conditioning experiments; it defaults off because the
    amplified forms are used as-is, zero diagonal included.
    """
    if isinstance(dataset, LabeledDataset):
        X = dataset.channel_matrix()
        ids = [s.id for s in dataset.samples]
    else:
        X = np.asarray(dataset, dtype=float)
        ids = list(range(X.shape[0]))
    if X.shape[0] == 0:
        raise DataError("cannot build a Gram matrix from an empty dataset")
    dist2 = squared_distances(X)
    if spec.family == "rbf":
        D = np.zeros_like(dist2)
    else:
        probs = sample_probs(X, spec, prob_config)
        D = divergence_matrix(spec.family, spec.mean, probs)
    values = gram_from_parts(spec, D, dist2)
    if jitter:
        values = values + jitter * np.eye(X.shape[0])
    return GramMatrix(values=values, spec=spec, sample_ids=ids)
