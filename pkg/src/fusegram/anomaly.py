"""Novelty detectors trained on a single (positive) class.

Isolation forest: an ensemble of random-split trees; anomalies isolate
on short paths and score 2^(-E[h]/c(psi)).  GMM: diagonal-covariance EM
whose per-sample log-likelihood is converted to a probability through an
isotonic (pool-adjacent-violators) calibration map fit on a labeled
calibration split.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .data import LabeledDataset

EULER_GAMMA = 0.5772156649


def _matrix(data) -> np.ndarray:
    if isinstance(data, LabeledDataset):
        return data.channel_matrix()
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


# ---------------------------------------------------------------------------
# Isolation forest
# ---------------------------------------------------------------------------

def c_factor(n: int) -> float:
    """Average unsuccessful-search path length of a BST with n nodes.

    Exact harmonic numbers for n <= 10; the Euler-Mascheroni
    approximation H(i) ~ ln(i) + gamma beyond that.  c(1) = 0 and
    c(2) = 1 exactly.
    """
    if n <= 1:
        return 0.0
    if n <= 10:
        harmonic = sum(1.0 / k for k in range(1, n))
    else:
        harmonic = math.log(n - 1) + EULER_GAMMA
    return 2.0 * harmonic - 2.0 * (n - 1) / n


def anomaly_score(mean_depth: float, psi: int) -> float:
    """Score in (0, 1]: 0.5 when the mean path equals c(psi), rising
    toward 1 as paths shorten."""
    return float(2.0 ** (-mean_depth / c_factor(psi)))


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    size: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class IsolationForestModel:
    trees: list
    psi: int
    n_trees: int
    height_limit: int
    seed: int


def _grow_tree(X: np.ndarray, depth: int, limit: int, rng) -> _TreeNode:
    n = X.shape[0]
    if depth >= limit or n <= 1:
        return _TreeNode(size=n)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    splittable = np.nonzero(hi > lo)[0]
    if splittable.size == 0:
        return _TreeNode(size=n)
    feature = int(splittable[rng.integers(splittable.size)])
    threshold = float(rng.uniform(lo[feature], hi[feature]))
    mask = X[:, feature] < threshold
    if not mask.any() or mask.all():
        return _TreeNode(size=n)
    return _TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow_tree(X[mask], depth + 1, limit, rng),
        right=_grow_tree(X[~mask], depth + 1, limit, rng),
    )


def fit_iforest(data, n_trees: int = 100, psi: int = 256,
                seed: int = 0) -> IsolationForestModel:
    """Grow an isolation forest on psi-subsamples.

    Each tree draws its own RNG seeded with ``seed ^ tree_index`` so the
    forest is identical no matter how tree construction is scheduled.
    """
    X = _matrix(data)
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot fit an isolation forest on no data")
    if psi < 2:
        raise ConfigError("subsample size psi must be >= 2")
    if psi > n:
        warnings.warn(
            f"psi={psi} exceeds n={n}; clamping to n", stacklevel=2
        )
        psi = n
    limit = int(math.ceil(math.log2(psi)))
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seed ^ i)
        sub = X[rng.choice(n, size=psi, replace=False)]
        trees.append(_grow_tree(sub, 0, limit, rng))
    return IsolationForestModel(
        trees=trees, psi=psi, n_trees=n_trees, height_limit=limit, seed=seed
    )


def _path_length(x: np.ndarray, node: _TreeNode, depth: int = 0) -> float:
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.threshold else node.right
        depth += 1
    return depth + c_factor(node.size)


def iforest_score(model: IsolationForestModel, x) -> float:
    x = np.asarray(x, dtype=float)
    mean_depth = sum(
        _path_length(x, tree) for tree in model.trees
    ) / len(model.trees)
    return anomaly_score(mean_depth, model.psi)


def iforest_scores(model: IsolationForestModel, data) -> np.ndarray:
    X = _matrix(data)
    return np.array([iforest_score(model, row) for row in X])


def iforest_predict(model: IsolationForestModel, data,
                    threshold: float = 0.5) -> np.ndarray:
    """Boolean inlier mask: score <= threshold means inlier."""
    return iforest_scores(model, data) <= threshold


# ---------------------------------------------------------------------------
# Gaussian mixture model
# ---------------------------------------------------------------------------

@dataclass
class GmmModel:
    weights: np.ndarray         # (K,), sums to 1
    means: np.ndarray           # (K, d)
    covariances: np.ndarray     # (K, d) diagonal or (K, d, d) full
    covariance_type: str = "diag"
    reg: float = 1e-6
    seed: int = 0
    loglik_history: list = field(default_factory=list, repr=False)


def _kmeanspp_centers(X: np.ndarray, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min(
            ((X[:, None, :] - np.array(centers)[None, :, :]) ** 2).sum(-1),
            axis=1,
        )
        total = d2.sum()
        if total > 0:
            centers.append(X[rng.choice(n, p=d2 / total)])
        else:
            centers.append(X[rng.integers(n)])
    return np.array(centers)


def _log_gaussians(X, means, covs, covariance_type) -> np.ndarray:
    """Per-(sample, component) log density, shape (n, K)."""
    n, d = X.shape
    k = means.shape[0]
    out = np.empty((n, k))
    if covariance_type == "diag":
        for j in range(k):
            var = covs[j]
            diff2 = (X - means[j]) ** 2 / var
            out[:, j] = -0.5 * (
                d * math.log(2.0 * math.pi)
                + np.log(var).sum()
                + diff2.sum(axis=1)
            )
    else:
        for j in range(k):
            chol = np.linalg.cholesky(covs[j])
            diff = X - means[j]
            z = np.linalg.solve(chol, diff.T)
            out[:, j] = -0.5 * (
                d * math.log(2.0 * math.pi)
                + 2.0 * np.log(np.diag(chol)).sum()
                + (z**2).sum(axis=0)
            )
    return out


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))).squeeze(
        axis
    )


def fit_gmm(data, k: int, reg: float = 1e-6, max_iter: int = 200,
            seed: int = 0, tol: float = 1e-8,
            covariance: str = "diag") -> GmmModel:
    """Fit a K-component Gaussian mixture by EM.

    Means are seeded k-means++ style; covariances are diagonal by
    default (full behind the flag) and floored at ``reg``.  Stops when
    the log-likelihood improves by less than ``tol`` or at max_iter.
    The per-iteration log-likelihood trace is kept on the model.
    """
    X = _matrix(data)
    n, d = X.shape
    if k <= 0:
        raise ConfigError("K must be positive")
    if n < k:
        raise DataError(f"need at least K={k} samples, got {n}")
    if reg <= 0:
        raise ConfigError("covariance floor reg must be > 0")
    if covariance not in ("diag", "full"):
        raise ConfigError("covariance must be 'diag' or 'full'")

    rng = np.random.default_rng(seed)
    means = _kmeanspp_centers(X, k, rng)
    base_var = np.maximum(X.var(axis=0), reg)
    if covariance == "diag":
        covs = np.tile(base_var, (k, 1))
    else:
        covs = np.tile(np.diag(base_var), (k, 1, 1))
    weights = np.full(k, 1.0 / k)

    history = []
    for _ in range(max_iter):
        log_prob = _log_gaussians(X, means, covs, covariance)
        weighted = log_prob + np.log(weights)
        norm = _logsumexp(weighted, axis=1)
        loglik = float(norm.sum())
        history.append(loglik)
        if len(history) > 1 and abs(history[-1] - history[-2]) < tol:
            break
        resp = np.exp(weighted - norm[:, None])

        nk = np.maximum(resp.sum(axis=0), 1e-300)
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        if covariance == "diag":
            for j in range(k):
                diff2 = (X - means[j]) ** 2
                covs[j] = np.maximum(
                    (resp[:, j][:, None] * diff2).sum(axis=0) / nk[j], reg
                )
        else:
            for j in range(k):
                diff = X - means[j]
                cov = (resp[:, j][:, None] * diff).T @ diff / nk[j]
                covs[j] = cov + reg * np.eye(d)

    return GmmModel(
        weights=weights,
        means=means,
        covariances=covs,
        covariance_type=covariance,
        reg=reg,
        seed=seed,
        loglik_history=history,
    )


def gmm_score(model: GmmModel, data) -> np.ndarray:
    """Per-sample mixture log-likelihood."""
    X = _matrix(data)
    log_prob = _log_gaussians(
        X, model.means, model.covariances, model.covariance_type
    )
    return _logsumexp(log_prob + np.log(model.weights), axis=1)


# ---------------------------------------------------------------------------
# Isotonic calibration
# ---------------------------------------------------------------------------

@dataclass
class IsotonicMap:
    """Non-decreasing step map from raw scores to [0, 1]."""

    breakpoints: np.ndarray   # strictly increasing score thresholds
    values: np.ndarray        # non-decreasing calibrated values

    def predict(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=float)
        idx = np.searchsorted(self.breakpoints, s, side="right") - 1
        idx = np.clip(idx, 0, len(self.breakpoints) - 1)
        return np.clip(self.values[idx], 0.0, 1.0)


def pava(scores, targets, weights=None) -> IsotonicMap:
    """Weighted least-squares isotonic fit by pool-adjacent-violators.

    Exact duplicate scores are merged (weighted mean target) before
    pooling so the breakpoints come out strictly increasing.
    """
    s = np.asarray(scores, dtype=float)
    t = np.asarray(targets, dtype=float)
    w = np.ones_like(s) if weights is None else np.asarray(weights, float)
    if s.size == 0:
        raise DataError("pava needs at least one point")
    if s.shape != t.shape or s.shape != w.shape:
        raise DataError("scores, targets, and weights must match in length")
    if (w <= 0).any():
        raise ConfigError("weights must be positive")

    order = np.argsort(s, kind="stable")
    s, t, w = s[order], t[order], w[order]

    # merge ties in score
    uniq_s, starts = np.unique(s, return_index=True)
    merged_t, merged_w = [], []
    bounds = list(starts) + [len(s)]
    for a, b in zip(bounds[:-1], bounds[1:]):
        wsum = w[a:b].sum()
        merged_t.append((w[a:b] * t[a:b]).sum() / wsum)
        merged_w.append(wsum)

    # pool adjacent violators (stack of blocks)
    vals: list[float] = []
    wts: list[float] = []
    counts: list[int] = []
    for v, wt in zip(merged_t, merged_w):
        vals.append(v)
        wts.append(wt)
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v1, w1, c1 = vals.pop(), wts.pop(), counts.pop()
            v0, w0, c0 = vals.pop(), wts.pop(), counts.pop()
            vals.append((v0 * w0 + v1 * w1) / (w0 + w1))
            wts.append(w0 + w1)
            counts.append(c0 + c1)

    fitted = np.repeat(vals, counts)
    return IsotonicMap(breakpoints=uniq_s, values=fitted)


@dataclass
class GmmDetector:
    """GMM log-likelihood pushed through an isotonic probability map."""

    gmm: GmmModel
    calibration: IsotonicMap
    threshold: float = 0.5

    def probabilities(self, data) -> np.ndarray:
        return self.calibration.predict(gmm_score(self.gmm, data))

    def predict(self, data) -> np.ndarray:
        """Boolean positive mask: calibrated p >= threshold."""
        return self.probabilities(data) >= self.threshold


def calibrate_and_detect(gmm: GmmModel, calib_scores, calib_labels,
                         threshold: float = 0.5,
                         positive_label: int = 1) -> GmmDetector:
    """Fit the isotonic score->probability map on labeled calibration
    scores and wrap it with the GMM into a thresholded detector."""
    scores = np.asarray(calib_scores, dtype=float)
    labels = np.asarray(calib_labels)
    if scores.shape != labels.shape:
        raise DataError("calibration scores and labels must match")
    if len(np.unique(labels)) < 2:
        raise DataError("calibration set must contain both labels")
    targets = (labels == positive_label).astype(float)
    return GmmDetector(
        gmm=gmm, calibration=pava(scores, targets), threshold=threshold
    )


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def _tree_to_dict(node: _TreeNode) -> dict:
    if node.is_leaf:
        return {"size": node.size}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_to_dict(node.left),
        "right": _tree_to_dict(node.right),
    }


def _tree_from_dict(payload: dict) -> _TreeNode:
    if "size" in payload:
        return _TreeNode(size=payload["size"])
    return _TreeNode(
        feature=payload["feature"],
        threshold=payload["threshold"],
        left=_tree_from_dict(payload["left"]),
        right=_tree_from_dict(payload["right"]),
    )


def save_model(model, path) -> None:
    if isinstance(model, IsolationForestModel):
        payload = {
            "type": "iforest",
            "psi": model.psi,
            "n_trees": model.n_trees,
            "height_limit": model.height_limit,
            "seed": model.seed,
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    elif isinstance(model, GmmModel):
        payload = {
            "type": "gmm",
            "weights": model.weights.tolist(),
            "means": model.means.tolist(),
            "covariances": model.covariances.tolist(),
            "covariance_type": model.covariance_type,
            "reg": model.reg,
            "seed": model.seed,
        }
    elif isinstance(model, GmmDetector):
        payload = {
            "type": "gmm_detector",
            "threshold": model.threshold,
            "breakpoints": model.calibration.breakpoints.tolist(),
            "values": model.calibration.values.tolist(),
            "gmm": {
                "weights": model.gmm.weights.tolist(),
                "means": model.gmm.means.tolist(),
                "covariances": model.gmm.covariances.tolist(),
                "covariance_type": model.gmm.covariance_type,
                "reg": model.gmm.reg,
                "seed": model.gmm.seed,
            },
        }
    else:
        raise ConfigError(f"cannot persist model of type {type(model)!r}")
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def _gmm_from_dict(payload: dict) -> GmmModel:
    return GmmModel(
        weights=np.array(payload["weights"]),
        means=np.array(payload["means"]),
        covariances=np.array(payload["covariances"]),
        covariance_type=payload["covariance_type"],
        reg=payload["reg"],
        seed=payload["seed"],
    )


def load_model(path):
    with open(path) as f:
        payload = json.load(f)
    kind = payload.get("type")
    if kind == "iforest":
        return IsolationForestModel(
            trees=[_tree_from_dict(t) for t in payload["trees"]],
            psi=payload["psi"],
            n_trees=payload["n_trees"],
            height_limit=payload["height_limit"],
            seed=payload["seed"],
        )
    if kind == "gmm":
        return _gmm_from_dict(payload)
    if kind == "gmm_detector":
        return GmmDetector(
            gmm=_gmm_from_dict(payload["gmm"]),
            calibration=IsotonicMap(
                breakpoints=np.array(payload["breakpoints"]),
                values=np.array(payload["values"]),
            ),
            threshold=payload["threshold"],
        )
    raise DataError(f"{path}: unknown model type {kind!r}")
