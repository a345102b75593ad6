"""Cross-validation harness, confusion matrices, and error-bar statistics.

The kernel comparison runs a nested cross-validation: the dataset is
re-randomized per Chisini-mean tag (am/gm/hm) with its own seed derived
from ``seed_base``, an outer stratified k-fold measures accuracy, and an
inner loop picks the kernel width sigma from a small grid around the
median-distance heuristic.  Reports carry per-fold metrics plus the
mean +- standard error of accuracy.
"""

from __future__ import annotations

import warnings
import zlib
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import anomaly, data, kernels, svm
from .errors import ConfigError, DataError

SIGMA_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


def stable_hash(text: str) -> int:
    """Deterministic across runs and platforms (CRC-32)."""
    return zlib.crc32(text.encode("utf-8"))


@dataclass
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int
    positive_class: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def confusion(actual, predicted, positive_class) -> ConfusionMatrix:
    """Count the 2x2 table; anything other than positive_class counts
    as negative."""
    a = np.asarray(actual)
    p = np.asarray(predicted)
    if a.shape != p.shape:
        raise DataError("actual and predicted lengths differ")
    pos_a = a == positive_class
    pos_p = p == positive_class
    return ConfusionMatrix(
        tp=int((pos_a & pos_p).sum()),
        fn=int((pos_a & ~pos_p).sum()),
        fp=int((~pos_a & pos_p).sum()),
        tn=int((~pos_a & ~pos_p).sum()),
        positive_class=positive_class,
    )


def metrics(cm: ConfusionMatrix) -> dict:
    """Accuracy, sensitivity (TPR), specificity (TNR).

    A rate with an empty denominator is reported as 1.0 with a warning
    so reports stay total.
    """
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    if cm.tp + cm.fn == 0:
        warnings.warn("no actual positives; sensitivity defaults to 1.0",
                      stacklevel=2)
        sensitivity = 1.0
    else:
        sensitivity = cm.tp / (cm.tp + cm.fn)
    if cm.tn + cm.fp == 0:
        warnings.warn("no actual negatives; specificity defaults to 1.0",
                      stacklevel=2)
        specificity = 1.0
    else:
        specificity = cm.tn / (cm.tn + cm.fp)
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "sensitivity": sensitivity,
        "specificity": specificity,
    }


def error_bars(values) -> dict:
    """Sample mean and standard error (Bessel-corrected) of a metric."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DataError("error_bars needs at least 2 values")
    return {
        "mean": float(v.mean()),
        "stderr": float(v.std(ddof=1) / np.sqrt(v.size)),
    }


def stratified_folds(labels, k: int, rng) -> list[np.ndarray]:
    """k index arrays, each class dealt round-robin after a shuffle."""
    labels = np.asarray(labels)
    if k < 2:
        raise ConfigError("need at least 2 folds")
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in sorted(np.unique(labels).tolist()):
        idx = np.nonzero(labels == label)[0]
        if idx.size < k:
            raise DataError(
                f"class {label} has {idx.size} samples; too small for "
                f"{k}-fold stratification"
            )
        shuffled = idx[rng.permutation(idx.size)]
        for pos, sample in enumerate(shuffled):
            folds[pos % k].append(int(sample))
    return [np.array(sorted(f)) for f in folds]


@dataclass
class EvalReport:
    spec_tag: str
    seed: int
    fold_metrics: list            # one dict per fold
    mean_accuracy: float
    stderr_accuracy: float
    confusion: ConfusionMatrix    # pooled over folds
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "spec_tag": self.spec_tag,
            "seed": self.seed,
            "fold_metrics": self.fold_metrics,
            "mean_accuracy": self.mean_accuracy,
            "stderr_accuracy": self.stderr_accuracy,
            "confusion": asdict(self.confusion),
            "params": self.params,
        }


def _median_sigma_from_dist2(dist2: np.ndarray, idx: np.ndarray) -> float:
    sub = dist2[np.ix_(idx, idx)]
    iu = np.triu_indices(len(idx), k=1)
    med = float(np.median(np.sqrt(sub[iu])))
    return med if med > 0 else 1.0


def _fold_accuracy(spec, D, dist2, y, train_idx, val_idx, c, tol, max_iter):
    K = kernels.gram_from_parts(spec, D, dist2)
    model = svm.train_csvc(
        K[np.ix_(train_idx, train_idx)], y[train_idx],
        c=c, tol=tol, max_iter=max_iter,
    )
    decisions = svm.decision_function(model, K[np.ix_(val_idx, train_idx)])
    predicted = np.where(decisions >= 0, 1, -1)
    return float((predicted == y[val_idx]).mean()), predicted


def nested_cv(dataset, specs, outer_folds: int = 10, seed_base: int = 0, *,
              c: float = 1.0, tol: float = 1e-3, inner_folds: int = 3,
              sigma_factors=SIGMA_FACTORS, prob_mode: str = "normalize",
              bandwidth: float | None = None, feature_matrix=None,
              max_iter: int = 20_000) -> list[EvalReport]:
    """Nested cross-validation of C-SVC accuracy for each kernel spec.

    Every spec sharing a Chisini-mean tag sees the same re-randomized
    dataset, seeded with ``seed_base XOR crc32(mean)``; the inner loop
    tunes sigma over ``sigma_factors`` times the training median
    pairwise distance.  Fully deterministic for fixed seeds.
    """
    if feature_matrix is not None:
        X_all = np.asarray(feature_matrix, dtype=float)
    else:
        X_all = dataset.channel_matrix()
    raw_labels = dataset.labels()
    if set(np.unique(raw_labels)) != {0, 1}:
        raise DataError("nested_cv expects binary 0/1 labels")
    n = X_all.shape[0]

    # shared per-mean-tag state: permutation, distances, divergences, folds
    cache: dict = {}

    def mean_state(mean: str, epsilon: float):
        key = (mean, epsilon)
        if key in cache:
            return cache[key]
        seed = seed_base ^ stable_hash(mean)
        perm = np.random.default_rng(seed).permutation(n)
        X = X_all[perm]
        labels01 = raw_labels[perm]
        y = np.where(labels01 == 1, 1.0, -1.0)
        dist2 = kernels.squared_distances(X)
        probs = [
            kernels.to_prob(row, mode=prob_mode, epsilon=epsilon,
                            bandwidth=bandwidth)
            for row in X
        ]
        D_cjsd = kernels.divergence_matrix("cjsd", mean, probs)
        folds = stratified_folds(
            labels01, outer_folds, np.random.default_rng([seed, 1])
        )
        state = {
            "seed": seed, "X": X, "labels01": labels01, "y": y,
            "dist2": dist2, "D_cjsd": D_cjsd, "folds": folds,
        }
        cache[key] = state
        return state

    reports = []
    for spec in specs:
        st = mean_state(spec.mean, spec.epsilon)
        y, labels01, dist2 = st["y"], st["labels01"], st["dist2"]
        if spec.family == "cjsd":
            D = st["D_cjsd"]
        elif spec.family == "mcjsd":
            D = np.sqrt(np.maximum(st["D_cjsd"], 0.0))
        else:
            D = np.zeros_like(dist2)
        folds = st["folds"]

        fold_rows = []
        pooled_actual: list[int] = []
        pooled_pred: list[int] = []
        for f, val_idx in enumerate(folds):
            train_idx = np.array(
                sorted(set(range(n)) - set(val_idx.tolist()))
            )
            base_sigma = _median_sigma_from_dist2(dist2, train_idx)
            inner = stratified_folds(
                labels01[train_idx], inner_folds,
                np.random.default_rng([st["seed"], 2, f]),
            )
            best_sigma, best_acc = None, -1.0
            for factor in sigma_factors:
                sigma = base_sigma * factor
                trial = replace(spec, sigma=sigma)
                accs = []
                for inner_val_local in inner:
                    inner_val = train_idx[inner_val_local]
                    inner_train = np.array(
                        sorted(set(train_idx.tolist())
                               - set(inner_val.tolist()))
                    )
                    acc, _ = _fold_accuracy(
                        trial, D, dist2, y, inner_train, inner_val,
                        c, tol, max_iter,
                    )
                    accs.append(acc)
                mean_acc = float(np.mean(accs))
                if mean_acc > best_acc:
                    best_acc, best_sigma = mean_acc, sigma
            final = replace(spec, sigma=best_sigma)
            acc, predicted = _fold_accuracy(
                final, D, dist2, y, train_idx, val_idx, c, tol, max_iter
            )
            actual01 = labels01[val_idx]
            predicted01 = np.where(predicted == 1, 1, 0)
            cm = confusion(actual01, predicted01, positive_class=1)
            fold_rows.append({
                "fold": f,
                "sigma": best_sigma,
                **metrics(cm),
            })
            pooled_actual.extend(actual01.tolist())
            pooled_pred.extend(predicted01.tolist())

        accs = [row["accuracy"] for row in fold_rows]
        bars = error_bars(accs)
        reports.append(EvalReport(
            spec_tag=spec.tag,
            seed=st["seed"],
            fold_metrics=fold_rows,
            mean_accuracy=bars["mean"],
            stderr_accuracy=bars["stderr"],
            confusion=confusion(pooled_actual, pooled_pred, 1),
            params={
                "c": c, "tol": tol, "epsilon": spec.epsilon,
                "outer_folds": outer_folds, "inner_folds": inner_folds,
                "sigma_factors": list(sigma_factors),
                "prob_mode": prob_mode,
            },
        ))
    return reports


# ---------------------------------------------------------------------------
# One-class (novelty) evaluation
# ---------------------------------------------------------------------------

@dataclass
class NoveltyReport:
    method: str
    positive_class: int
    threshold: float
    seed: int
    confusion: ConfusionMatrix
    metric_values: dict
    rows: list                    # id / score / calibrated / actual / predicted
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "positive_class": self.positive_class,
            "threshold": self.threshold,
            "seed": self.seed,
            "confusion": asdict(self.confusion),
            "metrics": self.metric_values,
            "params": self.params,
        }


def novelty_eval(dataset, method: str = "iforest", positive_class: int = 1,
                 seed: int = 0, train_fraction: float = 0.8,
                 threshold: float = 0.5, feature_matrix=None,
                 **params) -> NoveltyReport:
    """Train a detector on the positive class only and score a test pool
    of held-out positives plus every negative.

    The GMM detector needs a labeled calibration split for its isotonic
    map; that split is carved from the test pool (stratified half), and
    the report covers the remaining half.
    """
    labels = dataset.labels()
    if feature_matrix is not None:
        X_all = np.asarray(feature_matrix, dtype=float)
    else:
        X_all = dataset.channel_matrix()
    pos_idx = np.nonzero(labels == positive_class)[0]
    neg_idx = np.nonzero(labels != positive_class)[0]
    if pos_idx.size < 2:
        raise DataError("need at least 2 positive samples to split")
    if neg_idx.size == 0:
        raise DataError("need negative samples to evaluate against")
    negative_class = int(labels[neg_idx[0]])

    rng = np.random.default_rng(seed)
    shuffled = pos_idx[rng.permutation(pos_idx.size)]
    n_test = int(np.floor((1.0 - train_fraction) * pos_idx.size))
    pos_test = np.sort(shuffled[:n_test])
    pos_train = np.sort(shuffled[n_test:])

    eval_idx = np.concatenate([pos_test, neg_idx])
    X_train = X_all[pos_train]
    X_eval = X_all[eval_idx]
    y_eval = labels[eval_idx]

    calibrated = None
    if method == "iforest":
        model = anomaly.fit_iforest(
            X_train,
            n_trees=params.get("n_trees", 100),
            psi=params.get("psi", 256),
            seed=seed,
        )
        scores = anomaly.iforest_scores(model, X_eval)
        positive_mask = scores <= threshold
    elif method == "gmm":
        model = anomaly.fit_gmm(
            X_train,
            k=params.get("k", 5),
            reg=params.get("reg", 1e-6),
            seed=seed,
        )
        all_scores = anomaly.gmm_score(model, X_eval)
        calib_rng = np.random.default_rng([seed, 17])
        halves = stratified_folds(y_eval, 2, calib_rng)
        calib_local, eval_local = halves[0], halves[1]
        # calibration pairs the training scores (known positives) with a
        # stratified half of the test pool, which supplies the negative
        # targets; metrics are reported on the untouched half only
        calib_scores = np.concatenate([
            anomaly.gmm_score(model, X_train), all_scores[calib_local],
        ])
        calib_targets = np.concatenate([
            np.ones(X_train.shape[0], dtype=int),
            (y_eval[calib_local] == positive_class).astype(int),
        ])
        detector = anomaly.calibrate_and_detect(
            model, calib_scores, calib_targets,
            threshold=threshold, positive_label=1,
        )
        eval_idx = eval_idx[eval_local]
        X_eval = X_eval[eval_local]
        y_eval = y_eval[eval_local]
        scores = all_scores[eval_local]
        calibrated = detector.calibration.predict(scores)
        positive_mask = calibrated >= threshold
    elif method == "ocsvm":
        sigma = params.get("sigma") or kernels.median_sigma(X_train)
        tag = params.get("kernel", "rbf")
        spec = kernels.parse_kernel_tag(
            tag, sigma, params.get("epsilon", 1e-10)
        )
        pooled = np.vstack([X_train, X_eval])
        gram = kernels.gram(spec, pooled)
        n_tr = X_train.shape[0]
        model = svm.train_ocsvm(
            gram.values[:n_tr, :n_tr], nu=params.get("nu", 0.1)
        )
        scores = svm.decision_function(
            model, gram.values[n_tr:, :n_tr]
        )
        positive_mask = scores >= 0
    else:
        raise ConfigError(f"unknown novelty method {method!r}")

    predicted = np.where(positive_mask, positive_class, negative_class)
    cm = confusion(y_eval, predicted, positive_class)
    rows = []
    for pos, original in enumerate(eval_idx):
        rows.append({
            "id": int(original),
            "score": float(scores[pos]),
            "calibrated": None if calibrated is None
            else float(calibrated[pos]),
            "actual": int(y_eval[pos]),
            "predicted": int(predicted[pos]),
        })
    return NoveltyReport(
        method=method,
        positive_class=positive_class,
        threshold=threshold,
        seed=seed,
        confusion=cm,
        metric_values=metrics(cm),
        rows=rows,
        params={"train_fraction": train_fraction, **params},
    )
