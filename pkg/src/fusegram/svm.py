"""SMO solvers for C-SVC and nu-one-class SVM on precomputed Gram matrices.

The solvers work entirely from kernel values, so any of the divergence
kernels (including the indefinite amplified forms, which have a zero
diagonal) can be plugged in.  Working-set selection is maximal violating
pair; with an indefinite matrix the two-variable subproblem is treated
as linear (curvature floored at a tiny tau), which still yields strict
descent, so the dual objective is monotone either way.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .kernels import GramMatrix, KernelSpec

_TAU = 1e-12


@dataclass
class SvmModel:
    kind: str                 # "csvc" | "ocsvm"
    support_ids: np.ndarray   # indices into the training set
    alphas: np.ndarray        # y_i * alpha_i for csvc; alpha_i for ocsvm
    bias: float               # decision offset: +b for csvc, -rho for ocsvm
    n_train: int
    spec: KernelSpec | None = None
    c: float | None = None
    nu: float | None = None
    dual_objective: float = 0.0
    objective_history: list = field(default_factory=list, repr=False)


def _gram_values(gram) -> np.ndarray:
    K = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram)
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError("Gram matrix must be square")
    if not np.isfinite(K).all():
        raise NumericError("non-finite Gram entries")
    return K


def train_csvc(gram, labels, c: float = 1.0, tol: float = 1e-3,
               max_iter: int = 100_000,
               track_objective: bool = False) -> SvmModel:
    """Soft-margin C-SVC via SMO with maximal-violating-pair selection.

    Minimizes (1/2) a'Qa - e'a over 0 <= a <= C, y'a = 0 with
    Q_ij = y_i y_j K_ij.  Stops when the maximal KKT violation drops
    below tol.  Deterministic given the input order.
    """
    K = _gram_values(gram)
    y = np.asarray(labels, dtype=float)
    n = K.shape[0]
    if y.shape != (n,):
        raise DataError("labels length must match the Gram size")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise DataError("labels must be -1/+1")
    if len(np.unique(y)) < 2:
        raise DataError("both classes must be present")
    if c <= 0:
        raise ConfigError("C must be > 0")

    alpha = np.zeros(n)
    grad = -np.ones(n)        # gradient of the minimized dual at alpha = 0
    history = [0.0] if track_objective else None
    obj = 0.0                 # running value of e'a - (1/2) a'Qa

    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < c)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        up_idx = np.nonzero(up)[0]
        low_idx = np.nonzero(low)[0]
        i = up_idx[np.argmax(yg[up_idx])]
        j = low_idx[np.argmin(yg[low_idx])]
        m_val, mm_val = yg[i], yg[j]
        if m_val - mm_val < tol:
            break

        a_true = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = (m_val - mm_val) / max(a_true, _TAU)
        cap_i = c - alpha[i] if y[i] > 0 else alpha[i]
        cap_j = alpha[j] if y[j] > 0 else c - alpha[j]
        t = min(step, cap_i, cap_j)

        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        if t == cap_i:
            alpha[i] = c if y[i] > 0 else 0.0
        if t == cap_j:
            alpha[j] = 0.0 if y[j] > 0 else c
        grad += t * y * (K[:, i] - K[:, j])
        obj += (m_val - mm_val) * t - 0.5 * a_true * t * t
        if history is not None:
            history.append(obj)
    else:
        warnings.warn(
            f"SMO hit the iteration cap ({max_iter}) before reaching "
            f"tol={tol}; returning the current iterate",
            stacklevel=2,
        )

    yg = -y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        bias = float(yg[free].mean())
    else:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < c)) | ((y > 0) & (alpha > 0))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        bias = float(0.5 * (hi + lo))

    support = np.nonzero(alpha > 0)[0]
    dual = float(alpha.sum()
                 - 0.5 * (alpha * y) @ K @ (alpha * y))
    return SvmModel(
        kind="csvc",
        support_ids=support,
        alphas=(alpha * y)[support],
        bias=bias,
        n_train=n,
        spec=gram.spec if isinstance(gram, GramMatrix) else None,
        c=c,
        dual_objective=dual,
        objective_history=history or [],
    )


def train_ocsvm(gram, nu: float, tol: float = 1e-3,
                max_iter: int = 100_000,
                track_objective: bool = False) -> SvmModel:
    """nu-one-class SVM via an SMO variant.

    Minimizes (1/2) a'Ka over 0 <= a_i <= 1/(nu n), sum a = 1 on a Gram
    built from positive-class samples only.  The decision function is
    f(x) = sum_i a_i K(x_i, x) - rho with f >= 0 meaning inlier.
    """
    K = _gram_values(gram)
    n = K.shape[0]
    if not 0.0 < nu <= 1.0:
        raise ConfigError("nu must lie in (0, 1]")

    ub = 1.0 / (nu * n)
    alpha = np.zeros(n)
    n_full = int(math.floor(nu * n))
    alpha[:n_full] = ub
    if n_full < n:
        alpha[n_full] = 1.0 - n_full * ub
    grad = K @ alpha
    obj = float(-0.5 * alpha @ grad)
    history = [obj] if track_objective else None

    for _ in range(max_iter):
        can_up = alpha < ub
        can_down = alpha > 0
        if not can_up.any() or not can_down.any():
            break
        up_idx = np.nonzero(can_up)[0]
        down_idx = np.nonzero(can_down)[0]
        i = up_idx[np.argmin(grad[up_idx])]
        j = down_idx[np.argmax(grad[down_idx])]
        delta = grad[j] - grad[i]
        if delta < tol:
            break

        a_true = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t = min(delta / max(a_true, _TAU), ub - alpha[i], alpha[j])
        cap_i, cap_j = ub - alpha[i], alpha[j]
        alpha[i] += t
        alpha[j] -= t
        if t == cap_i:
            alpha[i] = ub
        if t == cap_j:
            alpha[j] = 0.0
        grad += t * (K[:, i] - K[:, j])
        obj += delta * t - 0.5 * a_true * t * t
        if history is not None:
            history.append(obj)
    else:
        warnings.warn(
            f"SMO hit the iteration cap ({max_iter}) before reaching "
            f"tol={tol}; returning the current iterate",
            stacklevel=2,
        )

    free = (alpha > 0) & (alpha < ub)
    if free.any():
        rho = float(grad[free].mean())
    else:
        at_ub = alpha >= ub
        at_zero = alpha <= 0
        lo = grad[at_ub].max() if at_ub.any() else None
        hi = grad[at_zero].min() if at_zero.any() else None
        if lo is not None and hi is not None:
            rho = float(0.5 * (lo + hi))
        else:
            rho = float(lo if lo is not None else hi)

    support = np.nonzero(alpha > 0)[0]
    return SvmModel(
        kind="ocsvm",
        support_ids=support,
        alphas=alpha[support],
        bias=rho,
        n_train=n,
        spec=gram.spec if isinstance(gram, GramMatrix) else None,
        nu=nu,
        dual_objective=float(-0.5 * alpha @ (K @ alpha)),
        objective_history=history or [],
    )


def decision_function(model: SvmModel, kernel_rows) -> np.ndarray:
    """Decision values for one or more query rows of kernel values
    against the full training set."""
    rows = np.asarray(kernel_rows, dtype=float)
    single = rows.ndim == 1
    if single:
        rows = rows[None, :]
    if rows.shape[1] != model.n_train:
        raise DataError(
            f"kernel row length {rows.shape[1]} != training size "
            f"{model.n_train}"
        )
    values = rows[:, model.support_ids] @ model.alphas
    if model.kind == "csvc":
        values = values + model.bias
    else:
        values = values - model.bias
    return values[0] if single else values


def predict(model: SvmModel, kernel_row):
    """Classify one query row: returns (label, decision_value).

    A decision value of exactly 0 resolves to +1.
    """
    value = float(decision_function(model, np.asarray(kernel_row)))
    return (1 if value >= 0 else -1), value


def csvc_kkt_violation(gram, labels, alpha, c: float) -> float:
    """Maximal KKT violation m - M of a C-SVC iterate (for audits)."""
    K = _gram_values(gram)
    y = np.asarray(labels, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    grad = (y[:, None] * y[None, :] * K) @ alpha - 1.0
    yg = -y * grad
    up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < c)) | ((y > 0) & (alpha > 0))
    if not up.any() or not low.any():
        return 0.0
    return float(yg[up].max() - yg[low].min())


def export_precomputed(gram, labels, path) -> None:
    """Write the precomputed-kernel text format.

    One line per sample: ``<label> 0:<serial> 1:<K(i,1)> ... n:<K(i,n)>``
    with serials starting at 1 and values rendered at 17 significant
    digits (lossless for doubles).
    """
    K = _gram_values(gram)
    y = np.asarray(labels)
    n = K.shape[0]
    if n == 0:
        raise DataError("cannot export an empty Gram matrix")
    if y.shape != (n,):
        raise DataError("labels length must match the Gram size")
    lines = []
    for i in range(n):
        parts = [f"{int(y[i])}", f"0:{i + 1}"]
        parts.extend(f"{j + 1}:{K[i, j]:.17g}" for j in range(n))
        lines.append(" ".join(parts))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def parse_precomputed(path):
    """Read the precomputed-kernel text format back into (K, labels)."""
    rows, labels, serials = [], [], []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            try:
                labels.append(int(fields[0]))
                entries = dict(
                    (int(k), v) for k, v in
                    (fld.split(":", 1) for fld in fields[1:])
                )
                serials.append(int(entries.pop(0)))
                row = [float(entries[k]) for k in sorted(entries)]
            except (KeyError, ValueError, IndexError) as exc:
                raise DataError(
                    f"{path}:{line_no}: malformed line ({exc})"
                ) from None
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty precomputed-kernel file")
    n = len(rows)
    if any(len(r) != n for r in rows) or serials != list(range(1, n + 1)):
        raise DataError(f"{path}: inconsistent precomputed-kernel layout")
    return np.array(rows), np.array(labels)


def save_model(model: SvmModel, path) -> None:
    payload = {
        "kind": model.kind,
        "support_ids": model.support_ids.tolist(),
        "alphas": model.alphas.tolist(),
        "bias": model.bias,
        "n_train": model.n_train,
        "c": model.c,
        "nu": model.nu,
        "spec": None if model.spec is None else {
            "family": model.spec.family,
            "mean": model.spec.mean,
            "form": model.spec.form,
            "sigma": model.spec.sigma,
            "epsilon": model.spec.epsilon,
        },
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(path) -> SvmModel:
    with open(path) as f:
        payload = json.load(f)
    spec = payload.get("spec")
    return SvmModel(
        kind=payload["kind"],
        support_ids=np.array(payload["support_ids"], dtype=int),
        alphas=np.array(payload["alphas"], dtype=float),
        bias=float(payload["bias"]),
        n_train=int(payload["n_train"]),
        spec=None if spec is None else KernelSpec(**spec),
        c=payload.get("c"),
        nu=payload.get("nu"),
    )
