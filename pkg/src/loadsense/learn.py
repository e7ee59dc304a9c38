"""Classifiers (shrinkage LDA, KNN, AdaBoost stumps), standardization,
grid search, and greedy ensemble selection.

All predictors are deterministic: tie rules are fixed (lowest class index
for votes and discriminants, training order for neighbor distance ties,
model kind then grid order for equal validation scores).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MODEL_KINDS = ("LDA", "KNN", "AdaBoost")
MODEL_FORMAT_VERSION = 1

DEFAULT_GRIDS = {
    "LDA": [{"shrinkage": s} for s in (0.01, 0.1, 0.3, 0.5)],
    "KNN": [{"k": k} for k in (1, 3, 5, 7, 9)],
    "AdaBoost": [{"n_stumps": n} for n in (25, 50, 100)],
}


@dataclass(frozen=True)
class Scaler:
    """Column z-scoring with train-mean imputation of missing (NaN) entries."""

    mean: np.ndarray
    std: np.ndarray  # zero-variance columns carry std 1

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        X = np.where(np.isnan(X), self.mean, X)
        return (X - self.mean) / self.std


def fit_scaler(X: np.ndarray) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("fit_scaler: need a non-empty 2-D training matrix")
    mean = np.nanmean(X, axis=0)
    mean = np.where(np.isnan(mean), 0.0, mean)  # all-missing column
    filled = np.where(np.isnan(X), mean, X)
    std = np.std(filled, axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    std = np.where(std == 0.0, 1.0, std)
    return Scaler(mean=mean, std=std)


def apply_scaler(scaler: Scaler, X: np.ndarray) -> np.ndarray:
    return scaler.transform(X)


@dataclass(frozen=True)
class TrainedModel:
    kind: str  # LDA | KNN | AdaBoost | Ensemble
    classes: tuple[int, ...]
    params: dict
    scaler: Scaler | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return _PREDICTORS[self.kind](self, X)


# ---------------------------------------------------------------------------
# LDA


def fit_lda(X: np.ndarray, y: Sequence[int], shrinkage: float, scaler: Scaler | None = None) -> TrainedModel:
    """Gaussian LDA with pooled covariance shrunk toward (trace/p) * I."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    classes = tuple(sorted(set(y.tolist())))
    if len(classes) < 2:
        raise ValueError("fit_lda: need at least 2 classes")
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError("shrinkage must lie in [0, 1]")
    n, p = X.shape
    means = []
    pooled = np.zeros((p, p))
    priors = []
    for c in classes:
        Xc = X[y == c]
        if len(Xc) < 2:
            raise ValueError("fit_lda: every class needs at least 2 samples")
        mu = Xc.mean(axis=0)
        means.append(mu)
        centered = Xc - mu
        pooled += centered.T @ centered
        priors.append(len(Xc) / n)
    pooled /= n - len(classes)
    target = np.eye(p) * (np.trace(pooled) / p)
    cov = (1.0 - shrinkage) * pooled + shrinkage * target
    try:
        cov_inv = np.linalg.inv(cov)
    except np.linalg.LinAlgError:
        raise ValueError("singular shrunken covariance; use shrinkage > 0") from None
    params = {
        "means": np.asarray(means),
        "cov_inv": cov_inv,
        "log_priors": np.log(np.asarray(priors)),
    }
    return TrainedModel(kind="LDA", classes=classes, params=params, scaler=scaler)


def _predict_lda(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    means = model.params["means"]
    cov_inv = model.params["cov_inv"]
    log_priors = model.params["log_priors"]
    # delta_c(x) = x' S^-1 mu_c - 1/2 mu_c' S^-1 mu_c + log pi_c
    proj = X @ cov_inv @ means.T
    const = -0.5 * np.einsum("cp,pq,cq->c", means, cov_inv, means) + log_priors
    scores = proj + const
    idx = np.argmax(scores, axis=1)  # argmax takes the first (lowest class index) on ties
    return np.asarray(model.classes)[idx]


# ---------------------------------------------------------------------------
# KNN


def fit_knn(X: np.ndarray, y: Sequence[int], k: int, scaler: Scaler | None = None) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(X):
        raise ValueError("k exceeds the training set size")
    classes = tuple(sorted(set(y.tolist())))
    params = {"train_X": X.copy(), "train_y": y.copy(), "k": k}
    return TrainedModel(kind="KNN", classes=classes, params=params, scaler=scaler)


def _predict_knn(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    train_X = model.params["train_X"]
    train_y = model.params["train_y"]
    k = model.params["k"]
    out = np.empty(len(X), dtype=int)
    d2 = ((X[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
    for i in range(len(X)):
        order = np.argsort(d2[i], kind="stable")  # distance ties: training index order
        neighbors = order[:k]
        labels = train_y[neighbors]
        counts = np.bincount(labels, minlength=max(model.classes) + 1)
        best = counts.max()
        tied = set(np.flatnonzero(counts == best).tolist())
        if len(tied) == 1:
            out[i] = next(iter(tied))
        else:
            # vote tie: nearest neighbor among the tied classes decides
            for idx in neighbors:
                if train_y[idx] in tied:
                    out[i] = train_y[idx]
                    break
    return out


# ---------------------------------------------------------------------------
# AdaBoost with depth-1 stumps, one-vs-rest for multi-class


def _fit_stump(X: np.ndarray, target: np.ndarray, w: np.ndarray):
    """Best weighted stump (feature, threshold, polarity); prediction is
    polarity * sign(x[feature] - threshold), with sign(0) treated as -1."""
    n, p = X.shape
    best = None
    for j in range(p):
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        # candidate thresholds: below the minimum, then midpoints of distinct values
        thresholds = [sorted_col[0] - 1.0]
        for a, b in zip(sorted_col, sorted_col[1:]):
            if b > a:
                thresholds.append(0.5 * (a + b))
        for thr in thresholds:
            pred = np.where(col > thr, 1.0, -1.0)
            err_pos = float(w[pred != target].sum())
            for polarity, err in ((1, err_pos), (-1, 1.0 - err_pos)):
                if best is None or err < best[0] - 1e-15:
                    best = (err, j, thr, polarity)
    return best


def fit_adaboost(X: np.ndarray, y: Sequence[int], n_stumps: int, scaler: Scaler | None = None) -> TrainedModel:
    """Discrete AdaBoost on decision stumps; multi-class via one-vs-rest margins."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    classes = tuple(sorted(set(y.tolist())))
    if len(classes) < 2:
        raise ValueError("fit_adaboost: need at least 2 classes")
    if len(X) < 2:
        raise ValueError("fit_adaboost: need at least 2 samples")
    machines = []
    for c in classes:
        target = np.where(y == c, 1.0, -1.0)
        w = np.full(len(X), 1.0 / len(X))
        stumps = []
        for _ in range(n_stumps):
            err, j, thr, polarity = _fit_stump(X, target, w)
            if err >= 0.5:
                break
            err = min(max(err, 1e-10), 1.0 - 1e-10)
            alpha = 0.5 * np.log((1.0 - err) / err)
            pred = polarity * np.where(X[:, j] > thr, 1.0, -1.0)
            w = w * np.exp(-alpha * target * pred)
            w /= w.sum()
            stumps.append((j, thr, polarity, alpha))
        machines.append(stumps)
    params = {"machines": machines}
    return TrainedModel(kind="AdaBoost", classes=classes, params=params, scaler=scaler)


def _predict_adaboost(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    scores = np.zeros((len(X), len(model.classes)))
    for ci, stumps in enumerate(model.params["machines"]):
        for j, thr, polarity, alpha in stumps:
            scores[:, ci] += alpha * polarity * np.where(X[:, j] > thr, 1.0, -1.0)
    idx = np.argmax(scores, axis=1)
    return np.asarray(model.classes)[idx]


# ---------------------------------------------------------------------------
# Ensemble


def _predict_ensemble(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    members: list[tuple[TrainedModel, int]] = model.params["members"]
    classes = sorted({c for m, _ in members for c in m.classes} | set(model.classes))
    n_classes = max(classes) + 1
    votes = np.zeros((len(X), n_classes))
    for member, multiplicity in members:
        pred = member.predict(X)
        for c in classes:
            votes[:, c] += multiplicity * (pred == c)
    idx = np.argmax(votes, axis=1)  # ties go to the lowest class index
    return idx


_PREDICTORS = {
    "LDA": _predict_lda,
    "KNN": _predict_knn,
    "AdaBoost": _predict_adaboost,
    "Ensemble": _predict_ensemble,
}


def accuracy(model: TrainedModel, X: np.ndarray, y: Sequence[int]) -> float:
    y = np.asarray(y, dtype=int)
    return float(np.mean(model.predict(X) == y))


@dataclass(frozen=True)
class Candidate:
    kind: str
    config: dict
    model: TrainedModel
    val_accuracy: float
    order: int  # position in (kind, grid) enumeration; tie-break key


_FITTERS = {
    "LDA": lambda X, y, cfg: fit_lda(X, y, **cfg),
    "KNN": lambda X, y, cfg: fit_knn(X, y, **cfg),
    "AdaBoost": lambda X, y, cfg: fit_adaboost(X, y, **cfg),
}


def grid_search(
    X_train: np.ndarray,
    y_train: Sequence[int],
    X_val: np.ndarray,
    y_val: Sequence[int],
    grids: dict[str, list[dict]] | None = None,
) -> list[Candidate]:
    """Train every grid configuration and rank by validation accuracy.

    Ties rank by model kind order (LDA < KNN < AdaBoost), then grid order.
    """
    if len(np.asarray(X_val)) == 0:
        raise ValueError("grid_search: empty validation set")
    grids = grids if grids is not None else DEFAULT_GRIDS
    if not any(grids.values()):
        raise ValueError("grid_search: empty grids")
    candidates = []
    order = 0
    for kind in MODEL_KINDS:
        for cfg in grids.get(kind, []):
            model = _FITTERS[kind](X_train, y_train, cfg)
            candidates.append(
                Candidate(kind=kind, config=cfg, model=model,
                          val_accuracy=accuracy(model, X_val, y_val), order=order)
            )
            order += 1
    candidates.sort(key=lambda c: (-c.val_accuracy, c.order))
    return candidates


def greedy_ensemble(
    candidates: Sequence[Candidate],
    X_val: np.ndarray,
    y_val: Sequence[int],
    max_size: int = 10,
) -> TrainedModel:
    """Forward selection with replacement under plurality vote.

    Starts from the best single candidate and only accepts additions that
    strictly improve validation accuracy, so the ensemble's validation
    accuracy is never below the best member's.
    """
    if not candidates:
        raise ValueError("greedy_ensemble: no candidates")
    y_val = np.asarray(y_val, dtype=int)
    classes = tuple(sorted({c for cand in candidates for c in cand.model.classes}))

    preds = [cand.model.predict(X_val) for cand in candidates]
    # the best candidate (highest validation accuracy, earliest order on ties)
    # seeds the ensemble, so its accuracy is the floor
    seed_index = min(range(len(candidates)), key=lambda i: (-candidates[i].val_accuracy, candidates[i].order))
    counts = [0] * len(candidates)
    counts[seed_index] = 1

    def vote_accuracy(cnts) -> float:
        votes = np.zeros((len(y_val), max(classes) + 1))
        for pred, mult in zip(preds, cnts):
            if mult:
                for c in classes:
                    votes[:, c] += mult * (pred == c)
        return float(np.mean(np.argmax(votes, axis=1) == y_val))

    best_acc = vote_accuracy(counts)
    while sum(counts) < max_size:
        best_gain = None
        for i in range(len(candidates)):
            counts[i] += 1
            acc = vote_accuracy(counts)
            counts[i] -= 1
            if acc > best_acc and (best_gain is None or acc > best_gain[0]):
                best_gain = (acc, i)
        if best_gain is None:
            break
        best_acc, i = best_gain
        counts[i] += 1

    members = [(cand.model, mult) for cand, mult in zip(candidates, counts) if mult]
    return TrainedModel(kind="Ensemble", classes=classes, params={"members": members})


# ---------------------------------------------------------------------------
# JSON serialization


def _scaler_to_json(scaler: Scaler | None):
    if scaler is None:
        return None
    return {"mean": scaler.mean.tolist(), "std": scaler.std.tolist()}


def _scaler_from_json(doc) -> Scaler | None:
    if doc is None:
        return None
    return Scaler(mean=np.asarray(doc["mean"]), std=np.asarray(doc["std"]))


def model_to_json(model: TrainedModel, seed: int | None = None) -> str:
    def encode(m: TrainedModel) -> dict:
        doc = {"kind": m.kind, "classes": list(m.classes), "scaler": _scaler_to_json(m.scaler)}
        if m.kind == "LDA":
            doc["params"] = {
                "means": m.params["means"].tolist(),
                "cov_inv": m.params["cov_inv"].tolist(),
                "log_priors": m.params["log_priors"].tolist(),
            }
        elif m.kind == "KNN":
            doc["params"] = {
                "train_X": m.params["train_X"].tolist(),
                "train_y": m.params["train_y"].tolist(),
                "k": m.params["k"],
            }
        elif m.kind == "AdaBoost":
            doc["params"] = {"machines": m.params["machines"]}
        elif m.kind == "Ensemble":
            doc["params"] = {
                "members": [[encode(member), mult] for member, mult in m.params["members"]]
            }
        else:
            raise ValueError(f"unknown model kind {m.kind!r}")
        return doc

    return json.dumps(
        {"format_version": MODEL_FORMAT_VERSION, "seed": seed, "model": encode(model)},
        indent=2,
        sort_keys=True,
    )


def model_from_json(text: str) -> TrainedModel:
    root = json.loads(text)
    if root.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError("unsupported model format version")

    def decode(doc) -> TrainedModel:
        kind = doc["kind"]
        classes = tuple(doc["classes"])
        scaler = _scaler_from_json(doc["scaler"])
        p = doc["params"]
        if kind == "LDA":
            params = {
                "means": np.asarray(p["means"]),
                "cov_inv": np.asarray(p["cov_inv"]),
                "log_priors": np.asarray(p["log_priors"]),
            }
        elif kind == "KNN":
            params = {
                "train_X": np.asarray(p["train_X"]),
                "train_y": np.asarray(p["train_y"], dtype=int),
                "k": p["k"],
            }
        elif kind == "AdaBoost":
            params = {"machines": [[tuple(s) for s in stumps] for stumps in p["machines"]]}
        elif kind == "Ensemble":
            params = {"members": [(decode(m), mult) for m, mult in p["members"]]}
        else:
            raise ValueError(f"unknown model kind {kind!r}")
        return TrainedModel(kind=kind, classes=classes, params=params, scaler=scaler)

    return decode(root["model"])
