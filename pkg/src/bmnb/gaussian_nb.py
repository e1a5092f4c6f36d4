"""Gaussian Naive Bayes with variance smoothing and fixed class priors."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

FORMAT_VERSION = 1
ABSOLUTE_VAR_FLOOR = 1e-12
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GaussianNB:
    classes: tuple[int, ...]
    priors: np.ndarray      # (n_classes,)
    means: np.ndarray       # (n_classes, n_features)
    variances: np.ndarray   # (n_classes, n_features), smoothed
    epsilon: float
    n_fit_rows: np.ndarray  # (n_classes,)

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        if not np.isfinite(X).all():
            raise ValueError("non-finite feature value")
        return X

    def joint_log_likelihood(self, X) -> np.ndarray:
        """log P(y) + sum_i log N(x_i; mean, var), shape (n_rows, n_classes)."""
        X = self._check(X)
        out = np.empty((X.shape[0], len(self.classes)))
        for c in range(len(self.classes)):
            var = self.variances[c]
            const = -0.5 * np.sum(_LOG_2PI + np.log(var))
            quad = -0.5 * np.sum((X - self.means[c]) ** 2 / var, axis=1)
            out[:, c] = np.log(self.priors[c]) + const + quad
        return out

    def predict_log_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return jll - logsumexp(jll, axis=1, keepdims=True)

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        z = np.exp(jll - jll.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.classes)[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "format": "bmnb.gaussian_nb",
            "version": FORMAT_VERSION,
            "classes": list(self.classes),
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "epsilon": self.epsilon,
            "n_fit_rows": self.n_fit_rows.tolist(),
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "GaussianNB":
        if rec.get("format") != "bmnb.gaussian_nb" or rec.get("version") != FORMAT_VERSION:
            raise ValueError("not a version-1 gaussian_nb record")
        return cls(
            classes=tuple(rec["classes"]),
            priors=np.asarray(rec["priors"], dtype=np.float64),
            means=np.asarray(rec["means"], dtype=np.float64),
            variances=np.asarray(rec["variances"], dtype=np.float64),
            epsilon=float(rec["epsilon"]),
            n_fit_rows=np.asarray(rec["n_fit_rows"], dtype=np.int64),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "GaussianNB":
        return cls.from_dict(json.loads(text))


def train_gnb(X, y, epsilon: float = 1e-9, priors=None, classes=(0, 1),
              allow_single_class: bool = False, smoothing: str = "max") -> GaussianNB:
    """Fit per-class Gaussian feature models.

    Variances are population variances plus ``epsilon`` times the largest
    per-feature variance of ``X`` (absolute floor 1e-12 when every feature is
    constant). ``smoothing="per_feature"`` scales the floor by each feature's
    own variance instead, which makes the model exactly invariant to
    per-feature rescaling. ``priors`` aligned with ``classes`` are stored
    unchanged; when omitted, empirical class frequencies are used.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature value")
    classes = tuple(int(c) for c in classes)
    counts = np.array([(y == c).sum() for c in classes])
    empty = [c for c, n in zip(classes, counts) if n == 0]
    if empty:
        if not allow_single_class or len(empty) == len(classes):
            raise ValueError(f"no training rows for class {empty[0]}")
        keep = [i for i, n in enumerate(counts) if n > 0]
        if priors is not None:
            priors = np.asarray(priors, dtype=np.float64)[keep]
            priors = priors / priors.sum()
        classes = tuple(classes[i] for i in keep)
        counts = counts[keep]

    if smoothing == "max":
        floor = epsilon * X.var(axis=0).max() if X.size else 0.0
        if floor <= 0:
            floor = ABSOLUTE_VAR_FLOOR
    elif smoothing == "per_feature":
        floor = epsilon * X.var(axis=0)
        floor[floor <= 0] = ABSOLUTE_VAR_FLOOR
    else:
        raise ValueError(f"unknown smoothing {smoothing!r}")
    means = np.vstack([X[y == c].mean(axis=0) for c in classes])
    variances = np.vstack([X[y == c].var(axis=0) for c in classes]) + floor

    if priors is None:
        priors = counts / counts.sum()
    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (len(classes),) or (priors <= 0).any() or not np.isclose(priors.sum(), 1.0):
        raise ValueError("priors must be positive, one per class, and sum to 1")
    return GaussianNB(classes, priors.copy(), means, variances, float(epsilon), counts.astype(np.int64))
