"""Blended group/global Gaussian NB and cross-validated selection of alpha."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, stratified_folds
from .gaussian_nb import GaussianNB, train_gnb
from .metrics import fairness_report
from .thresholds import calibrate_thresholds, apply_policy, overall_positive_rate

DEFAULT_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True, eq=False)
class BlendedModel:
    global_model: GaussianNB
    group_models: dict[int, GaussianNB]
    alpha: float | None = None
    min_support: int = 30
    eligible_groups: frozenset = frozenset()
    # group code -> reason it falls back to the global model
    demoted: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    def with_alpha(self, alpha: float) -> "BlendedModel":
        return replace(self, alpha=float(alpha))

    def resolve(self, group: int) -> GaussianNB:
        """Model used for the group term: its own if eligible, else the global one."""
        g = int(group)
        return self.group_models[g] if g in self.eligible_groups else self.global_model

    def _require_alpha(self) -> float:
        if self.alpha is None:
            raise ValueError("alpha is unset; call with_alpha() or select_alpha() first")
        return self.alpha

    def _by_group(self, X, groups, method: str) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        groups = np.broadcast_to(np.asarray(groups), (X.shape[0],))
        out = np.empty((X.shape[0], 2))
        for g in np.unique(groups):
            m = groups == g
            out[m] = getattr(self.resolve(g), method)(X[m])
        return out

    def blend_proba(self, X, groups) -> np.ndarray:
        """alpha * P_group + (1 - alpha) * P_global, one row per query."""
        a = self._require_alpha()
        p_group = self._by_group(X, groups, "predict_proba")
        p_global = self.global_model.predict_proba(X)
        return a * p_group + (1.0 - a) * p_global

    def blend_log_proba(self, X, groups) -> np.ndarray:
        """Logarithm of :meth:`blend_proba`, computed without leaving log space."""
        a = self._require_alpha()
        lg = self._by_group(X, groups, "predict_log_proba")
        lG = self.global_model.predict_log_proba(X)
        with np.errstate(divide="ignore"):
            la, l1a = np.log(a), np.log1p(-a)
        return np.logaddexp(la + lg, l1a + lG)

    def positive_logit(self, X, groups) -> np.ndarray:
        """Log-odds of the blended positive-class probability."""
        lp = self.blend_log_proba(X, groups)
        return lp[:, 1] - lp[:, 0]

    def predict(self, X, groups) -> np.ndarray:
        return np.argmax(self.blend_proba(X, groups), axis=1)

    def to_dict(self) -> dict:
        return {
            "format": "bmnb.blended",
            "version": 1,
            "alpha": self.alpha,
            "min_support": self.min_support,
            "eligible_groups": sorted(int(g) for g in self.eligible_groups),
            "demoted": {str(g): r for g, r in sorted(self.demoted.items())},
            "global_model": self.global_model.to_dict(),
            "group_models": {str(g): m.to_dict() for g, m in sorted(self.group_models.items())},
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "BlendedModel":
        if rec.get("format") != "bmnb.blended":
            raise ValueError("not a blended-model record")
        return cls(
            global_model=GaussianNB.from_dict(rec["global_model"]),
            group_models={int(g): GaussianNB.from_dict(m) for g, m in rec["group_models"].items()},
            alpha=rec["alpha"],
            min_support=rec["min_support"],
            eligible_groups=frozenset(rec["eligible_groups"]),
            demoted={int(g): r for g, r in rec["demoted"].items()},
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "BlendedModel":
        return cls.from_dict(json.loads(text))


def resolve_priors(labels: np.ndarray, priors="global"):
    """``"global"`` -> class frequencies of ``labels`` reused by every model;
    ``"empirical"`` -> None (each model uses its own frequencies); an explicit
    pair is passed through."""
    if isinstance(priors, str):
        if priors == "global":
            counts = np.bincount(np.asarray(labels), minlength=2).astype(np.float64)
            if (counts == 0).any():
                raise ValueError("global priors need both classes in the training data")
            return counts / counts.sum()
        if priors == "empirical":
            return None
        raise ValueError(f"unknown priors mode {priors!r}")
    return np.asarray(priors, dtype=np.float64)


def train_blended(train: Dataset, epsilon: float = 1e-9, min_support: int = 30, priors="global") -> BlendedModel:
    """Fit the pooled model plus one model per group present in ``train``.

    A group whose smaller class has fewer than ``min_support`` rows, or whose
    model fails to fit, resolves to the pooled model.
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if not train.is_numeric:
        raise ValueError("train_blended needs preprocessed numeric features")
    p = resolve_priors(train.labels, priors)
    global_model = train_gnb(train.features, train.labels, epsilon, p)
    group_models, eligible, demoted = {}, set(), {}
    for g in np.unique(train.groups):
        g = int(g)
        m = train.groups == g
        counts = np.bincount(train.labels[m], minlength=2)
        try:
            group_models[g] = train_gnb(train.features[m], train.labels[m], epsilon, p, allow_single_class=True)
        except ValueError as exc:
            demoted[g] = f"fit failed: {exc}"
            continue
        if counts.min() < min_support:
            demoted[g] = f"class counts {counts.tolist()} below min_support={min_support}"
        else:
            eligible.add(g)
    return BlendedModel(global_model, group_models, None, min_support, frozenset(eligible), demoted)


@dataclass(frozen=True)
class AlphaSelection:
    grid: tuple[float, ...]
    lam: float
    folds: int
    per_alpha_scores: dict[float, tuple[float, float, float]]  # alpha -> (acc, fs, J)
    chosen_alpha: float

    def rows(self) -> list[dict]:
        return [{"alpha": a, "cv_accuracy": acc, "cv_fairness": fs, "J": j}
                for a, (acc, fs, j) in self.per_alpha_scores.items()]


def objective(acc: float, fair: float, lam: float) -> float:
    # a zero-weighted term must not poison J when it is undefined
    if lam == 1.0:
        return acc
    if lam == 0.0:
        return fair
    return lam * acc + (1.0 - lam) * fair


def _argmax_smallest(grid, values) -> float:
    best_a, best_v = None, -math.inf
    for a in sorted(grid):
        v = values[a]
        if math.isnan(v):
            continue
        if best_a is None or v > best_v:
            best_a, best_v = a, v
    return min(grid) if best_a is None else best_a


def predict_with_policy(model: BlendedModel, X, groups, threshold_mode: str | None,
                        calibration: tuple | None = None, target_rate: float | None = None):
    """Labels from ``model`` either by argmax (``threshold_mode`` None) or DP thresholds.

    ``calibration`` is ``(X_cal, groups_cal)``; the DP target defaults to the
    model's own positive rate at probability 0.5 on the calibration rows.
    """
    if threshold_mode is None:
        return model.predict(X, groups), None
    if threshold_mode != "dp":
        raise ValueError("cross-validation supports only argmax or dp thresholding")
    X_cal, g_cal = calibration
    s_cal = model.positive_logit(X_cal, g_cal)
    if target_rate is None:
        target_rate = overall_positive_rate(s_cal, 0.0)
    policy = calibrate_thresholds(s_cal, g_cal, target_rate, scale="logit")
    return apply_policy(policy, model.positive_logit(X, groups), groups), policy


def select_alpha(train: Dataset, grid=DEFAULT_GRID, lam: float = 0.5, folds: int = 5, seed: int = 42,
                 epsilon: float = 1e-9, min_support: int = 30, priors="global",
                 threshold_mode: str | None = "dp", privileged_code: int = 0) -> AlphaSelection:
    """Stratified k-fold choice of alpha maximizing lam*Acc + (1-lam)*FS.

    Each fold trains the blended pipeline on the remaining folds (with DP
    thresholds calibrated on those same rows when ``threshold_mode='dp'``) and
    scores the held-out fold. Ties, and folds whose Fairness Score is
    undefined, resolve toward the smallest alpha.
    """
    grid = tuple(float(a) for a in grid)
    if not grid:
        raise ValueError("alpha grid is empty")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    held_out = stratified_folds(train, folds, seed)
    acc = {a: [] for a in grid}
    fair = {a: [] for a in grid}
    for idx in held_out:
        mask = np.zeros(len(train), dtype=bool)
        mask[idx] = True
        fit, ev = train.take(np.flatnonzero(~mask)), train.take(idx)
        base = train_blended(fit, epsilon, min_support, priors)
        for a in grid:
            model = base.with_alpha(a)
            pred, _ = predict_with_policy(model, ev.features, ev.groups, threshold_mode,
                                          calibration=(fit.features, fit.groups))
            rep = fairness_report(ev.labels, pred, ev.groups, privileged_code)
            acc[a].append(rep.accuracy)
            fair[a].append(rep.fairness_score)
    scores = {}
    for a in grid:
        mean_acc = float(np.mean(acc[a]))
        mean_fs = float(np.mean(fair[a]))  # NaN if any fold is undefined
        scores[a] = (mean_acc, mean_fs, objective(mean_acc, mean_fs, lam))
    chosen = _argmax_smallest(grid, {a: s[2] for a, s in scores.items()})
    return AlphaSelection(grid, float(lam), folds, scores, chosen)
