"""Group-specific decision thresholds from score quantiles."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MODES = ("dp", "eo", "fixed")
SCALES = ("probability", "logit")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Group code -> cutoff; a row is positive iff its score is strictly above it.

    ``scale`` says what the scores are: positive-class probabilities in [0, 1]
    or log-odds. Log-odds keep apart scores that round to exactly 1.0 as
    probabilities, which otherwise makes quantile cuts land inside ties.
    """

    thresholds: dict[int, float] = field(default_factory=dict)
    default_threshold: float = 0.5
    target_rate: float | None = None
    mode: str = "fixed"
    scale: str = "probability"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.scale not in SCALES:
            raise ValueError(f"scale must be one of {SCALES}")
        if self.scale == "probability":
            for g, t in self.thresholds.items():
                if not 0.0 <= t <= 1.0:
                    raise ValueError(f"threshold for group {g} outside [0, 1]: {t}")

    def threshold_for(self, group: int) -> float:
        return self.thresholds.get(int(group), self.default_threshold)

    def probability_thresholds(self) -> dict[int, float]:
        """Cutoffs expressed as probabilities (identity on the probability scale)."""
        if self.scale == "probability":
            return dict(self.thresholds)
        return {g: _expit(t) for g, t in self.thresholds.items()}

    def to_dict(self) -> dict:
        return {
            "format": "bmnb.threshold_policy",
            "version": 1,
            "mode": self.mode,
            "scale": self.scale,
            "target_rate": self.target_rate,
            "default_threshold": _enc(self.default_threshold),
            "thresholds": {str(g): _enc(t) for g, t in sorted(self.thresholds.items())},
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "ThresholdPolicy":
        return cls(
            thresholds={int(g): _dec(t) for g, t in rec["thresholds"].items()},
            default_threshold=_dec(rec["default_threshold"]),
            target_rate=rec["target_rate"],
            mode=rec["mode"],
            scale=rec["scale"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ThresholdPolicy":
        return cls.from_dict(json.loads(text))


def _expit(t: float) -> float:
    if t == math.inf:
        return 1.0
    if t == -math.inf:
        return 0.0
    return 0.5 * (1.0 + math.tanh(0.5 * t))


def _enc(t: float):
    return str(t) if math.isinf(t) else t


def _dec(t) -> float:
    return float(t)


def _check_scores(scores, scale: str) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    if scale == "probability" and ((s < 0).any() or (s > 1).any()):
        raise ValueError("probability scores must lie in [0, 1]")
    return s


def overall_positive_rate(scores, tau: float = 0.5) -> float:
    """Fraction of rows with score >= tau."""
    s = np.asarray(scores, dtype=np.float64)
    if len(s) == 0:
        raise ValueError("no scores")
    return float(np.mean(s >= tau))


def quantile_cut(scores: np.ndarray, k: int, scale: str = "probability") -> float:
    """Cutoff leaving as close to ``k`` rows strictly above it as ties allow.

    With descending scores s_1 >= ... >= s_n the cut falls midway between s_k
    and s_{k+1}. If those two are tied, the nearest position between distinct
    values is used instead (nearer to fewer positives when equidistant).
    """
    s = np.sort(np.asarray(scores, dtype=np.float64))[::-1]
    n = len(s)
    top = 1.0 if scale == "probability" else math.inf
    bottom = 0.0 if scale == "probability" else -math.inf
    # valid cut positions j: first j rows positive
    valid = np.concatenate(([True], s[:-1] > s[1:], [True]))
    positions = np.flatnonzero(valid)
    j = int(positions[np.argmin(np.abs(positions - k) * 2 + (positions > k))])
    if j == 0:
        return top
    if j == n:
        # a probability of exactly 0.0 stays negative under the strict rule
        return bottom
    hi, lo = s[j - 1], s[j]
    mid = lo + (hi - lo) / 2.0
    return float(mid) if lo <= mid < hi else float(lo)


def _target_count(rate: float, n: int) -> int:
    return int(math.floor(rate * n + 0.5))


def calibrate_thresholds(scores, groups, target_rate: float, scale: str = "probability",
                         default_threshold: float | None = None) -> ThresholdPolicy:
    """Demographic-parity thresholds: each group's positive rate -> target_rate."""
    if not 0.0 <= target_rate <= 1.0:
        raise ValueError("target_rate must lie in [0, 1]")
    s = _check_scores(scores, scale)
    groups = np.asarray(groups)
    if len(s) != len(groups):
        raise ValueError("scores and groups differ in length")
    thresholds = {}
    for g in np.unique(groups):
        sg = s[groups == g]
        thresholds[int(g)] = quantile_cut(sg, _target_count(target_rate, len(sg)), scale)
    if default_threshold is None:
        default_threshold = 0.5 if scale == "probability" else 0.0
    return ThresholdPolicy(thresholds, default_threshold, float(target_rate), "dp", scale)


def calibrate_equal_opportunity(scores, groups, y_true, target_tpr: float,
                                scale: str = "probability",
                                default_threshold: float | None = None) -> ThresholdPolicy:
    """Equal-opportunity thresholds: each group's TPR on labelled rows -> target_tpr.

    Groups without positive-labelled rows keep the default threshold.
    """
    if not 0.0 <= target_tpr <= 1.0:
        raise ValueError("target_tpr must lie in [0, 1]")
    s = _check_scores(scores, scale)
    groups, y_true = np.asarray(groups), np.asarray(y_true)
    if default_threshold is None:
        default_threshold = 0.5 if scale == "probability" else 0.0
    thresholds = {}
    for g in np.unique(groups):
        pos = s[(groups == g) & (y_true == 1)]
        if len(pos):
            thresholds[int(g)] = quantile_cut(pos, _target_count(target_tpr, len(pos)), scale)
    return ThresholdPolicy(thresholds, default_threshold, float(target_tpr), "eo", scale)


def fixed_policy(tau: float = 0.5, scale: str = "probability") -> ThresholdPolicy:
    return ThresholdPolicy({}, tau, None, "fixed", scale)


def apply_policy(policy: ThresholdPolicy, scores, groups) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    groups = np.asarray(groups)
    cut = np.array([policy.threshold_for(g) for g in groups], dtype=np.float64)
    return (s > cut).astype(np.int64)
