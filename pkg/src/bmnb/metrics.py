"""Confusion statistics and group fairness metrics.

Undefined quantities (a zero denominator) are NaN and propagate into the Bias
Index and Fairness Score instead of being replaced by zero.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

NAN = float("nan")

# Transcribed from the Fairness Certification framework results on Adult
# (gender). Literal fixtures for report comparison, never recomputed.
FAIRNESS_CERTIFICATION_ADULT = {
    "spd": -0.1945,
    "di": 0.3598,
    "eod": 0.1257,
    "emod": 0.0958,
    "bias_index": 0.2641,
    "fairness_score": 0.7360,
}
IDEAL_VALUES = {"spd": 0.0, "di": 1.0, "eod": 0.0, "emod": 0.0}


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


def _ratio(num: int, den: int) -> float:
    return num / den if den else NAN


def _binary(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must be binary 0/1")
    return a.astype(np.int64)


def confusion(y_true, y_pred) -> Confusion:
    y_true, y_pred = _binary(y_true, "y_true"), _binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {len(y_true)} vs {len(y_pred)}")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return Confusion(tp, fp, tn, fn)


@dataclass(frozen=True)
class GroupStats:
    support: int
    positives: int      # actual Y=1
    negatives: int      # actual Y=0
    predicted_positive: int
    selection_rate: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class GroupRates:
    per_group: dict[int, GroupStats]
    privileged_code: int
    unprivileged_code: int

    @property
    def privileged(self) -> GroupStats:
        return self.per_group[self.privileged_code]

    @property
    def unprivileged(self) -> GroupStats:
        return self.per_group[self.unprivileged_code]

    def swapped(self) -> "GroupRates":
        return GroupRates(self.per_group, self.unprivileged_code, self.privileged_code)


def group_rates(y_true, y_pred, groups, privileged_code: int = 0,
                unprivileged_code: int | None = None) -> GroupRates:
    y_true, y_pred = _binary(y_true, "y_true"), _binary(y_pred, "y_pred")
    groups = np.asarray(groups)
    if not (len(y_true) == len(y_pred) == len(groups)):
        raise ValueError("y_true, y_pred and groups differ in length")
    present = sorted(int(g) for g in np.unique(groups))
    if unprivileged_code is None:
        others = [g for g in present if g != privileged_code]
        unprivileged_code = others[0] if others else privileged_code + 1
    for role, code in (("privileged", privileged_code), ("unprivileged", unprivileged_code)):
        if code not in present:
            raise ValueError(f"no rows for the {role} group (code {code})")
    per_group = {}
    for g in present:
        m = groups == g
        c = confusion(y_true[m], y_pred[m])
        n = int(m.sum())
        per_group[g] = GroupStats(
            support=n,
            positives=c.tp + c.fn,
            negatives=c.fp + c.tn,
            predicted_positive=c.tp + c.fp,
            selection_rate=_ratio(c.tp + c.fp, n),
            tpr=_ratio(c.tp, c.tp + c.fn),
            fpr=_ratio(c.fp, c.fp + c.tn),
        )
    return GroupRates(per_group, privileged_code, unprivileged_code)


def disparate_impact(r: GroupRates) -> float:
    """Unprivileged selection rate over privileged selection rate."""
    return _ratio_f(r.unprivileged.selection_rate, r.privileged.selection_rate)


def _ratio_f(num: float, den: float) -> float:
    if math.isnan(num) or math.isnan(den) or den == 0:
        return NAN
    return num / den


def statistical_parity_difference(r: GroupRates) -> float:
    return r.unprivileged.selection_rate - r.privileged.selection_rate


def equal_opportunity_difference(r: GroupRates) -> float:
    return r.unprivileged.tpr - r.privileged.tpr


def equal_misopportunity_difference(r: GroupRates) -> float:
    return r.unprivileged.fpr - r.privileged.fpr


def bias_index(spd: float, di: float, eod: float, emod: float, kind: str = "mean_abs") -> float:
    """Aggregate deviation of (SPD, DI, EOD, EMOD) from their ideals (0, 1, 0, 0).

    ``mean_abs`` (default) is the conventional aggregate; ``rms`` is the
    root-mean-square form.
    """
    dev = np.array([spd - 0.0, di - 1.0, eod - 0.0, emod - 0.0], dtype=np.float64)
    if np.isnan(dev).any():
        return NAN
    if kind == "mean_abs":
        return float(np.abs(dev).mean())
    if kind == "rms":
        return float(np.sqrt(np.mean(dev ** 2)))
    raise ValueError(f"unknown bias index kind {kind!r}")


def fairness_score(bi: float) -> float:
    if bi < 0:
        raise ValueError("bias index must be >= 0")
    return 1.0 - bi


def classification_report(y_true, y_pred) -> dict:
    """Per-class precision/recall/F1/support plus accuracy (NaN for 0/0 cells)."""
    y_true, y_pred = _binary(y_true, "y_true"), _binary(y_pred, "y_pred")
    c = confusion(y_true, y_pred)
    out: dict = {"accuracy": _ratio(c.tp + c.tn, len(y_true))}
    for cls, (tp, fp, fn) in {1: (c.tp, c.fp, c.fn), 0: (c.tn, c.fn, c.fp)}.items():
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        if math.isnan(precision) or math.isnan(recall) or precision + recall == 0:
            f1 = NAN if (math.isnan(precision) or math.isnan(recall)) else 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        out[cls] = {"precision": precision, "recall": recall, "f1": f1, "support": tp + fn}
    return out


@dataclass(frozen=True)
class FairnessReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict
    spd: float
    di: float
    eod: float
    emod: float
    bias_index: float
    fairness_score: float
    group_rates: GroupRates
    group_names: dict[int, str]

    def to_dict(self) -> dict:
        """Flat key/value record; NaN becomes None."""
        rec = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "spd": self.spd,
            "di": self.di,
            "eod": self.eod,
            "emod": self.emod,
            "bias_index": self.bias_index,
            "fairness_score": self.fairness_score,
            "privileged_group": self.group_names.get(self.group_rates.privileged_code),
            "unprivileged_group": self.group_names.get(self.group_rates.unprivileged_code),
        }
        for cls in (0, 1):
            for k, v in self.per_class[cls].items():
                rec[f"class{cls}_{k}"] = v
        for code, gs in sorted(self.group_rates.per_group.items()):
            name = self.group_names.get(code, str(code))
            for k, v in asdict(gs).items():
                rec[f"group[{name}]_{k}"] = v
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in rec.items()}


def fairness_report(y_true, y_pred, groups, privileged_code: int = 0, unprivileged_code: int | None = None,
                    group_names: dict[int, str] | None = None, bi_kind: str = "mean_abs") -> FairnessReport:
    rates = group_rates(y_true, y_pred, groups, privileged_code, unprivileged_code)
    cr = classification_report(y_true, y_pred)
    spd = statistical_parity_difference(rates)
    di = disparate_impact(rates)
    eod = equal_opportunity_difference(rates)
    emod = equal_misopportunity_difference(rates)
    bi = bias_index(spd, di, eod, emod, bi_kind)
    fs = NAN if math.isnan(bi) else fairness_score(bi)
    return FairnessReport(
        accuracy=cr["accuracy"],
        precision=cr[1]["precision"],
        recall=cr[1]["recall"],
        f1=cr[1]["f1"],
        per_class={0: cr[0], 1: cr[1]},
        spd=spd, di=di, eod=eod, emod=emod,
        bias_index=bi, fairness_score=fs,
        group_rates=rates,
        group_names=dict(group_names or {g: str(g) for g in rates.per_group}),
    )
