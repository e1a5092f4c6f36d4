"""Imputation, min-max scaling, one-hot encoding, and SMOTE+ENN resampling."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.neighbors import NearestNeighbors

from .data import CATEGORICAL, NUMERIC, Dataset


@dataclass(frozen=True)
class ResampleParams:
    k_smote: int = 5
    k_enn: int = 3
    seed: int = 42


@dataclass(frozen=True)
class ColumnStats:
    kind: str
    minimum: float = float("nan")
    maximum: float = float("nan")
    median: float = float("nan")
    mode: str | None = None
    vocabulary: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        return self.kind == NUMERIC and self.maximum == self.minimum


@dataclass(frozen=True)
class PreprocessPlan:
    """Statistics learned from training rows; applying the plan never refits."""

    input_names: tuple[str, ...]
    stats: dict[str, ColumnStats]
    scale_range: tuple[float, float] = (0.0, 1.0)
    resample: ResampleParams | None = None
    output_names: tuple[str, ...] = field(default=())

    def describe(self) -> dict:
        out = {}
        for name in self.input_names:
            s = self.stats[name]
            if s.kind == NUMERIC:
                out[name] = {"min": s.minimum, "max": s.maximum, "median": s.median}
            else:
                out[name] = {"mode": s.mode, "vocabulary": list(s.vocabulary)}
        return out


def fit_plan(train: Dataset, scale_range=(0.0, 1.0), resample: ResampleParams | None = None) -> PreprocessPlan:
    if len(train) == 0:
        raise ValueError("cannot fit a preprocessing plan on an empty dataset")
    lo, hi = map(float, scale_range)
    if not lo < hi:
        raise ValueError("scale_range must satisfy lo < hi")
    missing = train.missing_mask()
    stats: dict[str, ColumnStats] = {}
    out_names: list[str] = []
    for j, (name, kind) in enumerate(zip(train.feature_names, train.feature_kinds)):
        observed = train.features[~missing[:, j], j]
        if len(observed) == 0:
            raise ValueError(f"column {name!r} has no observed values in the training data")
        if kind == NUMERIC:
            vals = observed.astype(np.float64)
            stats[name] = ColumnStats(kind, float(vals.min()), float(vals.max()), float(np.median(vals)))
            out_names.append(name)
        else:
            counts = Counter(observed.tolist())
            vocab = tuple(sorted(counts))
            # most frequent; ties go to the lexicographically first category
            mode = min(counts, key=lambda c: (-counts[c], c))
            stats[name] = ColumnStats(kind, mode=mode, vocabulary=vocab)
            out_names.extend(f"{name}={v}" for v in vocab)
    return PreprocessPlan(tuple(train.feature_names), stats, (lo, hi), resample, tuple(out_names))


def apply_plan(plan: PreprocessPlan, d: Dataset) -> Dataset:
    """Impute, scale numeric columns by the training min/max, one-hot categoricals.

    Values outside the training range are mapped affinely and not clipped;
    unseen categories become an all-zero block.
    """
    if tuple(d.feature_names) != plan.input_names:
        extra = sorted(set(d.feature_names) - set(plan.input_names))
        absent = sorted(set(plan.input_names) - set(d.feature_names))
        raise ValueError(f"column mismatch: unexpected {extra}, missing {absent}, or different order")
    lo, hi = plan.scale_range
    missing = d.missing_mask()
    blocks = []
    for j, name in enumerate(plan.input_names):
        s = plan.stats[name]
        col = d.features[:, j]
        if s.kind == NUMERIC:
            vals = np.where(missing[:, j], s.median, col).astype(np.float64)
            if s.degenerate:
                blocks.append(np.full((len(d), 1), (lo + hi) / 2.0))
            else:
                blocks.append((lo + (vals - s.minimum) / (s.maximum - s.minimum) * (hi - lo))[:, None])
        else:
            vals = np.where(missing[:, j], s.mode, col)
            index = {v: k for k, v in enumerate(s.vocabulary)}
            onehot = np.zeros((len(d), len(s.vocabulary)))
            for r, v in enumerate(vals):
                k = index.get(v)
                if k is not None:
                    onehot[r, k] = 1.0
            blocks.append(onehot)
    X = np.hstack(blocks) if blocks else np.zeros((len(d), 0))
    return d.with_features(X, plan.output_names, (NUMERIC,) * X.shape[1])


def _neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of each row's k nearest other rows (Euclidean)."""
    nn = NearestNeighbors(n_neighbors=k + 1, algorithm="brute").fit(X)
    _, idx = nn.kneighbors(X)
    rows = np.arange(len(X))
    is_self = idx == rows[:, None]
    # among exact duplicates the row itself may not be returned; then drop the farthest
    drop = np.where(is_self.any(axis=1), is_self.argmax(axis=1), k)
    keep = np.ones(idx.shape, dtype=bool)
    keep[rows, drop] = False
    return idx[keep].reshape(len(X), k)


def smote(train: Dataset, k: int = 5, seed: int = 42) -> Dataset:
    """Oversample the minority class until both classes have equal counts.

    Synthetic rows sit on the segment from a minority seed row to one of its k
    same-class nearest neighbours and take the seed row's group code. They are
    appended after the originals, ordered by (seed row, draw), with row id -1.
    """
    if not train.is_numeric:
        raise ValueError("SMOTE needs a fully numeric dataset (apply the preprocessing plan first)")
    counts = np.bincount(train.labels, minlength=2)
    minority = int(np.argmin(counts))
    n_min, n_maj = int(counts[minority]), int(counts[1 - minority])
    if n_min < 2:
        raise ValueError(f"minority class {minority} has {n_min} rows; SMOTE needs at least 2")
    if k > n_min - 1:
        raise ValueError(f"k_smote={k} exceeds the {n_min - 1} available same-class neighbours")
    need = n_maj - n_min
    if need == 0:
        return train

    rng = np.random.default_rng(seed)
    min_rows = np.flatnonzero(train.labels == minority)
    Xm = train.features[min_rows]
    nbrs = _neighbors(Xm, k)
    per_row = np.full(n_min, need // n_min)
    per_row[rng.choice(n_min, size=need % n_min, replace=False)] += 1

    seeds = np.repeat(np.arange(n_min), per_row)
    picks = rng.integers(0, k, size=need)
    gaps = rng.random(need)
    partners = nbrs[seeds, picks]
    synth = Xm[seeds] + gaps[:, None] * (Xm[partners] - Xm[seeds])

    return Dataset(
        features=np.vstack([train.features, synth]),
        labels=np.concatenate([train.labels, np.full(need, minority)]),
        groups=np.concatenate([train.groups, train.groups[min_rows[seeds]]]),
        feature_names=train.feature_names,
        feature_kinds=train.feature_kinds,
        group_names=train.group_names,
        schema_name=train.schema_name,
        row_ids=np.concatenate([train.row_ids, np.full(need, -1)]),
    )


def enn(d: Dataset, k: int = 3) -> Dataset:
    """Edited nearest neighbours: drop rows outvoted by their k neighbours.

    A row is removed when strictly more than half of its neighbours carry the
    other label; an exact tie keeps the row.
    """
    if k < 1:
        raise ValueError("k_enn must be >= 1")
    if k > len(d) - 1:
        raise ValueError(f"k_enn={k} exceeds the {len(d) - 1} available neighbours")
    nbrs = _neighbors(d.features, k)
    disagree = (d.labels[nbrs] != d.labels[:, None]).sum(axis=1)
    keep = 2 * disagree <= k
    return d.take(np.flatnonzero(keep))


def smote_enn(train: Dataset, k_smote: int = 5, k_enn: int = 3, seed: int = 42) -> Dataset:
    return enn(smote(train, k_smote, seed), k_enn)
