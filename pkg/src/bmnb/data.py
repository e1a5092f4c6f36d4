"""Group-annotated tabular datasets: schemas, CSV loading, stratified splits."""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import math
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import ParseError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_FILTER_OPS = {
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
    "==": operator.eq,
    "!=": operator.ne,
}


@dataclass(frozen=True)
class RowFilter:
    """Keep a row only if ``row[column] <op> value`` holds.

    Comparisons are numeric when both sides parse as floats; otherwise the raw
    strings are compared. A row whose cell cannot be compared numerically
    under an ordering operator is dropped.
    """

    column: str
    op: str
    value: str

    def keep(self, token: str) -> bool:
        fn = _FILTER_OPS[self.op]
        try:
            return fn(float(token), float(self.value))
        except ValueError:
            if self.op in ("==", "!="):
                return fn(token, self.value)
            return False

    @classmethod
    def parse(cls, text: str) -> "RowFilter":
        for op in ("<=", ">=", "==", "!=", "<", ">"):
            if op in text:
                col, val = text.split(op, 1)
                return cls(col.strip(), op, val.strip())
        raise SchemaError(f"cannot parse filter {text!r}")


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    target_column: str
    positive_tokens: tuple[str, ...]
    sensitive_column: str
    privileged: str
    unprivileged: tuple[str, ...]
    numeric_columns: tuple[str, ...] = ()
    categorical_columns: tuple[str, ...] = ()
    missing_markers: tuple[str, ...] = ("?", "")
    group_names: dict[str, str] = field(default_factory=dict)
    # "error": unknown sensitive tokens abort loading; "drop": such rows are skipped
    other_groups: str = "error"
    filters: tuple[RowFilter, ...] = ()
    delimiter: str = ","

    def __post_init__(self):
        if not self.unprivileged:
            raise SchemaError(f"schema {self.name}: at least one unprivileged group required")
        if self.privileged in self.unprivileged:
            raise SchemaError(f"schema {self.name}: {self.privileged!r} is both privileged and unprivileged")
        features = set(self.numeric_columns) | set(self.categorical_columns)
        if not features:
            raise SchemaError(f"schema {self.name}: no feature columns")
        overlap = set(self.numeric_columns) & set(self.categorical_columns)
        if overlap:
            raise SchemaError(f"schema {self.name}: columns both numeric and categorical: {sorted(overlap)}")
        if self.target_column in features:
            raise SchemaError(f"schema {self.name}: target column {self.target_column!r} listed as a feature")
        if self.other_groups not in ("error", "drop"):
            raise SchemaError(f"schema {self.name}: other_groups must be 'error' or 'drop'")

    @property
    def feature_columns(self) -> tuple[str, ...]:
        return self.numeric_columns + self.categorical_columns

    @property
    def group_tokens(self) -> tuple[str, ...]:
        """Sensitive tokens in code order: privileged is code 0."""
        return (self.privileged,) + self.unprivileged

    def group_table(self) -> dict[int, str]:
        return {code: self.group_names.get(tok, tok) for code, tok in enumerate(self.group_tokens)}


def _split_list(value: str, sep: str = ",") -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(sep)) if value.strip() else ()


def parse_schema(text: str) -> DatasetSchema:
    """Parse the INI-style ``[schema]`` record used by the built-in schema files."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
        sec = cp["schema"]
    except (configparser.Error, KeyError) as exc:
        raise SchemaError(f"bad schema file: {exc}") from exc
    required = ("name", "target_column", "positive_tokens", "sensitive_column", "privileged", "unprivileged")
    missing = [k for k in required if k not in sec]
    if missing:
        raise SchemaError(f"schema file missing keys: {missing}")
    names = {}
    for pair in _split_list(sec.get("group_names", "")):
        tok, _, label = pair.partition(":")
        names[tok.strip()] = label.strip()
    delimiter = sec.get("delimiter", ",")
    if delimiter == "\\t":
        delimiter = "\t"
    return DatasetSchema(
        name=sec["name"],
        target_column=sec["target_column"],
        positive_tokens=_split_list(sec["positive_tokens"]),
        sensitive_column=sec["sensitive_column"],
        privileged=sec["privileged"].strip(),
        unprivileged=_split_list(sec["unprivileged"]),
        numeric_columns=_split_list(sec.get("numeric_columns", "")),
        categorical_columns=_split_list(sec.get("categorical_columns", "")),
        # keep empty entries here: "?, " declares both "?" and the empty cell
        missing_markers=tuple(p.strip() for p in sec.get("missing_markers", "?,").split(",")),
        group_names=names,
        other_groups=sec.get("other_groups", "error"),
        filters=tuple(RowFilter.parse(f) for f in _split_list(sec.get("filters", ""), ";")),
        delimiter=delimiter,
    )


BUILTIN_SCHEMAS = ("adult", "compas", "framingham")


def builtin_schema(name: str) -> DatasetSchema:
    if name not in BUILTIN_SCHEMAS:
        raise SchemaError(f"unknown built-in schema {name!r}; choose from {BUILTIN_SCHEMAS}")
    text = resources.files("bmnb.schemas").joinpath(f"{name}.ini").read_text()
    return parse_schema(text)


def load_schema(path: str | Path) -> DatasetSchema:
    return parse_schema(Path(path).read_text())


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with binary labels and a sensitive group code per row.

    Freshly loaded data keeps raw cells in an object array (floats with NaN
    for missing numeric cells, strings or None for categoricals). After
    preprocessing ``features`` is a finite float64 matrix and every column
    kind is numeric.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    group_names: dict[int, str]
    schema_name: str = "custom"
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.labels)
        if self.features.ndim != 2 or self.features.shape[0] != n or len(self.groups) != n:
            raise ValueError("features, labels and groups must share a row count")
        if self.features.shape[1] != len(self.feature_names) or len(self.feature_kinds) != len(self.feature_names):
            raise ValueError("feature_names/feature_kinds do not match the feature matrix")
        if self.features.shape[1] < 1:
            raise ValueError("dataset needs at least one feature")
        if n and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        if n and not np.isin(self.groups, list(self.group_names)).all():
            raise ValueError("group codes outside the group table")
        if self.row_ids is None:
            object.__setattr__(self, "row_ids", np.arange(n))
        for name in ("features", "labels", "groups", "row_ids"):
            _frozen(getattr(self, name))

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_numeric(self) -> bool:
        return all(k == NUMERIC for k in self.feature_kinds) and self.features.dtype == np.float64

    def take(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            groups=self.groups[idx].copy(),
            feature_names=self.feature_names,
            feature_kinds=self.feature_kinds,
            group_names=self.group_names,
            schema_name=self.schema_name,
            row_ids=self.row_ids[idx].copy(),
        )

    def with_features(self, features, names, kinds) -> "Dataset":
        return Dataset(
            features=features,
            labels=self.labels.copy(),
            groups=self.groups.copy(),
            feature_names=tuple(names),
            feature_kinds=tuple(kinds),
            group_names=self.group_names,
            schema_name=self.schema_name,
            row_ids=self.row_ids.copy(),
        )

    def missing_mask(self) -> np.ndarray:
        out = np.zeros(self.features.shape, dtype=bool)
        for j, kind in enumerate(self.feature_kinds):
            col = self.features[:, j]
            if kind == NUMERIC:
                out[:, j] = np.isnan(col.astype(float))
            else:
                out[:, j] = np.array([v is None for v in col], dtype=bool)
        return out

    def row_hash(self) -> str:
        """Digest of the sorted source-row ids (identifies a partition)."""
        ids = np.sort(np.asarray(self.row_ids, dtype=np.int64))
        return hashlib.sha256(ids.tobytes()).hexdigest()[:16]


def load_dataset(source: BinaryIO | bytes | str | Path, schema: DatasetSchema) -> Dataset:
    """Parse delimited UTF-8 text with a header line into a :class:`Dataset`.

    Rows failing a schema filter, or with a missing target/sensitive cell,
    are dropped. ``row_ids`` hold the 0-based data-row index in the file.
    """
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
    reader = csv.reader(io.StringIO(raw.decode("utf-8-sig")), delimiter=schema.delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty input") from None

    col_index: dict[str, int] = {}
    for i, h in enumerate(header):
        col_index.setdefault(h, i)  # duplicated headers resolve to the first
    needed = (schema.target_column, schema.sensitive_column) + schema.feature_columns
    needed += tuple(f.column for f in schema.filters)
    absent = [c for c in needed if c not in col_index]
    if absent:
        raise SchemaError(f"columns not in header: {absent}")

    missing = set(schema.missing_markers)
    positive = set(schema.positive_tokens)
    codes = {tok: code for code, tok in enumerate(schema.group_tokens)}
    t_idx, s_idx = col_index[schema.target_column], col_index[schema.sensitive_column]
    num_idx = [col_index[c] for c in schema.numeric_columns]
    cat_idx = [col_index[c] for c in schema.categorical_columns]
    filt = [(col_index[f.column], f) for f in schema.filters]

    rows, labels, groups, ids = [], [], [], []
    row_no = -1
    for row_no, cells in enumerate(reader):
        if not cells or (len(cells) == 1 and not cells[0].strip()):
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(cells)}", row=row_no)
        cells = [c.strip() for c in cells]
        if not all(f.keep(cells[i]) for i, f in filt):
            continue
        target, sens = cells[t_idx], cells[s_idx]
        if target in missing or sens in missing:
            continue
        if sens not in codes:
            if schema.other_groups == "drop":
                continue
            raise SchemaError(f"row {row_no}: unknown value {sens!r} in sensitive column {schema.sensitive_column!r}")
        feats: list = []
        for i in num_idx:
            tok = cells[i]
            if tok in missing:
                feats.append(math.nan)
                continue
            try:
                val = float(tok)
            except ValueError:
                raise ParseError(f"non-numeric value {tok!r} in column {header[i]!r}", row=row_no) from None
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {tok!r} in column {header[i]!r}", row=row_no)
            feats.append(val)
        for i in cat_idx:
            tok = cells[i]
            feats.append(None if tok in missing else tok)
        rows.append(feats)
        labels.append(1 if target in positive else 0)
        groups.append(codes[sens])
        ids.append(row_no)

    width = len(schema.feature_columns)
    features = np.empty((len(rows), width), dtype=object)
    for r, feats in enumerate(rows):
        features[r, :] = feats
    kinds = (NUMERIC,) * len(num_idx) + (CATEGORICAL,) * len(cat_idx)
    return Dataset(
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        groups=np.asarray(groups, dtype=np.int64),
        feature_names=schema.feature_columns,
        feature_kinds=kinds,
        group_names=schema.group_table(),
        schema_name=schema.name,
        row_ids=np.asarray(ids, dtype=np.int64),
    )


def from_arrays(X, y, groups, feature_names: Sequence[str] | None = None,
                group_names: dict[int, str] | None = None, schema_name: str = "custom") -> Dataset:
    """Wrap numeric arrays as a Dataset (all columns numeric)."""
    X = np.array(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    groups = np.array(groups, dtype=np.int64)
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(X.shape[1])]
    if group_names is None:
        group_names = {int(g): str(g) for g in np.unique(groups)}
    return Dataset(
        features=X,
        labels=np.array(y, dtype=np.int64),
        groups=groups,
        feature_names=tuple(feature_names),
        feature_kinds=(NUMERIC,) * X.shape[1],
        group_names=dict(group_names),
        schema_name=schema_name,
    )


def strata(d: Dataset) -> dict[tuple[int, int], np.ndarray]:
    """Row indices of every (label, group) stratum, in row order."""
    out = {}
    for key in sorted(set(zip(d.labels.tolist(), d.groups.tolist()))):
        out[key] = np.flatnonzero((d.labels == key[0]) & (d.groups == key[1]))
    return out


def stratified_split(d: Dataset, test_fraction: float = 0.2, seed: int = 42) -> tuple[Dataset, Dataset]:
    """Split each (label, group) stratum, shuffled with a PCG64 generator.

    Each stratum contributes ``floor(test_fraction * size + 0.5)`` test rows.
    Both outputs keep the original row order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for (label, group), idx in strata(d).items():
        if len(idx) < 2:
            raise ValueError(f"stratum (label={label}, group={d.group_names[group]}) has {len(idx)} row; need >= 2")
        n_test = int(math.floor(test_fraction * len(idx) + 0.5))
        test_idx.append(rng.permutation(idx)[:n_test])
    test_mask = np.zeros(len(d), dtype=bool)
    if test_idx:
        test_mask[np.concatenate(test_idx)] = True
    return d.take(np.flatnonzero(~test_mask)), d.take(np.flatnonzero(test_mask))


def stratified_folds(d: Dataset, folds: int, seed: int) -> list[np.ndarray]:
    """Assign rows to ``folds`` held-out index sets, stratified by (label, group)."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    offset = 0
    for (label, group), idx in strata(d).items():
        if len(idx) < folds:
            raise ValueError(
                f"stratum (label={label}, group={d.group_names[group]}) has {len(idx)} rows; cannot form {folds} folds"
            )
        for i, row in enumerate(rng.permutation(idx)):
            # rotate the starting fold so remainders do not pile into fold 0
            buckets[(i + offset) % folds].append(int(row))
        offset += len(idx)
    return [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]


def concat(parts: Iterable[Dataset]) -> Dataset:
    parts = list(parts)
    first = parts[0]
    return Dataset(
        features=np.concatenate([p.features for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        groups=np.concatenate([p.groups for p in parts]),
        feature_names=first.feature_names,
        feature_kinds=first.feature_kinds,
        group_names=first.group_names,
        schema_name=first.schema_name,
        row_ids=np.concatenate([p.row_ids for p in parts]),
    )


def make_heterogeneous(n: int = 2000, seed: int = 0, minority_share: float = 0.3,
                       n_noise: int = 2, minority_positive_rate: float = 0.7) -> Dataset:
    """Synthetic two-group data where a pooled model is wrong for the minority.

    In group 0 the label is driven by ``x0 > 0``, in group 1 by ``x0 < 0``.
    ``x1`` tracks the label in group 0 only; group 1 sits at group 0's negative
    mode regardless of label, so the pooled model pushes minority rows towards
    class 0 although most of them are positive.
    """
    rng = np.random.default_rng(seed)
    g = (rng.random(n) < minority_share).astype(np.int64)
    y = (rng.random(n) < np.where(g == 0, 0.5, minority_positive_rate)).astype(np.int64)
    sign = np.where(g == 0, 1.0, -1.0)
    x0 = sign * np.where(y == 1, 1.0, -1.0) + rng.normal(0, 1, n)
    x1 = np.where(g == 0, 1.5 * np.where(y == 1, 1.0, -1.0), -1.5) + rng.normal(0, 1, n)
    cols = [x0, x1] + [rng.normal(0, 1, n) for _ in range(n_noise)]
    return from_arrays(np.column_stack(cols), y, g, group_names={0: "majority", 1: "minority"},
                       schema_name="synthetic")
