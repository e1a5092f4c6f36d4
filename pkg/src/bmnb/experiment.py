"""Experiment runner: baseline vs BMNB, alpha sweeps, ablations."""
from __future__ import annotations

import configparser
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import data as data_mod
from .blended import DEFAULT_GRID, AlphaSelection, BlendedModel, resolve_priors, select_alpha, train_blended
from .data import Dataset
from .errors import ConfigError, DataError, PipelineError
from .gaussian_nb import train_gnb
from .metrics import FairnessReport, fairness_report
from .preprocess import ResampleParams, apply_plan, fit_plan, smote_enn
from .thresholds import (ThresholdPolicy, apply_policy, calibrate_equal_opportunity, calibrate_thresholds,
                         fixed_policy, overall_positive_rate)

log = logging.getLogger(__name__)

VARIANTS = ("baseline", "blended_only", "threshold_only", "full_bmnb")
ABLATION_VARIANTS = ("blended_only", "threshold_only", "full_bmnb")
THRESHOLD_MODES = ("dp", "eo", "fixed", "none")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "adult"
    data_path: str | None = None
    schema_file: str | None = None
    synthetic_n: int = 2000
    test_fraction: float = 0.2
    seed: int = 42
    scale_range: tuple[float, float] = (0.0, 1.0)
    resample: bool = True
    k_smote: int = 5
    k_enn: int = 3
    epsilon: float = 1e-9
    min_support: int = 30
    priors: str = "global"
    alpha: float | None = None
    alpha_grid: tuple[float, ...] = DEFAULT_GRID
    lam: float = 0.5
    folds: int = 5
    threshold_mode: str = "dp"
    target_rate: float | None = None  # None: the model's own rate at probability 0.5
    calibration_split: str = "train"
    fixed_tau: float = 0.5
    variant: str = "full_bmnb"
    report_dir: str = "reports"

    def __post_init__(self):
        problems = []
        if self.variant not in VARIANTS:
            problems.append(f"variant must be one of {VARIANTS}")
        if self.threshold_mode not in THRESHOLD_MODES:
            problems.append(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.calibration_split not in ("train", "eval"):
            problems.append("calibration_split must be 'train' or 'eval'")
        if not 0.0 < self.test_fraction < 1.0:
            problems.append("test_fraction must lie in (0, 1)")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            problems.append("alpha must lie in [0, 1]")
        if not self.alpha_grid or any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            problems.append("alpha_grid must be a non-empty list of values in [0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            problems.append("lambda must lie in [0, 1]")
        if self.folds < 2:
            problems.append("folds must be >= 2")
        if self.epsilon <= 0:
            problems.append("epsilon must be > 0")
        if self.k_smote < 1 or self.k_enn < 1:
            problems.append("k_smote and k_enn must be >= 1")
        if self.priors not in ("global", "empirical"):
            problems.append("priors must be 'global' or 'empirical'")
        if self.target_rate is not None and not 0.0 <= self.target_rate <= 1.0:
            problems.append("target_rate must lie in [0, 1]")
        if problems:
            raise ConfigError("; ".join(problems))

    def snapshot(self) -> dict:
        rec = asdict(self)
        rec["scale_range"] = list(self.scale_range)
        rec["alpha_grid"] = list(self.alpha_grid)
        return rec


_SECTIONS = {
    "dataset": ("dataset", "data_path", "schema_file", "synthetic_n"),
    "split": ("test_fraction", "seed"),
    "preprocess": ("scale_range", "resample", "k_smote", "k_enn"),
    "model": ("epsilon", "min_support", "priors", "alpha", "alpha_grid", "lam", "folds"),
    "threshold": ("threshold_mode", "target_rate", "calibration_split", "fixed_tau"),
    "run": ("variant",),
    "output": ("report_dir",),
}
_ALIASES = {"name": "dataset", "path": "data_path", "lambda": "lam", "mode": "threshold_mode"}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in ("data_path", "schema_file", "alpha", "target_rate") and raw.lower() in ("", "none", "model"):
        return None
    if name in ("synthetic_n", "seed", "k_smote", "k_enn", "min_support", "folds"):
        return int(raw)
    if name in ("test_fraction", "epsilon", "lam", "alpha", "target_rate", "fixed_tau"):
        return float(raw)
    if name == "resample":
        return raw.lower() in ("1", "true", "yes", "on")
    if name in ("alpha_grid", "scale_range"):
        return tuple(float(x) for x in raw.replace(",", " ").split())
    return raw


def config_from_mapping(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    parsed = {}
    for key, raw in values.items():
        name = _ALIASES.get(key, key).replace("-", "_")
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            parsed[name] = _coerce(name, raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return replace(base or ExperimentConfig(), **parsed)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an INI-style config; keys may sit in any known section."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        values.update(cp[section])
    return config_from_mapping(values)


def default_data_path(name: str) -> Path:
    root = Path(os.environ.get("BMNB_DATA_DIR", "data"))
    return root / f"{name}.csv"


def load_for_config(c: ExperimentConfig) -> Dataset:
    if c.dataset == "synthetic":
        return data_mod.make_heterogeneous(n=c.synthetic_n, seed=c.seed)
    try:
        if c.schema_file:
            schema = data_mod.load_schema(c.schema_file)
        else:
            schema = data_mod.builtin_schema(c.dataset)
    except OSError as exc:
        raise DataError(f"cannot read schema file: {exc}") from exc
    path = Path(c.data_path) if c.data_path else default_data_path(c.dataset)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    return data_mod.load_dataset(path, schema)


@dataclass(eq=False)
class Prepared:
    """Split and preprocessed data shared by every variant of one config."""

    config: ExperimentConfig
    train: Dataset          # preprocessed training split, before resampling
    fit_set: Dataset        # what models are trained on (resampled if enabled)
    test: Dataset
    group_names: dict[int, str]

    @property
    def privileged_code(self) -> int:
        return 0


def prepare(c: ExperimentConfig) -> Prepared:
    d = load_for_config(c)
    try:
        raw_train, raw_test = data_mod.stratified_split(d, c.test_fraction, c.seed)
    except ValueError as exc:
        raise PipelineError("split", str(exc)) from exc
    try:
        resample = ResampleParams(c.k_smote, c.k_enn, c.seed) if c.resample else None
        plan = fit_plan(raw_train, c.scale_range, resample)
        train, test = apply_plan(plan, raw_train), apply_plan(plan, raw_test)
    except ValueError as exc:
        raise PipelineError("preprocess", str(exc)) from exc
    fit_set = train
    if c.resample:
        try:
            fit_set = smote_enn(train, c.k_smote, c.k_enn, c.seed)
        except ValueError as exc:
            raise PipelineError("resample", str(exc)) from exc
    return Prepared(c, train, fit_set, test, dict(d.group_names))


@dataclass(eq=False)
class RunResult:
    config: dict
    variant: str
    alpha: float | None
    alpha_selection: AlphaSelection | None
    policy: ThresholdPolicy | None
    report: FairnessReport
    calibration: dict | None
    test_hash: str
    train_hash: str
    sizes: dict
    predictions: np.ndarray = field(repr=False)
    duration: float = 0.0

    def to_dict(self) -> dict:
        """Deterministic record; wall-clock duration is deliberately excluded."""
        return {
            "config": self.config,
            "variant": self.variant,
            "alpha": self.alpha,
            "alpha_selection": None if self.alpha_selection is None else {
                "grid": list(self.alpha_selection.grid),
                "lambda": self.alpha_selection.lam,
                "folds": self.alpha_selection.folds,
                "chosen_alpha": self.alpha_selection.chosen_alpha,
                "scores": self.alpha_selection.rows(),
            },
            "policy": None if self.policy is None else {
                **self.policy.to_dict(),
                "probability_thresholds": {str(g): t for g, t in sorted(self.policy.probability_thresholds().items())},
            },
            "metrics": self.report.to_dict(),
            "calibration": self.calibration,
            "test_hash": self.test_hash,
            "train_hash": self.train_hash,
            "sizes": self.sizes,
        }


def _uses_blend(variant: str) -> bool:
    return variant in ("blended_only", "full_bmnb")


def _uses_thresholds(variant: str, c: ExperimentConfig) -> bool:
    return variant in ("threshold_only", "full_bmnb") and c.threshold_mode != "none"


def _calibration_rows(p: Prepared) -> Dataset:
    return p.train if p.config.calibration_split == "train" else p.test


def _fit_policy(c: ExperimentConfig, scores_cal, cal: Dataset) -> ThresholdPolicy:
    if c.threshold_mode == "fixed":
        tau = math.log(c.fixed_tau) - math.log1p(-c.fixed_tau) if 0 < c.fixed_tau < 1 else (
            math.inf if c.fixed_tau >= 1 else -math.inf)
        return fixed_policy(tau, scale="logit")
    if c.threshold_mode == "dp":
        target = c.target_rate if c.target_rate is not None else overall_positive_rate(scores_cal, 0.0)
        return calibrate_thresholds(scores_cal, cal.groups, target, scale="logit")
    # equal opportunity: match every group's TPR to the model's pooled TPR at 0.5
    if c.target_rate is not None:
        target = c.target_rate
    else:
        pos = cal.labels == 1
        target = overall_positive_rate(scores_cal[pos], 0.0) if pos.any() else 0.0
    return calibrate_equal_opportunity(scores_cal, cal.groups, cal.labels, target, scale="logit")


def _calibration_summary(policy: ThresholdPolicy, scores_cal, cal: Dataset, names) -> dict:
    pred = apply_policy(policy, scores_cal, cal.groups)
    out = {"split": "calibration", "target_rate": policy.target_rate, "groups": {}}
    for g in np.unique(cal.groups):
        m = cal.groups == g
        rows = m if policy.mode != "eo" else m & (cal.labels == 1)
        out["groups"][names.get(int(g), str(g))] = {
            "n": int(rows.sum()),
            "positive_rate": float(pred[rows].mean()) if rows.any() else None,
        }
    return out


def run_variant(p: Prepared, variant: str | None = None, alpha: float | None = None) -> RunResult:
    """Run one variant on already prepared data.

    ``alpha`` overrides both the config's fixed alpha and grid selection.
    """
    c = p.config
    variant = variant or c.variant
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}")
    start = time.perf_counter()
    fit, test = p.fit_set, p.test
    selection = None
    try:
        if _uses_blend(variant):
            model = train_blended(fit, c.epsilon, c.min_support, c.priors)
            chosen = alpha if alpha is not None else c.alpha
            if chosen is None:
                cv_mode = "dp" if _uses_thresholds(variant, c) else None
                selection = select_alpha(fit, c.alpha_grid, c.lam, c.folds, c.seed, c.epsilon,
                                         c.min_support, c.priors, cv_mode, p.privileged_code)
                chosen = selection.chosen_alpha
            model = model.with_alpha(chosen)
            score_fn = model.positive_logit
            argmax_fn = model.predict
        else:
            chosen = None
            gnb = train_gnb(fit.features, fit.labels, c.epsilon, resolve_priors(fit.labels, c.priors))

            def score_fn(X, groups):
                lp = gnb.predict_log_proba(X)
                return lp[:, 1] - lp[:, 0]

            def argmax_fn(X, groups):
                return gnb.predict(X)
    except ValueError as exc:
        raise PipelineError("train", str(exc)) from exc

    policy = calibration = None
    try:
        if _uses_thresholds(variant, c):
            cal = _calibration_rows(p)
            s_cal = score_fn(cal.features, cal.groups)
            policy = _fit_policy(c, s_cal, cal)
            calibration = _calibration_summary(policy, s_cal, cal, p.group_names)
            pred = apply_policy(policy, score_fn(test.features, test.groups), test.groups)
        else:
            pred = argmax_fn(test.features, test.groups)
        report = fairness_report(test.labels, pred, test.groups, p.privileged_code, group_names=p.group_names)
    except ValueError as exc:
        raise PipelineError("evaluate", str(exc)) from exc

    duration = time.perf_counter() - start
    log.info("%s/%s alpha=%s done in %.2fs", c.dataset, variant, chosen, duration)
    return RunResult(
        config={**c.snapshot(), "variant": variant},
        variant=variant,
        alpha=chosen,
        alpha_selection=selection,
        policy=policy,
        report=report,
        calibration=calibration,
        test_hash=test.row_hash(),
        train_hash=p.train.row_hash(),
        sizes={"train": len(p.train), "fit": len(p.fit_set), "test": len(test)},
        predictions=pred,
        duration=duration,
    )


def run_experiment(c: ExperimentConfig) -> RunResult:
    start = time.perf_counter()
    res = run_variant(prepare(c))
    res.duration = time.perf_counter() - start
    return res


def alpha_sweep(c: ExperimentConfig, grid=None, prepared: Prepared | None = None):
    """One run per alpha on shared data; returns (rows, results).

    ``rows`` are ``(alpha, accuracy, fairness_score)`` tuples in grid order.
    """
    if c.variant not in ("blended_only", "full_bmnb"):
        raise ConfigError("alpha sweeps need variant blended_only or full_bmnb")
    grid = tuple(c.alpha_grid if grid is None else grid)
    p = prepared or prepare(c)
    results = [run_variant(p, c.variant, alpha=a) for a in grid]
    rows = [(a, r.report.accuracy, r.report.fairness_score) for a, r in zip(grid, results)]
    return rows, results


def ablation(c: ExperimentConfig, prepared: Prepared | None = None) -> list[RunResult]:
    p = prepared or prepare(c)
    return [run_variant(p, v) for v in ABLATION_VARIANTS]


def tradeoff_constant(sweep) -> dict:
    """Product fairness x accuracy per sweep point, with its dispersion.

    A diagnostic only: nothing here assumes the product is constant.
    """
    if not sweep:
        raise ValueError("empty sweep")
    products = [(a, fs * acc) for a, acc, fs in sweep]
    values = np.array([k for _, k in products], dtype=np.float64)
    finite = values[np.isfinite(values)]
    return {
        "products": products,
        "mean": float(finite.mean()) if len(finite) else float("nan"),
        "std": float(finite.std()) if len(finite) else float("nan"),
        "spread": float(finite.max() - finite.min()) if len(finite) else float("nan"),
    }
