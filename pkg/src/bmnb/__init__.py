"""Fairness-aware Gaussian Naive Bayes (BMNB): blended group/global likelihoods
plus group-specific threshold calibration, with a group-fairness metric suite."""
from .blended import AlphaSelection, BlendedModel, select_alpha, train_blended
from .data import Dataset, DatasetSchema, builtin_schema, load_dataset, stratified_split
from .experiment import ExperimentConfig, RunResult, ablation, alpha_sweep, prepare, run_experiment, run_variant
from .gaussian_nb import GaussianNB, train_gnb
from .preprocess import apply_plan, fit_plan, smote_enn
from .metrics import bias_index, fairness_report, fairness_score, group_rates
from .thresholds import ThresholdPolicy, apply_policy, calibrate_thresholds, overall_positive_rate

__version__ = "0.1.0"
