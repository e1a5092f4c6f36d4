"""Command line interface: ``bmnb run|sweep|ablate|compare|select-alpha``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import report
from .blended import select_alpha
from .errors import ConfigError, DataError, PipelineError
from .experiment import (THRESHOLD_MODES, VARIANTS, ExperimentConfig, ablation, alpha_sweep, config_from_mapping,
                         load_config, prepare, run_variant, tradeoff_constant)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PIPELINE = 0, 1, 2, 3

# flag dest -> ExperimentConfig field
_FLAG_FIELDS = {
    "dataset": "dataset", "data": "data_path", "schema_file": "schema_file", "synthetic_n": "synthetic_n",
    "test_fraction": "test_fraction", "seed": "seed", "scale_range": "scale_range",
    "resample": "resample", "k_smote": "k_smote", "k_enn": "k_enn",
    "epsilon": "epsilon", "min_support": "min_support", "priors": "priors", "alpha": "alpha",
    "alpha_grid": "alpha_grid", "lam": "lam", "folds": "folds",
    "threshold_mode": "threshold_mode", "target_rate": "target_rate",
    "calibration_split": "calibration_split", "fixed_tau": "fixed_tau",
    "variant": "variant", "out": "report_dir",
}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key/value config file (INI sections)")
    p.add_argument("--dataset", help="adult | compas | framingham | synthetic")
    p.add_argument("--data", help="path to the delimited data file")
    p.add_argument("--schema-file", help="schema override file")
    p.add_argument("--synthetic-n", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--seed", type=int, help="global seed (default 42)")
    p.add_argument("--scale-range", type=_floats)
    p.add_argument("--resample", action=argparse.BooleanOptionalAction, default=None,
                   help="SMOTE+ENN on the training split")
    p.add_argument("--k-smote", type=int)
    p.add_argument("--k-enn", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--min-support", type=int)
    p.add_argument("--priors", choices=("global", "empirical"))
    p.add_argument("--alpha", type=float, help="fixed alpha (skips grid selection)")
    p.add_argument("--alpha-grid", type=_floats)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--folds", type=int)
    p.add_argument("--threshold-mode", choices=THRESHOLD_MODES)
    p.add_argument("--target-rate", type=float)
    p.add_argument("--calibration-split", choices=("train", "eval"))
    p.add_argument("--fixed-tau", type=float)
    p.add_argument("--out", help="report directory (default ./reports)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmnb", description="Blended-likelihood fair Naive Bayes experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a single variant")
    run.add_argument("--variant", choices=VARIANTS)
    sweep = sub.add_parser("sweep", help="accuracy and fairness score over an alpha grid")
    sweep.add_argument("--variant", choices=("blended_only", "full_bmnb"))
    sub.add_parser("ablate", help="blended only / threshold only / full BMNB on one split")
    compare = sub.add_parser("compare", help="baseline NB vs full BMNB table")
    compare.add_argument("--no-reference", action="store_true",
                         help="omit the transcribed Fairness Certification column")
    sub.add_parser("select-alpha", help="cross-validated alpha selection only")
    for p in sub.choices.values():
        _common(p)
    return parser


def config_from_args(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[name] = value
    return config_from_mapping(overrides, base)


def _emit(out_dir, stem, rendered) -> None:
    sys.stdout.write(rendered["text"])
    for path in report.write(out_dir, stem, rendered):
        print(f"wrote {path}")


def _dispatch(args) -> None:
    c = config_from_args(args)
    if args.command == "run":
        p = prepare(c)
        res = run_variant(p)
        print(f"# {c.dataset}/{res.variant} seed={c.seed} alpha={res.alpha} ({res.duration:.2f}s)")
        _emit(c.report_dir, f"{c.dataset}_run_{res.variant}", report.compare_report([res]))
    elif args.command == "sweep":
        rows, _ = alpha_sweep(c)
        rendered = report.sweep_report(rows, tradeoff_constant(rows), c.snapshot())
        _emit(c.report_dir, f"{c.dataset}_sweep_{c.variant}", rendered)
    elif args.command == "ablate":
        _emit(c.report_dir, f"{c.dataset}_ablation", report.ablation_report(ablation(c)))
    elif args.command == "compare":
        p = prepare(c)
        results = [run_variant(p, "baseline"), run_variant(p, "full_bmnb")]
        _emit(c.report_dir, f"{c.dataset}_compare",
              report.compare_report(results, reference=not args.no_reference))
    elif args.command == "select-alpha":
        p = prepare(c)
        mode = "dp" if c.threshold_mode == "dp" else None
        sel = select_alpha(p.fit_set, c.alpha_grid, c.lam, c.folds, c.seed, c.epsilon, c.min_support,
                           c.priors, mode, p.privileged_code)
        rows = [[report.fmt(r["alpha"], 2), report.fmt(r["cv_accuracy"]), report.fmt(r["cv_fairness"]),
                 report.fmt(r["J"])] for r in sel.rows()]
        text = (f"# seed: {c.seed}  dataset: {c.dataset}  lambda: {c.lam}  folds: {c.folds}\n"
                + report.align(["alpha", "CV Acc", "CV FS", "J"], rows)
                + f"chosen alpha: {sel.chosen_alpha}\n")
        record = {"seed": c.seed, "dataset": c.dataset, "lambda": c.lam, "folds": c.folds,
                  "chosen_alpha": sel.chosen_alpha, "scores": sel.rows()}
        _emit(c.report_dir, f"{c.dataset}_select_alpha", {"json": record, "text": text})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (PipelineError, ValueError) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
