import json
import re
from pathlib import Path

import numpy as np
import pytest

from bmnb import report
from bmnb.cli import main
from bmnb.errors import ConfigError, DataError, PipelineError
from bmnb.experiment import (ExperimentConfig, ablation, alpha_sweep, config_from_mapping, load_config, prepare,
                             run_experiment, run_variant, tradeoff_constant)
from bmnb.metrics import FAIRNESS_CERTIFICATION_ADULT


def synth(**kw):
    base = dict(dataset="synthetic", synthetic_n=1200, folds=3)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def prepared():
    return prepare(synth())


def test_defaults_need_only_a_dataset_name():
    c = config_from_mapping({"dataset": "compas"})
    assert (c.seed, c.test_fraction, c.lam, c.folds, c.variant) == (42, 0.2, 0.5, 5, "full_bmnb")


def test_config_file(tmp_path):
    f = tmp_path / "exp.ini"
    f.write_text("[dataset]\nname = synthetic\nsynthetic_n = 500\n[model]\nlambda = 0.8\nalpha_grid = 0, 0.5, 1\n"
                 "[threshold]\nmode = none\ntarget_rate = model\n[split]\nseed = 7\n")
    c = load_config(f)
    assert c.dataset == "synthetic" and c.synthetic_n == 500 and c.lam == 0.8
    assert c.alpha_grid == (0.0, 0.5, 1.0) and c.threshold_mode == "none" and c.target_rate is None and c.seed == 7


@pytest.mark.parametrize("text", ["[model]\nlambda = 2\n", "[model]\nfoo = 1\n", "[bogus]\nx = 1\n",
                                  "[split]\nseed = abc\n", "no section header\n"])
def test_bad_config_files(tmp_path, text):
    f = tmp_path / "bad.ini"
    f.write_text(text)
    with pytest.raises(ConfigError):
        load_config(f)


def test_missing_data_file(tmp_path):
    with pytest.raises(DataError):
        prepare(ExperimentConfig(dataset="adult", data_path=str(tmp_path / "nope.csv")))


def test_stage_tagged_pipeline_error():
    with pytest.raises(PipelineError) as info:
        prepare(synth(synthetic_n=300, k_smote=500))
    assert info.value.stage == "resample"


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "r")
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nlambda = 5\n")
    assert main(["run", "--config", str(bad), "--out", out]) == 1
    assert main(["run", "--dataset", "compas", "--data", str(tmp_path / "none.csv"), "--out", out]) == 2
    assert main(["run", "--dataset", "synthetic", "--synthetic-n", "300", "--k-smote", "500", "--out", out]) == 3
    assert main(["run", "--dataset", "synthetic", "--synthetic-n", "600", "--folds", "3", "--out", out]) == 0
    assert "# seed: 42" in (tmp_path / "r" / "synthetic_run_full_bmnb.txt").read_text()
    capsys.readouterr()


def test_alpha_zero_without_thresholds_is_the_baseline(prepared):
    p = prepare(synth(threshold_mode="none"))
    base = run_variant(p, "baseline")
    full = run_variant(p, "full_bmnb", alpha=0.0)
    np.testing.assert_array_equal(base.predictions, full.predictions)


def test_dp_run_matches_rates_on_calibration_rows(prepared):
    res = run_variant(prepared, "threshold_only")
    n_min = min(g["n"] for g in res.calibration["groups"].values())
    for g in res.calibration["groups"].values():
        assert abs(g["positive_rate"] - res.calibration["target_rate"]) <= 1 / g["n"]
    rates = [g["positive_rate"] for g in res.calibration["groups"].values()]
    assert abs(rates[0] - rates[1]) <= 2 / n_min


def test_variants_record_their_pieces(prepared):
    blended = run_variant(prepared, "blended_only")
    assert blended.policy is None and blended.alpha_selection is not None
    full = run_variant(prepared, "full_bmnb")
    assert full.policy.mode == "dp" and full.alpha in full.alpha_selection.grid
    fixed = run_variant(prepare(synth(threshold_mode="fixed", fixed_tau=0.5)), "threshold_only")
    assert fixed.policy.mode == "fixed"
    eo = run_variant(prepare(synth(threshold_mode="eo")), "full_bmnb", alpha=0.5)
    assert eo.policy.mode == "eo"


def test_single_point_sweep_matches_single_run(prepared):
    rows, results = alpha_sweep(prepared.config, grid=[0.0], prepared=prepared)
    single = run_variant(prepared, "full_bmnb", alpha=0.0)
    assert rows == [(0.0, single.report.accuracy, single.report.fairness_score)]
    assert results[0].to_dict() == single.to_dict()


def test_sweep_needs_a_blended_variant():
    with pytest.raises(ConfigError):
        alpha_sweep(synth(variant="baseline"))


def test_tradeoff_constant_examples():
    t = tradeoff_constant([(0.0, 0.716, 0.9076), (1.0, 0.670, 0.7870)])
    assert [round(k, 4) for _, k in t["products"]] == [0.6498, 0.5273]
    assert t["spread"] == pytest.approx(0.716 * 0.9076 - 0.670 * 0.7870)
    single = tradeoff_constant([(0.5, 0.8, 0.9)])
    assert single["mean"] == pytest.approx(0.72) and single["spread"] == 0.0
    assert tradeoff_constant([(0.5, 0.8, 0.0)])["products"] == [(0.5, 0.0)]
    with pytest.raises(ValueError):
        tradeoff_constant([])


def test_ablation_shares_the_partition(prepared):
    results = ablation(prepared.config, prepared)
    assert [r.variant for r in results] == ["blended_only", "threshold_only", "full_bmnb"]
    assert len({r.test_hash for r in results}) == 1 and len({r.train_hash for r in results}) == 1


def test_resampling_never_touches_test_rows():
    on, off = prepare(synth(resample=True)), prepare(synth(resample=False))
    assert on.test.row_hash() == off.test.row_hash()
    assert len(on.fit_set) != len(off.fit_set)
    assert (off.fit_set.row_ids >= 0).all()


def test_compare_report_layouts(prepared):
    base = run_variant(prepared, "baseline")
    one = report.compare_report([base])
    assert one["json"]["columns"] == ["synthetic:BL NB"]
    assert one["text"].startswith("# seed: 42")
    ref = report.compare_report([base], reference=True)
    col = ref["json"]["columns"][-1]
    assert col == report.REFERENCE_LABEL
    got = {key: ref["json"]["rows"][label][col] for label, key in report.COMPARE_ROWS
           if key in FAIRNESS_CERTIFICATION_ADULT}
    assert got == {"spd": -0.1945, "di": 0.3598, "eod": 0.1257, "emod": 0.0958,
                   "bias_index": 0.2641, "fairness_score": 0.7360}
    assert "undef" in ref["text"]  # the reference has no accuracy


def test_identical_configs_give_identical_columns(prepared):
    a = report.compare_report([run_variant(prepared, "baseline"), run_variant(prepared, "baseline")])
    cols = a["json"]["columns"]
    assert a["json"]["rows"]["Accuracy"][cols[0]] == a["json"]["rows"]["Accuracy"][cols[1]]


def test_run_experiment_records_everything():
    res = run_experiment(synth(alpha=0.5))
    rec = json.loads(report.dumps(res.to_dict()))
    assert rec["alpha"] == 0.5 and rec["alpha_selection"] is None
    assert rec["config"]["seed"] == 42 and "duration" not in rec
    assert res.duration > 0


def test_readme_config_sample_parses(tmp_path):
    text = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    sample = re.search(r"```ini\n(.*?)```", text, re.S).group(1)
    f = tmp_path / "sample.ini"
    f.write_text(sample)
    c = load_config(f)
    assert c.dataset == "compas" and c.target_rate is None and c.resample is True
