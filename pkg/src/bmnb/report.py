"""Table emitters: JSON record, aligned text table, CSV plot data."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .metrics import FAIRNESS_CERTIFICATION_ADULT

COMPARE_ROWS = [
    ("Accuracy", "accuracy"),
    ("Precision", "precision"),
    ("Recall", "recall"),
    ("F1 Score", "f1"),
    ("EOD", "eod"),
    ("EMOD", "emod"),
    ("SPD", "spd"),
    ("DI", "di"),
    ("BI", "bias_index"),
    ("FS", "fairness_score"),
]
ABLATION_COLUMNS = [
    ("Accuracy", "accuracy"),
    ("EOD", "eod"),
    ("EMOD", "emod"),
    ("SPD", "spd"),
    ("DI", "di"),
    ("BI", "bias_index"),
    ("FS", "fairness_score"),
]
VARIANT_LABELS = {
    "baseline": "BL NB",
    "blended_only": "Blended Only",
    "threshold_only": "Threshold Only",
    "full_bmnb": "Full BMNB",
}
REFERENCE_LABEL = "FairCert (transcribed)"


def fmt(v, digits: int = 4) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "undef"
    if isinstance(v, float):
        return f"{v:.{digits}f}"
    return str(v)


def align(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(payload) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def column_label(result) -> str:
    return f"{result.config['dataset']}:{VARIANT_LABELS.get(result.variant, result.variant)}"


def compare_report(results, reference: bool = False) -> dict:
    """Metric rows x one column per result (plus the transcribed reference column)."""
    if not results:
        raise ValueError("need at least one result")
    columns = [column_label(r) for r in results]
    values = {col: r.report.to_dict() for col, r in zip(columns, results)}
    if reference:
        columns.append(REFERENCE_LABEL)
        values[REFERENCE_LABEL] = dict(FAIRNESS_CERTIFICATION_ADULT)
    table = [[label] + [fmt(values[c].get(key)) for c in columns] for label, key in COMPARE_ROWS]
    seeds = sorted({r.config["seed"] for r in results})
    text = f"# seed: {', '.join(map(str, seeds))}\n" + align(["Metric"] + columns, table)
    record = {
        "seed": seeds,
        "columns": columns,
        "rows": {label: {c: values[c].get(key) for c in columns} for label, key in COMPARE_ROWS},
        "runs": [r.to_dict() for r in results],
    }
    return {"json": record, "text": text}


def ablation_report(results) -> dict:
    rows = [[VARIANT_LABELS[r.variant]] + [fmt(r.report.to_dict()[k], 4) for _, k in ABLATION_COLUMNS]
            for r in results]
    seed = results[0].config["seed"]
    text = (f"# seed: {seed}  dataset: {results[0].config['dataset']}  test rows: {results[0].test_hash}\n"
            + align(["Method"] + [h for h, _ in ABLATION_COLUMNS], rows))
    record = {
        "seed": seed,
        "dataset": results[0].config["dataset"],
        "table": [{"method": VARIANT_LABELS[r.variant], **{h: r.report.to_dict()[k] for h, k in ABLATION_COLUMNS}}
                  for r in results],
        "runs": [r.to_dict() for r in results],
    }
    return {"json": record, "text": text}


def sweep_report(rows, tradeoff: dict, config: dict) -> dict:
    table = [[fmt(a, 2), fmt(acc), fmt(fs), fmt(k)] for (a, acc, fs), (_, k) in zip(rows, tradeoff["products"])]
    text = (f"# seed: {config['seed']}  dataset: {config['dataset']}  variant: {config['variant']}\n"
            + align(["alpha", "Accuracy", "FS", "FS*Acc"], table)
            + f"FS*Acc mean {fmt(tradeoff['mean'])}  std {fmt(tradeoff['std'])}  spread {fmt(tradeoff['spread'])}\n")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "accuracy", "fairness_score"])
    for a, acc, fs in rows:
        w.writerow([repr(a), repr(acc), repr(fs)])
    record = {
        "seed": config["seed"],
        "config": config,
        "series": {"alpha": [a for a, _, _ in rows],
                   "accuracy": [acc for _, acc, _ in rows],
                   "fairness_score": [fs for _, _, fs in rows]},
        "tradeoff": tradeoff,
    }
    return {"json": record, "text": text, "csv": buf.getvalue()}


def write(out_dir: str | Path, stem: str, rendered: dict) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if "json" in rendered:
        paths.append(out / f"{stem}.json")
        paths[-1].write_text(dumps(rendered["json"]))
    if "text" in rendered:
        paths.append(out / f"{stem}.txt")
        paths[-1].write_text(rendered["text"])
    if "csv" in rendered:
        paths.append(out / f"{stem}.csv")
        paths[-1].write_text(rendered["csv"])
    return paths
