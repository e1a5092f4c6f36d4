"""Fetch the Adult and COMPAS benchmark files into ./data.

Both files are vendored inside the ``responsibly`` wheel on PyPI, so this only
needs a working pip index. Framingham is not redistributed there; place
``framingham.csv`` (the common 4240-row Kaggle export, header included) into
the data directory by hand.
"""
import argparse
import csv
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

WHEEL_SPEC = "responsibly==0.1.2"
ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]


def _adult_rows(raw: str):
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        cells = [c.strip() for c in line.split(",")]
        # adult.test labels carry a trailing period
        cells[-1] = cells[-1].rstrip(".")
        yield cells


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", WHEEL_SPEC, "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            adult = zf.read("responsibly/dataset/adult/adult.data").decode()
            adult_test = zf.read("responsibly/dataset/adult/adult.test").decode()
            compas = zf.read("responsibly/dataset/compas/compas-scores-two-years.csv")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ADULT_COLUMNS)
    n = 0
    for raw in (adult, adult_test):
        for cells in _adult_rows(raw):
            writer.writerow(cells)
            n += 1
    (args.out / "adult.csv").write_text(buf.getvalue())
    (args.out / "compas.csv").write_bytes(compas)
    print(f"wrote {n} adult rows and compas.csv to {args.out}")


if __name__ == "__main__":
    main()
