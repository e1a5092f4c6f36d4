import os
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from bmnb.experiment import ExperimentConfig, prepare

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.environ.get("BMNB_DATA_DIR", ROOT / "data"))
BENCHMARKS = ("adult", "compas", "framingham")

ACCEPTANCE_LINES: list[str] = []


def data_file(name: str) -> Path:
    return DATA_DIR / f"{name}.csv"


_PREPARED: dict = {}


@pytest.fixture(scope="session")
def prepared_benchmark():
    """Default-config Prepared data per benchmark, built once; returns (prepared, seconds)."""

    def get(name):
        if name not in _PREPARED:
            path = data_file(name)
            if not path.exists():
                pytest.fail(f"{name}: data file {path} is not available "
                            f"(run scripts/fetch_data.py or set BMNB_DATA_DIR)")
            cfg = ExperimentConfig(dataset=name, data_path=str(path))
            t = time.perf_counter()
            p = prepare(cfg)
            _PREPARED[name] = (p, time.perf_counter() - t)
        return _PREPARED[name]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
