import os
from pathlib import Path

import numpy as np
import pytest

from xbench.dataset import Dataset, load_dataset
from xbench.efficiency import extreme_efficient_set

DATA = Path(__file__).parent / "data"


def random_instance(seed, n_max=8, e_max=6, e_min=2):
    """Random panel with m + s <= 3 and 2 <= |E| <= 6, retrying seeds deterministically."""
    k = 0
    while True:
        rng = np.random.default_rng([seed, k])
        k += 1
        n = int(rng.integers(4, n_max + 1))
        m = int(rng.integers(1, 3))
        s = 3 - m if rng.random() < 0.7 else 1
        X = np.round(rng.uniform(1, 20, size=(n, m)), 2)
        Y = np.round(rng.uniform(1, 20, size=(n, s)), 2)
        d = Dataset.from_arrays(X, Y)
        E = extreme_efficient_set(d).E
        if e_min <= len(E) <= e_max:
            return d, E


@pytest.fixture
def tiny():
    return load_dataset(DATA / "tiny.csv")


@pytest.fixture
def table2_rows():
    return load_dataset(DATA / "airlines_table2.csv")


def airlines_path():
    env = os.environ.get("XBENCH_AIRLINES")
    if env:
        return Path(env)
    return DATA / "airlines.csv"


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
