from pathlib import Path

import numpy as np
import pytest

from ilsc.dataset import DataSet
from ilsc.texture import FEATURE_NAMES

DATA = Path(__file__).parent / "data"


@pytest.fixture
def reference_csv():
    return DATA / "reference_rows.csv"


def separable_dataset(seed, n_per_class=30, signal_column=4, permute=False):
    """One class-determining feature plus eight standard-normal noise features."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n_per_class)
    x = rng.normal(size=(2 * n_per_class, 9))
    x[:, signal_column] = 2.0 * y + rng.uniform(0.0, 1.0, y.size)
    labels = np.where(y == 1, "S", "EM")
    if permute:
        labels = rng.permutation(labels)
    return DataSet(FEATURE_NAMES, x, tuple(labels))


def progress_dataset(seed, inject=None, noise=5.0, shuffle=False, n=60):
    """Noise features with a progress column 1..n; optionally one feature tracks progress."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 9))
    progress = np.arange(1, n + 1)
    if inject is not None:
        x[:, inject] = progress + rng.normal(0.0, noise, n)
    if shuffle:
        progress = rng.permutation(progress)
    labels = tuple(["A"] * (n // 2) + ["B"] * (n - n // 2))
    return DataSet(FEATURE_NAMES, x, labels, progress)


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict: prints a PASS/FAIL line, then asserts."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE[number] = line
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
