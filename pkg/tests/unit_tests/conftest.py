"""Shared fixtures for commlearn unit tests."""

from collections.abc import Iterator

import numpy as np
import pytest

from commlearn.hypotheses import Dataset


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Keep a developer's COMMLEARN_* variables out of the tests."""
    for name in ("COMMLEARN_SEED", "COMMLEARN_JOBS", "COMMLEARN_OUT", "COMMLEARN_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    yield


@pytest.fixture
def square_split() -> tuple[Dataset, Dataset]:
    """Two parties with both classes; positives above y=0, negatives below."""
    D_A = Dataset(np.array([[0.0, 1.0], [1.0, 1.0], [0.0, -1.0], [1.0, -1.0]]), np.array([1, 1, -1, -1]))
    D_B = Dataset(np.array([[3.0, 2.0], [4.0, 1.5], [3.0, -2.0], [4.0, -1.5]]), np.array([1, 1, -1, -1]))
    return D_A, D_B


@pytest.fixture
def line_data() -> Dataset:
    """Twenty 1D points labelled +1 below 0.5."""
    x = np.linspace(0.0, 1.0, 20)
    return Dataset(x[:, None], np.where(x < 0.5, 1, -1))
