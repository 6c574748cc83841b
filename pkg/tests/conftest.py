import numpy as np
import pytest

from fairpoison import Dataset, ModelParams


def tiny():
    """Four points, one per (label, group) cell."""
    X = [[1, 0], [0, 1], [1, 1], [0, 0]]
    return Dataset(X, s=[0, 0, 1, 1], y=[1, 0, 1, 0], feature_names=("a", "b"),
                   binary_features={0, 1})


@pytest.fixture
def tiny_d():
    return tiny()


@pytest.fixture
def theta_1m1():
    return ModelParams([1.0, -1.0], 0.0)


def random_dataset(rng, n=None, d=None, all_cells=True):
    """Small random dataset; with ``all_cells`` every (y, s) cell is occupied."""
    n = n or int(rng.integers(4, 33))
    d = d or int(rng.integers(1, 5))
    while True:
        X = rng.normal(size=(n, d))
        X[:, 0] = rng.integers(0, 2, size=n)  # one binary column
        s = rng.integers(0, 2, size=n)
        y = rng.integers(0, 2, size=n)
        ds = Dataset(X, s, y, binary_features={0})
        if not all_cells or (ds.group_counts() > 0).all():
            return ds


def random_theta(rng, d):
    return ModelParams(rng.normal(size=d), rng.normal())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# acceptance outcomes, printed once at the end of the session
ACCEPTANCE = []


@pytest.fixture
def criterion():
    def record(label, ok, detail=""):
        ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        assert ok, f"{label}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
