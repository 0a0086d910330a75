import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_keys(rng, m: int, exclude=None) -> np.ndarray:
    keys = np.unique(rng.integers(0, 1 << 64, size=m + 16, dtype=np.uint64))
    if exclude is not None:
        keys = keys[~np.isin(keys, exclude)]
    return rng.permutation(keys)[:m]


def search_keys(rng, predicate, want: int = 1, batch: int = 1 << 16, rounds: int = 400):
    """Brute-force key search: ``predicate`` maps a uint64 batch to a bool mask."""
    found = []
    for _ in range(rounds):
        cand = rng.integers(0, 1 << 64, size=batch, dtype=np.uint64)
        found.extend(int(c) for c in cand[predicate(cand)])
        if len(found) >= want:
            return found[:want]
    raise AssertionError("key search exhausted")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
