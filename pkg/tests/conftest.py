import itertools
import sys

import numpy as np
import pytest

from sqtm import QString, normalize


def random_qstring(rng: np.random.Generator, max_len: int = 12, max_terms: int = 32) -> QString:
    """Random normalized state over distinct bitstrings of length <= max_len."""
    k = int(rng.integers(1, max_terms + 1))
    words = set()
    while len(words) < k:
        n = int(rng.integers(0, max_len + 1))
        words.add("".join(rng.choice(["0", "1"], size=n)))
        if len(words) >= 2 ** (max_len + 1) - 1:
            break
    amps = rng.normal(size=len(words)) + 1j * rng.normal(size=len(words))
    return normalize(QString(tuple(zip(sorted(words), amps))))


def all_bitstrings(max_len: int):
    for n in range(max_len + 1):
        for bits in itertools.product("01", repeat=n):
            yield "".join(bits)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
