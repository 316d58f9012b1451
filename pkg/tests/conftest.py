import numpy as np
import pytest

from pbdcs.construction import build_with_kind
from pbdcs.designs import (
    find_conic_oval,
    projective_plane,
    remove_blocks_with_points,
    remove_points,
    steiner_triple_system,
)


def _pg_minus_oval(q):
    d = projective_plane(q)
    return remove_points(d, find_conic_oval(d, q))


RECIPES = {
    "fano": lambda: build_with_kind(projective_plane(2), "fourier"),
    "pg7_oval": lambda: build_with_kind(_pg_minus_oval(7), "fourier"),
    "pg7": lambda: build_with_kind(projective_plane(7), "fourier"),
    "pg11_blocks": lambda: build_with_kind(remove_blocks_with_points(projective_plane(11), [0, 1]), "fourier"),
    "pg11_oval": lambda: build_with_kind(_pg_minus_oval(11), "fourier"),
    "sts25_real": lambda: build_with_kind(steiner_triple_system(25), "real"),
    "sts25_fourier": lambda: build_with_kind(steiner_triple_system(25), "fourier"),
}

_cache = {}


def corpus(name):
    if name not in _cache:
        _cache[name] = RECIPES[name]()
    return _cache[name]


@pytest.fixture(scope="session")
def fano():
    return corpus("fano")


@pytest.fixture(scope="session")
def ex8():
    return corpus("pg7_oval")


@pytest.fixture(scope="session")
def pg11_blocks():
    return corpus("pg11_blocks")


@pytest.fixture(scope="session")
def sts25_real():
    return corpus("sts25_real")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
