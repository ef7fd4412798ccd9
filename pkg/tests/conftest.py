import functools

import numpy as np
import pytest

from harmstab.counterexample import compute_c
from harmstab.kernel_basis import alpha_r, gram_matrix
from harmstab.quadrature import default_scheme

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def scheme(r):
    return default_scheme(r)


@functools.lru_cache(maxsize=None)
def gram(r):
    return gram_matrix(alpha_r(r), r, scheme(r))


@functools.lru_cache(maxsize=None)
def c_solution(r):
    return compute_c(r, scheme(r))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(rng, n, scale):
    return (rng.normal(size=n) + 1j * rng.normal(size=n)) * scale


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
