import itertools
import sys

import numpy as np
import pytest


def random_feasible(rng, m, n, k=4):
    """Random point of the sub-stochastic polytope: a convex mix of ``k`` partial permutations."""
    w = rng.dirichlet(np.ones(k))
    x = np.zeros((m, n))
    for wi in w:
        cols = rng.permutation(n)[:m]
        x[np.arange(m), cols] += wi
    return x


def central_fd(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


def injections(m, n):
    return itertools.permutations(range(n), m)


def perm_matrix(cols, n):
    x = np.zeros((len(cols), n))
    x[np.arange(len(cols)), list(cols)] = 1.0
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
