"""Exhaustive search over permutations / injections for small instances."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .matrix_space import PartialPermutation
from .objectives import GraphPair, QapInstance

QAP_SIZE_LIMIT = 10
GM_INJECTION_BUDGET = 5_000_000
_CHUNK = 20_000


class OracleLimitError(ValueError):
    pass


def _chunks(it, size):
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _search(n_choices: int, k: int, cost_of) -> tuple[PartialPermutation, float]:
    # itertools yields injections in lexicographic order and argmin keeps the
    # first minimiser, so ties resolve to the lexicographically smallest map
    best_cost = math.inf
    best = None
    for block in _chunks(itertools.permutations(range(n_choices), k), _CHUNK):
        costs = cost_of(block)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best = block[i]
    return PartialPermutation(best, n_choices), best_cost


def brute_force_qap(q: QapInstance, limit: int = QAP_SIZE_LIMIT) -> tuple[PartialPermutation, float]:
    """Global QAP optimum ``min_p sum_ij a[i, j] b[p[i], p[j]]`` by enumeration."""
    n = q.n
    if n > limit:
        raise OracleLimitError(f"instance size {n} exceeds enumeration limit {limit}")
    a, b = q.a, q.b

    def cost_of(perms):
        sub = b[perms[:, :, None], perms[:, None, :]]
        return np.einsum("ij,kij->k", a, sub)

    return _search(n, n, cost_of)


def injection_count(n_m: int, n_d: int) -> int:
    return math.perm(n_d, n_m)


def brute_force_gm(g: GraphPair, limit: int = GM_INJECTION_BUDGET) -> tuple[PartialPermutation, float]:
    """Minimum of ``||A_M - A_D[p][:, p]||_F^2`` over all injections ``p``.

    ``limit`` caps the number of injections enumerated.
    """
    n_m, n_d = g.dims
    count = injection_count(n_m, n_d)
    if count > limit:
        raise OracleLimitError(f"{count} injections exceed enumeration budget {limit}")
    a_m, a_d = g.a_m, g.a_d

    def cost_of(maps):
        r = a_m[None] - a_d[maps[:, :, None], maps[:, None, :]]
        return np.einsum("kij,kij->k", r, r)

    return _search(n_d, n_m, cost_of)
