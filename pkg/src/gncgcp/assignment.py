"""Rectangular minimum-cost linear assignment."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matrix_space import PartialPermutation


def solve_min(costs: np.ndarray) -> PartialPermutation:
    """Exact minimum-cost injection of the rows of ``costs`` into its columns.

    Parameters
    ----------
    costs : (m, n) array with ``m <= n``; any sign, all finite.

    Returns
    -------
    PartialPermutation
        ``sigma`` minimising ``sum_i costs[i, sigma[i]]``. Ties are broken by
        the solver's fixed scan order, so equal inputs give equal outputs.
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    m, n = c.shape
    if m > n:
        raise ValueError(f"cost matrix has more rows than columns ({m} > {n})")
    if m == 0:
        raise ValueError("cost matrix is empty")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(c)
    # rows come back sorted for m <= n
    assert np.array_equal(rows, np.arange(m))
    return PartialPermutation(cols, n)


def assignment_cost(costs: np.ndarray, p: PartialPermutation) -> float:
    c = np.asarray(costs, dtype=float)
    return float(c[np.arange(len(p)), p.as_array()].sum())
