"""Partial permutation matrices and their convex hull.

Rows index model items (``m``), columns index data items (``n``), with
``m <= n``. A feasible relaxed matrix has non-negative entries, rows summing
to exactly one and columns summing to at most one. Relaxed matrices are plain
``numpy`` arrays; discrete solutions are :class:`PartialPermutation` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TOL_FEAS = 1e-8
DELTA_DISCRETE = 1e-3


class Dims(NamedTuple):
    m: int
    n: int

    def check(self) -> "Dims":
        if not (1 <= self.m <= self.n):
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        return self


@dataclass(frozen=True)
class PartialPermutation:
    """Injective map from the ``m`` rows to ``n`` columns.

    ``assignment[i]`` is the column matched to row ``i``.
    """

    assignment: tuple[int, ...]
    n: int

    def __init__(self, assignment: Sequence[int], n: int | None = None):
        assignment = tuple(int(j) for j in assignment)
        if n is None:
            n = len(assignment)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "n", int(n))
        Dims(len(assignment), self.n).check()
        if any(j < 0 or j >= self.n for j in assignment):
            raise ValueError(f"column index out of range [0, {self.n}): {assignment}")
        if len(set(assignment)) != len(assignment):
            raise ValueError(f"assignment is not injective: {assignment}")

    @property
    def dims(self) -> Dims:
        return Dims(len(self.assignment), self.n)

    def __len__(self) -> int:
        return len(self.assignment)

    def __getitem__(self, i: int) -> int:
        return self.assignment[i]

    def __iter__(self):
        return iter(self.assignment)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=np.intp)


def uniform_barycenter(dims: Dims) -> np.ndarray:
    """Matrix with every entry ``1/n``.

    It is the unique minimiser of ``tr X^T X`` over the feasible set.
    """
    m, n = Dims(*dims).check()
    return np.full((m, n), 1.0 / n)


def is_feasible(x: np.ndarray, tol_feas: float = TOL_FEAS) -> bool:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] > x.shape[1] or x.shape[0] < 1:
        return False
    if not np.all(np.isfinite(x)):
        return False
    if np.any(x < -tol_feas):
        return False
    if np.any(np.abs(x.sum(axis=1) - 1.0) > tol_feas):
        return False
    return bool(np.all(x.sum(axis=0) <= 1.0 + tol_feas))


def is_discrete(x: np.ndarray, delta: float = DELTA_DISCRETE) -> bool:
    """True when every entry lies within ``delta`` of 0 or 1."""
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= delta))


def round_to_permutation(x: np.ndarray) -> PartialPermutation:
    """Nearest vertex: the injection maximising the selected mass of ``x``."""
    from .assignment import solve_min

    x = np.asarray(x, dtype=float)
    return solve_min(-x)


def to_matrix(p: PartialPermutation) -> np.ndarray:
    m, n = p.dims
    x = np.zeros((m, n))
    x[np.arange(m), p.as_array()] = 1.0
    return x
