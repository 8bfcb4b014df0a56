"""Objectives over relaxed (partial) permutation matrices.

Three problems are provided: subgraph matching, equal-size graph matching
and the quadratic assignment problem (QAP), plus adapters that pose a QAP as
either graph-matching problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .matrix_space import Dims

ConvexityHint = Literal["general", "convex", "concave"]


def _square(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class GraphPair:
    """Model graph ``a_m`` (n_m nodes) and data graph ``a_d`` (n_d >= n_m nodes)."""

    a_m: np.ndarray
    a_d: np.ndarray

    def __post_init__(self):
        a_m = _square(self.a_m, "a_m")
        a_d = _square(self.a_d, "a_d")
        if a_m.shape[0] > a_d.shape[0]:
            raise ValueError(
                f"model graph is larger than data graph ({a_m.shape[0]} > {a_d.shape[0]})"
            )
        a_m.setflags(write=False)
        a_d.setflags(write=False)
        object.__setattr__(self, "a_m", a_m)
        object.__setattr__(self, "a_d", a_d)

    @property
    def dims(self) -> Dims:
        return Dims(self.a_m.shape[0], self.a_d.shape[0])


@dataclass(frozen=True, eq=False)
class QapInstance:
    """Flow matrix ``a`` and distance matrix ``b`` of equal size."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _square(self.a, "a")
        b = _square(self.b, "b")
        if a.shape != b.shape:
            raise ValueError(f"a and b differ in shape: {a.shape} vs {b.shape}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def dims(self) -> Dims:
        return Dims(self.n, self.n)

    def cost(self, assignment) -> float:
        """QAPLIB cost ``sum_ij a[i, j] * b[p[i], p[j]]`` of a permutation."""
        p = np.asarray(list(assignment), dtype=np.intp)
        return float((self.a * self.b[np.ix_(p, p)]).sum())


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b))


def _check_x(x, dims: Dims) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != tuple(dims):
        raise ValueError(f"X has shape {x.shape}, expected {tuple(dims)}")
    return x


# -- subgraph matching ------------------------------------------------------

def sgm_value(g: GraphPair, x) -> float:
    """Squared Frobenius norm of ``A_M - X A_D X^T``."""
    x = _check_x(x, g.dims)
    r = g.a_m - x @ g.a_d @ x.T
    return _dot(r, r)


def sgm_gradient(g: GraphPair, x) -> np.ndarray:
    x = _check_x(x, g.dims)
    a_d = g.a_d
    # with R = X A_D X^T - A_M the gradient is 2 (R X A_D^T + R^T X A_D); this
    # equals the expanded fourth-order form but avoids n x n products
    r = x @ a_d @ x.T - g.a_m
    return 2.0 * ((r @ x) @ a_d.T + (r.T @ x) @ a_d)


# -- equal-size graph matching ---------------------------------------------

def _check_equal(g: GraphPair) -> None:
    if g.a_m.shape != g.a_d.shape:
        raise ValueError(
            f"graph matching needs equal sizes, got {g.a_m.shape[0]} and {g.a_d.shape[0]}"
        )


def gm_value(g: GraphPair, x) -> float:
    """Squared Frobenius norm of ``A_M X - X A_D`` (convex in X)."""
    _check_equal(g)
    x = _check_x(x, g.dims)
    r = g.a_m @ x - x @ g.a_d
    return _dot(r, r)


def gm_gradient(g: GraphPair, x) -> np.ndarray:
    # exact derivative of gm_value; twice the half-scaled form sometimes quoted
    _check_equal(g)
    x = _check_x(x, g.dims)
    a_m, a_d = g.a_m, g.a_d
    return 2.0 * (a_m.T @ a_m @ x - a_m.T @ x @ a_d - a_m @ x @ a_d.T + x @ a_d @ a_d.T)


# -- QAP --------------------------------------------------------------------

def qap_value(q: QapInstance, x) -> float:
    """``tr(A X B^T X^T)``."""
    x = _check_x(x, q.dims)
    return _dot(q.a @ x, x @ q.b)


def qap_gradient(q: QapInstance, x) -> np.ndarray:
    x = _check_x(x, q.dims)
    return q.a @ x @ q.b.T + q.a.T @ x @ q.b


def qap_as_sgm(q: QapInstance) -> GraphPair:
    """Graph pair ``(-A^T, B^T)`` whose matching objective ranks permutations like the QAP."""
    return GraphPair(-q.a.T, q.b.T)


def qap_as_gm(q: QapInstance) -> GraphPair:
    return GraphPair(-q.a.T, q.b.T)


# -- Objective wrappers used by the solver -----------------------------------

class Objective:
    """A differentiable function of an ``m x n`` relaxed assignment matrix.

    Subclasses set ``dims``, ``convexity_hint`` and ``degree`` (polynomial
    degree of the function along a line, used by the exact line search; 0
    means unknown) and implement :meth:`value` and :meth:`gradient`.
    """

    dims: Dims
    convexity_hint: ConvexityHint = "general"
    degree: int = 0

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def line_polynomial(self, x: np.ndarray, d: np.ndarray) -> np.ndarray | None:
        """Coefficients (constant term first) of ``alpha -> F(x + alpha d)``.

        Optional; ``None`` makes the line search sample the function instead.
        """
        return None


def _homogeneous_quadratic_line(f, x, d, slope=None):
    # F(x + a d) = F(x) + a <grad F(x), d> + a^2 F(d) for homogeneous quadratics
    return np.array([f.value(x), slope if slope is not None else _dot(f.gradient(x), d),
                     f.value(d)])


class SubgraphMatching(Objective):
    degree = 4

    def __init__(self, pair: GraphPair):
        self.pair = pair
        self.dims = pair.dims

    def value(self, x):
        return sgm_value(self.pair, x)

    def gradient(self, x):
        return sgm_gradient(self.pair, x)

    def line_polynomial(self, x, d):
        a_m, a_d = self.pair.a_m, self.pair.a_d
        xa = x @ a_d
        da = d @ a_d
        r0 = a_m - xa @ x.T
        p1 = da @ x.T + xa @ d.T
        p2 = da @ d.T
        # ||r0 - a p1 - a^2 p2||^2
        return np.array([
            _dot(r0, r0),
            -2.0 * _dot(r0, p1),
            _dot(p1, p1) - 2.0 * _dot(r0, p2),
            2.0 * _dot(p1, p2),
            _dot(p2, p2),
        ])


class GraphMatching(Objective):
    convexity_hint = "convex"
    degree = 2

    def __init__(self, pair: GraphPair):
        _check_equal(pair)
        self.pair = pair
        self.dims = pair.dims

    def value(self, x):
        return gm_value(self.pair, x)

    def gradient(self, x):
        return gm_gradient(self.pair, x)

    def line_polynomial(self, x, d):
        return _homogeneous_quadratic_line(self, x, d)


class QuadraticAssignment(Objective):
    degree = 2

    def __init__(self, instance: QapInstance):
        self.instance = instance
        self.dims = instance.dims

    def value(self, x):
        return qap_value(self.instance, x)

    def gradient(self, x):
        return qap_gradient(self.instance, x)

    def line_polynomial(self, x, d):
        return _homogeneous_quadratic_line(self, x, d)
