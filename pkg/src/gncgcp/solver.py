"""Graduated nonconvexity / graduated concavity annealing over relaxed permutations.

For a path parameter ``zeta`` running from 1 down to -1 the solver minimises

    F_zeta(X) = (1 - zeta) F(X) + zeta tr(X^T X)    for 0 <= zeta <= 1
    F_zeta(X) = (1 + zeta) F(X) + zeta tr(X^T X)    for -1 <= zeta < 0

over the doubly sub-stochastic matrices with Frank-Wolfe, warm-starting each
``zeta`` from the previous minimiser. The positive branch starts from the
strictly convex ``tr X^T X`` and the negative branch ends at the strictly
concave ``-tr X^T X``, whose minimisers are vertices, so iterates are pushed
from the interior to a partial permutation matrix.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .assignment import solve_min
from .matrix_space import (
    DELTA_DISCRETE,
    TOL_FEAS,
    PartialPermutation,
    is_discrete,
    is_feasible,
    round_to_permutation,
    to_matrix,
    uniform_barycenter,
)
from .objectives import Objective

logger = logging.getLogger(__name__)

LineSearchMode = Literal["exact_polynomial", "backtracking"]

ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
ARMIJO_MIN_STEP = 1e-10


class NumericalError(ArithmeticError):
    """A non-finite value appeared during the annealing path."""

    def __init__(self, message: str, zeta: float):
        super().__init__(f"{message} (zeta={zeta:.6g})")
        self.zeta = zeta


@dataclass(frozen=True)
class SolverConfig:
    d_zeta: float = 0.001
    epsilon: float = 0.001
    delta_discrete: float = DELTA_DISCRETE
    max_fw_iters: int = 30
    line_search: LineSearchMode = "exact_polynomial"
    # None: 1.0 for general/concave objectives, 0.0 for convex ones
    zeta_start: float | None = None
    abs_gap_floor: float = 1e-12
    check_feasibility: bool = False

    def __post_init__(self):
        if not (0.0 < self.d_zeta <= 1.0):
            raise ValueError(f"d_zeta must lie in (0, 1], got {self.d_zeta}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.delta_discrete <= 0:
            raise ValueError(f"delta_discrete must be positive, got {self.delta_discrete}")
        if self.max_fw_iters < 1:
            raise ValueError(f"max_fw_iters must be >= 1, got {self.max_fw_iters}")
        if self.line_search not in ("exact_polynomial", "backtracking"):
            raise ValueError(f"unknown line search mode {self.line_search!r}")
        if self.zeta_start is not None and not (-1.0 <= self.zeta_start <= 1.0):
            raise ValueError(f"zeta_start must lie in [-1, 1], got {self.zeta_start}")


@dataclass(frozen=True)
class ZetaRecord:
    zeta: float
    objective_value: float
    gap: float
    fw_iterations: int
    # F_zeta before the first and after every accepted Frank-Wolfe step
    values: tuple[float, ...] = ()


@dataclass
class SolveTrace:
    records: list[ZetaRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def zetas(self) -> np.ndarray:
        return np.array([r.zeta for r in self.records])

    @property
    def total_fw_iterations(self) -> int:
        return sum(r.fw_iterations for r in self.records)


@dataclass
class SolveResult:
    solution: PartialPermutation
    final_objective: float
    terminated_at_zeta: float
    trace: SolveTrace
    # True when the path ended away from a vertex and rounding picked one
    rounded: bool = False
    relaxed: np.ndarray | None = None


def _check_zeta(zeta: float) -> None:
    if not (-1.0 <= zeta <= 1.0):
        raise ValueError(f"zeta must lie in [-1, 1], got {zeta}")


def _weight(zeta: float) -> float:
    return 1.0 - zeta if zeta >= 0 else 1.0 + zeta


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b))


def combined_value(obj: Objective, x: np.ndarray, zeta: float) -> float:
    _check_zeta(zeta)
    w = _weight(zeta)
    f = obj.value(x) if w != 0.0 else 0.0
    return w * f + zeta * _dot(x, x)


def combined_gradient(obj: Objective, x: np.ndarray, zeta: float) -> np.ndarray:
    _check_zeta(zeta)
    w = _weight(zeta)
    g = 2.0 * zeta * np.asarray(x, dtype=float)
    if w != 0.0:
        g = g + w * obj.gradient(x)
    return g


def fw_direction(grad: np.ndarray) -> PartialPermutation:
    """Vertex of the feasible set minimising the linearisation ``<grad, Y>``."""
    return solve_min(grad)


@functools.lru_cache(maxsize=None)
def _interpolation_matrix(degree: int) -> tuple[np.ndarray, np.ndarray]:
    alphas = np.linspace(0.0, 1.0, degree + 1)
    # maps samples at ``alphas`` to coefficients, lowest order first
    return alphas, np.linalg.inv(np.vander(alphas, increasing=True))


def _horner(c, x: float) -> float:
    acc = 0.0
    for coef in reversed(c):
        acc = acc * x + coef
    return acc


def _real_roots(c) -> list[float]:
    """Real roots of the polynomial with coefficients ``c`` (lowest order first)."""
    c = [float(v) for v in c]
    scale = max((abs(v) for v in c), default=0.0)
    # drop leading terms that are negligible relative to the rest
    while len(c) > 1 and abs(c[-1]) <= 1e-14 * scale:
        c.pop()
    deg = len(c) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [-c[0] / c[1]]
    if deg == 2:
        c0, c1, c2 = c
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0:
            return []
        # numerically stable quadratic formula
        q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
        roots = [q / c2]
        if q != 0.0:
            roots.append(c0 / q)
        return roots
    if deg == 3:
        return _cubic_roots(c)
    return [r.real for r in np.roots(c[::-1]) if abs(r.imag) <= 1e-12]


def _newton_polish(c, x: float) -> float:
    dc = [k * c[k] for k in range(1, len(c))]
    for _ in range(8):
        dfx = _horner(dc, x)
        if dfx == 0.0:
            break
        step = _horner(c, x) / dfx
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def _cubic_roots(c) -> list[float]:
    # one real root from Cardano, then deflate to a quadratic; taking the
    # largest root and deflating from the constant end keeps this stable
    # when the roots are widely spread
    b, cc, d = c[2] / c[3], c[1] / c[3], c[0] / c[3]
    p = cc - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * cc / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        s = math.sqrt(disc)
        ts = [_cbrt(-q / 2.0 + s) + _cbrt(-q / 2.0 - s)]
    elif p == 0.0:
        ts = [_cbrt(-q)]
    else:
        r = 2.0 * math.sqrt(-p / 3.0)
        phi = math.acos(max(-1.0, min(1.0, 3.0 * q / (p * r)))) / 3.0
        ts = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    big = _newton_polish(c, max((t - b / 3.0 for t in ts), key=abs))
    if big == 0.0:
        rest = _real_roots(c[1:])
    else:
        # c3 (x - big)(x^2 + u x + v), matched from the constant end
        v = -c[0] / (c[3] * big)
        u = (v - c[1] / c[3]) / big
        rest = _real_roots([v, u, 1.0])
    return [big] + [_newton_polish(c, r) for r in rest]


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _unit_argmin(coeffs) -> float:
    """Global minimiser on [0, 1] of a polynomial (lowest order first)."""
    coeffs = [float(v) for v in coeffs]
    deriv = [k * coeffs[k] for k in range(1, len(coeffs))]
    best_a, best_f = 0.0, coeffs[0]
    for a in [1.0] + [r for r in _real_roots(deriv) if 0.0 < r < 1.0]:
        f = _horner(coeffs, a)
        if f < best_f:
            best_a, best_f = a, f
    return best_a


def _sampled_polynomial(phi, degree: int, f0: float, slope: float | None) -> np.ndarray:
    if degree == 2 and slope is not None:
        f1 = phi(1.0)
        return np.array([f0, slope, f1 - f0 - slope])
    alphas, inv_vander = _interpolation_matrix(degree)
    samples = np.array([f0] + [phi(a) for a in alphas[1:]])
    return inv_vander @ samples


def _backtracking_step(phi, f0: float, slope: float) -> float:
    if slope >= 0:
        return 0.0
    alpha = 1.0
    while alpha >= ARMIJO_MIN_STEP:
        if phi(alpha) <= f0 + ARMIJO_C * alpha * slope:
            return alpha
        alpha *= ARMIJO_SHRINK
    return 0.0


def _line_polynomial(obj: Objective, zeta: float, x: np.ndarray, d: np.ndarray,
                     slope: float | None) -> np.ndarray | None:
    # analytic restriction of F_zeta to the segment, if the objective offers one
    c = obj.line_polynomial(x, d)
    if c is None:
        return None
    w = _weight(zeta)
    out = [w * float(v) for v in c] + [0.0] * (3 - len(c))
    out[0] += zeta * _dot(x, x)
    out[1] = slope if slope is not None else out[1] + 2.0 * zeta * _dot(x, d)
    out[2] += zeta * _dot(d, d)
    return out


def _line_step(obj, zeta, x, d, mode, f0, slope) -> tuple[float, float]:
    """Step and the value of ``F_zeta`` there; ``(0, f0)`` when no descent is found."""
    def phi(a: float) -> float:
        return combined_value(obj, x + a * d, zeta)

    if mode == "backtracking":
        if slope is None:
            slope = _dot(combined_gradient(obj, x, zeta), d)
        alpha = _backtracking_step(phi, f0, slope)
    elif mode != "exact_polynomial":
        raise ValueError(f"unknown line search mode {mode!r}")
    elif obj.degree > 0:
        coeffs = _line_polynomial(obj, zeta, x, d, slope)
        if coeffs is None:
            coeffs = _sampled_polynomial(phi, max(obj.degree, 2), f0, slope)
        alpha = _unit_argmin(coeffs)
    else:
        res = minimize_scalar(phi, bounds=(0.0, 1.0), method="bounded")
        f1 = phi(1.0)
        alpha = float(res.x) if res.fun < min(f0, f1) else (1.0 if f1 < f0 else 0.0)
    if alpha <= 0.0:
        return 0.0, f0
    f_alpha = phi(alpha)
    if not f_alpha <= f0:
        if not math.isfinite(f_alpha):
            raise NumericalError("objective is not finite", zeta)
        return 0.0, f0
    return alpha, f_alpha


def line_search(
    obj: Objective,
    zeta: float,
    x: np.ndarray,
    y: np.ndarray,
    mode: LineSearchMode = "exact_polynomial",
    f0: float | None = None,
    slope: float | None = None,
) -> float:
    """Step ``alpha`` in [0, 1] along ``x + alpha (y - x)`` that never ascends.

    ``exact_polynomial`` minimises the restriction of ``F_zeta`` to the
    segment exactly when the objective is a polynomial: the coefficients come
    from :meth:`Objective.line_polynomial` when available, otherwise from
    ``degree + 1`` equispaced samples. ``backtracking`` halves from
    ``alpha = 1`` until the Armijo condition holds.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(y, dtype=float) - x
    if not np.any(d):
        return 0.0
    if f0 is None:
        f0 = combined_value(obj, x, zeta)
    return _line_step(obj, zeta, x, d, mode, f0, slope)[0]


def converged(linearized_drop: float, f_value: float, epsilon: float,
              abs_gap_floor: float = 1e-12) -> bool:
    """Relative duality-gap test for Frank-Wolfe.

    ``linearized_drop`` is ``<grad F_zeta(X), Y - X>`` at the linear
    minimiser ``Y`` (hence non-positive); its magnitude is compared against
    the linearised objective at ``Y``.
    """
    gap = abs(linearized_drop)
    if gap < abs_gap_floor:
        return True
    return gap < epsilon * abs(f_value + linearized_drop)


def _zeta_grid(start: float, stop: float, step: float, include_stop: bool) -> list[float]:
    n = int(math.floor((start - stop) / step + 1e-9))
    grid = [start - k * step for k in range(n + 1)]
    grid = [z for z in grid if z > stop + 1e-12]
    if include_stop:
        grid.append(stop)
    return grid


def solve(obj: Objective, cfg: SolverConfig | None = None,
          x0: np.ndarray | None = None) -> SolveResult:
    """Run the annealing path and return a partial permutation.

    Parameters
    ----------
    obj : Objective
        Problem to minimise. ``obj.convexity_hint`` chooses the path:
        ``"convex"`` starts at ``zeta = 0``, ``"general"`` at 1, and
        ``"concave"`` only runs the positive branch before rounding.
    cfg : SolverConfig, optional
    x0 : array, optional
        Feasible starting matrix; defaults to the uniform barycenter, which is
        the exact minimiser of the first (``zeta = 1``) subproblem.
    """
    cfg = cfg or SolverConfig()
    dims = obj.dims.check()
    hint = getattr(obj, "convexity_hint", "general")

    if cfg.zeta_start is not None:
        start = cfg.zeta_start
    else:
        start = 0.0 if hint == "convex" else 1.0
    if hint == "concave":
        grid = _zeta_grid(start, 0.0, cfg.d_zeta, include_stop=False)
    else:
        grid = _zeta_grid(start, -1.0, cfg.d_zeta, include_stop=True)

    if x0 is None:
        x = uniform_barycenter(dims)
    else:
        x = np.array(x0, dtype=float)
        if x.shape != tuple(dims) or not is_feasible(x, TOL_FEAS):
            raise ValueError("x0 is not a feasible matrix of the objective's shape")

    trace = SolveTrace()
    terminated_at = start
    for zeta in grid:
        if is_discrete(x, cfg.delta_discrete):
            break
        x, record = _frank_wolfe(obj, x, zeta, cfg)
        trace.records.append(record)
        terminated_at = zeta

    rounded = not is_discrete(x, cfg.delta_discrete)
    solution = round_to_permutation(x)
    final = obj.value(to_matrix(solution))
    if not math.isfinite(final):
        raise NumericalError("objective at the returned solution is not finite", terminated_at)
    logger.debug("solve finished at zeta=%.4f after %d fw steps, F=%.6g",
                 terminated_at, trace.total_fw_iterations, final)
    return SolveResult(solution, final, terminated_at, trace, rounded, x)


def _frank_wolfe(obj: Objective, x: np.ndarray, zeta: float,
                 cfg: SolverConfig) -> tuple[np.ndarray, ZetaRecord]:
    f = combined_value(obj, x, zeta)
    if not math.isfinite(f):
        raise NumericalError("objective is not finite", zeta)
    values = [f]
    gap = 0.0
    steps = 0
    for _ in range(cfg.max_fw_iters):
        g = combined_gradient(obj, x, zeta)
        if not np.all(np.isfinite(g)):
            raise NumericalError("gradient is not finite", zeta)
        # hot path: skip the validated wrapper around the same LAP call
        rows, cols = linear_sum_assignment(g)
        d = -x
        d[rows, cols] += 1.0
        gap = float(g[rows, cols].sum()) - _dot(g, x)
        if converged(gap, f, cfg.epsilon, cfg.abs_gap_floor):
            break
        alpha, f_new = _line_step(obj, zeta, x, d, cfg.line_search, f, gap)
        if alpha <= 0.0:
            break
        x, f = x + alpha * d, f_new
        values.append(f)
        steps += 1
        if cfg.check_feasibility and not is_feasible(x, TOL_FEAS):
            raise NumericalError("iterate left the feasible set", zeta)
    return x, ZetaRecord(zeta, f, gap, steps, tuple(values))
