"""Benchmark harness: QAPLIB runs, synthetic matching grids and result files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import datasets, oracle
from .matrix_space import to_matrix
from .objectives import (
    GraphMatching,
    GraphPair,
    QapInstance,
    QuadraticAssignment,
    SubgraphMatching,
    qap_as_gm,
    qap_as_sgm,
    sgm_value,
)
from .solver import SolveResult, SolverConfig, solve

QAP_ALGORITHMS = ("qap", "qap_as_sgm", "qap_as_gm")
GRAPH_ALGORITHMS = ("sgm", "gm")


@dataclass
class RunRecord:
    problem: str
    algorithm: str
    seed: int | None
    cost: float
    opt: float | None
    matching_error: float | None
    correct_matches: int | None
    correct_ratio: float | None
    terminated_at_zeta: float
    wall_time: float
    zeta_steps: int = 0
    fw_iterations: int = 0
    rounded: bool = False
    family: str | None = None
    mode: str | None = None
    n_m: int | None = None
    n_d: int | None = None
    beta: float | None = None
    trial: int | None = None
    solution: str = ""

    @property
    def relative_excess(self) -> float | None:
        if self.opt is None:
            return None
        return (self.cost - self.opt) / self.opt


def normalize_instance(q: QapInstance) -> QapInstance:
    """Divide each matrix by its largest absolute entry.

    The permutation ranking is unchanged; only the relative weight of the
    ``tr X^T X`` term along the annealing path is affected.
    """
    def scaled(m):
        peak = np.abs(m).max()
        return m / peak if peak > 0 else m

    return QapInstance(scaled(q.a), scaled(q.b))


def qap_objective(q: QapInstance, algorithm: str):
    if algorithm == "qap":
        return QuadraticAssignment(q)
    if algorithm == "qap_as_sgm":
        return SubgraphMatching(qap_as_sgm(q))
    if algorithm == "qap_as_gm":
        return GraphMatching(qap_as_gm(q))
    raise ValueError(f"unknown QAP algorithm {algorithm!r}; choose from {QAP_ALGORITHMS}")


def graph_objective(pair: GraphPair, algorithm: str):
    if algorithm == "sgm":
        return SubgraphMatching(pair)
    if algorithm == "gm":
        return GraphMatching(pair)
    raise ValueError(f"unknown matching algorithm {algorithm!r}; choose from {GRAPH_ALGORITHMS}")


def _solution_str(result: SolveResult) -> str:
    return " ".join(str(j) for j in result.solution)


def load_instance(source: str | os.PathLike) -> tuple[str, QapInstance]:
    """Instance from a ``.dat`` path, or the name of a bundled instance."""
    path = Path(source)
    if path.exists():
        return path.stem, datasets.parse_qaplib(path)
    if str(source) in datasets.bundled_instances():
        return str(source), datasets.load_bundled(str(source))
    raise FileNotFoundError(f"no such instance file or bundled instance: {source}")


def run_qap(source, algorithm: str = "qap", config: SolverConfig | None = None, *,
            normalize: bool = True, opt: float | None = None,
            use_oracle: bool = True) -> RunRecord:
    """Solve one QAPLIB instance and report its cost on the original matrices.

    ``opt`` defaults to the published optimum for known instance names, or
    to exhaustive search when the instance is small enough and
    ``use_oracle`` is set.
    """
    if isinstance(source, QapInstance):
        name, q = "instance", source
    else:
        name, q = load_instance(source)
    work = normalize_instance(q) if normalize else q
    t0 = time.perf_counter()
    result = solve(qap_objective(work, algorithm), config)
    wall = time.perf_counter() - t0
    cost = q.cost(result.solution)
    if opt is None:
        opt = datasets.KNOWN_OPTIMA.get(name)
    if opt is None and use_oracle and q.n <= oracle.QAP_SIZE_LIMIT:
        opt = oracle.brute_force_qap(q)[1]
    return RunRecord(
        problem=name, algorithm=algorithm, seed=None, cost=cost,
        opt=None if opt is None else float(opt), matching_error=None,
        correct_matches=None, correct_ratio=None,
        terminated_at_zeta=result.terminated_at_zeta, wall_time=wall,
        zeta_steps=len(result.trace), fw_iterations=result.trace.total_fw_iterations,
        rounded=result.rounded, n_m=q.n, n_d=q.n, solution=_solution_str(result),
    )


def run_pair(pair: GraphPair, algorithm: str = "sgm", config: SolverConfig | None = None, *,
             ground_truth=None, use_oracle: bool = True, problem: str = "pair") -> RunRecord:
    """Match one graph pair; error is the subgraph-matching objective at the solution."""
    t0 = time.perf_counter()
    result = solve(graph_objective(pair, algorithm), config)
    wall = time.perf_counter() - t0
    error = sgm_value(pair, to_matrix(result.solution))
    opt = None
    n_m, n_d = pair.dims
    if use_oracle and oracle.injection_count(n_m, n_d) <= oracle.GM_INJECTION_BUDGET:
        opt = oracle.brute_force_gm(pair)[1]
    correct = ratio = None
    if ground_truth is not None:
        correct = int(np.sum(result.solution.as_array() == np.asarray(list(ground_truth))))
        ratio = correct / n_m
    return RunRecord(
        problem=problem, algorithm=algorithm, seed=None, cost=error, opt=opt,
        matching_error=error, correct_matches=correct, correct_ratio=ratio,
        terminated_at_zeta=result.terminated_at_zeta, wall_time=wall,
        zeta_steps=len(result.trace), fw_iterations=result.trace.total_fw_iterations,
        rounded=result.rounded, n_m=n_m, n_d=n_d, solution=_solution_str(result),
    )


@dataclass(frozen=True)
class _Task:
    family: str
    mode: str
    n_d: int
    n_m: int
    beta: float
    trial: int
    base_seed: int
    algorithm: str
    config: SolverConfig
    use_oracle: bool


def _run_task(task: _Task) -> RunRecord:
    spec, pair_seed = datasets.trial_spec(task.family, task.n_d, task.base_seed, task.trial)
    if task.mode == "equal":
        sp = datasets.make_equal_pair(spec, task.beta, pair_seed)
    else:
        sp = datasets.make_subgraph_pair(spec, task.n_m, task.beta, pair_seed)
    rec = run_pair(sp.pair, task.algorithm, task.config, ground_truth=sp.ground_truth,
                   use_oracle=task.use_oracle, problem=f"{task.family}-{task.mode}")
    rec.seed = task.base_seed + task.trial
    rec.family, rec.mode, rec.beta, rec.trial = task.family, task.mode, task.beta, task.trial
    return rec


def run_synthetic(family: str, mode: str = "equal", sizes: Sequence[int] = (8,),
                  betas: Sequence[float] = (0.0,), trials: int = 10, seed: int = 0,
                  algorithm: str = "sgm", config: SolverConfig | None = None, *,
                  n_m: int | None = None, use_oracle: bool = True,
                  jobs: int = 1) -> list[RunRecord]:
    """Solve a grid of synthetic pairs.

    Trial ``t`` uses seed ``seed + t``; the same trial index gives the same
    data graph at every noise level. In ``subgraph`` mode ``sizes`` are data
    graph sizes and ``n_m`` the model size.
    """
    family = datasets.GraphSpec.from_code(family, 2).code
    if mode not in ("equal", "subgraph"):
        raise ValueError(f"mode must be 'equal' or 'subgraph', got {mode!r}")
    if algorithm == "gm" and mode != "equal":
        raise ValueError("the gm objective needs equal-size graphs")
    graph_objective(GraphPair(np.zeros((1, 1)), np.zeros((1, 1))), algorithm)
    config = config or SolverConfig()
    tasks = []
    for n_d in sizes:
        m = n_d if mode == "equal" else (n_m if n_m is not None else n_d // 2)
        if m > n_d:
            raise ValueError(f"model size {m} exceeds data size {n_d}")
        for beta in betas:
            for t in range(trials):
                tasks.append(_Task(family, mode, n_d, m, float(beta), t, seed, algorithm,
                                   config, use_oracle))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_task, tasks, chunksize=4))
    return [_run_task(t) for t in tasks]


def awar(records: Iterable[RunRecord]) -> float:
    """Average relative excess over the optimum, in percent."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    missing = [r.problem for r in records if r.opt is None]
    if missing:
        raise ValueError(f"records without an optimum: {missing}")
    return 100.0 * float(np.mean([(r.cost - r.opt) / r.opt for r in records]))


def summarize(records: Iterable[RunRecord]) -> list[dict]:
    """One row per (family, mode, sizes, beta, algorithm) grid cell."""
    cells: dict[tuple, list[RunRecord]] = {}
    for r in records:
        key = (r.family, r.mode, r.n_d, r.n_m, r.beta, r.algorithm)
        cells.setdefault(key, []).append(r)
    rows = []
    for key in sorted(cells, key=lambda k: tuple("" if v is None else v for v in k)):
        group = cells[key]
        errors = np.array([r.matching_error for r in group], dtype=float)
        opts = [r.opt for r in group if r.opt is not None]
        ratios = [r.correct_ratio for r in group if r.correct_ratio is not None]
        rows.append({
            "family": key[0], "mode": key[1], "n_d": key[2], "n_m": key[3],
            "beta": key[4], "algorithm": key[5], "trials": len(group),
            "mean_error": float(errors.mean()),
            "mean_opt_error": float(np.mean(opts)) if len(opts) == len(group) else None,
            "exact_fraction": float(np.mean(errors == 0.0)),
            "mean_correct_ratio": float(np.mean(ratios)) if ratios else None,
            "mean_wall_time": float(np.mean([r.wall_time for r in group])),
        })
    return rows


# -- output -----------------------------------------------------------------

def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.generic):
        return v.item()
    return v


def write_rows(rows: Sequence[dict], fmt: str, out) -> None:
    if fmt == "json":
        json.dump([{k: _clean(v) for k, v in r.items()} for r in rows], out, indent=2)
        out.write("\n")
    elif fmt == "csv":
        if not rows:
            return
        writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: "" if v is None else _clean(v) for k, v in r.items()})
    else:
        raise ValueError(f"unknown format {fmt!r}")


def write_records(records: Sequence[RunRecord], fmt: str, out) -> None:
    write_rows([asdict(r) for r in records], fmt, out)


def records_to_string(records: Sequence[RunRecord], fmt: str = "csv") -> str:
    buf = io.StringIO()
    write_records(records, fmt, buf)
    return buf.getvalue()


_FIELD_TYPES = {f.name: f.type for f in fields(RunRecord)}


def _coerce(name: str, value):
    if value in ("", None):
        return None
    kind = _FIELD_TYPES[name]
    if "bool" in kind:
        return value if isinstance(value, bool) else value == "True"
    if "int" in kind and "float" not in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return value


def read_records(path: str | os.PathLike) -> list[RunRecord]:
    """Load records previously written as CSV or JSON."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("["):
        raw = json.loads(text)
    else:
        raw = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in raw:
        kwargs = {k: _coerce(k, v) for k, v in row.items() if k in _FIELD_TYPES}
        kwargs["solution"] = kwargs.get("solution") or ""
        out.append(RunRecord(**kwargs))
    return out
