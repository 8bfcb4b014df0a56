"""QAPLIB ingestion and synthetic weighted-graph generation.

Synthetic families are named by three letters: direction (``D``irected or
``U``ndirected), degree law (``B``inomial with p = 0.5 or ``P``ower law with
exponent 1.5) and weight law (standard ``L``og-normal or absolute ``N``ormal),
e.g. ``DBL`` or ``UPN``.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from importlib import resources
from typing import Literal, Union

import numpy as np

from .matrix_space import PartialPermutation
from .objectives import GraphPair, QapInstance

BINOMIAL_P = 0.5
POWER_LAW_EXPONENT = 1.5

DegreeDist = Literal["binomial", "power_law"]
WeightDist = Literal["log_normal", "abs_normal"]
TextSource = Union[str, bytes, os.PathLike, io.IOBase]

# published optima (QAPLIB) of the instances used in the benchmark tables
KNOWN_OPTIMA = {
    "chr12c": 11156, "chr15a": 9896, "chr15c": 9504, "chr20b": 2298, "chr22b": 6194,
    "rou12": 235528, "rou15": 354210, "rou20": 725522,
    "tai10a": 135028, "tai15a": 388214, "tai17a": 491812, "tai20a": 703482,
    "tai30a": 1818146, "tai35a": 2422002, "tai40a": 3139370,
    "lipa20a": 3683, "lipa20b": 27076, "lipa30a": 13178, "lipa30b": 151426,
    "lipa40a": 31538, "lipa40b": 476581, "lipa50a": 62093, "lipa50b": 1210244,
    "lipa60a": 107218, "lipa60b": 2520135, "lipa70a": 169755, "lipa70b": 4603200,
    "lipa80a": 253195, "lipa80b": 7763962, "lipa90a": 360630, "lipa90b": 12490441,
}


class ParseError(ValueError):
    """Malformed instance file; ``line`` is 1-based when known."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.source = source
        self.line = line


def _read_text(src: TextSource) -> tuple[str, str | None]:
    if isinstance(src, bytes):
        return src.decode(), None
    if isinstance(src, io.IOBase):
        data = src.read()
        return (data.decode() if isinstance(data, bytes) else data), getattr(src, "name", None)
    if isinstance(src, os.PathLike) or (isinstance(src, str) and "\n" not in src
                                         and os.path.exists(src)):
        path = os.fspath(src)
        with open(path, "r") as fh:
            return fh.read(), path
    return str(src), None


def _tokens(text: str, source: str | None) -> list[tuple[float, int]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            try:
                out.append((float(tok), lineno))
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", source, lineno) from None
    return out


def _size(value: float, line: int, source: str | None) -> int:
    if value != int(value) or value <= 0:
        raise ParseError(f"matrix size must be a positive integer, got {value:g}", source, line)
    return int(value)


def parse_qaplib(src: TextSource) -> QapInstance:
    """Parse a QAPLIB ``.dat`` stream: ``n``, then ``A`` and ``B`` row-major.

    ``src`` may be raw text, bytes, a path or an open file. Any tokens beyond
    the two matrices (e.g. a linear-term matrix) are rejected.
    """
    text, source = _read_text(src)
    toks = _tokens(text, source)
    if not toks:
        raise ParseError("empty instance", source)
    n = _size(*toks[0], source)
    expected = 1 + 2 * n * n
    if len(toks) != expected:
        line = toks[expected][1] if len(toks) > expected else toks[-1][1]
        raise ParseError(f"expected {expected} tokens for n={n}, found {len(toks)}", source, line)
    vals = np.array([t[0] for t in toks[1:]])
    return QapInstance(vals[: n * n].reshape(n, n), vals[n * n:].reshape(n, n))


def parse_graph_pair(src: TextSource) -> GraphPair:
    """Parse ``m, A_M (m*m values), n, A_D (n*n values)`` into a graph pair."""
    text, source = _read_text(src)
    toks = _tokens(text, source)
    if not toks:
        raise ParseError("empty graph pair", source)
    m = _size(*toks[0], source)
    if len(toks) < 2 + m * m:
        raise ParseError(f"truncated model matrix (m={m})", source, toks[-1][1])
    n = _size(*toks[1 + m * m], source)
    expected = 2 + m * m + n * n
    if len(toks) != expected:
        line = toks[expected][1] if len(toks) > expected else toks[-1][1]
        raise ParseError(f"expected {expected} tokens, found {len(toks)}", source, line)
    vals = np.array([t[0] for t in toks])
    a_m = vals[1: 1 + m * m].reshape(m, m)
    a_d = vals[2 + m * m:].reshape(n, n)
    if m > n:
        raise ParseError(f"model graph larger than data graph ({m} > {n})", source)
    return GraphPair(a_m, a_d)


def format_qaplib(q: QapInstance) -> str:
    def fmt(v):
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    rows = [str(q.n), ""]
    for mat in (q.a, q.b):
        rows.extend(" ".join(fmt(v) for v in row) for row in mat)
        rows.append("")
    return "\n".join(rows)


def bundled_instances() -> list[str]:
    files = resources.files("gncgcp") / "data"
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".dat"))


def load_bundled(name: str) -> QapInstance:
    """Load a QAPLIB instance shipped with the package (currently ``chr12c``)."""
    res = resources.files("gncgcp") / "data" / f"{name}.dat"
    if not res.is_file():
        raise FileNotFoundError(f"no bundled instance {name!r}; have {bundled_instances()}")
    return parse_qaplib(res.read_text())


# -- synthetic graphs --------------------------------------------------------

@dataclass(frozen=True)
class GraphSpec:
    directed: bool
    degree_dist: DegreeDist
    weight_dist: WeightDist
    size: int
    seed: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"graph size must be >= 2, got {self.size}")
        if self.degree_dist not in ("binomial", "power_law"):
            raise ValueError(f"unknown degree distribution {self.degree_dist!r}")
        if self.weight_dist not in ("log_normal", "abs_normal"):
            raise ValueError(f"unknown weight distribution {self.weight_dist!r}")

    @classmethod
    def from_code(cls, code: str, size: int, seed: int = 0) -> "GraphSpec":
        code = code.upper()
        if len(code) != 3 or code[0] not in "DU" or code[1] not in "BP" or code[2] not in "LN":
            raise ValueError(f"invalid graph family code {code!r} (expected e.g. DBL, UPN)")
        return cls(
            directed=code[0] == "D",
            degree_dist="binomial" if code[1] == "B" else "power_law",
            weight_dist="log_normal" if code[2] == "L" else "abs_normal",
            size=size,
            seed=seed,
        )

    @property
    def code(self) -> str:
        return ("D" if self.directed else "U") + ("B" if self.degree_dist == "binomial" else "P") \
            + ("L" if self.weight_dist == "log_normal" else "N")


FAMILIES = tuple(d + g + w for d in "DU" for g in "BP" for w in "LN")


@dataclass(frozen=True, eq=False)
class SyntheticPair:
    pair: GraphPair
    ground_truth: PartialPermutation
    beta: float


def _weights(rng: np.random.Generator, weight_dist: str, k: int) -> np.ndarray:
    if weight_dist == "log_normal":
        return rng.lognormal(0.0, 1.0, size=k)
    if weight_dist == "abs_normal":
        return np.abs(rng.standard_normal(k))
    raise ValueError(f"unknown weight distribution {weight_dist!r}")


def _edge_slots(n: int, directed: bool) -> tuple[np.ndarray, np.ndarray]:
    if directed:
        i, j = np.nonzero(~np.eye(n, dtype=bool))
    else:
        i, j = np.triu_indices(n, k=1)
    return i, j


def _power_law_degrees(rng: np.random.Generator, n: int) -> np.ndarray:
    k = np.arange(1, n)
    p = k ** -POWER_LAW_EXPONENT
    return rng.choice(k, size=n, p=p / p.sum()).astype(float)


def generate_graph(spec: GraphSpec) -> np.ndarray:
    """Weighted adjacency matrix with zero diagonal, symmetric when undirected.

    Binomial graphs keep each slot with probability 0.5. Power-law graphs use
    an expected-degree (Chung-Lu) model: target degrees ``k`` are drawn from
    ``P(k) ~ k^-1.5`` on ``1..n-1`` and slot ``(i, j)`` is kept with
    probability ``min(1, k_i k_j / sum(k))``.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    i, j = _edge_slots(n, spec.directed)
    if spec.degree_dist == "binomial":
        p = np.full(i.shape, BINOMIAL_P)
    else:
        deg = _power_law_degrees(rng, n)
        p = np.minimum(1.0, deg[i] * deg[j] / deg.sum())
    keep = rng.random(i.shape) < p
    a = np.zeros((n, n))
    a[i[keep], j[keep]] = _weights(rng, spec.weight_dist, int(keep.sum()))
    if not spec.directed:
        a = a + a.T
    return a


def edge_count(adj: np.ndarray, directed: bool) -> int:
    nz = np.asarray(adj) != 0
    np.fill_diagonal(nz, False)
    return int(nz.sum()) if directed else int(np.triu(nz, 1).sum())


def add_noise(adj: np.ndarray, beta: float, seed, *, directed: bool,
              weight_dist: WeightDist = "log_normal") -> np.ndarray:
    """Insert ``round(beta * |E|)`` new edges at random absent off-diagonal slots.

    Existing edges are left as they are. When fewer absent slots exist, all of
    them are filled. ``seed`` may be an int, a ``SeedSequence`` or a
    ``Generator``.
    """
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    rng = np.random.default_rng(seed)
    out = np.array(adj, dtype=float)
    n = out.shape[0]
    k = int(np.floor(beta * edge_count(out, directed) + 0.5))
    if k == 0:
        return out
    i, j = _edge_slots(n, directed)
    free = np.flatnonzero(out[i, j] == 0)
    k = min(k, free.size)
    pick = free[rng.choice(free.size, size=k, replace=False)]
    w = _weights(rng, weight_dist, k)
    out[i[pick], j[pick]] = w
    if not directed:
        out[j[pick], i[pick]] = w
    return out


def make_subgraph_pair(spec: GraphSpec, n_m: int, beta: float, seed) -> SyntheticPair:
    """Data graph from ``spec``; model graph is a noisy, relabelled induced subgraph.

    ``n_m`` data nodes are drawn in random order; model node ``i`` is data
    node ``ground_truth[i]``, so the draw order is the relabelling.
    """
    if n_m > spec.size:
        raise ValueError(f"n_m={n_m} exceeds data graph size {spec.size}")
    if n_m < 1:
        raise ValueError(f"n_m must be positive, got {n_m}")
    a_d = generate_graph(spec)
    pick_seq, noise_seq = _seed_sequence(seed).spawn(2)
    nodes = np.random.default_rng(pick_seq).choice(spec.size, size=n_m, replace=False)
    sub = a_d[np.ix_(nodes, nodes)]
    a_m = add_noise(sub, beta, np.random.default_rng(noise_seq),
                    directed=spec.directed, weight_dist=spec.weight_dist)
    return SyntheticPair(GraphPair(a_m, a_d), PartialPermutation(nodes, spec.size), beta)


def make_equal_pair(spec: GraphSpec, beta: float, seed) -> SyntheticPair:
    """Equal-size pair: model graph is the noisy data graph under a random relabelling."""
    return make_subgraph_pair(spec, spec.size, beta, seed)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def trial_spec(code: str, size: int, base_seed: int, trial: int) -> tuple[GraphSpec, int]:
    """Per-trial graph spec and pair seed derived from ``base_seed + trial``."""
    graph_seq, pair_seq = np.random.SeedSequence([base_seed + trial, size]).spawn(2)
    spec = GraphSpec.from_code(code, size, seed=int(graph_seq.generate_state(1)[0]))
    return spec, int(pair_seq.generate_state(1)[0])
