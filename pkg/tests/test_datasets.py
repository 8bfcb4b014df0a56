import io
import math

import numpy as np
import pytest

from conftest import perm_matrix
from gncgcp.datasets import (
    FAMILIES,
    GraphSpec,
    ParseError,
    add_noise,
    bundled_instances,
    edge_count,
    format_qaplib,
    generate_graph,
    load_bundled,
    make_equal_pair,
    make_subgraph_pair,
    parse_graph_pair,
    parse_qaplib,
    trial_spec,
)
from gncgcp.matrix_space import to_matrix
from gncgcp.objectives import QapInstance, sgm_value


# -- QAPLIB ------------------------------------------------------------------------

def test_parse_examples():
    q = parse_qaplib("1 5 3")
    assert q.n == 1 and q.a.tolist() == [[5]] and q.b.tolist() == [[3]]
    assert q.cost([0]) == 15
    q = parse_qaplib("2 0 1 1 0 0 2 2 0")
    assert q.a.tolist() == [[0, 1], [1, 0]] and q.b.tolist() == [[0, 2], [2, 0]]


def test_parse_tolerates_layout():
    q = parse_qaplib("  2\n\n0 1\n1 0\n\n0 2\n2 0\n\n\n")
    assert q.b.tolist() == [[0, 2], [2, 0]]
    assert parse_qaplib(b"1\n7\n2\n").cost([0]) == 14
    assert parse_qaplib(io.StringIO("1 2 3")).cost([0]) == 6


@pytest.mark.parametrize("text,line", [
    ("2 0 1 1 0 0 2 2", 1),
    ("2\n0 1\n1 0\n0 2\n2 0\n9 9\n", 6),
    ("2\n0 x\n1 0\n0 2\n2 0\n", 2),
    ("2.5 0 1", 1),
    ("-1", 1),
])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_qaplib(text)
    assert info.value.line == line


def test_parse_empty_and_path(tmp_path):
    with pytest.raises(ParseError):
        parse_qaplib("")
    p = tmp_path / "x.dat"
    p.write_text("2\n0 x\n1 0\n0 2\n2 0\n")
    with pytest.raises(ParseError) as info:
        parse_qaplib(p)
    assert info.value.source == str(p) and str(p) in str(info.value)


def test_format_round_trip(rng):
    q = QapInstance(rng.integers(0, 9, (4, 4)), rng.random((4, 4)))
    back = parse_qaplib(format_qaplib(q))
    assert np.array_equal(back.a, q.a) and np.array_equal(back.b, q.b)


def test_bundled_chr12c():
    assert "chr12c" in bundled_instances()
    q = load_bundled("chr12c")
    assert q.n == 12
    # published optimal permutation (1-based in QAPLIB) reaches the known optimum
    opt = [7, 5, 1, 3, 10, 4, 8, 6, 9, 11, 2, 12]
    assert q.cost([k - 1 for k in opt]) == 11156
    with pytest.raises(FileNotFoundError):
        load_bundled("nope")


def test_parse_graph_pair(tmp_path):
    g = parse_graph_pair("1 0\n2 0 1 1 0")
    assert g.dims == (1, 2)
    with pytest.raises(ParseError):
        parse_graph_pair("2 0 1 1 0 1 0")
    with pytest.raises(ParseError):
        parse_graph_pair("2 0 1")
    with pytest.raises(ParseError):
        parse_graph_pair("1 0 2 0 1 1 0 5")


# -- synthetic graphs -----------------------------------------------------------

def test_family_codes():
    assert len(FAMILIES) == 8 and len(set(FAMILIES)) == 8
    for code in FAMILIES:
        assert GraphSpec.from_code(code, 5).code == code
    assert GraphSpec.from_code("dbl", 5).code == "DBL"
    for bad in ("XBL", "DB", "DBQ"):
        with pytest.raises(ValueError):
            GraphSpec.from_code(bad, 5)
    with pytest.raises(ValueError):
        GraphSpec(True, "binomial", "log_normal", 1)


@pytest.mark.parametrize("code", FAMILIES)
def test_generate_structure(code):
    for seed in range(5):
        spec = GraphSpec.from_code(code, 15, seed)
        a = generate_graph(spec)
        assert a.shape == (15, 15) and not np.any(np.diag(a))
        if not spec.directed:
            assert np.array_equal(a, a.T)
        if spec.weight_dist == "log_normal":
            assert np.all(a[a != 0] > 0)
        assert np.all(a >= 0)
        assert np.array_equal(a, generate_graph(spec))


def test_binomial_edge_count_concentration():
    mean, sd = 0.5 * math.comb(30, 2), math.sqrt(math.comb(30, 2) * 0.25)
    counts = [edge_count(generate_graph(GraphSpec.from_code("UBL", 30, s)), False) for s in range(40)]
    assert all(abs(c - mean) <= 4 * sd for c in counts)
    assert abs(np.mean(counts) - mean) <= 4 * sd / math.sqrt(40)


def test_power_law_is_sparser_and_skewed():
    b = [edge_count(generate_graph(GraphSpec.from_code("UBL", 40, s)), False) for s in range(10)]
    p = [edge_count(generate_graph(GraphSpec.from_code("UPL", 40, s)), False) for s in range(10)]
    assert np.mean(p) < np.mean(b)
    a = generate_graph(GraphSpec.from_code("UPL", 200, 1))
    deg = (a != 0).sum(axis=1)
    assert deg.max() > 4 * np.median(deg)


def test_add_noise_examples(rng):
    a = generate_graph(GraphSpec.from_code("UBN", 10, 3))
    assert np.array_equal(add_noise(a, 0.0, 1, directed=False), a)
    # directed graph with exactly 40 edges
    d = np.zeros((12, 12))
    slots = [(i, j) for i in range(12) for j in range(12) if i != j]
    for k in rng.choice(len(slots), 40, replace=False):
        d[slots[k]] = 1.0
    noisy = add_noise(d, 0.5, 2, directed=True)
    assert edge_count(noisy, True) == 60
    assert np.array_equal(noisy[d != 0], d[d != 0])
    u = add_noise(a, 0.3, 5, directed=False)
    assert np.array_equal(u, u.T)
    assert edge_count(u, False) == edge_count(a, False) + math.floor(0.3 * edge_count(a, False) + 0.5)


def test_add_noise_saturates():
    a = np.ones((4, 4)) - np.eye(4)
    a[0, 1] = a[1, 0] = 0.0
    out = add_noise(a, 5.0, 0, directed=False)
    assert edge_count(out, False) == 6
    with pytest.raises(ValueError):
        add_noise(a, -0.1, 0, directed=False)


@pytest.mark.parametrize("code", FAMILIES)
def test_equal_pair_ground_truth(code):
    spec = GraphSpec.from_code(code, 8, 11)
    sp = make_equal_pair(spec, 0.0, 4)
    assert sgm_value(sp.pair, to_matrix(sp.ground_truth)) == 0.0
    assert sp.ground_truth.dims == (8, 8)
    # undoing the relabelling gives back the data graph
    gt = sp.ground_truth.as_array()
    back = np.empty_like(sp.pair.a_m)
    back[np.ix_(gt, gt)] = sp.pair.a_m
    assert np.array_equal(back, sp.pair.a_d)


def test_noisy_pair_keeps_data_edges():
    spec = GraphSpec.from_code("DBL", 10, 2)
    sp = make_equal_pair(spec, 0.4, 9)
    gt = sp.ground_truth.as_array()
    back = np.empty_like(sp.pair.a_m)
    back[np.ix_(gt, gt)] = sp.pair.a_m
    a_d = sp.pair.a_d
    assert np.array_equal(back[a_d != 0], a_d[a_d != 0])
    e = edge_count(a_d, True)
    assert edge_count(back, True) == e + math.floor(0.4 * e + 0.5)


@pytest.mark.parametrize("code", FAMILIES)
def test_subgraph_pair_ground_truth(code):
    spec = GraphSpec.from_code(code, 20, 5)
    sp = make_subgraph_pair(spec, 10, 0.0, 8)
    assert sp.pair.dims == (10, 20)
    assert sgm_value(sp.pair, perm_matrix(sp.ground_truth.as_array(), 20)) == 0.0
    with pytest.raises(ValueError):
        make_subgraph_pair(spec, 21, 0.0, 0)


def test_pairs_are_deterministic():
    spec = GraphSpec.from_code("UPN", 12, 3)
    a, b = make_subgraph_pair(spec, 6, 0.5, 10), make_subgraph_pair(spec, 6, 0.5, 10)
    assert np.array_equal(a.pair.a_m, b.pair.a_m) and a.ground_truth == b.ground_truth
    c = make_subgraph_pair(spec, 6, 0.5, 11)
    assert not (np.array_equal(a.pair.a_m, c.pair.a_m) and a.ground_truth == c.ground_truth)


def test_trial_spec_shares_graph_across_noise():
    spec0, seed0 = trial_spec("DBL", 8, 0, 3)
    spec1, seed1 = trial_spec("DBL", 8, 0, 3)
    assert spec0 == spec1 and seed0 == seed1
    assert trial_spec("DBL", 8, 0, 4)[0].seed != spec0.seed
    assert trial_spec("DBL", 8, 1, 3)[0] == trial_spec("DBL", 8, 0, 4)[0]
