import itertools

import numpy as np
import pytest

from conftest import central_fd, perm_matrix, random_feasible, rel_err
from gncgcp.matrix_space import uniform_barycenter
from gncgcp.objectives import (
    GraphMatching,
    GraphPair,
    QapInstance,
    QuadraticAssignment,
    SubgraphMatching,
    gm_gradient,
    gm_value,
    qap_as_gm,
    qap_as_sgm,
    qap_gradient,
    qap_value,
    sgm_gradient,
    sgm_value,
)


# second implementations written with explicit index sums

def dense_sgm(a_m, a_d, x):
    r = a_m - np.einsum("ik,kl,jl->ij", x, a_d, x)
    return float(np.einsum("ij,ij->", r, r))


def dense_gm(a_m, a_d, x):
    r = np.einsum("ik,kj->ij", a_m, x) - np.einsum("ik,kj->ij", x, a_d)
    return float(np.einsum("ij,ij->", r, r))


def dense_qap(a, b, x):
    return float(np.einsum("ij,il,lk,jk->", a, x, b, x))


def random_pair(rng, m, n, symmetric=False):
    a_m, a_d = rng.normal(size=(m, m)), rng.normal(size=(n, n))
    if symmetric:
        a_m, a_d = a_m + a_m.T, a_d + a_d.T
    return GraphPair(a_m, a_d)


def test_containers_validate():
    with pytest.raises(ValueError):
        GraphPair(np.zeros((3, 3)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        GraphPair(np.zeros((2, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        QapInstance(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        QapInstance(np.array([[np.nan]]), np.zeros((1, 1)))
    q = QapInstance(np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        q.a[0, 0] = 5.0


def test_dimension_mismatch():
    g = GraphPair(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        sgm_value(g, np.eye(3))
    with pytest.raises(ValueError):
        gm_value(g, np.eye(2, 3))
    with pytest.raises(ValueError):
        qap_value(QapInstance(np.eye(2), np.eye(2)), np.eye(3))


# -- subgraph matching --------------------------------------------------------

def test_sgm_examples(rng):
    a = rng.normal(size=(4, 4))
    assert sgm_value(GraphPair(a, a), np.eye(4)) == 0.0
    g = GraphPair([[0, 1], [1, 0]], [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert sgm_value(g, perm_matrix([0, 1], 3)) == 0.0
    assert sgm_value(g, perm_matrix([0, 2], 3)) == 2.0


def test_sgm_matches_dense_evaluation(rng):
    for m, n in [(2, 4), (3, 3), (4, 7)]:
        g = random_pair(rng, m, n)
        for x in [uniform_barycenter((m, n)), random_feasible(rng, m, n)]:
            assert np.isclose(sgm_value(g, x), dense_sgm(g.a_m, g.a_d, x), rtol=1e-12)


def test_sgm_gradient_zero_graphs():
    g = GraphPair(np.zeros((2, 2)), np.zeros((3, 3)))
    assert np.array_equal(sgm_gradient(g, uniform_barycenter((2, 3))), np.zeros((2, 3)))


@pytest.mark.parametrize("m,n", [(3, 3), (5, 5), (3, 6)])
def test_sgm_gradient_finite_difference(rng, m, n):
    g = random_pair(rng, m, n)
    x = random_feasible(rng, m, n)
    assert rel_err(sgm_gradient(g, x), central_fd(lambda z: sgm_value(g, z), x)) <= 1e-5


def test_sgm_gradient_symmetric_collapse(rng):
    g = random_pair(rng, 3, 5, symmetric=True)
    x = random_feasible(rng, 3, 5)
    a_m, a_d = g.a_m, g.a_d
    expected = 4 * (x @ a_d @ x.T @ x @ a_d - a_m @ x @ a_d)
    assert np.allclose(sgm_gradient(g, x), expected)


# -- equal-size graph matching -----------------------------------------------

def test_gm_examples(rng):
    a = rng.normal(size=(4, 4))
    assert gm_value(GraphPair(a, a), np.eye(4)) == 0.0
    g = random_pair(rng, 4, 4)
    x = uniform_barycenter((4, 4))
    assert np.isclose(gm_value(g, x), dense_gm(g.a_m, g.a_d, x))


def test_gm_equals_sgm_on_permutations(rng):
    g = random_pair(rng, 4, 4)
    for cols in itertools.permutations(range(4)):
        x = perm_matrix(cols, 4)
        assert np.isclose(gm_value(g, x), sgm_value(g, x), rtol=1e-12)


def test_gm_needs_equal_sizes():
    g = GraphPair(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        GraphMatching(g)


def test_gm_gradient(rng):
    z = GraphPair(np.zeros((3, 3)), np.zeros((3, 3)))
    assert not np.any(gm_gradient(z, np.eye(3)))
    g = random_pair(rng, 5, 5)
    x = random_feasible(rng, 5, 5)
    assert rel_err(gm_gradient(g, x), central_fd(lambda z: gm_value(g, z), x)) <= 1e-5


def hessian(f_grad, x, h=1e-5):
    n = x.size
    hess = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        e = e.reshape(x.shape)
        hess[:, k] = ((f_grad(x + e) - f_grad(x - e)) / (2 * h)).ravel()
    return (hess + hess.T) / 2


def test_gm_hessian_is_psd(rng):
    for _ in range(5):
        g = random_pair(rng, 4, 4)
        hess = hessian(lambda z: gm_gradient(g, z), random_feasible(rng, 4, 4))
        assert np.linalg.eigvalsh(hess).min() >= -1e-8 * max(1.0, np.abs(hess).max())


# -- QAP ----------------------------------------------------------------------

def test_qap_examples():
    q = QapInstance(np.eye(2), np.eye(2))
    assert qap_value(q, np.eye(2)) == 2.0
    q = QapInstance([[0, 1], [0, 0]], [[0, 3], [5, 0]])
    assert qap_value(q, np.eye(2)) == 3.0
    assert qap_value(q, perm_matrix([1, 0], 2)) == 5.0


def test_qap_value_on_permutations(rng):
    q = QapInstance(rng.random((5, 5)), rng.random((5, 5)))
    for _ in range(20):
        p = rng.permutation(5)
        direct = sum(q.a[i, j] * q.b[p[i], p[j]] for i in range(5) for j in range(5))
        assert np.isclose(qap_value(q, perm_matrix(p, 5)), direct)
        assert np.isclose(q.cost(p), direct)
    x = random_feasible(rng, 5, 5)
    assert np.isclose(qap_value(q, x), dense_qap(q.a, q.b, x))


def test_qap_gradient(rng):
    q = QapInstance(np.zeros((3, 3)), rng.random((3, 3)))
    assert not np.any(qap_gradient(q, np.eye(3)))
    q = QapInstance(rng.normal(size=(5, 5)), rng.normal(size=(5, 5)))
    x = random_feasible(rng, 5, 5)
    assert rel_err(qap_gradient(q, x), central_fd(lambda z: qap_value(q, z), x)) <= 1e-5
    a, b = rng.normal(size=(2, 4, 4))
    a, b = a + a.T, b + b.T
    x = random_feasible(rng, 4, 4)
    assert np.allclose(qap_gradient(QapInstance(a, b), x), 2 * a @ x @ b)


@pytest.mark.parametrize("adapter,value", [(qap_as_sgm, sgm_value), (qap_as_gm, gm_value)])
def test_adapters_preserve_argmin(rng, adapter, value):
    for _ in range(5):
        q = QapInstance(rng.random((4, 4)), rng.random((4, 4)))
        g = adapter(q)
        perms = list(itertools.permutations(range(4)))
        qap_vals = np.array([qap_value(q, perm_matrix(p, 4)) for p in perms])
        adapter_vals = np.array([value(g, perm_matrix(p, 4)) for p in perms])
        assert perms[int(np.argmin(adapter_vals))] == perms[int(np.argmin(qap_vals))]
        # both adapters differ from twice the QAP value by a constant
        offset = adapter_vals - 2 * qap_vals
        assert np.allclose(offset, offset[0])


@pytest.mark.parametrize("adapter", [qap_as_sgm, qap_as_gm])
def test_adapters_on_zero_instance(adapter):
    g = adapter(QapInstance(np.zeros((3, 3)), np.zeros((3, 3))))
    assert not np.any(g.a_m) and not np.any(g.a_d)


def test_objective_wrappers(rng):
    g = random_pair(rng, 3, 5)
    q = QapInstance(rng.random((4, 4)), rng.random((4, 4)))
    sg, gm, qa = SubgraphMatching(g), GraphMatching(qap_as_gm(q)), QuadraticAssignment(q)
    assert (sg.degree, gm.degree, qa.degree) == (4, 2, 2)
    assert (sg.convexity_hint, gm.convexity_hint, qa.convexity_hint) == ("general", "convex", "general")
    assert sg.dims == (3, 5) and qa.dims == (4, 4)


@pytest.mark.parametrize("kind", ["sgm", "gm", "qap"])
def test_line_polynomial_is_exact(rng, kind):
    if kind == "sgm":
        obj = SubgraphMatching(random_pair(rng, 3, 6))
    elif kind == "gm":
        obj = GraphMatching(random_pair(rng, 4, 4))
    else:
        obj = QuadraticAssignment(QapInstance(rng.normal(size=(4, 4)), rng.normal(size=(4, 4))))
    m, n = obj.dims
    x, y = random_feasible(rng, m, n), random_feasible(rng, m, n)
    coeffs = obj.line_polynomial(x, y - x)
    for a in np.linspace(-0.5, 1.5, 9):
        assert np.isclose(np.polynomial.polynomial.polyval(a, coeffs), obj.value(x + a * (y - x)),
                          rtol=1e-10, atol=1e-10)
