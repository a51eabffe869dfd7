import math

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp

from conftest import random_graph, to_graph
from rwc.exact import exact_rwc
from rwc.fastchol import (
    FastCholParams,
    ICholBreakdown,
    SparseColumn,
    fastchol,
    grounded_system,
    ichol,
    inverse_columns,
    invert_column_step,
    sparsify_column,
)
from rwc.metrics import mean_relative_error


def grounded(g, ordering="natural"):
    v = int(np.argmax(g.degrees))
    Lv, nodes = grounded_system(g, v, ordering)
    return v, Lv, nodes


def test_exact_cholesky_when_nothing_dropped(k3):
    _, Lv, _ = grounded(k3)
    f = ichol(Lv, 0.0)
    R = f.R.toarray()
    assert f.dropped == 0
    assert np.allclose(R @ R.T, Lv.toarray(), atol=1e-12)
    assert np.allclose(R, np.tril(R))


def test_delta_one_keeps_only_the_diagonal(small_suite):
    for g in small_suite:
        _, Lv, _ = grounded(g)
        R = ichol(Lv, 1.0).R
        assert R.nnz == Lv.shape[0]
        assert np.allclose(R.diagonal(), 1.0)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("delta", [1e-2, 1e-3])
def test_error_is_exactly_the_dropped_entries(seed, delta):
    g = random_graph(seed, 50, 200)
    _, Lv, _ = grounded(g)
    f = ichol(Lv, delta)
    E = Lv.toarray() - (f.R @ f.R.T).toarray()
    diag = Lv.diagonal()
    # every non-zero of E is a sub-threshold value
    off = np.abs(E) > 1e-13
    np.fill_diagonal(off, False)
    assert np.all(np.abs(E[off]) < delta * np.sqrt(np.outer(diag, diag))[off] + 1e-13)
    assert np.abs(np.diag(E)).max() < 1e-12
    assert np.count_nonzero(np.tril(off, -1)) <= f.dropped


def test_breakdown_retries_then_raises():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ICholBreakdown):
        ichol(A, 0.0)
    # a small negative pivot is rescued by the diagonal shift
    B = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0 - 1e-9]]))
    f = ichol(B, 0.0)
    assert f.shift > 0


def test_sparsify_examples():
    col = SparseColumn(0, [0, 1, 2, 3], [0.5, 0.3, 0.15, 0.05])
    out = sparsify_column(col, 0.2, 1)
    assert out.indices.tolist() == [0, 1]
    assert out.discarded == pytest.approx(0.2)
    assert sparsify_column(col, 0.2, 4).values.tolist() == col.values.tolist()
    assert sparsify_column(col, 0.0, 1).indices.tolist() == [0, 1, 2, 3]
    # equal magnitudes at the cut: the smaller index survives
    tie = SparseColumn(0, [0, 1, 2, 3], [0.4, 0.1, 0.1, 0.4])
    assert sparsify_column(tie, 0.1, 1).indices.tolist() == [0, 1, 3]


def test_last_column_is_base_case(k3):
    _, Lv, _ = grounded(k3)
    f = ichol(Lv, 0.0)
    u = f.dimension - 1
    col = invert_column_step(f, u, {}, window=5)
    assert col.indices.tolist() == [u]
    assert col.values[0] == pytest.approx(1 / f.R[u, u])


def test_k3_columns_match_dense_inverse(k3):
    _, Lv, _ = grounded(k3)
    f = ichol(Lv, 0.0)
    S = np.linalg.inv(f.R.toarray())
    inv = inverse_columns(f, np.full(2, 2.0), 2, 3, 3, 3, 0.0)
    assert np.allclose(inv.columns.toarray(), S, atol=1e-12)
    assert (S >= 0).all()


def window_sequence(degrees, d_max, n_nodes, w0):
    ws, out = w0, {}
    for u in range(len(degrees) - 1, -1, -1):
        ws = min(ws * (1 + degrees[u] / d_max), n_nodes)
        out[u] = ws
    return out


@pytest.mark.parametrize("seed", range(5))
def test_kernel_agrees_with_column_step(seed):
    g = random_graph(seed, 30, 150)
    v, Lv, nodes = grounded(g)
    f = ichol(Lv, 1e-3)
    deg = g.degrees[nodes].astype(float)
    inv = inverse_columns(f, deg, g.d_max, g.n, 2.0, 4, 0.05, keep_star=True)
    windows = window_sequence(deg, g.d_max, g.n, 2.0)
    cols = {}
    S_tilde = inv.columns.tocsc()
    for u in range(f.dimension - 1, -1, -1):
        star = invert_column_step(f, u, cols, windows[u])
        stored = inv.star[:, u].toarray().ravel()
        assert np.allclose(star.to_dense(f.dimension), stored, atol=1e-14)
        got = S_tilde[:, u]
        cols[u] = SparseColumn(u, got.indices, got.data)
        ref = sparsify_column(star, 0.05, 4)
        assert sorted(ref.indices.tolist()) == sorted(got.indices.tolist())


@pytest.mark.parametrize("seed", range(5))
def test_sparsified_columns_non_negative_and_tau_floor(seed):
    g = random_graph(seed, 30, 200)
    v, Lv, nodes = grounded(g)
    f = ichol(Lv, 1e-3)
    inv = inverse_columns(f, g.degrees[nodes], g.d_max, g.n, 3, 3, 0.1)
    assert (inv.columns.data >= 0).all()
    assert (inv.tau >= 1 / f.R.diagonal() ** 2 - 1e-15).all()


def test_degenerate_parameters_reproduce_exact(small_suite):
    for g in small_suite:
        v = int(np.argmax(g.degrees))
        params = FastCholParams(delta=0.0, eps_p=0.0, window=g.n, zeta=g.n, theta=1e-12)
        res = fastchol(g, v, params)
        assert np.allclose(res.scores, exact_rwc(g).scores, rtol=1e-6)


@pytest.mark.parametrize("ordering", ["natural", "rcm", "degree"])
def test_orderings_are_exact_without_approximation(ordering):
    g = random_graph(3, 40, 120)
    v = int(np.argmax(g.degrees))
    params = FastCholParams(delta=0.0, eps_p=0.0, window=g.n, zeta=g.n, theta=1e-12, ordering=ordering)
    assert np.allclose(fastchol(g, v, params).scores, exact_rwc(g).scores, rtol=1e-6)


def test_defaults_and_metadata():
    g = to_graph(nx.barabasi_albert_graph(300, 3, seed=0))
    v = int(np.argmax(g.degrees))
    res = fastchol(g, v, epsilon=0.1)
    log_n = math.ceil(math.log2(g.n))
    assert res.engine == "fastchol"
    for key, value in {"delta": 1e-4, "eps_p": 0.1, "window": log_n, "zeta": log_n, "ordering": "degree"}.items():
        assert res.params[key] == value
    assert res.params["final_window"] <= g.n
    assert mean_relative_error(exact_rwc(g), res) < 0.1


def test_parameter_validation():
    with pytest.raises(ValueError):
        FastCholParams(eps_p=1.5).validate()
    with pytest.raises(ValueError):
        FastCholParams(window=0).validate()
    with pytest.raises(ValueError):
        FastCholParams(ordering="amd").validate()


def test_monotone_in_delta_and_eps_p():
    suite = [to_graph(nx.barabasi_albert_graph(250, 3, seed=s)) for s in range(4)]
    truth = [exact_rwc(g) for g in suite]

    def median_error(delta, eps_p):
        errs = []
        for g, t in zip(suite, truth):
            v = int(np.argmax(g.degrees))
            errs.append(mean_relative_error(t, fastchol(g, v, FastCholParams(delta=delta, eps_p=eps_p))))
        return float(np.median(errs))

    coarse, fine = median_error(1e-2, 0.3), median_error(1e-4, 0.03)
    assert fine <= coarse
