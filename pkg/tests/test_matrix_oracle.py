import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkesnet.errors import SpectralFailure
from hawkesnet.kernels import Exponential, ModelParams
from hawkesnet.matrix_oracle import analyze_graph, ell_bar_limit, limit_triple
from hawkesnet.random_graph import Adjacency, sample_adjacency

from oracles import limit_scalars, neumann_c, neumann_ell


@pytest.mark.parametrize("method", ["direct", "krylov"])
def test_vectors_match_neumann(method):
    a = sample_adjacency(60, 0.5, 4)
    an = analyze_graph(a, 0.5, 1.0, 30, method=method)
    assert np.max(np.abs(an.ell - neumann_ell(a.theta, 0.5))) < 1e-10
    assert np.max(np.abs(an.c_K - neumann_c(a.theta, 0.5, 30))) < 1e-10


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 50), p=st.floats(0.05, 1), lam=st.floats(0.05, 0.95), seed=st.integers(0, 10**6))
def test_scalars_match_inverse(n, p, lam, seed):
    a = sample_adjacency(n, p, seed)
    K = max(1, n // 2)
    an = analyze_graph(a, lam, 1.3, K)
    V, A, W, X = limit_scalars(a.theta, lam, 1.3, K)
    assert an.V_inf == pytest.approx(V, rel=1e-9, abs=1e-12)
    assert an.A_inf == pytest.approx(A, rel=1e-9)
    assert an.W_inf == pytest.approx(W, rel=1e-9)
    assert an.X_inf == pytest.approx(X, rel=1e-9, abs=1e-9)


def test_krylov_and_direct_agree_at_size():
    a = sample_adjacency(900, 0.5, 2)
    d = analyze_graph(a, 0.5, 1.0, 450, method="direct")
    k = analyze_graph(a, 0.5, 1.0, 450, method="krylov")
    assert np.max(np.abs(d.ell - k.ell)) < 1e-10
    assert d.V_inf == pytest.approx(k.V_inf, rel=1e-8)


def test_all_ones_graph_has_zero_V():
    a = Adjacency.from_dense(np.ones((40, 40), dtype=int))
    an = analyze_graph(a, 0.5, 1.0, 20)
    # ell is constant 1 / (1 - Lambda)
    assert np.allclose(an.ell, 2.0)
    assert an.V_inf == pytest.approx(0.0, abs=1e-20)


def test_empty_graph():
    a = sample_adjacency(30, 0.0, 1)
    an = analyze_graph(a, 0.5, 2.0, 10)
    assert np.all(an.ell == 1.0)
    assert an.V_inf == 0.0
    # W = mu N/K^2 * sum_j c_j^2 = mu N / K, X = mu N/K - (N-K) mu / K = mu
    assert an.X_inf == pytest.approx(2.0)


def test_spectral_precondition():
    a = Adjacency.from_dense(np.ones((10, 10), dtype=int))
    with pytest.raises(SpectralFailure):
        analyze_graph(a, 1.0, 1.0, 5)


def test_outputs_read_only():
    an = analyze_graph(sample_adjacency(10, 0.5, 0), 0.5, 1.0, 5)
    with pytest.raises(ValueError):
        an.ell[0] = 0.0


def test_limit_triple_values():
    u, v, w = limit_triple(ModelParams(1.0, 0.5, Exponential.from_mass(0.5)))
    assert (u, v, w) == pytest.approx((4 / 3, 1 / 9, 64 / 27), rel=1e-15)
    assert ell_bar_limit(ModelParams(1.0, 0.5, Exponential.from_mass(0.5))) == pytest.approx(4 / 3)


def test_graph_means_approach_limits():
    params = ModelParams(1.0, 0.5, Exponential.from_mass(0.5))
    u, v, w = limit_triple(params)
    vals = [analyze_graph(sample_adjacency(800, 0.5, s), 0.5, 1.0, 400) for s in range(10)]
    assert np.mean([an.ell_bar_K for an in vals]) == pytest.approx(u, rel=2e-3)
    assert np.mean([an.V_inf for an in vals]) == pytest.approx(v, rel=0.1)
    assert np.mean([an.X_inf for an in vals]) == pytest.approx(w, rel=0.02)
