import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkesnet import _rng
from hawkesnet.random_graph import (
    Adjacency,
    check_events,
    entry,
    read_adjacency,
    sample_adjacency,
    write_adjacency,
)

from oracles import omega_flags, splitmix64_stream


def test_finalize_matches_published_splitmix_vector():
    # first output of SplitMix64 started from state 0
    assert _rng.finalize(_rng.GOLDEN) == 0xE220A8397B1DCDAF


def test_draw_matches_sequential_stream():
    seq = splitmix64_stream(42, 50)
    assert [_rng.draw(42, k) for k in range(50)] == seq


def test_mix_gives_distinct_seeds():
    seeds = {_rng.mix(7, r) for r in range(10_000)}
    assert len(seeds) == 10_000


@pytest.mark.parametrize("p", [0.0, 1.0, 0.5, 2.0**-53])
def test_threshold(p):
    thr = _rng.bernoulli_threshold(p)
    assert thr == int(np.ceil(p * 2.0**53))


def test_threshold_rejects_out_of_range():
    with pytest.raises(ValueError):
        _rng.bernoulli_threshold(1.5)


def test_deterministic_and_addressable():
    a = sample_adjacency(37, 0.3, 11)
    b = sample_adjacency(37, 0.3, 11)
    assert np.array_equal(a.bits, b.bits)
    rng = np.random.default_rng(0)
    for i, j in rng.integers(0, 37, size=(40, 2)):
        assert a.theta[i, j] == entry(37, 0.3, 11, int(i), int(j))


def test_different_seeds_differ():
    assert not np.array_equal(sample_adjacency(64, 0.5, 1).bits, sample_adjacency(64, 0.5, 2).bits)


def test_edge_density():
    a = sample_adjacency(600, 0.3, 5)
    n2 = 600 * 600
    assert abs(a.n_edges / n2 - 0.3) < 4 * np.sqrt(0.3 * 0.7 / n2)


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_extreme_p(p):
    a = sample_adjacency(30, p, 3)
    assert np.all(a.theta == int(p))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 40), p=st.floats(0, 1), seed=st.integers(0, 2**64 - 1))
def test_sums_consistent(n, p, seed):
    a = sample_adjacency(n, p, seed)
    assert np.array_equal(a.row_sums, a.theta.sum(axis=1))
    assert np.array_equal(a.col_sums, a.theta.sum(axis=0))
    assert a.theta.shape == (n, n)


def test_read_only():
    a = sample_adjacency(10, 0.5, 0)
    with pytest.raises(ValueError):
        a.bits[0, 0] = 1
    with pytest.raises(ValueError):
        a.theta[0, 0] = 1


def test_mismatched_sums_rejected():
    a = sample_adjacency(10, 0.5, 0)
    with pytest.raises(ValueError):
        Adjacency(n=10, bits=a.bits.copy(), row_sums=a.row_sums + 1, col_sums=a.col_sums.copy())


def test_from_dense_rejects_non_binary():
    with pytest.raises(ValueError):
        Adjacency.from_dense(np.array([[0, 2], [1, 0]]))


def test_out_neighbors():
    theta = np.array([[0, 1, 1], [1, 0, 0], [0, 1, 0]])
    offs, tgts = Adjacency.from_dense(theta).out_neighbors()
    # column j lists the i with theta_ij = 1
    assert [list(tgts[offs[j]:offs[j + 1]]) for j in range(3)] == [[1], [0, 2], [0]]


def test_text_round_trip(tmp_path):
    a = sample_adjacency(23, 0.4, 9)
    path = tmp_path / "adj.txt"
    write_adjacency(a, path)
    lines = path.read_text().split("\n")
    assert lines[0] == "23" and len(lines[1]) == 23
    b = read_adjacency(path)
    assert np.array_equal(a.theta, b.theta)


def test_read_rejects_bad_shape(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3\n010\n01\n000\n")
    with pytest.raises(ValueError):
        read_adjacency(path)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(4, 40), k_frac=st.floats(0.1, 1), p=st.floats(0.05, 0.95), seed=st.integers(0, 1000))
def test_event_flags_match_direct_norms(n, k_frac, p, seed):
    K = max(1, int(k_frac * n))
    a = sample_adjacency(n, p, seed)
    flags = check_events(a, 0.5, K)
    omega, an = omega_flags(a.theta, 0.5, K, p)
    assert flags.omega_NK == omega
    assert flags.A_N == an


def test_omega_holds_at_desk_scale():
    hits = [check_events(sample_adjacency(400, 0.5, s), 0.5, 200).omega_NK for s in range(20)]
    assert all(hits)


def test_check_events_needs_p():
    a = Adjacency.from_dense(np.eye(3, dtype=int))
    with pytest.raises(ValueError):
        check_events(a, 0.5, 2)
