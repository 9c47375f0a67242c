import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwalk.errors import DimensionMismatch, InvalidParameter, NonConvergence
from rwalk.graph import Graph, build_erdos_renyi, build_grid2d, build_ring, build_watts_strogatz
from rwalk.transition import (RowStochasticMatrix, adjacency_matrix, as_distribution,
                              detailed_balance_residual, importance_distribution, jump_length_pmf,
                              levy_matrix, mh_importance, mh_target, mh_uniform, mix, mixing_time,
                              one_norm_diff, simple_rw, stationary, tv_distance, walk_counts)

from conftest import complete, path, star, stationary_oracle


def dense_levy(g: Graph, p_d: float, r: int, self_loops: bool = False) -> np.ndarray:
    a = adjacency_matrix(g, self_loops).toarray().astype(float)
    out = np.zeros_like(a)
    for i in range(1, r + 1):
        w = p_d * (1 - p_d) ** (i - 1) / (1 - (1 - p_d) ** r)
        ai = np.linalg.matrix_power(a, i)
        out += w * ai / ai.sum(axis=1, keepdims=True)
    return out


def small_graphs():
    yield build_ring(5)
    yield build_ring(12)
    yield build_grid2d(3, 4)
    yield build_grid2d(1, 6)
    yield star(4)
    yield complete(6)
    yield build_erdos_renyi(20, 0.2, seed=1)
    yield build_erdos_renyi(30, 0.15, seed=2)
    yield build_watts_strogatz(30, 4, 0.2, seed=3)


def test_simple_rw(ring5):
    p = simple_rw(ring5)
    assert p[0, 1] == p[0, 4] == 0.5
    assert p[0, 0] == 0
    s = simple_rw(star(3))
    assert s[0, 1] == pytest.approx(1 / 3)
    assert np.allclose(s.toarray().sum(axis=1), 1)


def test_mh_uniform_regular_equals_simple(ring5):
    np.testing.assert_array_equal(mh_uniform(ring5).toarray(), simple_rw(ring5).toarray())


def test_mh_uniform_path():
    p = mh_uniform(path(3))
    assert p[1, 0] == 0.5
    assert p[0, 1] == 0.5
    assert p[0, 0] == 0.5


def test_mh_uniform_stationary_uniform():
    pi = stationary(mh_uniform(build_ring(7)))
    assert tv_distance(pi, np.full(7, 1 / 7)) < 1e-10


def test_mh_importance_trap_row(ring5, trap_lipschitz):
    p = mh_importance(ring5, trap_lipschitz)
    assert p[0, 1] == pytest.approx(1 / 200, rel=1e-15)
    assert p[0, 4] == pytest.approx(1 / 200, rel=1e-15)
    assert p[0, 0] == pytest.approx(0.99, rel=1e-15)
    assert p[1, 0] == 0.5
    assert p[1, 2] == 0.5
    assert p[1, 1] == 0


def test_mh_importance_equal_weights_is_mh_uniform():
    g = build_erdos_renyi(25, 0.2, seed=4)
    np.testing.assert_allclose(mh_importance(g, np.full(25, 3.0)).toarray(),
                               mh_uniform(g).toarray(), atol=1e-15)


def test_mh_importance_rejects_nonpositive(ring5):
    with pytest.raises(InvalidParameter):
        mh_importance(ring5, [1, 1, 0, 1, 1])


def test_mh_importance_detailed_balance_random():
    rng = np.random.default_rng(0)
    g = build_ring(50)
    lip = rng.uniform(1, 100, 50)
    p = mh_importance(g, lip)
    assert detailed_balance_residual(p, importance_distribution(lip)) < 1e-14


def test_mh_target_matches_importance_and_uniform():
    rng = np.random.default_rng(1)
    g = build_erdos_renyi(30, 0.3, seed=7)
    lip = rng.uniform(1, 50, 30)
    np.testing.assert_allclose(mh_target(g, importance_distribution(lip)).toarray(),
                               mh_importance(g, lip).toarray(), atol=1e-15)
    np.testing.assert_allclose(mh_target(g, np.full(30, 1 / 30)).toarray(),
                               mh_uniform(g).toarray(), atol=1e-15)
    with pytest.raises(InvalidParameter):
        mh_target(g, np.r_[0.0, np.full(29, 1 / 29)])


def test_mh_target_stationary_recovery():
    rng = np.random.default_rng(2)
    g = build_erdos_renyi(30, 0.3, seed=8)
    pi = rng.uniform(0.1, 1, 30)
    pi /= pi.sum()
    assert tv_distance(stationary(mh_target(g, pi)), pi) < 1e-10


def test_mh_target_recovery_many():
    rng = np.random.default_rng(3)
    graphs = [build_erdos_renyi(int(n), 0.25, seed=s) for s, n in enumerate(rng.integers(8, 41, 3))]
    graphs += [build_grid2d(4, 5), build_watts_strogatz(36, 4, 0.2, seed=1)]
    for g in graphs:
        for _ in range(20):
            pi = rng.uniform(0.05, 1, g.n)
            pi /= pi.sum()
            assert tv_distance(stationary(mh_target(g, pi)), pi) < 1e-8


def test_levy_hand_row(ring5):
    p = levy_matrix(ring5, 0.5, 2)
    cols, vals = p.row(0)
    row = dict(zip(cols.tolist(), vals.tolist()))
    expected = {0: 1 / 6, 1: 1 / 3, 4: 1 / 3, 2: 1 / 12, 3: 1 / 12}
    assert row.keys() == expected.keys()
    for k, v in expected.items():
        assert row[k] == pytest.approx(v, abs=1e-15)


def test_walk_counts_are_walks_not_reachability(ring5):
    a2 = walk_counts(ring5, 2)[1].toarray()
    assert a2[0].tolist() == [2, 0, 1, 1, 0]


@pytest.mark.parametrize("p_d", [0.1, 0.5, 0.9])
def test_levy_r1_is_simple_rw(ring5, p_d):
    g = build_grid2d(3, 3)
    np.testing.assert_allclose(levy_matrix(g, p_d, 1).toarray(), simple_rw(g).toarray(), atol=1e-15)


@pytest.mark.parametrize("p_d,r", [(0.5, 3), (0.1, 8), (0.9, 1), (0.3, 5)])
def test_jump_pmf_sums_to_one(p_d, r):
    assert jump_length_pmf(p_d, r).sum() == pytest.approx(1, abs=1e-15)


@pytest.mark.parametrize("self_loops", [False, True])
def test_levy_matches_dense_powers(self_loops):
    for g in small_graphs():
        for p_d, r in [(0.5, 3), (0.3, 4), (0.8, 2)]:
            got = levy_matrix(g, p_d, r, self_loops).toarray()
            np.testing.assert_allclose(got, dense_levy(g, p_d, r, self_loops), atol=1e-12, rtol=0)


def test_levy_support_within_r_hops():
    g = build_ring(20)
    p = levy_matrix(g, 0.5, 3)
    for i in range(20):
        cols, _ = p.row(i)
        assert all(min(abs(i - j), 20 - abs(i - j)) <= 3 for j in cols)


def test_walk_count_overflow_guard():
    with pytest.raises(OverflowError):
        walk_counts(complete(30), 20)


def test_mix_endpoints_and_midpoint(ring5, trap_lipschitz):
    p_is = mh_importance(ring5, trap_lipschitz)
    lev = levy_matrix(ring5, 0.5, 3)
    np.testing.assert_array_equal(mix(p_is, lev, 0.0).toarray(), p_is.toarray())
    np.testing.assert_array_equal(mix(p_is, lev, 1.0).toarray(), lev.toarray())
    np.testing.assert_allclose(mix(p_is, lev, 0.1).toarray(),
                               0.9 * p_is.toarray() + 0.1 * lev.toarray(), atol=1e-16)
    with pytest.raises(DimensionMismatch):
        mix(p_is, levy_matrix(build_ring(6), 0.5, 3), 0.1)


def test_builders_are_row_stochastic():
    rng = np.random.default_rng(5)
    for g in small_graphs():
        lip = rng.uniform(1, 100, g.n)
        for p in (simple_rw(g), mh_uniform(g), mh_importance(g, lip), levy_matrix(g, 0.5, 3)):
            sums = p.toarray().sum(axis=1)
            assert np.all(np.abs(sums - 1) <= 1e-12)
            assert p.matrix.data.min() >= 0


def test_support_check_rejects_foreign_entries(ring5):
    bad = simple_rw(ring5).matrix.toarray()
    bad[0] = 0
    bad[0, 2] = 1.0
    with pytest.raises(InvalidParameter):
        RowStochasticMatrix(bad, "bad", simple_rw(ring5).support)


def test_row_sum_check():
    with pytest.raises(InvalidParameter):
        RowStochasticMatrix(np.array([[0.5, 0.4], [0.5, 0.5]]))


def test_stationary_against_linear_solve():
    rng = np.random.default_rng(6)
    g = build_grid2d(4, 4)
    lip = rng.uniform(1, 100, 16)
    p = mix(mh_importance(g, lip), levy_matrix(g, 0.5, 3), 0.2)
    np.testing.assert_allclose(stationary(p), stationary_oracle(p.toarray()), atol=1e-10)


def test_stationary_importance(ring5, trap_lipschitz):
    pi = stationary(mh_importance(ring5, trap_lipschitz))
    assert tv_distance(pi, importance_distribution(trap_lipschitz)) < 1e-10


def test_stationary_periodic_fails():
    # parity classes of unequal size: the uniform start oscillates forever
    with pytest.raises(NonConvergence) as info:
        stationary(simple_rw(path(3)), max_iter=2000)
    assert info.value.last is not None and info.value.residual > 0


def test_tv_distance():
    assert tv_distance([0.2, 0.8], [0.2, 0.8]) == 0
    assert tv_distance([1, 0, 0], [0, 0, 1]) == 1
    assert tv_distance([0.5, 0.5], [1, 0]) == 0.5
    with pytest.raises(DimensionMismatch):
        tv_distance([1], [0.5, 0.5])


def brute_mixing_time(p: np.ndarray, pi: np.ndarray, eps: float) -> int:
    pt = np.eye(p.shape[0])
    for t in range(1, 100_000):
        pt = pt @ p
        if 0.5 * np.abs(pt - pi).sum(axis=1).max() <= eps:
            return t
    raise AssertionError


@pytest.mark.parametrize("n", [5, 8, 12])
def test_mixing_time_complete_graph(n):
    assert mixing_time(mh_uniform(complete(n))) == 1


def test_mixing_time_against_brute_force():
    rng = np.random.default_rng(7)
    g = build_ring(12)
    lip = rng.uniform(1, 30, 12)
    for p in (mh_importance(g, lip), mix(mh_importance(g, lip), levy_matrix(g, 0.5, 3), 0.1)):
        pi = stationary_oracle(p.toarray())
        for eps in (0.25, 0.1):
            assert mixing_time(p, eps) == brute_mixing_time(p.toarray(), pi, eps)


def test_mixing_time_identity_fails():
    with pytest.raises(NonConvergence):
        mixing_time(RowStochasticMatrix(np.eye(4)), t_max=50)


def test_mixing_time_jumps_help_on_ring():
    g = build_ring(50)
    lip = np.ones(50)
    lip[0] = 100.0
    p_is = mh_importance(g, lip)
    p_mix = mix(p_is, levy_matrix(g, 0.5, 3), 0.1)
    assert mixing_time(p_mix) <= mixing_time(p_is)


def test_detailed_balance(ring5, trap_lipschitz):
    pi = importance_distribution(trap_lipschitz)
    p_is = mh_importance(ring5, trap_lipschitz)
    assert detailed_balance_residual(p_is, pi) < 1e-14
    p_mix = mix(p_is, levy_matrix(ring5, 0.5, 3), 0.1)
    assert detailed_balance_residual(p_mix, pi) > 1e-6
    assert detailed_balance_residual(simple_rw(ring5), np.full(5, 0.2)) == 0


def test_one_norm_diff(ring5, trap_lipschitz):
    p_is = mh_importance(ring5, trap_lipschitz)
    lev = levy_matrix(ring5, 0.5, 2)
    assert one_norm_diff(p_is, p_is) == 0
    dense = np.abs(p_is.toarray() - lev.toarray()).sum(axis=1).max()
    assert one_norm_diff(p_is, lev) == pytest.approx(dense, abs=1e-15)
    assert 0 <= one_norm_diff(p_is, lev) <= 2


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(3, 25))
def test_one_norm_bounded(seed, n):
    rng = np.random.default_rng(seed)
    g = build_ring(n)
    a = mh_importance(g, rng.uniform(1, 100, n))
    b = levy_matrix(g, float(rng.uniform(0.05, 0.95)), int(rng.integers(1, 5)))
    assert 0 <= one_norm_diff(a, b) <= 2 + 1e-12


def test_perturbation_monotone_in_p_j(ring5, trap_lipschitz):
    pi = importance_distribution(trap_lipschitz)
    p_is = mh_importance(ring5, trap_lipschitz)
    lev = levy_matrix(ring5, 0.5, 3)
    gaps = [tv_distance(stationary(mix(p_is, lev, pj)), pi) for pj in (0, 0.05, 0.1, 0.2, 0.4)]
    assert gaps[0] < 1e-10
    assert all(a <= b for a, b in zip(gaps, gaps[1:]))


def test_matrix_dump_round_trip(ring5, trap_lipschitz):
    p = mix(mh_importance(ring5, trap_lipschitz), levy_matrix(ring5, 0.5, 3), 0.1)
    text = p.to_text()
    assert text.splitlines()[0] == "# n=5 kind=mix"
    q = RowStochasticMatrix.from_text(text)
    np.testing.assert_array_equal(q.toarray(), p.toarray())


def test_as_distribution():
    with pytest.raises(InvalidParameter):
        as_distribution([0.5, 0.6])
    with pytest.raises(DimensionMismatch):
        as_distribution([1.0], n=2)
