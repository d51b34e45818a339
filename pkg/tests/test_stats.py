import math

import numpy as np
import pytest

from sbmdeg import community, exactdist, stats
from sbmdeg.model import (
    AdjacencySample,
    CommunityAssignment,
    GraphParams,
    NullMoments,
    ParameterDomainError,
    make_theta,
    sample_graph,
    sample_graph_coupled,
)


def complete(n):
    return AdjacencySample(~np.eye(n, dtype=bool))


def test_degrees_basic():
    assert stats.degrees(AdjacencySample(np.zeros((6, 6), bool))).tolist() == [0] * 6
    assert stats.degrees(complete(4)).tolist() == [3, 3, 3, 3]
    g = sample_graph(GraphParams(50, 20, 5), CommunityAssignment.first_half(50), None, 3)
    assert stats.degrees(g).sum() == 2 * g.n_edges


def test_split_degrees():
    c = CommunityAssignment.first_half(4)
    d1, d2 = stats.split_degrees(complete(4), c)
    assert d1.tolist() == [1] * 4 and d2.tolist() == [2] * 4
    g = sample_graph(GraphParams(50, 20, 5), CommunityAssignment.first_half(50), None, 3)
    c = CommunityAssignment.from_indices(50, range(0, 50, 2))
    d1, d2 = stats.split_degrees(g, c)
    assert np.array_equal(d1 + d2, stats.degrees(g))
    with pytest.raises(ParameterDomainError):
        stats.split_degrees(g, CommunityAssignment.first_half(4))


def test_null_moments_example():
    m = NullMoments.from_params(GraphParams(100, 30, 10))
    assert m.mu_n0 == pytest.approx(19.7, rel=1e-14)
    assert m.sigma_n0_weighted(1, 1) == pytest.approx(m.sigma_n0, rel=1e-15)


def test_standardized_combo_block_agnostic_for_equal_weights():
    p = GraphParams(60, 20, 8)
    g = sample_graph(p, CommunityAssignment.first_half(60), None, 1)
    m = NullMoments.from_params(p)
    ref = stats.standardized_combo(g, CommunityAssignment.first_half(60), 1, 1, m)
    rng = np.random.default_rng(0)
    for _ in range(10):
        c = CommunityAssignment.from_indices(60, rng.permutation(60)[:30])
        assert np.array_equal(stats.standardized_combo(g, c, 1, 1, m), ref)
    assert np.allclose(ref, (stats.degrees(g) - m.mu_n0) / m.sigma_n0)


def test_standardized_combo_zero_at_mean():
    # n=4, a=2, b=2: mu1 = 1 * 0.5 = 0.5 is not integral; use n=8, a=4, b=2:
    # mu1 = 3 * 0.5 = 1.5; pick a=8/3 instead -> mu1 = 3 * 1/3 = 1, mu2 = 4 * b/8 with b=2 -> 1
    p = GraphParams(8, 8 / 3, 2)
    m = NullMoments.from_params(p)
    edges = np.zeros((8, 8), bool)
    edges[0, 1] = edges[1, 0] = True   # same block
    edges[0, 4] = edges[4, 0] = True   # across
    g = AdjacencySample(edges)
    D = stats.standardized_combo(g, CommunityAssignment.first_half(8), 1.3, 0.7, m)
    assert D[0] == pytest.approx(0.0, abs=1e-15)


def test_total_degree_null_small():
    mean, sd = stats.total_degree_null(GraphParams(4, 2, 1))
    assert mean == pytest.approx(4.0)
    assert sd**2 == pytest.approx(4 * (2 * 0.25 + 4 * 0.1875))


def test_total_degree_calibrations():
    p = GraphParams(100, 30, 10)
    g = sample_graph(p, CommunityAssignment.first_half(100), None, 0)
    assert stats.total_degree_test(g, p, ("cutoff", -1)).reject
    out = stats.total_degree_test(g, p, ("chebyshev", 0.04))
    mean, sd = stats.total_degree_null(p)
    assert out.threshold == pytest.approx(mean + 5 * sd)
    out = stats.total_degree_test(g, p, ("normal", 0.05))
    assert out.threshold == pytest.approx(mean + 1.6448536269514722 * sd)
    assert out.reject == (out.statistic > out.threshold)
    with pytest.raises(ParameterDomainError):
        stats.total_degree_test(g, p, ("normal", 1.5))


def test_total_degree_type1():
    p = GraphParams(2000, 200, 100)
    c = CommunityAssignment.first_half(2000)
    rej = [stats.total_degree_test(sample_graph(p, c, None, s), p).reject for s in range(400)]
    # 0.05 +- 3 SE at 400 reps
    assert 0.05 - 3 * 0.011 <= np.mean(rej) <= 0.05 + 3 * 0.011


def test_hc_grid_and_threshold():
    assert stats.hc_grid(100) == [1, 2, 3, 4, 5, 6]
    g = AdjacencySample(np.zeros((100, 100), bool))
    out = stats.hc_test(g, CommunityAssignment.first_half(100), 1, 1, GraphParams(100, 30, 10))
    assert out.threshold == pytest.approx(2.146, abs=5e-4)
    assert out.nuisance["t_grid"] == [1, 2, 3, 4, 5, 6]
    with pytest.raises(ParameterDomainError):
        stats.hc_grid(1)


def test_hc_block_invariance():
    p = GraphParams(200, 60, 20)
    g = sample_graph(p, CommunityAssignment.first_half(200), None, 4)
    v1, _ = stats.hc_statistic(g, CommunityAssignment.first_half(200), 1, 1, p)
    v2, _ = stats.hc_statistic(g, CommunityAssignment.from_indices(200, range(0, 200, 2)), 1, 1, p)
    assert v1 == v2


def test_hc_null_centering_monte_carlo():
    p = GraphParams(100, 30, 10)
    c = CommunityAssignment.first_half(100)
    tail = {t: exactdist.null_tail(p, 1, 1, t) for t in stats.hc_grid(100)}
    var = {t: exactdist.hc_moments("null", p, 1, 1, t)[1] for t in stats.hc_grid(100)}
    ghc = np.array([
        [v for _, v in stats.hc_statistic(sample_graph(p, c, None, s), c, 1, 1, p,
                                          tail.__getitem__, var.__getitem__)[1]]
        for s in range(3000)
    ])
    for k in range(3):  # t = 1, 2, 3 have enough mass for a CLT check
        col = ghc[:, k]
        assert abs(col.mean()) < 3 * col.std() / math.sqrt(col.size)


def test_max_degree_thresholds():
    # sqrt(2.2 * log 100) = 3.18298 (quoted elsewhere truncated as 3.182)
    assert stats.max_degree_threshold(100, ("delta", 0.1)) == pytest.approx(3.182, abs=1e-3)
    assert stats.max_degree_threshold(100, ("delta", 0.1)) == pytest.approx(math.sqrt(2.2 * math.log(100)), rel=1e-15)
    t = [stats.max_degree_threshold(1000, ("delta", d)) for d in (1.0, 0.1, 0.01, 1e-6)]
    assert all(x > y for x, y in zip(t, t[1:]))
    assert t[-1] == pytest.approx(math.sqrt(2 * math.log(1000)), rel=1e-6)
    with pytest.raises(ParameterDomainError):
        stats.max_degree_threshold(100, ("delta", 0))


def test_max_degree_gumbel_options():
    p = GraphParams(200, 60, 20)
    c = CommunityAssignment.first_half(200)
    g = sample_graph(p, c, None, 2)
    out = stats.max_degree_test(g, c, 1, 1, p, ("gumbel", 0.05))
    assert out.warnings and "Gumbel" in out.warnings[0]
    with pytest.raises(ParameterDomainError):
        stats.max_degree_test(g, c, 1.2, 1, p, ("gumbel", 0.05))
    out = stats.max_degree_test(g, c, 1.2, 1, p, ("delta", 0.1))
    assert out.reject == (out.statistic > out.threshold)


def test_coupled_monotonicity_of_statistics():
    p = GraphParams(200, 60, 20)
    c = CommunityAssignment.first_half(200)
    lo = make_theta(p, 0.6, 0.0, "balanced-first")
    hi = make_theta(p, 0.6, 0.8, "balanced-first")
    for s in range(20):
        gl, gh = sample_graph_coupled(p, c, lo, hi, s)
        assert stats.total_degree_test(gh, p).statistic >= stats.total_degree_test(gl, p).statistic
        a = stats.max_degree_test(gl, c, 1.3, 0.8, p, ("delta", 0.1)).statistic
        b = stats.max_degree_test(gh, c, 1.3, 0.8, p, ("delta", 0.1)).statistic
        assert b >= a


def test_two_stage_union_rule():
    p = GraphParams(400, 160, 80)
    c = CommunityAssignment.first_half(400)
    for s in range(5):
        g = sample_graph(p, c, make_theta(p, 0.6, 0.5, seed=s), s)
        out = stats.two_stage_test(g, p, community.spectral_recover)
        nz = out.nuisance
        assert out.reject == (nz["hc_reject"] or nz["max_reject"])
        assert nz["beta1"] == pytest.approx(1 / ((1 - 0.4) * math.sqrt(0.4 / 0.6 + 0.2 / 0.8)))


def test_two_stage_recovery_failure_is_inconclusive():
    p = GraphParams(200, 60, 20)
    g = sample_graph(p, CommunityAssignment.first_half(200), None, 0)

    def broken(_):
        raise RuntimeError("no gap")

    out = stats.two_stage_test(g, p, broken)
    mx = stats.max_degree_test(g, None, 1, 1, p, ("gumbel", 0.05))
    assert out.nuisance["inconclusive"] and out.reject == mx.reject
    assert any("recovery failed" in w for w in out.warnings)


def test_two_stage_equal_rates():
    p = GraphParams(200, 40, 40)
    g = sample_graph(p, CommunityAssignment.first_half(200), None, 0)
    out = stats.two_stage_test(g, p, community.spectral_recover)
    assert (out.nuisance["beta1"], out.nuisance["beta2"]) == (1.0, 1.0)
