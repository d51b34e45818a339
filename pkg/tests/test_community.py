import numpy as np
import pytest

from sbmdeg import community as cm
from sbmdeg.model import (
    AdjacencySample,
    CommunityAssignment,
    GraphParams,
    ParameterDomainError,
    make_theta,
    sample_graph,
)


def two_cliques(n, perm=None):
    blk = np.arange(n) < n // 2
    if perm is not None:
        blk = blk[perm]
    e = blk[:, None] == blk[None, :]
    np.fill_diagonal(e, False)
    return AdjacencySample(e), CommunityAssignment(blk)


def test_partition_distance():
    c1 = CommunityAssignment.from_indices(4, [0, 1])
    c2 = CommunityAssignment.from_indices(4, [0, 2])
    assert cm.partition_distance(c1, c1) == 0
    assert cm.partition_distance(c1, c1.complement()) == 0
    assert cm.partition_distance(c1, c2) == 2
    assert cm.partition_distance(c2, c1) == 2
    with pytest.raises(ParameterDomainError):
        cm.partition_distance(c1, CommunityAssignment.first_half(6))


def test_partition_distance_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = CommunityAssignment.from_indices(20, rng.permutation(20)[:10])
        b = CommunityAssignment.from_indices(20, rng.permutation(20)[:10])
        d = cm.partition_distance(a, b)
        assert 0 <= d <= 10 and d % 2 == 0


@pytest.mark.parametrize("n", range(4, 66, 2))
def test_two_cliques_exact(n):
    perm = np.random.default_rng(n).permutation(n)
    g, truth = two_cliques(n, perm)
    rep = cm.spectral_recover(g, seed=n)
    assert cm.partition_distance(rep.estimate, truth) == 0
    assert rep.estimate.members.sum() == n // 2


def test_empty_graph_balanced():
    rep = cm.spectral_recover(AdjacencySample(np.zeros((10, 10), bool)))
    assert not rep.converged
    assert rep.estimate.members.sum() == 5


def test_recovery_dense_regime():
    p = GraphParams(2000, 1000, 400)
    c = CommunityAssignment.first_half(2000)
    exact = 0
    for s in range(50):
        rep = cm.spectral_recover(sample_graph(p, c, None, s))
        assert rep.converged and rep.spectral_gap > 0
        exact += cm.partition_distance(rep.estimate, c) == 0
    assert exact >= 48


def test_recovery_deterministic():
    p = GraphParams(300, 120, 40)
    g = sample_graph(p, CommunityAssignment.first_half(300), None, 3)
    r1, r2 = cm.spectral_recover(g), cm.spectral_recover(g)
    assert r1 == r2


def test_recovery_risk():
    p = GraphParams(200, 80, 20)
    scen = [(p, CommunityAssignment.first_half(200), None)]
    r = cm.recovery_risk(cm.spectral_recover, scen, 1, 5)
    assert r == cm.recovery_risk(cm.spectral_recover, scen, 1, 5)
    # bounded theta (A = 1) on a dense graph; a/n = 0.2 keeps (1+A)^2 a/n <= 1
    p = GraphParams(2000, 400, 160)
    c = CommunityAssignment.first_half(2000)
    scen = [(p, c, None), (p, c, make_theta(p, 0.8, 1.0, "balanced-first"))]
    assert cm.recovery_risk(cm.spectral_recover, scen, 10, 1) <= 0.1
    with pytest.raises(ParameterDomainError):
        cm.recovery_risk(cm.spectral_recover, scen, 0, 1)
