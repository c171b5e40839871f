import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalcap import ConfigError, DomainError, EstimationError
from fractalcap.socialgraph import SocialGraph, generate_graph
from fractalcap.wireless import (Deployment, Rule, capacity_estimate, deploy,
                                 estimate_hierarchical_hops, estimate_mean_hops, grid_hops,
                                 occupancy_report, protocol_check, select_destination,
                                 tdma_parameters, transmission_range, transport_stability_sim)


def at_cells(cells, grid=10, **kw):
    """Deployment with one user at the centre of each listed cell."""
    pos = (np.asarray(cells, dtype=float) + 0.5) / grid
    return Deployment.from_positions(pos, grid=grid, **kw)


# ---- deployment

def test_range_and_grid_for_ten_thousand():
    dep = deploy(10_000, C0=1, C1=1, seed=0)
    assert dep.r == pytest.approx(math.sqrt(math.log(10_000) / 10_000), rel=1e-12)
    assert dep.r == pytest.approx(0.030349, abs=1e-6)
    assert dep.grid == 32 and dep.T == 4


@settings(max_examples=25, deadline=None)
@given(st.integers(50, 3000), st.integers(0, 2**32 - 1))
def test_deployment_invariants(n, seed):
    dep = deploy(n, seed=seed)
    assert np.all((dep.positions >= 0) & (dep.positions < 1))
    assert np.array_equal(dep.cells, np.floor(dep.positions * dep.grid).astype(int))
    assert dep.r == pytest.approx(transmission_range(n), rel=1e-12)
    assert dep.T >= (2 + dep.delta) / dep.C1
    assert dep.cell_side >= dep.C1 * dep.r


def test_deploy_is_deterministic():
    assert np.array_equal(deploy(500, seed=3).positions, deploy(500, seed=3).positions)


def test_grid_too_small_is_config_error():
    with pytest.raises(ConfigError):
        deploy(2, seed=0)
    with pytest.raises(DomainError):
        deploy(100, C0=0)


def test_positions_outside_square_rejected():
    with pytest.raises(DomainError):
        Deployment.from_positions([[0.5, 1.0]], grid=2)


def test_deployment_csv(tmp_path):
    dep = at_cells([[0, 0], [3, 4]])
    p = tmp_path / "dep.csv"
    dep.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "node,x,y,cell_i,cell_j"
    assert lines[2] == "1,0.35,0.45,3,4"


# ---- occupancy

def test_one_user_in_two_by_two():
    assert occupancy_report(Deployment.from_positions([[0.1, 0.1]], grid=2)) == 0.75


def test_single_cell_never_empty():
    assert occupancy_report(Deployment.from_positions([[0.1, 0.1], [0.7, 0.2]], grid=1)) == 0.0


@pytest.mark.slow
def test_large_deployments_fill_the_grid():
    fine = sum(occupancy_report(deploy(100_000, seed=s)) < 0.05 for s in range(10))
    assert fine >= 9


# ---- hops

def test_grid_hop_examples():
    dep = at_cells([[0, 0], [3, 4], [2, 2], [2, 5], [3, 4]])
    assert grid_hops(dep, 0, 1) == 7
    assert grid_hops(dep, 1, 4) == 0
    assert grid_hops(dep, 2, 3) == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=3, max_size=3))
def test_grid_hops_is_a_metric(cells):
    dep = at_cells(cells)
    d = lambda a, b: grid_hops(dep, a, b)
    for a in range(3):
        assert d(a, a) == 0
        for b in range(3):
            assert d(a, b) == d(b, a) >= 0
            assert (d(a, b) == 0) == (tuple(cells[a]) == tuple(cells[b]))
            for c in range(3):
                assert d(a, c) <= d(a, b) + d(b, c)


def test_rule_parsing():
    assert Rule.parse("powerlaw:2.5") == Rule("powerlaw", beta=2.5)
    assert str(Rule.parse("level:3")) == "level:3"
    for bad in ("powerlaw:-1", "level:0", "flood", "uniform:3"):
        with pytest.raises(DomainError):
            Rule.parse(bad)


# ---- destination selection

def star_with_two_contacts():
    g = SocialGraph.from_edges(3, [(0, 1), (0, 2)])
    dep = Deployment.from_positions([[0.5, 0.5], [0.6, 0.5], [0.5, 0.7]], grid=20)
    return g, dep


def test_powerlaw_probabilities_inverse_distance():
    g, dep = star_with_two_contacts()
    draws = np.array([select_destination(g, dep, 0, "powerlaw:1", seed=s) for s in range(30_000)])
    p1 = np.mean(draws == 1)
    assert abs(p1 - 2 / 3) <= 3 * math.sqrt(2 / 9 / 30_000)
    # vectorised path used by the estimators
    from fractalcap.wireless import _contact_cdf
    cdf = _contact_cdf(g, dep, 1.0)
    assert cdf[:2] == pytest.approx([2 / 3, 1.0], rel=1e-12)


def test_short_distances_are_clamped_to_a_cell():
    g = SocialGraph.from_edges(3, [(0, 1), (0, 2)])
    dep = Deployment.from_positions([[0.5, 0.5], [0.5001, 0.5], [0.5, 0.52]], grid=20)
    from fractalcap.wireless import _contact_cdf
    # both contacts closer than one cell (0.05): equal weights
    assert _contact_cdf(g, dep, 3.0)[:2] == pytest.approx([0.5, 1.0], rel=1e-12)


def test_beta_zero_is_uniform():
    g, dep = star_with_two_contacts()
    for s in range(50):
        assert select_destination(g, dep, 0, "powerlaw:0", seed=s) == select_destination(g, dep, 0, "uniform", seed=s)


def test_beta_zero_and_uniform_frequencies():
    g = generate_graph(300, 2.5, 2.5, seed=1)
    dep = deploy(300, seed=2)
    src = int(np.argmax(g.degree))
    nb = g.neighbors(src)
    draws = 100_000
    p = 1 / nb.size
    for rule in ("uniform", "powerlaw:0"):
        rng = np.random.default_rng(9)
        got = np.array([select_destination(g, dep, src, rule, seed=rng) for _ in range(draws)])
        counts = np.array([np.sum(got == v) for v in nb])
        assert np.all(np.abs(counts - draws * p) <= 3 * math.sqrt(draws * p * (1 - p)) + 1)


def test_single_contact_always_chosen_and_none_without_contacts():
    g = SocialGraph.from_edges(3, [(0, 1)])
    dep = at_cells([[0, 0], [1, 1], [2, 2]])
    assert {select_destination(g, dep, 0, "powerlaw:2", seed=s) for s in range(20)} == {1}
    assert select_destination(g, dep, 2, "uniform") is None
    assert select_destination(g, dep, 0, "level:2") is None


def test_level_destination_is_at_exact_distance():
    g = SocialGraph.from_edges(5, [(i, i + 1) for i in range(4)])
    dep = at_cells([[i, 0] for i in range(5)])
    assert {select_destination(g, dep, 2, "level:2", seed=s) for s in range(40)} == {0, 4}


# ---- hop estimation

def test_co_celled_users_need_no_hops():
    g = generate_graph(200, 2.5, 2.5, seed=0)
    dep = Deployment.from_positions(np.full((200, 2), 0.3), grid=4)
    assert estimate_mean_hops(g, dep, "uniform", 500, seed=1).mean == 0.0


def test_two_node_graph_is_deterministic():
    g = SocialGraph.from_edges(2, [(0, 1)])
    est = estimate_mean_hops(g, at_cells([[0, 0], [3, 4]]), "uniform", 100, seed=0)
    assert (est.mean, est.stderr, est.trials) == (7.0, 0.0, 100)


def test_estimates_are_prefix_stable():
    g = generate_graph(2000, 2.5, 2.5, seed=4)
    dep = deploy(2000, seed=5)
    for rule in ("uniform", "powerlaw:2", "level:2"):
        full = estimate_mean_hops(g, dep, rule, 300, seed=8).samples
        part = estimate_mean_hops(g, dep, rule, 120, seed=8).samples
        assert np.array_equal(full[:120], part)
    full = estimate_hierarchical_hops(g, dep, 60, seed=8).samples
    assert np.array_equal(full[:25], estimate_hierarchical_hops(g, dep, 25, seed=8).samples)


def test_level_one_equals_uniform():
    g = generate_graph(1500, 2.5, 2.5, seed=6)
    dep = deploy(1500, seed=6)
    a = estimate_mean_hops(g, dep, "level:1", 400, seed=2)
    b = estimate_mean_hops(g, dep, "uniform", 400, seed=2)
    assert np.array_equal(a.samples, b.samples)


def test_no_eligible_source():
    g = SocialGraph.from_edges(3, [])
    with pytest.raises(EstimationError):
        estimate_mean_hops(g, at_cells([[0, 0], [1, 1], [2, 2]]), "uniform", 10)
    with pytest.raises(DomainError):
        estimate_mean_hops(SocialGraph.from_edges(2, [(0, 1)]), at_cells([[0, 0], [1, 1]]), "uniform", 0)


def test_hierarchical_on_single_edge():
    g = SocialGraph.from_edges(2, [(0, 1)])
    est = estimate_hierarchical_hops(g, at_cells([[0, 0], [2, 3]]), 50, seed=0)
    assert est.mean == 5.0 and est.per_level == {1: (50, 5.0)}


def test_hierarchical_sums_hops_along_the_path():
    g = SocialGraph.from_edges(3, [(0, 1), (1, 2)])
    dep = at_cells([[0, 0], [3, 0], [3, 4]])
    est = estimate_hierarchical_hops(g, dep, 400, seed=1)
    assert est.per_level[2][1] == 7.0
    # ordered pairs: two at level 2 (7 hops), four at level 1 (3 or 4 hops)
    assert est.per_level[1][1] == pytest.approx(3.5, abs=0.2)


def test_hierarchical_resamples_disconnected_pairs():
    g = SocialGraph.from_edges(4, [(0, 1)])
    est = estimate_hierarchical_hops(g, at_cells([[0, 0], [1, 0], [5, 5], [6, 6]]), 30, seed=2)
    assert est.mean == 1.0 and est.resamples > 0
    with pytest.raises(EstimationError):
        estimate_hierarchical_hops(SocialGraph.from_edges(3, []), at_cells([[0, 0], [1, 1], [2, 2]]), 5)


# ---- scheduling and capacity

@pytest.mark.parametrize("C1, delta, T", [(1, 1, 4), (1, 0, 3), (1, 2, 5), (0.5, 1, 7), (2, 0, 2)])
def test_tdma_spacing(C1, delta, T):
    assert tdma_parameters(C1, delta) == T


def test_tdma_domain():
    with pytest.raises(DomainError):
        tdma_parameters(0, 1)
    with pytest.raises(DomainError):
        tdma_parameters(1, -0.5)


def test_single_active_cell_has_no_interference():
    dep = Deployment.from_positions([[0.1, 0.1], [0.2, 0.2], [0.3, 0.1]], grid=1)
    assert protocol_check(dep, 500, seed=0) == 0


def test_protocol_holds_at_default_spacing():
    assert protocol_check(deploy(10_000, seed=3), 10_000, seed=4) == 0


def test_protocol_fails_without_spacing():
    assert protocol_check(deploy(10_000, seed=3).with_T(1), 2_000, seed=4) > 0


def test_capacity_arithmetic():
    dep = Deployment.from_positions(np.random.default_rng(0).random((10_000, 2)), grid=32, T=4)
    assert capacity_estimate(20.0, dep) == pytest.approx(3.2e-4, rel=1e-14)
    assert capacity_estimate(40.0, dep) == pytest.approx(capacity_estimate(20.0, dep) / 2, rel=1e-15)
    with pytest.warns(RuntimeWarning):
        assert capacity_estimate(0.0, dep) == pytest.approx(64 / 10_000, rel=1e-15)
    with pytest.raises(DomainError):
        capacity_estimate(-1.0, dep)


def test_capacity_decreases_with_n():
    small = Deployment.from_positions(np.random.default_rng(0).random((100, 2)), grid=8, T=4)
    big = Deployment.from_positions(np.random.default_rng(0).random((200, 2)), grid=8, T=4)
    assert capacity_estimate(5.0, big) < capacity_estimate(5.0, small)


# ---- transport simulation

def test_zero_load_keeps_queues_empty():
    g = generate_graph(1000, 2.5, 2.5, seed=0)
    dep = deploy(1000, seed=0)
    res = transport_stability_sim(g, dep, "uniform", 0.0, 200, seed=1)
    assert res.stable and not np.any(res.trajectory) and res.generated == 0


def test_simulation_conserves_packets_and_checks_arguments():
    g = generate_graph(1000, 2.5, 2.5, seed=0)
    dep = deploy(1000, seed=0)
    res = transport_stability_sim(g, dep, "powerlaw:2", 0.002, 400, seed=3)
    backlog = res.trajectory[-1] * dep.total_cells
    assert res.generated == res.delivered + round(backlog)
    with pytest.raises(DomainError):
        transport_stability_sim(g, dep, "uniform", 0.001, dep.T ** 2 - 1)
    from fractalcap import UnsupportedRegimeError
    with pytest.raises(UnsupportedRegimeError):
        transport_stability_sim(g, dep, "hierarchical", 0.001, 100)


def test_simulation_is_deterministic():
    g = generate_graph(600, 2.5, 2.5, seed=0)
    dep = deploy(600, seed=0)
    a = transport_stability_sim(g, dep, "uniform", 0.003, 300, seed=5)
    b = transport_stability_sim(g, dep, "uniform", 0.003, 300, seed=5)
    assert np.array_equal(a.trajectory, b.trajectory)
