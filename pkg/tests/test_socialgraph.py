import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalcap import DomainError, FitError
from fractalcap.socialgraph import (PowerLawDist, SocialGraph, build_graph, default_kmax,
                                    edge_degree_stats, fit_degree_histogram, generate_graph,
                                    powerlaw_normalization, read_edgelist, realized_degree_fit,
                                    sample_degrees, sample_without_replacement, write_edgelist)


# ---- degree law

def test_normalization_single_term():
    assert powerlaw_normalization(2.7, 1) == 1.0


def test_normalization_two_terms():
    # oracle: 1 + 2**-2.5 = 1.1767766952966369
    assert powerlaw_normalization(2.5, 2) == pytest.approx(1.1767766952966369, rel=1e-15)


def test_normalization_approaches_zeta2():
    # partial sum to 10^7 differs from pi^2/6 by ~1/kmax
    assert powerlaw_normalization(2.0, 10**7) == pytest.approx(math.pi ** 2 / 6 - 1e-7, abs=1e-12)


def test_normalization_domain():
    with pytest.raises(DomainError):
        powerlaw_normalization(2.0, 0)
    with pytest.raises(DomainError):
        powerlaw_normalization(1.0, 5)


def test_powerlaw_dist_invariants():
    d = PowerLawDist.create(2.5, 50)
    pmf = d.pmf()
    assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(pmf) < 0)
    assert d.cdf[-1] == 1.0


def test_default_kmax():
    assert default_kmax(10_000) == 100
    assert default_kmax(10_000, "full") == 9_999
    with pytest.raises(DomainError):
        default_kmax(10, "cube")


def test_kmax_one_gives_all_ones():
    assert np.all(sample_degrees(100, 2.5, kmax=1, seed=4) == 1)


def test_degree_one_frequency_within_binomial_bounds():
    n = 100_000
    p = 1 / 1.1767766952966369
    freq = np.mean(sample_degrees(n, 2.5, kmax=2, seed=11) == 1)
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_sample_degrees_deterministic():
    a = sample_degrees(1000, 2.3, 30, seed=9)
    b = sample_degrees(1000, 2.3, 30, seed=9)
    assert np.array_equal(a, b)


def test_sample_degrees_errors_and_warning():
    with pytest.raises(DomainError):
        sample_degrees(10, 2.5, kmax=10)
    with pytest.raises(DomainError):
        sample_degrees(10, 2.0, kmax=3)
    with pytest.warns(UserWarning):
        sample_degrees(10, 3.2, kmax=3)


# ---- weighted sampling

def test_first_pick_frequencies_match_weights():
    w = np.array([5.0, 3.0, 1.5, 0.5])
    rng = np.random.default_rng(0)
    trials = 100_000
    counts = np.bincount([sample_without_replacement(w, 2, rng)[0] for _ in range(trials)], minlength=4)
    p = w / w.sum()
    sd = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - trials * p) <= 3 * sd)


def test_second_pick_follows_renormalised_weights():
    # P(second = j) = sum_i p_i p_j / (1 - p_i), computed exactly
    w = np.array([5.0, 3.0, 1.5, 0.5])
    p = w / w.sum()
    expect = np.array([sum(p[i] * p[j] / (1 - p[i]) for i in range(4) if i != j) for j in range(4)])
    rng = np.random.default_rng(1)
    trials = 60_000
    counts = np.bincount([sample_without_replacement(w, 2, rng)[1] for _ in range(trials)], minlength=4)
    sd = np.sqrt(trials * expect * (1 - expect))
    assert np.all(np.abs(counts - trials * expect) <= 4 * sd)


def test_sample_without_replacement_distinct_and_full():
    rng = np.random.default_rng(2)
    out = sample_without_replacement([1.0, 1e-6, 2.0, 3.0], 4, rng)
    assert sorted(out.tolist()) == [0, 1, 2, 3]
    with pytest.raises(DomainError):
        sample_without_replacement([1.0, 2.0], 3, rng)


# ---- construction

def test_strict_pool_reproduces_star():
    g = build_graph([2, 1, 1], 2.5, seed=0, tie_break=False)
    assert g.edges().tolist() == [[0, 1], [0, 2]]


def test_tie_break_lets_degree_one_nodes_link():
    # ranks: node1 < node2 < node0.  Node 0 takes both; node 2 must take node 1.
    g = build_graph([2, 1, 1], 2.5, seed=0)
    assert g.edges().tolist() == [[0, 1], [0, 2], [1, 2]]


def test_all_ones_strict_gives_no_edges():
    assert build_graph(np.ones(50, int), 3.0, seed=1, tie_break=False).number_of_edges == 0


def test_all_ones_tie_break_gives_a_tree():
    g = build_graph(np.ones(50, int), 3.0, seed=1)
    assert g.number_of_edges == 49
    assert nx.is_tree(g.to_networkx())


def _check_invariants(g: SocialGraph):
    e = g.edges()
    assert np.all(e[:, 0] < e[:, 1])
    assert len({tuple(x) for x in e.tolist()}) == len(e)
    A = g.adjacency()
    assert (A != A.T).nnz == 0
    assert A.diagonal().sum() == 0
    rank = np.empty(g.n, dtype=np.int64)
    rank[np.lexsort((np.arange(g.n), g.intended_degree))] = np.arange(g.n)
    sel, tgt = g.creation_log[:, 0], g.creation_log[:, 1]
    assert np.all(rank[sel] > rank[tgt])
    assert np.all(g.degree >= np.bincount(sel, minlength=g.n))
    for v in range(g.n):
        nb = g.neighbors(v)
        assert np.all(np.diff(nb) > 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=1, max_size=40), st.floats(2.05, 4.0), st.integers(0, 2**31),
       st.booleans())
def test_build_graph_invariants(degrees, eps, seed, tie_break):
    g = build_graph(degrees, eps, seed=seed, tie_break=tie_break)
    _check_invariants(g)
    # quotas: a node selects min(quota, pool) distinct targets
    sel_counts = np.bincount(g.creation_log[:, 0], minlength=g.n)
    assert np.all(sel_counts <= g.intended_degree)
    assert g.shortfall == int(np.sum(g.intended_degree - sel_counts))


def test_generated_graph_invariants_and_determinism():
    a = generate_graph(3000, 2.5, 2.5, seed=5)
    b = generate_graph(3000, 2.5, 2.5, seed=5)
    _check_invariants(a)
    assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
    assert not np.array_equal(a.indices, generate_graph(3000, 2.5, 2.5, seed=6).indices)


def test_generated_graph_digest_is_frozen():
    # guards the documented random-stream layout against accidental change
    import hashlib
    g = generate_graph(2000, 2.5, 2.5, seed=0)
    digest = hashlib.sha256(g.edges().tobytes()).hexdigest()[:16]
    assert digest == FROZEN_DIGEST


FROZEN_DIGEST = "946f7875f6436d27"


def test_equal_weight_first_pick():
    # node 4 has degree 2 and chooses 2 of 4 lower-ranked nodes; node 0..3 have degree 1
    # first pick probability is uniform (equal weights) -> 1/4 each
    degs = [1, 1, 1, 1, 2]
    first = np.array([build_graph(degs, 2.5, seed=s).creation_log[0, 1] for s in range(8000)])
    counts = np.bincount(first, minlength=4)
    p = 0.25
    assert np.all(np.abs(counts - 8000 * p) <= 3 * math.sqrt(8000 * p * (1 - p)))


def test_unequal_weights_first_pick():
    # node 3 (degree 2) picks 2 of nodes 0 (deg 1), 1 (deg 2), 2 (deg 2) -> pool excludes nothing
    # rank order: 0 < 1 < 2 < 3; first pick weights 1, 2**-2.5, 2**-2.5
    degs = [1, 2, 2, 2]
    # node 3 is top rank, quota 2 of pool 3 -> first recorded pick is node 3's first draw
    first = np.array([build_graph(degs, 2.5, seed=s).creation_log[0, 1] for s in range(8000)])
    w = np.array([1.0, 2 ** -2.5, 2 ** -2.5])
    p = w / w.sum()
    counts = np.bincount(first, minlength=3)
    sd = np.sqrt(8000 * p * (1 - p))
    assert np.all(np.abs(counts - 8000 * p) <= 3 * sd)


def test_build_graph_domain():
    with pytest.raises(DomainError):
        build_graph([1, 2], 2.0)
    with pytest.raises(DomainError):
        build_graph([0, 2], 2.5)


# ---- statistics

def test_fit_exact_power_law():
    k = np.arange(1, 1001, dtype=float)
    g, r2 = fit_degree_histogram(1e12 * k ** -2.5)
    assert g == pytest.approx(2.5, abs=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_single_degree_fails():
    with pytest.raises(FitError):
        realized_degree_fit(SocialGraph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)]))


@pytest.mark.slow
def test_generated_degree_exponent_recovered():
    for s in range(10):
        gh, _ = realized_degree_fit(generate_graph(100_000, 2.5, 2.5, seed=s))
        assert abs(gh - 2.5) <= 0.3


def test_path_assortativity_minus_one():
    r, joint = edge_degree_stats(SocialGraph.from_edges(3, [(0, 1), (1, 2)]))
    assert r == pytest.approx(-1.0, abs=1e-15)
    assert joint == {(2, 1): 2}


def test_ring_assortativity_undefined():
    r, _ = edge_degree_stats(SocialGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)]))
    assert r is None


def test_assortativity_matches_networkx():
    g = generate_graph(2000, 2.5, 3.0, seed=2)
    r, _ = edge_degree_stats(g)
    assert r == pytest.approx(nx.degree_assortativity_coefficient(g.to_networkx()), abs=1e-10)


def test_no_edges_rejected():
    with pytest.raises(DomainError):
        edge_degree_stats(SocialGraph.from_edges(3, []))


@pytest.mark.slow
def test_assortativity_negative_under_hub_repulsion():
    for s in range(10):
        r, _ = edge_degree_stats(generate_graph(10_000, 2.5, 3.0, seed=s))
        assert r < 0


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="epsilon barely changes who links to whom once degree-1 targets "
                   "dominate the pool; the measured ordering is reversed (see decisions ledger)")
def test_assortativity_more_negative_for_larger_epsilon():
    lo = np.mean([edge_degree_stats(generate_graph(10_000, 2.5, 2.2, seed=s))[0] for s in range(10)])
    hi = np.mean([edge_degree_stats(generate_graph(10_000, 2.5, 3.5, seed=s))[0] for s in range(10)])
    assert hi < lo


# ---- exchange format

def test_edgelist_round_trip(tmp_path):
    g = generate_graph(500, 2.4, 2.7, seed=3)
    p = tmp_path / "g.txt"
    write_edgelist(g, p)
    h = read_edgelist(p)
    assert h.n == g.n and h.gamma == g.gamma and h.epsilon == g.epsilon and h.seed == g.seed
    assert np.array_equal(h.edges(), g.edges())
    q = tmp_path / "h.txt"
    write_edgelist(h, q)
    assert p.read_bytes() == q.read_bytes()
    first = p.read_text().splitlines()[0]
    assert first == "# fractalcap-graph v1 n=500 gamma=2.4 epsilon=2.7 seed=3"


def test_edgelist_rejects_missing_header(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 1\n")
    with pytest.raises(DomainError):
        read_edgelist(p)
