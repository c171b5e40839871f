"""Acceptance suite: one function per criterion, each returning a report entry.

Entries are ``{id, target, measured, tolerance, pass}``.  The scaling sweep
shared by A1 to A3 is computed once per process.
"""
from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import boxcover, hierarchy, sympoly, wireless
from .corpus import graph_corpus, weight_corpus
from .harness import ExperimentConfig, run_sweep, sweep_cell, sweep_csv_text
from .regression import linear_fit, loglog_fit
from .socialgraph import SocialGraph, generate_graph
from .traversal import bfs

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "verify", "write_report"]


@dataclass(frozen=True)
class CriterionResult:
    id: str
    target: str
    measured: object
    tolerance: str
    passed: bool

    def to_json(self) -> dict:
        return {"id": self.id, "target": self.target, "measured": _jsonable(self.measured),
                "tolerance": self.tolerance, "pass": bool(self.passed)}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ---------------------------------------------------------------- scaling sweep

SCALING_N = tuple(2 ** k for k in range(11, 17))
SCALING_SEEDS = tuple(range(5))
SCALING_TRIALS = 10_000
SCALING_BETAS = (1.0, 2.5, 3.5)
FIG6_BETAS = (0.0, 1.0, 2.0, 2.5, 3.0, 4.0)


@functools.lru_cache(maxsize=1)
def scaling_sweep() -> dict:
    """Seed-averaged mean hops and capacities per rule and ``n`` (plus a fixed-``n`` beta sweep)."""
    cfg = ExperimentConfig(n_values=SCALING_N, gamma=2.5, epsilon=2.5, trials=SCALING_TRIALS,
                           seeds=SCALING_SEEDS)
    rules = ["uniform"] + [f"powerlaw:{b!r}" for b in sorted(set(SCALING_BETAS + FIG6_BETAS))]
    hops: dict[str, list[float]] = {r: [] for r in rules}
    lam: dict[str, list[float]] = {r: [] for r in rules}
    for n in SCALING_N:
        rows = [row for s in SCALING_SEEDS for row in sweep_cell(cfg, n, s, rules)]
        for r in rules:
            key = wireless.Rule.parse(r)
            sel = [row for row in rows if row.rule == key.kind and row.beta == key.beta]
            hops[r].append(float(np.mean([row.mean_hops for row in sel])))
            lam[r].append(float(np.mean([row.lambda_est for row in sel])))
    return {"n": SCALING_N, "hops": hops, "lambda": lam}


def _inv_r(n):
    return [1.0 / wireless.transmission_range(v) for v in n]


def check_A1() -> CriterionResult:
    sw = scaling_sweep()
    slope, _, r2 = loglog_fit([math.sqrt(v / math.log(v)) for v in sw["n"]], sw["hops"]["uniform"])
    ok = abs(slope - 1.0) <= 0.15 and r2 >= 0.98
    return CriterionResult("A1", "slope of log E[X] vs log sqrt(n/ln n) = 1.0, R2 >= 0.98",
                           {"slope": slope, "r2": r2, "mean_hops": sw["hops"]["uniform"]},
                           "slope +-0.15", ok)


def check_A2() -> CriterionResult:
    sw = scaling_sweep()
    scaled = [l * math.sqrt(v * math.log(v)) for l, v in zip(sw["lambda"]["uniform"], sw["n"])]
    spread = max(scaled) / min(scaled)
    return CriterionResult("A2", "lambda*sqrt(n ln n) constant across n",
                           {"spread": spread, "scaled": scaled}, "max/min <= 1.5", spread <= 1.5)


def check_A3() -> CriterionResult:
    sw = scaling_sweep()
    x = _inv_r(sw["n"])
    targets = {1.0: (1.0, 0.15), 2.5: (0.5, 0.15), 3.5: (0.0, 0.10)}
    measured, ok = {}, True
    for b, (want, tol) in targets.items():
        slope, _, r2 = loglog_fit(x, sw["hops"][f"powerlaw:{b!r}"])
        good = abs(slope - want) <= tol
        measured[f"beta={b}"] = {"slope": slope, "r2": r2, "target": want, "pass": good}
        ok &= good
    fixed = [sw["lambda"][f"powerlaw:{b!r}"][-1] for b in FIG6_BETAS]
    mono = all(b >= a for a, b in zip(fixed, fixed[1:]))
    measured["fixed_n_lambda_by_beta"] = dict(zip(map(str, FIG6_BETAS), fixed))
    measured["lambda_nondecreasing"] = mono
    return CriterionResult("A3", "slopes vs log(1/r): 1.0 (beta=1), 0.5 (beta=2.5), 0.0 (beta=3.5); "
                           "lambda non-decreasing in beta at fixed n",
                           measured, "+-0.15, +-0.15, +-0.10", ok and mono)


# ---------------------------------------------------------------- exact oracles

def _enum_probability(w, q):
    """Inclusion probabilities by explicit enumeration of all q-subsets."""
    n = len(w)
    total = 0.0
    inc = [0.0] * n
    for sub in itertools.combinations(range(n), q):
        p = math.prod(w[i] for i in sub)
        total += p
        for i in sub:
            inc[i] += p
    return [v / total for v in inc]


def _enum_sigma(w, p):
    return math.fsum(math.prod(c) for c in itertools.combinations(w, p))


def _rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


def check_A4() -> CriterionResult:
    worst = worst_sum = 0.0
    cases = 0
    for w in weight_corpus():
        wl = [float(v) for v in w]
        for q in range(1, len(wl) + 1):
            oracle = _enum_probability(wl, q)
            probs = [sympoly.contact_probability(wl, q, k) for k in range(len(wl))]
            batch = sympoly.contact_probabilities(wl, q)
            for a, b, c in zip(probs, batch, oracle):
                worst = max(worst, _rel(a, c), _rel(float(b), c))
            worst_sum = max(worst_sum, abs(math.fsum(probs) - q) / q)
            cases += 1
    ok = worst <= 1e-9 and worst_sum <= 1e-9
    return CriterionResult("A4", "contact probability equals subset enumeration; sum_k P = q",
                           {"max_rel_error": worst, "max_sum_rel_error": worst_sum, "cases": cases},
                           "1e-9", ok)


def check_A5() -> CriterionResult:
    worst_eq = 0.0
    for N in range(2, 21):
        for q in range(1, N):
            worst_eq = max(worst_eq, _rel(sympoly.lemma1_ratio(np.ones(N), q), N / (N - q)))
    worst_rand = 0.0
    for w in weight_corpus():
        wl = [float(v) for v in w]
        N = len(wl)
        for q in range(1, N):
            oracle = _enum_sigma(wl, 1) * _enum_sigma(wl, q) / ((q + 1) * _enum_sigma(wl, q + 1))
            worst_rand = max(worst_rand, _rel(sympoly.lemma1_ratio(wl, q), oracle))
    ok = worst_eq <= 1e-12 and worst_rand <= 1e-9
    return CriterionResult("A5", "equal weights give N/(N-q); random weights match enumeration",
                           {"equal_weight_max_rel_error": worst_eq, "corpus_max_rel_error": worst_rand},
                           "1e-12 (equal), 1e-9 (corpus)", ok)


def check_A6() -> CriterionResult:
    k1 = hierarchy.analytic_level_degree(2.5, 2.5, 1)
    k2 = hierarchy.analytic_level_degree(2.5, 2.5, 2)
    worst = 0.0
    for eps in (2.1, 2.5, 2.8, 3.5, 4.0):
        for L in range(1, 51):
            ratio = hierarchy.analytic_level_degree(2.5, eps, L + 1) / hierarchy.analytic_level_degree(2.5, eps, L)
            worst = max(worst, _rel(ratio, 1 / (eps - 2)))
    flat = [hierarchy.analytic_level_degree(2.5, 3.0, L) for L in range(1, 51)]
    const = max(flat) - min(flat)
    ok = k1 == 3.0 and k2 == 6.0 and worst <= 1e-12 and const <= 1e-12
    return CriterionResult("A6", "K1=3, K2=6 at (2.5, 2.5); ratio 1/(eps-2); eps=3 constant",
                           {"K1": k1, "K2": k2, "max_ratio_rel_error": worst, "eps3_spread": const},
                           "exact; 1e-12", ok)


# ---------------------------------------------------------------- generated graphs

A7_N = 100_000
A7_SEEDS = tuple(range(10))


def check_A7() -> CriterionResult:
    measured, ok = {}, True
    for eps, want_growth in ((2.2, True), (3.5, False)):
        hits, pairs = 0, []
        for s in A7_SEEDS:
            g = generate_graph(A7_N, 2.5, eps, seed=s)
            k1, k2 = hierarchy.level_degree_profile(g, 2).mean_level_degree
            pairs.append((float(k1), float(k2)))
            hits += int(k2 > k1 if want_growth else k2 < k1)
        good = hits >= 9
        measured[f"eps={eps}"] = {"hits": hits, "K1_K2": pairs, "pass": good}
        ok &= good
    return CriterionResult("A7", "K2 > K1 at eps=2.2 and K2 < K1 at eps=3.5, each in >= 9/10 seeds",
                           measured, ">= 9 of 10", ok)


def check_A8() -> CriterionResult:
    f = hierarchy.hierarchical_hop_factor(2.5, 3.0, 1000)
    ns = [10 ** k for k in range(3, 7)]
    factors = [hierarchy.hierarchical_hop_factor(2.5, 2.5, n) for n in ns]
    _, _, r2 = linear_fit(np.log(ns), factors, min_points=3)
    worst = 0.0
    for gamma, eps in ((2.5, 2.5), (2.2, 2.3), (2.8, 2.9), (2.5, 3.0)):
        for n in ns:
            lm = hierarchy.max_level(gamma, eps, n)
            worst = max(worst, abs(hierarchy.level_ratio_sum(gamma, eps, n, lm) - 1.0))
    ok = abs(f - 167.0) <= 1e-9 and r2 >= 0.99 and worst <= 1e-9
    return CriterionResult("A8", "factor(2.5,3,1000)=167; eps=2.5 factor linear in log n; ratio sum 1 at L_max",
                           {"factor": f, "factors": factors, "r2": r2, "max_sum_error": worst},
                           "1e-9; R2 >= 0.99; 1e-9", ok)


A9_N = 10_000
A9_SEEDS = tuple(range(5))
A9_TRIALS = 2_000


def check_A9() -> CriterionResult:
    worst, per_seed = 0.0, []
    for s in A9_SEEDS:
        gseed, dseed, tseed = np.random.SeedSequence([s, A9_N]).generate_state(3).tolist()
        g = generate_graph(A9_N, 2.5, 2.5, seed=gseed)
        dep = wireless.deploy(A9_N, seed=dseed)
        e = [wireless.estimate_mean_hops(g, dep, f"level:{L}", A9_TRIALS, seed=tseed + L).mean
             for L in range(1, 5)]
        dev = [abs(e[L - 1] / (L * e[0]) - 1) for L in range(1, 5)]
        worst = max(worst, max(dev))
        per_seed.append({"E_L": e, "rel_dev": dev})
    return CriterionResult("A9", "E(L) = L * E(1) for L <= 4", {"max_rel_dev": worst, "seeds": per_seed},
                           "15%", worst <= 0.15)


def _diameter(g: SocialGraph) -> int:
    return max(int(bfs(g, v)[0].max()) for v in range(g.n)) if g.n else 0


PATH_GRID = (1, 3, 7, 15)


def check_A10() -> CriterionResult:
    path9 = graph_corpus()["path9"]
    exact2 = boxcover.cover_exact(path9, 2).N_B
    exact1 = boxcover.cover_exact(path9, 1).N_B
    worst_ratio, below, invalid, checked = 1.0, 0, 0, 0
    for name, g in graph_corpus().items():
        if g.n == 0 or g.n > 12:
            continue
        for lb in range(1, max(1, _diameter(g)) + 1):
            ex = boxcover.cover_exact(g, lb)
            gr = boxcover.cover_greedy(g, lb, seed=0)
            checked += 1
            worst_ratio = max(worst_ratio, gr.N_B / ex.N_B)
            below += gr.N_B < ex.N_B
            invalid += not boxcover.validate_covering(g, ex)
            invalid += not boxcover.validate_covering(g, gr)
    path = SocialGraph.from_edges(1024, [(i, i + 1) for i in range(1023)])
    fit = boxcover.fit_fractal_exponents(path, PATH_GRID)
    covs = boxcover.cover_grid(path, PATH_GRID)
    invalid += sum(not boxcover.validate_covering(path, c) for c in covs)
    ok = (exact2 == 3 and exact1 == 5 and worst_ratio <= 1.25 and below == 0
          and fit.dB is not None and abs(fit.dB - 1) <= 0.05 and invalid == 0)
    return CriterionResult("A10", "path9 N_B = 3 (l_B=2), 5 (l_B=1); greedy within x1.25 of exact; "
                           "path1024 d_B = 1; all coverings valid",
                           {"path9_lB2": exact2, "path9_lB1": exact1, "greedy_over_exact_max": worst_ratio,
                            "greedy_below_exact": below, "instances": checked, "path1024_dB": fit.dB,
                            "invalid_coverings": invalid},
                           "x1.25; d_B +-0.05", ok)


A11_N = 10_000
A11_SEEDS = tuple(range(10))
A11_ROUNDS = 16_000


def check_A11() -> CriterionResult:
    violations = {}
    for C1 in (0.5, 1.0, 2.0):
        for delta in (0.0, 1.0, 2.0):
            dep = wireless.deploy(A11_N, C1=C1, delta=delta, seed=int(C1 * 10 + delta))
            violations[f"C1={C1},delta={delta}"] = wireless.protocol_check(dep, 10_000, seed=1)
    stable_low = unstable_high = 0
    for s in A11_SEEDS:
        gseed, dseed, tseed = np.random.SeedSequence([s, A11_N]).generate_state(3).tolist()
        g = generate_graph(A11_N, 2.5, 2.5, seed=gseed)
        dep = wireless.deploy(A11_N, seed=dseed)
        lam = wireless.capacity_estimate(wireless.estimate_mean_hops(g, dep, "uniform", 10_000, tseed).mean, dep)
        stable_low += wireless.transport_stability_sim(g, dep, "uniform", 0.5 * lam, A11_ROUNDS, seed=tseed).stable
        unstable_high += not wireless.transport_stability_sim(g, dep, "uniform", 2 * lam, A11_ROUNDS,
                                                              seed=tseed + 1).stable
    ok = all(v == 0 for v in violations.values()) and stable_low >= 9 and unstable_high >= 9
    return CriterionResult("A11", "0 protocol violations; stable at 0.5 lambda, unstable at 2 lambda",
                           {"violations": violations, "stable_at_half": stable_low,
                            "unstable_at_double": unstable_high},
                           "0 violations; >= 9 of 10 seeds", ok)


def check_A12() -> CriterionResult:
    cfg = ExperimentConfig(n_values=(256, 512, 1024), seeds=(0, 1), trials=500)
    a = sweep_csv_text(run_sweep(cfg), include_runtime=False)
    b = sweep_csv_text(run_sweep(cfg), include_runtime=False)
    c = sweep_csv_text(run_sweep(cfg, workers=2), include_runtime=False)
    ok = a == b == c
    return CriterionResult("A12", "identical config gives byte-identical CSV (runtime excluded)",
                           {"serial_repeat_equal": a == b, "parallel_equal": a == c, "bytes": len(a)},
                           "exact", ok)


CRITERIA = {f"A{i}": globals()[f"check_A{i}"] for i in range(1, 13)}


def run_criterion(cid: str) -> CriterionResult:
    return CRITERIA[cid]()


def verify(ids=None) -> list[CriterionResult]:
    return [run_criterion(c) for c in (ids or CRITERIA)]


def write_report(results, path) -> None:
    Path(path).write_text(json.dumps([r.to_json() for r in results], indent=2) + "\n")
