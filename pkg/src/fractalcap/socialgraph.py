"""Fractal social topology: degree law, hub-repulsive construction, statistics.

Nodes carry an *intended* degree drawn from ``P(k) ~ k**-gamma``.  Nodes are
ranked by the total order ``(intended degree, node id)`` and processed from
the highest rank down; each node picks ``min(quota, pool)`` distinct targets
among strictly lower-ranked nodes, without replacement, with weight
``(target intended degree)**-epsilon``.  Every pick adds one undirected edge.
"""
from __future__ import annotations

import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, FitError

__all__ = [
    "PowerLawDist",
    "SocialGraph",
    "powerlaw_normalization",
    "default_kmax",
    "sample_degrees",
    "build_graph",
    "generate_graph",
    "sample_without_replacement",
    "fit_degree_histogram",
    "realized_degree_fit",
    "edge_degree_stats",
    "write_edgelist",
    "read_edgelist",
]

logger = logging.getLogger(__name__)

GRAPH_FORMAT_TAG = "fractalcap-graph v1"


def powerlaw_normalization(exponent: float, kmax: int) -> float:
    """Return ``sum(k**-exponent for k in 1..kmax)``."""
    kmax = int(kmax)
    if kmax < 1:
        raise DomainError("kmax must be at least 1")
    if not exponent > 1:
        raise DomainError("exponent must exceed 1")
    k = np.arange(1, kmax + 1, dtype=float)
    return math.fsum(k ** -float(exponent))


@dataclass(frozen=True, eq=False)
class PowerLawDist:
    """Truncated discrete power law on ``1..kmax``."""

    exponent: float
    kmax: int
    norm: float
    cdf: np.ndarray

    @classmethod
    def create(cls, exponent: float, kmax: int) -> "PowerLawDist":
        norm = powerlaw_normalization(exponent, kmax)
        pmf = np.arange(1, kmax + 1, dtype=float) ** -float(exponent) / norm
        cdf = np.cumsum(pmf)
        cdf[-1] = 1.0
        cdf.flags.writeable = False
        return cls(float(exponent), int(kmax), norm, cdf)

    def pmf(self) -> np.ndarray:
        return np.arange(1, self.kmax + 1, dtype=float) ** -self.exponent / self.norm

    def mean(self) -> float:
        k = np.arange(1, self.kmax + 1, dtype=float)
        return math.fsum(k ** (1.0 - self.exponent)) / self.norm

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(size)
        return np.searchsorted(self.cdf, u, side="right").astype(np.int64) + 1


def default_kmax(n: int, rule: str = "sqrt") -> int:
    """Structural cutoff: ``floor(sqrt(n))`` or the full ``n - 1``."""
    if rule == "sqrt":
        return max(1, math.isqrt(int(n)))
    if rule == "full":
        return max(1, int(n) - 1)
    raise DomainError(f"unknown kmax rule {rule!r}")


def sample_degrees(n: int, gamma: float, kmax: int | None = None, seed: int = 0) -> np.ndarray:
    """Draw ``n`` intended degrees by inverse CDF from ``PowerLawDist(gamma, kmax)``."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be positive")
    if not gamma > 2:
        raise DomainError(f"gamma must exceed 2, got {gamma}")
    if gamma >= 3:
        warnings.warn(f"gamma={gamma} lies outside the usual (2, 3) range", stacklevel=2)
    kmax = default_kmax(n) if kmax is None else int(kmax)
    if kmax >= n:
        raise DomainError(f"kmax={kmax} must be below n={n}")
    dist = PowerLawDist.create(gamma, kmax)
    return dist.sample(n, np.random.default_rng(seed))


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Immutable undirected simple graph in CSR form.

    ``indices[indptr[v]:indptr[v + 1]]`` are the neighbours of ``v`` in
    ascending order.  Generated graphs also carry the intended degrees, the
    ``(selector, target)`` creation log and the generation parameters.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    intended_degree: np.ndarray | None = None
    creation_log: np.ndarray | None = None
    gamma: float | None = None
    epsilon: float | None = None
    kmax: int | None = None
    seed: int | None = None
    shortfall: int = 0
    _degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        deg = np.diff(self.indptr)
        deg.flags.writeable = False
        object.__setattr__(self, "_degree", deg)
        for arr in (self.indptr, self.indices, self.intended_degree, self.creation_log):
            if arr is not None:
                arr.flags.writeable = False

    @classmethod
    def from_edges(cls, n: int, edges, **meta) -> "SocialGraph":
        """Build from an iterable of ``(u, v)`` pairs; loops are rejected,
        duplicates merged."""
        n = int(n)
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise DomainError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise DomainError("self-loops are not allowed")
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        keys = np.unique(src * n + dst)
        src, dst = keys // n, keys % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n=n, indptr=indptr, indices=dst.astype(np.int64), **meta)

    @property
    def degree(self) -> np.ndarray:
        """Realized degrees."""
        return self._degree

    @property
    def number_of_edges(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of ``u < v`` pairs in ascending order."""
        src = np.repeat(np.arange(self.n), self._degree)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        return np.repeat(np.arange(self.n), self._degree), self.indices

    def adjacency(self):
        from scipy.sparse import csr_matrix

        data = np.ones(self.indices.size, dtype=np.float64)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(map(tuple, self.edges().tolist()))
        return g


def sample_without_replacement(weights, size: int, rng: np.random.Generator) -> np.ndarray:
    """Weighted draw of ``size`` distinct indices by successive draws.

    Each draw is proportional to the weights of the items not yet taken.
    Implemented by rejection against the full distribution, which has the
    same law as renormalising after every pick.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise DomainError("weights must be positive")
    size = int(size)
    if size > w.size:
        raise DomainError("cannot draw more items than available")
    cum = np.cumsum(w)
    first = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
    return _draw_distinct(cum, w.size, size, np.minimum(first, w.size - 1), rng)


def _draw_distinct(cum: np.ndarray, pool: int, size: int, first: np.ndarray, rng) -> np.ndarray:
    """Keep first occurrences of ``first`` and top up with fresh draws from
    the prefix ``cum[:pool]``."""
    taken: list[int] = []
    seen: set[int] = set()
    for p in first.tolist():
        if p not in seen:
            seen.add(p)
            taken.append(p)
    total = cum[pool - 1]
    while len(taken) < size:
        p = min(int(np.searchsorted(cum, rng.random() * total, side="right")), pool - 1)
        if p not in seen:
            seen.add(p)
            taken.append(p)
    return np.asarray(taken, dtype=np.int64)


def build_graph(degrees, epsilon: float, seed: int = 0, *, tie_break: bool = True,
                gamma: float | None = None, kmax: int | None = None) -> SocialGraph:
    """Materialise the social graph from intended degrees.

    With ``tie_break=True`` the candidate pool of a node is every node of
    lower rank, so equal-degree links occur with a fixed orientation.  With
    ``tie_break=False`` only nodes of strictly smaller intended degree are
    candidates, and degree-1 nodes never select.

    Random stream layout: one uniform per requested pick, for all nodes in
    processing order, followed by the extra draws needed to replace repeated
    picks (again in processing order).
    """
    if not epsilon > 2:
        raise DomainError(f"epsilon must exceed 2, got {epsilon}")
    deg = np.asarray(degrees, dtype=np.int64)
    if deg.ndim != 1 or np.any(deg < 1):
        raise DomainError("degrees must be a 1-d sequence of positive integers")
    n = deg.size
    rng = np.random.default_rng(seed)

    order = np.lexsort((np.arange(n), deg))          # ascending rank -> node
    wsorted = deg[order].astype(float) ** -float(epsilon)
    cum = np.cumsum(wsorted)
    if tie_break:
        pool = np.arange(n)
    else:
        dsorted = deg[order]
        pool = np.searchsorted(dsorted, dsorted, side="left")
    quota = np.minimum(deg[order], pool)
    shortfall = int(np.sum(deg[order] - quota))
    if shortfall:
        logger.info("candidate shortage: %d requested picks could not be made", shortfall)

    ranks_desc = np.arange(n - 1, -1, -1)
    draw_ranks = ranks_desc[(quota[ranks_desc] > 0) & (quota[ranks_desc] < pool[ranks_desc])]
    counts = quota[draw_ranks]
    owner = np.repeat(draw_ranks, counts)
    limit = pool[owner]
    u = rng.random(owner.size)
    picks = np.searchsorted(cum, u * cum[limit - 1], side="right")
    picks = np.minimum(picks, limit - 1)

    # owners whose first batch contains a repeat need extra draws
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]]) if counts.size else np.zeros(0, np.int64)
    key = owner.astype(np.int64) * n + picks
    dup_owner = np.zeros(draw_ranks.size, dtype=bool)
    if key.size:
        sorted_key = np.sort(key)
        dups = sorted_key[1:][sorted_key[1:] == sorted_key[:-1]] // n
        dup_owner = np.isin(draw_ranks, dups)
    chosen: dict[int, np.ndarray] = {}
    for i in np.flatnonzero(dup_owner):
        r = int(draw_ranks[i])
        s = int(starts[i])
        first = picks[s:s + counts[i]]
        chosen[r] = _draw_distinct(cum, int(pool[r]), int(counts[i]), first, rng)

    sel: list[np.ndarray] = []
    tgt: list[np.ndarray] = []
    draw_index = {int(r): i for i, r in enumerate(draw_ranks)}
    for r in ranks_desc.tolist():
        q = int(quota[r])
        if q == 0:
            continue
        if q >= pool[r]:
            targets = np.arange(pool[r])
        elif r in chosen:
            targets = chosen[r]
        else:
            i = draw_index[r]
            targets = picks[starts[i]:starts[i] + q]
        sel.append(np.full(targets.size, order[r]))
        tgt.append(order[targets])
    selector = np.concatenate(sel) if sel else np.zeros(0, np.int64)
    target = np.concatenate(tgt) if tgt else np.zeros(0, np.int64)
    log = np.column_stack([selector, target]).astype(np.int64)
    g = SocialGraph.from_edges(n, log)
    return SocialGraph(
        n=n, indptr=g.indptr, indices=g.indices, intended_degree=deg.copy(),
        creation_log=log, gamma=gamma, epsilon=float(epsilon), kmax=kmax,
        seed=int(seed), shortfall=shortfall,
    )


def generate_graph(n: int, gamma: float, epsilon: float, seed: int = 0,
                   kmax: int | None = None, tie_break: bool = True) -> SocialGraph:
    """Sample degrees and build the graph; the two stages use independent streams."""
    kmax = default_kmax(n) if kmax is None else int(kmax)
    ss = np.random.SeedSequence(int(seed))
    s_deg, s_build = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    degrees = sample_degrees(n, gamma, kmax, s_deg)
    g = build_graph(degrees, epsilon, s_build, tie_break=tie_break, gamma=gamma, kmax=kmax)
    return SocialGraph(
        n=g.n, indptr=g.indptr, indices=g.indices, intended_degree=g.intended_degree,
        creation_log=g.creation_log, gamma=float(gamma), epsilon=float(epsilon),
        kmax=kmax, seed=int(seed), shortfall=g.shortfall,
    )


def _log_bins(kmax: int, base: float = 2.0) -> list[tuple[int, int]]:
    bins = []
    lo = 1
    while lo <= kmax:
        hi = max(lo + 1, int(math.floor(lo * base)))
        bins.append((lo, min(hi, kmax + 1)))
        lo = hi
    return bins


def fit_degree_histogram(counts, max_iter: int = 100) -> tuple[float, float]:
    """Log-binned least-squares exponent of a degree histogram.

    ``counts[i]`` is the number (or mass) of nodes with degree ``i + 1``.
    Bins double in width.  Each bin's abscissa is placed where the fitted
    power law equals the bin-average of ``k**-gamma`` (iterated to a fixed
    point), so an exact power law is recovered exactly.

    Returns ``(gamma_hat, r2)``.
    """
    c = np.asarray(counts, dtype=float)
    if c.ndim != 1 or np.any(c < 0) or c.sum() <= 0:
        raise FitError("histogram must be non-negative with positive mass")
    kmax = int(np.flatnonzero(c)[-1]) + 1
    bins = [(lo, hi) for lo, hi in _log_bins(kmax) if c[lo - 1:hi - 1].sum() > 0]
    if len(bins) < 2:
        raise FitError("degree histogram spans fewer than two bins")
    dens = np.array([c[lo - 1:hi - 1].sum() / (hi - lo) for lo, hi in bins])
    y = np.log(dens)
    ks = [np.arange(lo, hi, dtype=float) for lo, hi in bins]
    x = np.array([np.log(k).mean() for k in ks])
    gamma_hat = float("nan")
    for _ in range(max_iter):
        slope, intercept = np.polyfit(x, y, 1)
        g = -float(slope)
        if g != 0 and math.isclose(g, gamma_hat, rel_tol=0, abs_tol=1e-13):
            break
        gamma_hat = g
        if g <= 0:
            break
        x = np.array([-np.log(np.mean(k ** -g)) / g for k in ks])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return -float(slope), r2


def realized_degree_fit(graph: SocialGraph) -> tuple[float, float]:
    """Fit the exponent of the realized degree histogram (degree-0 nodes excluded)."""
    deg = graph.degree[graph.degree > 0]
    if deg.size == 0 or np.all(deg == deg[0]):
        raise FitError("all degrees are equal; exponent undefined")
    return fit_degree_histogram(np.bincount(deg)[1:])


def edge_degree_stats(graph: SocialGraph) -> tuple[float | None, Counter]:
    """Degree assortativity over both edge orientations and the joint
    ``(k_high, k_low)`` histogram of endpoint degrees.

    The correlation is ``None`` when endpoint degrees have zero variance.
    """
    if graph.number_of_edges == 0:
        raise DomainError("graph has no edges")
    src, dst = graph.directed_edges()
    a = graph.degree[src].astype(float)
    b = graph.degree[dst].astype(float)
    sa, sb = a.std(), b.std()
    r = None
    if sa > 0 and sb > 0:
        r = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    e = graph.edges()
    hi = np.maximum(graph.degree[e[:, 0]], graph.degree[e[:, 1]])
    lo = np.minimum(graph.degree[e[:, 0]], graph.degree[e[:, 1]])
    joint = Counter(zip(hi.tolist(), lo.tolist()))
    return r, joint


def _fmt(v) -> str:
    return "none" if v is None else repr(v)


def write_edgelist(graph: SocialGraph, path) -> None:
    lines = [
        f"# {GRAPH_FORMAT_TAG} n={graph.n} gamma={_fmt(graph.gamma)} "
        f"epsilon={_fmt(graph.epsilon)} seed={_fmt(graph.seed)}"
    ]
    lines.extend(f"{u} {v}" for u, v in graph.edges().tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> SocialGraph:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(f"# {GRAPH_FORMAT_TAG} "):
        raise DomainError("missing fractalcap-graph v1 header")
    meta = dict(tok.split("=", 1) for tok in text[0].split()[3:])

    def num(key, cast):
        v = meta.get(key, "none")
        return None if v == "none" else cast(v)

    edges = [tuple(map(int, line.split())) for line in text[1:] if line.strip()]
    return SocialGraph.from_edges(
        int(meta["n"]), edges, gamma=num("gamma", float),
        epsilon=num("epsilon", float), seed=num("seed", int),
    )
