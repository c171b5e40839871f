"""Unit-square deployment, cell-grid routing, TDMA scheduling and capacity.

Users sit uniformly in ``[0,1)^2``.  The square is cut into ``G x G`` cells
with ``G = floor(1 / (C1 r))``; each cell is ``1/G`` wide, which is at least
``C1 r``.  A packet moves one cell per hop, so the hop count between two
users is the Manhattan distance between their cells.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DomainError, EstimationError, UnsupportedRegimeError
from .traversal import bfs, components, level_counts, path_to

__all__ = [
    "Deployment",
    "Rule",
    "HopEstimate",
    "SimResult",
    "transmission_range",
    "deploy",
    "occupancy_report",
    "grid_hops",
    "select_destination",
    "estimate_mean_hops",
    "estimate_hierarchical_hops",
    "tdma_parameters",
    "protocol_check",
    "capacity_estimate",
    "transport_stability_sim",
]

logger = logging.getLogger(__name__)


def transmission_range(n: int, C0: float = 1.0) -> float:
    """``r(n) = C0 * sqrt(ln n / n)``."""
    if n < 2:
        raise DomainError("transmission range needs n >= 2")
    return C0 * math.sqrt(math.log(n) / n)


def tdma_parameters(C1: float, delta: float) -> int:
    """Phase spacing ``T = ceil((2 + delta) / C1) + 1``.

    Co-phase cells are then at least ``T - 1`` whole cells apart, i.e.
    ``(T-1) C1 r >= (2 + delta) r``.
    """
    if not C1 > 0:
        raise DomainError("C1 must be positive")
    if not delta >= 0:
        raise DomainError("delta must be non-negative")
    # guard against representation noise such as 3.0000000000000004
    return math.ceil((2 + delta) / C1 - 1e-12) + 1


@dataclass(frozen=True, eq=False)
class Deployment:
    positions: np.ndarray
    C0: float
    C1: float
    delta: float
    r: float
    grid: int
    T: int
    cells: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def cell_side(self) -> float:
        return 1.0 / self.grid

    @property
    def total_cells(self) -> int:
        return self.grid * self.grid

    @classmethod
    def from_positions(cls, positions, C0: float = 1.0, C1: float = 1.0, delta: float = 1.0,
                       grid: int | None = None, T: int | None = None) -> "Deployment":
        """Build a deployment from explicit positions.

        ``grid`` and ``T`` override the derived values; tests and what-if
        checks use this to pin a geometry.
        """
        pos = np.array(positions, dtype=float).reshape(-1, 2)
        if np.any(pos < 0) or np.any(pos >= 1):
            raise DomainError("positions must lie in [0, 1)^2")
        n = pos.shape[0]
        r = transmission_range(n, C0) if n >= 2 else math.nan
        if grid is None:
            if n < 2:
                raise ConfigError("a single user needs an explicit grid")
            grid = int(math.floor(1.0 / (C1 * r)))
            if grid < 2:
                raise ConfigError(f"cell grid is {grid}x{grid}; n={n} is too small for C0={C0}, C1={C1}")
        if T is None:
            T = tdma_parameters(C1, delta)
        cells = np.minimum((pos * grid).astype(np.int64), grid - 1)
        pos.flags.writeable = False
        cells.flags.writeable = False
        return cls(positions=pos, C0=float(C0), C1=float(C1), delta=float(delta), r=r,
                   grid=int(grid), T=int(T), cells=cells)

    def with_T(self, T: int) -> "Deployment":
        return Deployment(self.positions, self.C0, self.C1, self.delta, self.r, self.grid, int(T), self.cells)

    def cell_ids(self) -> np.ndarray:
        return self.cells[:, 0] * self.grid + self.cells[:, 1]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "x", "y", "cell_i", "cell_j"])
            for v, ((x, y), (i, j)) in enumerate(zip(self.positions.tolist(), self.cells.tolist())):
                w.writerow([v, repr(x), repr(y), i, j])


def deploy(n: int, C0: float = 1.0, C1: float = 1.0, delta: float = 1.0, seed: int = 0) -> Deployment:
    if n < 2:
        raise DomainError("n must be at least 2")
    if not (C0 > 0 and C1 > 0):
        raise DomainError("C0 and C1 must be positive")
    if not delta >= 0:
        raise DomainError("delta must be non-negative")
    pos = np.random.default_rng(seed).random((n, 2))
    return Deployment.from_positions(pos, C0, C1, delta)


def occupancy_report(dep: Deployment) -> float:
    """Fraction of grid cells holding no user."""
    occupied = np.unique(dep.cell_ids()).size
    return 1.0 - occupied / dep.total_cells


def grid_hops(dep: Deployment, u, v):
    """Manhattan cell distance; vectorised over array arguments."""
    d = np.abs(dep.cells[u] - dep.cells[v])
    out = d.sum(axis=-1)
    return int(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Rule:
    """Destination rule: ``uniform``, ``powerlaw`` (with ``beta``), ``level`` (with ``L``)
    or ``hierarchical``."""

    kind: str
    beta: float | None = None
    L: int | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "powerlaw", "level", "hierarchical"):
            raise DomainError(f"unknown rule {self.kind!r}")
        if self.kind == "powerlaw" and (self.beta is None or not self.beta >= 0):
            raise DomainError("powerlaw rule needs beta >= 0")
        if self.kind == "level" and (self.L is None or self.L < 1):
            raise DomainError("level rule needs L >= 1")

    @classmethod
    def parse(cls, text: str) -> "Rule":
        """``uniform``, ``hierarchical``, ``powerlaw:<beta>`` or ``level:<L>``."""
        kind, _, arg = str(text).partition(":")
        if kind == "powerlaw":
            return cls(kind, beta=float(arg))
        if kind == "level":
            return cls(kind, L=int(arg))
        if arg:
            raise DomainError(f"rule {kind!r} takes no argument")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind == "powerlaw":
            return f"powerlaw:{self.beta!r}"
        if self.kind == "level":
            return f"level:{self.L}"
        return self.kind


def _as_rule(rule) -> Rule:
    return rule if isinstance(rule, Rule) else Rule.parse(rule)


def _contact_cdf(graph, dep: Deployment, beta: float) -> np.ndarray:
    """Row-local cumulative contact probabilities aligned with ``graph.indices``.

    Weight of contact ``j`` of ``s`` is ``max(d_sj, cell_side) ** -beta``.
    """
    src = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
    if beta == 0:
        w = np.ones(src.size)
    else:
        d = np.linalg.norm(dep.positions[graph.indices] - dep.positions[src], axis=1)
        w = np.maximum(d, dep.cell_side) ** -float(beta)
    starts = graph.indptr[:-1]
    has = np.diff(graph.indptr) > 0
    rowsum = np.zeros(graph.n)
    rowsum[has] = np.add.reduceat(w, starts[has])
    c = np.cumsum(w / rowsum[src])
    offset = np.concatenate([[0.0], c])[graph.indptr[:-1]]
    return c - offset[src]


def _pick_contacts(graph, cdf: np.ndarray, src: np.ndarray, u: np.ndarray) -> np.ndarray:
    lo = graph.indptr[src]
    deg = graph.indptr[src + 1] - lo
    # search inside each row: the row-local cdf is increasing within a row
    pos = np.empty(src.size, dtype=np.int64)
    for s in np.unique(deg):
        m = deg == s
        rows = cdf[lo[m, None] + np.arange(s)]
        pos[m] = np.minimum((rows < u[m, None] * rows[:, -1:]).sum(axis=1), s - 1)
    return graph.indices[lo + pos]


def select_destination(graph, dep: Deployment, src: int, rule, seed=0) -> int | None:
    """Draw one destination for ``src``; ``None`` when ``src`` has no eligible contact."""
    rule = _as_rule(rule)
    rng = np.random.default_rng(seed)
    if rule.kind in ("uniform", "powerlaw"):
        nbrs = graph.neighbors(src)
        if nbrs.size == 0:
            return None
        if rule.kind == "uniform" or rule.beta == 0:
            return int(nbrs[rng.integers(nbrs.size)])
        d = np.linalg.norm(dep.positions[nbrs] - dep.positions[src], axis=1)
        w = np.maximum(d, dep.cell_side) ** -rule.beta
        return int(nbrs[rng.choice(nbrs.size, p=w / w.sum())])
    if rule.kind == "level":
        dist, _ = bfs(graph, src, max_depth=rule.L)
        cand = np.flatnonzero(dist == rule.L)
        return int(cand[rng.integers(cand.size)]) if cand.size else None
    raise UnsupportedRegimeError("hierarchical destinations are drawn pairwise; use estimate_hierarchical_hops")


@dataclass(frozen=True)
class HopEstimate:
    rule: str
    trials: int
    mean: float
    stderr: float
    empty_cell_fraction: float
    resamples: int = 0
    per_level: dict | None = None
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)


def _summary(rule, hops: np.ndarray, dep, resamples=0, per_level=None) -> HopEstimate:
    hops = np.asarray(hops, dtype=float)
    se = float(hops.std(ddof=1) / math.sqrt(hops.size)) if hops.size > 1 else 0.0
    return HopEstimate(rule=str(rule), trials=int(hops.size), mean=float(hops.mean()), stderr=se,
                       empty_cell_fraction=occupancy_report(dep), resamples=resamples,
                       per_level=per_level, samples=hops)


def _path_hops(dep: Deployment, path: list[int]) -> int:
    p = np.asarray(path)
    return int(grid_hops(dep, p[:-1], p[1:]).sum()) if p.size > 1 else 0


def estimate_mean_hops(graph, dep: Deployment, rule, trials: int, seed: int = 0) -> HopEstimate:
    """Mean grid hops from a uniformly drawn eligible source to its rule-chosen destination.

    Trial ``t`` consumes row ``t`` of a ``(trials, 2)`` uniform matrix drawn
    from ``seed``, so any split of the trials reproduces the same values.
    For ``level`` rules the packet follows a shortest social path and the
    hops of its legs are summed.
    """
    rule = _as_rule(rule)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if graph.n != dep.n:
        raise DomainError("graph and deployment sizes differ")
    u = np.random.default_rng(seed).random((trials, 2))
    if rule.kind in ("uniform", "powerlaw"):
        eligible = np.flatnonzero(graph.degree > 0)
    elif rule.kind == "level":
        eligible = np.flatnonzero(level_counts(graph, rule.L)[:, rule.L - 1] > 0)
    else:
        return estimate_hierarchical_hops(graph, dep, trials, seed)
    if eligible.size == 0:
        raise EstimationError(f"no node has an eligible destination under {rule}")
    if eligible.size < graph.n:
        logger.debug("%d of %d nodes have no destination under %s", graph.n - eligible.size, graph.n, rule)
    src = eligible[np.minimum((u[:, 0] * eligible.size).astype(np.int64), eligible.size - 1)]
    if rule.kind != "level":
        beta = 0.0 if rule.kind == "uniform" else rule.beta
        dst = _pick_contacts(graph, _contact_cdf(graph, dep, beta), src, u[:, 1])
        return _summary(rule, grid_hops(dep, src, dst), dep)
    hops = np.empty(trials, dtype=np.int64)
    for t, s in enumerate(src.tolist()):
        dist, parent = bfs(graph, s, max_depth=rule.L)
        cand = np.flatnonzero(dist == rule.L)
        dst = int(cand[min(int(u[t, 1] * cand.size), cand.size - 1)])
        hops[t] = _path_hops(dep, path_to(parent, s, dst))
    return _summary(rule, hops, dep)


def estimate_hierarchical_hops(graph, dep: Deployment, trials: int, seed: int = 0) -> HopEstimate:
    """Pair-uniform destinations: hops along a shortest social path.

    Each trial draws an ordered pair ``(u, v)`` uniformly, redrawing
    disconnected pairs, and routes along the BFS-tree path (smallest-id
    parents).  Trial ``t`` uses its own generator seeded by ``(seed, t)``.
    ``per_level`` maps ``L`` to ``(count, mean hops)``.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    n = graph.n
    labels = components(graph)
    if n < 2 or np.bincount(labels).max() < 2:
        raise EstimationError("no connected pair of distinct nodes")
    hops = np.empty(trials, dtype=np.int64)
    levels = np.empty(trials, dtype=np.int64)
    resamples = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        while True:
            a, b = rng.integers(n, size=2).tolist()
            if a != b and labels[a] == labels[b]:
                break
            resamples += 1
        dist, parent = bfs(graph, a, target=b)
        levels[t] = dist[b]
        hops[t] = _path_hops(dep, path_to(parent, a, b))
    if resamples:
        logger.info("redrew %d disconnected or self pairs", resamples)
    per_level = {int(L): (int(np.sum(levels == L)), float(hops[levels == L].mean()))
                 for L in np.unique(levels)}
    return _summary("hierarchical", hops, dep, resamples, per_level)


def protocol_check(dep: Deployment, samples: int = 10_000, seed: int = 0) -> int:
    """Count protocol-model violations over sampled transmissions.

    A sample is a link ``i -> j`` with ``|X_i - X_j| <= r``.  Any user ``k``
    in a co-phase cell other than that of ``i`` is a potential interferer;
    the sample violates when ``|X_k - X_j|`` or ``|X_k - X_i|`` falls below
    ``(1+delta)|X_i - X_j|``.
    """
    if dep.n < 2 or samples < 1:
        return 0
    rng = np.random.default_rng(seed)
    P = dep.positions
    tree = cKDTree(P)
    src = rng.integers(dep.n, size=samples)
    pick = rng.random(samples)
    near = tree.query_ball_point(P[src], dep.r)
    i_list, j_list = [], []
    for s, cand, u in zip(src.tolist(), near, pick.tolist()):
        cand = [c for c in cand if c != s]
        if cand:
            cand.sort()
            i_list.append(s)
            j_list.append(cand[int(u * len(cand))])
    if not i_list:
        return 0
    i = np.asarray(i_list)
    j = np.asarray(j_list)
    radius = (1.0 + dep.delta) * np.linalg.norm(P[i] - P[j], axis=1)
    bad = np.zeros(i.size, dtype=bool)
    for centre in (j, i):
        hits = tree.query_ball_point(P[centre], radius)
        lens = np.fromiter((len(h) for h in hits), dtype=np.int64, count=i.size)
        if lens.sum() == 0:
            continue
        k = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
        owner = np.repeat(np.arange(i.size), lens)
        off = dep.cells[k] - dep.cells[i[owner]]
        cophase = np.all(off % dep.T == 0, axis=1) & np.any(off != 0, axis=1)
        # strictly closer than the threshold
        d = np.linalg.norm(P[k] - P[centre[owner]], axis=1)
        hit = cophase & (k != i[owner]) & (k != j[owner]) & (d < radius[owner])
        bad[owner[hit]] = True
    return int(bad.sum())


def capacity_estimate(E_X: float, dep: Deployment) -> float:
    """Per-user rate ``(cells / T^2) / (n E_X)`` at unit bandwidth.

    ``E_X = 0`` means no packet ever leaves its cell; the single-cell bound
    ``(cells / T^2) / n`` is returned with a warning.
    """
    if E_X < 0 or not math.isfinite(E_X):
        raise DomainError("E_X must be finite and non-negative")
    per_slot = dep.total_cells / dep.T ** 2
    if E_X == 0:
        warnings.warn("E[X] = 0: reporting the degenerate single-cell bound", RuntimeWarning, stacklevel=2)
        return per_slot / dep.n
    return per_slot / (dep.n * E_X)


@dataclass(frozen=True, eq=False)
class SimResult:
    stable: bool
    trajectory: np.ndarray
    generated: int
    delivered: int


def transport_stability_sim(graph, dep: Deployment, rule, lam: float, rounds: int,
                            seed: int = 0) -> SimResult:
    """Slotted queueing simulation of cell-by-cell forwarding.

    One round is one TDMA slot.  In slot ``s`` the cells whose phase
    ``(i mod T, j mod T)`` equals ``s mod T^2`` each forward the head of
    their FIFO one cell toward its destination (x first, then y).  Every
    user injects a packet with probability ``lam`` per round.  ``trajectory``
    holds the mean queue length per cell after each round; the run is
    stable when the last quarter's mean is at most twice the second
    quarter's.
    """
    rule = _as_rule(rule)
    if rule.kind not in ("uniform", "powerlaw"):
        raise UnsupportedRegimeError("the transport simulation supports uniform and powerlaw rules")
    if lam < 0:
        raise DomainError("lam must be non-negative")
    T2 = dep.T ** 2
    if rounds < T2:
        raise DomainError(f"rounds must be at least T^2 = {T2}")
    G = dep.grid
    rng = np.random.default_rng(seed)
    cdf = _contact_cdf(graph, dep, 0.0 if rule.kind == "uniform" else rule.beta)
    has = graph.degree > 0
    queues: dict[tuple[int, int], deque] = {}
    phase_cells = [[] for _ in range(T2)]
    for i in range(G):
        for j in range(G):
            phase_cells[(i % dep.T) * dep.T + j % dep.T].append((i, j))
    traj = np.zeros(rounds)
    backlog = generated = delivered = 0
    for s in range(rounds):
        k = rng.binomial(dep.n, lam) if lam > 0 else 0
        if k:
            src = rng.choice(dep.n, size=k, replace=False)
            src = src[has[src]]
            dst = _pick_contacts(graph, cdf, src, rng.random(src.size))
            generated += src.size
            for (a, b), (c, d) in zip(dep.cells[src].tolist(), dep.cells[dst].tolist()):
                if (a, b) == (c, d):
                    delivered += 1
                    continue
                queues.setdefault((a, b), deque()).append((c, d))
                backlog += 1
        for cell in phase_cells[s % T2]:
            q = queues.get(cell)
            if not q:
                continue
            c, d = q.popleft()
            a, b = cell
            if a != c:
                a += 1 if c > a else -1
            else:
                b += 1 if d > b else -1
            if (a, b) == (c, d):
                delivered += 1
                backlog -= 1
            else:
                queues.setdefault((a, b), deque()).append((c, d))
        traj[s] = backlog / dep.total_cells
    q = rounds // 4
    second, last = traj[q:2 * q].mean(), traj[3 * q:].mean()
    stable = bool(last <= 2 * second) if second > 0 else bool(last == 0)
    return SimResult(stable=stable, trajectory=traj, generated=generated, delivered=delivered)
