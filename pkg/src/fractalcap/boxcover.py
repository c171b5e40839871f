"""Box covering, renormalization and fractal exponent estimation.

A box of size ``l_B`` is a node set whose pairwise shortest-path distances
(measured in the original graph) are all ``<= l_B``; ``strict=True`` switches
to the ``< l_B`` convention.  Scaling fits use ``l_B + 1`` as the length
variable, the number of nodes a box can span along a geodesic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BudgetError, DomainError, FitError
from .regression import loglog_fit
from .socialgraph import SocialGraph
from .traversal import bfs, components

__all__ = [
    "BoxCovering",
    "BoxStats",
    "FractalFit",
    "cover_greedy",
    "cover_exact",
    "cover_grid",
    "renormalize",
    "box_stats",
    "validate_covering",
    "fit_fractal_exponents",
]

EXACT_MAX_NODES = 16
_DENSE_BALLS_MAX = 5000


@dataclass(frozen=True, eq=False)
class BoxCovering:
    """Partition of the nodes into boxes, boxes numbered ``0..N_B-1``."""

    l_B: int
    assignment: np.ndarray
    hubs: np.ndarray
    strict: bool = False

    @property
    def N_B(self) -> int:
        return int(self.hubs.size)

    @property
    def boxes(self) -> list[np.ndarray]:
        order = np.argsort(self.assignment, kind="stable")
        cuts = np.cumsum(np.bincount(self.assignment, minlength=self.N_B))[:-1]
        return np.split(order, cuts)

    def to_csv(self, path) -> None:
        lines = ["node,box"] + [f"{v},{b}" for v, b in enumerate(self.assignment.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")


def _finish(graph, l_B: int, box: np.ndarray, strict: bool) -> BoxCovering:
    # renumber boxes by their smallest member so the labelling is canonical
    _, first = np.unique(box, return_index=True)
    relabel = np.empty(box.max() + 1, dtype=np.int64)
    relabel[box[np.sort(first)]] = np.arange(first.size)
    assignment = relabel[box]
    deg = graph.degree
    nb = first.size
    # hub = max degree, lowest id on ties: sort by (box, -deg, id)
    order = np.lexsort((np.arange(graph.n), -deg, assignment))
    starts = np.searchsorted(assignment[order], np.arange(nb))
    hubs = order[starts]
    assignment.flags.writeable = False
    hubs.flags.writeable = False
    return BoxCovering(l_B=int(l_B), assignment=assignment, hubs=hubs, strict=strict)


def _radius(l_B: int, strict: bool) -> int:
    return l_B - 1 if strict else l_B


def _ball_fn(graph, radius: int):
    """Return ``ball(v) -> bool mask`` of nodes within ``radius`` of ``v``."""
    n = graph.n
    if n <= _DENSE_BALLS_MAX:
        dense = np.zeros((n, n), dtype=bool)
        for v in range(n):
            dense[v] = _ball(graph, v, radius)
        return dense.__getitem__
    return lambda v: _ball(graph, v, radius)


def _ball(graph, v: int, radius: int) -> np.ndarray:
    dist, _ = bfs(graph, v, max_depth=radius)
    return dist >= 0


def _greedy_pass(n: int, order, ball) -> np.ndarray:
    box = np.full(n, -1, dtype=np.int64)
    sizes: list[int] = []
    for v in order:
        near = ball(v)
        members = box[near]
        members = members[members >= 0]
        chosen = len(sizes)
        if sizes:
            cnt = np.bincount(members, minlength=len(sizes))
            ok = np.flatnonzero(cnt == np.asarray(sizes))
            if ok.size:
                chosen = int(ok[0])
        if chosen == len(sizes):
            sizes.append(0)
        sizes[chosen] += 1
        box[v] = chosen
    return box


def _bfs_order(graph) -> np.ndarray:
    """Nodes component by component, each in BFS order from a pseudo-peripheral node."""
    labels = components(graph)
    seen = np.zeros(graph.n, dtype=bool)
    order = []
    for v in range(graph.n):
        if seen[v]:
            continue
        dist, _ = bfs(graph, v)
        far = int(np.flatnonzero(dist == dist.max())[0])
        dist, _ = bfs(graph, far)
        comp = np.flatnonzero(labels == labels[v])
        comp = comp[np.lexsort((comp, dist[comp]))]
        seen[comp] = True
        order.append(comp)
    return np.concatenate(order)


def cover_greedy(graph, l_B: int, seed: int = 0, n_orders: int | None = None,
                 strict: bool = False) -> BoxCovering:
    """Greedy colouring of the conflict graph (``u, v`` conflict when farther than ``l_B``).

    Every node, taken in turn, joins the lowest-numbered box none of whose
    members conflict with it.  Several visiting orders are tried: a BFS order
    from a pseudo-peripheral node plus seeded random permutations; the order
    giving the fewest boxes wins (earliest on ties).
    """
    if l_B < 1:
        raise DomainError("l_B must be at least 1")
    n = graph.n
    if n == 0:
        raise DomainError("graph is empty")
    if n_orders is None:
        n_orders = 16 if n <= 64 else (4 if n <= _DENSE_BALLS_MAX else 1)
    ball = _ball_fn(graph, _radius(int(l_B), strict))
    rng = np.random.default_rng(seed)
    best = _greedy_pass(n, _bfs_order(graph).tolist(), ball)
    for _ in range(n_orders - 1):
        cand = _greedy_pass(n, rng.permutation(n).tolist(), ball)
        if cand.max() < best.max():
            best = cand
    return _finish(graph, l_B, best, strict)


def cover_exact(graph, l_B: int, strict: bool = False) -> BoxCovering:
    """Minimum covering by branch and bound over partitions (``n <= 16``)."""
    n = graph.n
    if n > EXACT_MAX_NODES:
        raise BudgetError(f"exact covering limited to {EXACT_MAX_NODES} nodes, got {n}")
    if n == 0:
        raise DomainError("graph is empty")
    radius = _radius(int(l_B), strict)
    compat = [0] * n
    for v in range(n):
        dist, _ = bfs(graph, v, max_depth=radius)
        for u in np.flatnonzero(dist >= 0).tolist():
            compat[v] |= 1 << u
    full = (1 << n) - 1
    conflicts = [bin(full & ~compat[v]).count("1") for v in range(n)]
    order = sorted(range(n), key=lambda v: (-conflicts[v], v))

    seed_cover = cover_greedy(graph, l_B, seed=0, n_orders=32, strict=strict)
    best = [seed_cover.N_B, seed_cover.assignment.copy()]
    box_masks: list[int] = []
    assign = np.full(n, -1, dtype=np.int64)

    def search(i: int) -> None:
        if len(box_masks) >= best[0]:
            return
        if i == n:
            best[0] = len(box_masks)
            best[1] = assign.copy()
            return
        v = order[i]
        bit = 1 << v
        for b, mask in enumerate(box_masks):
            if mask & ~compat[v] == 0:
                box_masks[b] = mask | bit
                assign[v] = b
                search(i + 1)
                box_masks[b] = mask
        box_masks.append(bit)
        assign[v] = len(box_masks) - 1
        search(i + 1)
        box_masks.pop()
        assign[v] = -1

    search(0)
    return _finish(graph, l_B, np.asarray(best[1]), strict)


def validate_covering(graph, covering: BoxCovering) -> bool:
    """Partition check plus the pairwise distance bound inside every box."""
    a = covering.assignment
    if a.shape != (graph.n,) or a.min() < 0 or set(np.unique(a).tolist()) != set(range(covering.N_B)):
        return False
    radius = _radius(covering.l_B, covering.strict)
    for members in covering.boxes:
        for v in members.tolist():
            dist, _ = bfs(graph, v, max_depth=radius)
            if np.any(dist[members] < 0):
                return False
    return True


def renormalize(graph, covering: BoxCovering) -> SocialGraph:
    """One node per box; two boxes are linked when any cross edge joins them."""
    e = graph.edges()
    bu = covering.assignment[e[:, 0]]
    bv = covering.assignment[e[:, 1]]
    keep = bu != bv
    return SocialGraph.from_edges(covering.N_B, np.column_stack([bu[keep], bv[keep]]))


@dataclass(frozen=True, eq=False)
class BoxStats:
    """Per-box degree ``k_B``, hub degree ``k_hub`` and hub external links ``n_h``."""

    k_B: np.ndarray
    k_hub: np.ndarray
    n_h: np.ndarray


def box_stats(graph, covering: BoxCovering) -> BoxStats:
    k_B = renormalize(graph, covering).degree.copy()
    k_hub = graph.degree[covering.hubs].copy()
    n_h = np.array([
        int(np.sum(covering.assignment[graph.neighbors(h)] != b))
        for b, h in enumerate(covering.hubs.tolist())
    ], dtype=np.int64)
    return BoxStats(k_B=k_B, k_hub=k_hub, n_h=n_h)


def cover_grid(graph, grid, seed: int = 0, strict: bool = False, **kw) -> list[BoxCovering]:
    """Greedy coverings for ascending box sizes.

    A covering valid at a smaller size is also valid at a larger one, so it
    is carried forward whenever it uses fewer boxes; ``N_B`` is therefore
    non-increasing along the grid.
    """
    sizes = sorted(set(int(s) for s in grid))
    out: list[BoxCovering] = []
    for s in sizes:
        cov = cover_greedy(graph, s, seed=seed, strict=strict, **kw)
        if out and out[-1].N_B < cov.N_B:
            prev = out[-1]
            cov = BoxCovering(l_B=s, assignment=prev.assignment, hubs=prev.hubs, strict=strict)
        out.append(cov)
    return out


@dataclass(frozen=True)
class FractalFit:
    lB_grid: tuple[int, ...]
    NB: tuple[int, ...]
    n: int
    box_ratio: tuple[float, ...]
    degree_ratio: tuple[float, ...]
    hub_ratio: tuple[float, ...]
    dB: float | None
    dg: float | None
    de: float | None
    r2_dB: float | None
    r2_dg: float | None
    r2_de: float | None
    gamma_hat: float | None
    epsilon_hat: float | None

    def to_json(self) -> dict:
        keys = ("lB_grid", "NB", "dB", "dg", "de", "r2_dB", "r2_dg", "r2_de",
                "gamma_hat", "epsilon_hat")
        out = {k: getattr(self, k) for k in keys}
        out["lB_grid"] = list(self.lB_grid)
        out["NB"] = list(self.NB)
        out["covering"] = "greedy"
        return out

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


R2_GATE = 0.9


def _exponent(scales, values):
    vals = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        return None, None
    slope, _, r2 = loglog_fit(scales, vals)
    if math.isnan(r2):
        return None, None
    return -slope, r2


def fit_fractal_exponents(graph, grid, seed: int = 0, strict: bool = False, **kw) -> FractalFit:
    """Fit the three box-covering scaling laws against ``l_B + 1``."""
    sizes = sorted(set(int(s) for s in grid))
    if len(sizes) < 3:
        raise FitError("need at least three distinct box sizes")
    covs = cover_grid(graph, sizes, seed=seed, strict=strict, **kw)
    n = graph.n
    box_ratio, deg_ratio, hub_ratio = [], [], []
    for cov in covs:
        st = box_stats(graph, cov)
        box_ratio.append(cov.N_B / n)
        m = st.k_hub > 0
        deg_ratio.append(float(np.mean(st.k_B[m] / st.k_hub[m])) if m.any() else math.nan)
        m = st.k_B > 0
        hub_ratio.append(float(np.mean(st.n_h[m] / st.k_B[m])) if m.any() else math.nan)
    scales = np.asarray(sizes, dtype=float) + 1
    dB, r2B = _exponent(scales, box_ratio)
    dg, r2g = _exponent(scales, deg_ratio)
    de, r2e = _exponent(scales, hub_ratio)
    gamma_hat = epsilon_hat = None
    g_ok = dg is not None and dg != 0 and r2g >= R2_GATE
    if g_ok and dB is not None and r2B >= R2_GATE:
        gamma_hat = 1 + dB / dg
    if g_ok and de is not None and r2e >= R2_GATE:
        epsilon_hat = 2 + de / dg
    return FractalFit(
        lB_grid=tuple(sizes), NB=tuple(c.N_B for c in covs), n=n,
        box_ratio=tuple(box_ratio), degree_ratio=tuple(deg_ratio), hub_ratio=tuple(hub_ratio),
        dB=dB, dg=dg, de=de, r2_dB=r2B, r2_dg=r2g, r2_de=r2e,
        gamma_hat=gamma_hat, epsilon_hat=epsilon_hat,
    )
