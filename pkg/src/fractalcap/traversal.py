"""Breadth-first machinery shared by the hierarchy, box-covering and routing code."""
from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = ["bfs", "components", "level_counts", "path_to"]


def _gather(graph, frontier: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    starts = graph.indptr[frontier]
    lens = graph.indptr[frontier + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    base = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
    return graph.indices[base + np.arange(total)], np.repeat(frontier, lens)


def bfs(graph, source: int, max_depth: int | None = None, target: int | None = None):
    """Single-source BFS returning ``(dist, parent)``.

    ``dist`` is ``-1`` for unreached nodes.  Each node's parent is the
    smallest-id neighbour on the previous level.  The search stops after
    ``max_depth`` levels, or as soon as ``target`` is labelled.
    """
    n = graph.n
    dist = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    depth = 0
    while frontier.size and (max_depth is None or depth < max_depth):
        if target is not None and dist[target] >= 0:
            break
        nbrs, par = _gather(graph, frontier)
        fresh = dist[nbrs] < 0
        nbrs, par = nbrs[fresh], par[fresh]
        if nbrs.size == 0:
            break
        order = np.lexsort((par, nbrs))
        nbrs, par = nbrs[order], par[order]
        first = np.concatenate([[True], nbrs[1:] != nbrs[:-1]])
        frontier = nbrs[first]
        depth += 1
        dist[frontier] = depth
        parent[frontier] = par[first]
    return dist, parent


def path_to(parent: np.ndarray, source: int, target: int) -> list[int]:
    """Recover the BFS-tree path ``source -> target``."""
    path = [int(target)]
    while path[-1] != source:
        p = int(parent[path[-1]])
        if p < 0:
            raise ValueError("target not reached from source")
        path.append(p)
    return path[::-1]


def components(graph) -> np.ndarray:
    """Connected-component label of every node."""
    _, labels = connected_components(graph.adjacency(), directed=False)
    return labels


def level_counts(graph, max_level: int, budget: int = 5_000_000) -> np.ndarray:
    """``out[v, L-1]`` = number of nodes at shortest-path distance exactly ``L``.

    Sources are expanded in row blocks of sparse frontier matrices; the block
    size adapts so that the reached set of a block stays near ``budget``
    stored entries.
    """
    n = graph.n
    out = np.zeros((n, max_level), dtype=np.int64)
    if n == 0 or max_level < 1:
        return out
    adj = graph.adjacency()
    block = max(1, min(n, budget // n))
    s0 = 0
    while s0 < n:
        s1 = min(n, s0 + block)
        b = s1 - s0
        front = csr_matrix((np.ones(b), np.arange(s0, s1), np.arange(b + 1)), shape=(b, n))
        reach = front.copy()
        for lev in range(max_level):
            nxt = front @ adj
            nxt.data[:] = 1.0
            nxt = nxt - nxt.multiply(reach)
            nxt.eliminate_zeros()
            out[s0:s1, lev] = np.diff(nxt.indptr)
            if nxt.nnz == 0:
                break
            reach = reach + nxt
            front = nxt
        per_row = max(1.0, reach.nnz / b)
        block = int(max(1, min(n, budget / per_row)))
        s0 = s1
    return out
