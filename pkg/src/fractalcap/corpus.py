"""Fixed small instances shared by the verifier and the tests."""
from __future__ import annotations

import numpy as np

from .socialgraph import SocialGraph, generate_graph

__all__ = ["weight_corpus", "graph_corpus"]


def weight_corpus() -> list[np.ndarray]:
    """Weight vectors with ``N <= 12``: equal, geometric, integer, wide-range and random."""
    out = [np.ones(N) for N in (1, 2, 5, 12)]
    out += [2.0 ** -np.arange(N) for N in (3, 8, 12)]
    out += [np.arange(1, N + 1, dtype=float) for N in (4, 9, 12)]
    out.append(np.array([1e-8, 1.0, 1e8, 3.0, 1e-4, 1e4]))
    out.append(np.array([1e-6] * 5 + [1e6] * 5))
    rng = np.random.default_rng(20240601)
    for N in (2, 3, 6, 7, 10, 11, 12, 12):
        out.append(rng.lognormal(0.0, 2.0, N))
    return out


def _edges(pairs, n):
    return SocialGraph.from_edges(n, pairs)


def graph_corpus() -> dict[str, SocialGraph]:
    """Named graphs with ``n <= 12``."""
    g: dict[str, SocialGraph] = {}
    for n in (1, 2, 5, 9, 12):
        g[f"path{n}"] = _edges([(i, i + 1) for i in range(n - 1)], n)
    for n in (3, 6, 7, 12):
        g[f"cycle{n}"] = _edges([(i, (i + 1) % n) for i in range(n)], n)
    g["star8"] = _edges([(0, i) for i in range(1, 8)], 8)
    g["complete5"] = _edges([(i, j) for i in range(5) for j in range(i + 1, 5)], 5)
    g["bintree7"] = _edges([(i, c) for i in range(3) for c in (2 * i + 1, 2 * i + 2)], 7)
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    g["petersen"] = _edges(outer + spokes + inner, 10)
    g["grid3x4"] = _edges([(r * 4 + c, r * 4 + c + 1) for r in range(3) for c in range(3)]
                          + [(r * 4 + c, (r + 1) * 4 + c) for r in range(2) for c in range(4)], 12)
    g["two_triangles"] = _edges([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], 6)
    g["isolated4"] = _edges([], 4)
    for s in range(6):
        g[f"generated12_s{s}"] = generate_graph(12, 2.5, 2.5, seed=s, kmax=6)
    return g
