"""Level-L contacts: measured profiles and closed-form hierarchy analytics.

A level-L contact of ``v`` is a node at shortest-path distance exactly ``L``,
so every connected pair is counted at one level only.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, UnsupportedRegimeError
from .socialgraph import powerlaw_normalization
from .traversal import level_counts

__all__ = [
    "LevelProfile",
    "HierarchyAnalytics",
    "Extendibility",
    "level_degree_profile",
    "analytic_level_degree",
    "mean_neighbor_degree",
    "extendibility_class",
    "max_level",
    "level_ratio_sum",
    "hierarchical_hop_factor",
    "capacity_reduction",
    "hierarchy_analytics",
]

_BOUNDARY_TOL = 1e-12


def _is_boundary(epsilon: float) -> bool:
    return abs(epsilon - 3.0) <= _BOUNDARY_TOL


@dataclass(frozen=True, eq=False)
class LevelProfile:
    """Per-node level counts ``counts[v, L-1]`` and the pair statistics derived from them."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def levels(self) -> np.ndarray:
        return np.arange(1, self.counts.shape[1] + 1)

    @property
    def mean_level_degree(self) -> np.ndarray:
        return self.counts.mean(axis=0)

    @property
    def pair_count(self) -> np.ndarray:
        return self.counts.sum(axis=0) // 2

    @property
    def ratio(self) -> np.ndarray:
        return self.pair_count / math.comb(self.n, 2)

    @property
    def coverage(self) -> float:
        """Fraction of all pairs found within the explored levels."""
        return float(self.pair_count.sum() / math.comb(self.n, 2))

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "mean_level_degree", "pair_count", "ratio"])
            for lev, k, m, r in zip(self.levels, self.mean_level_degree, self.pair_count, self.ratio):
                w.writerow([int(lev), repr(float(k)), int(m), repr(float(r))])


def level_degree_profile(graph, L_explore: int) -> LevelProfile:
    if L_explore < 1:
        raise DomainError("L_explore must be at least 1")
    return LevelProfile(level_counts(graph, int(L_explore)))


def _check(gamma: float, epsilon: float) -> None:
    if not gamma > 2:
        raise DomainError(f"gamma must exceed 2, got {gamma}")
    if not epsilon > 2:
        raise DomainError(f"epsilon must exceed 2, got {epsilon}")


def mean_neighbor_degree(epsilon: float, mode: str = "continuous", kmax: int | None = None) -> float:
    """Mean degree of the far end of an edge under ``P(D=k) ~ k**-epsilon``."""
    if not epsilon > 2:
        raise DomainError(f"epsilon must exceed 2, got {epsilon}")
    if mode == "continuous":
        return (epsilon - 1) / (epsilon - 2)
    if mode == "discrete":
        if kmax is None:
            raise DomainError("discrete mode needs kmax")
        return powerlaw_normalization(epsilon - 1, kmax) / powerlaw_normalization(epsilon, kmax)
    raise DomainError(f"unknown mode {mode!r}")


def analytic_level_degree(gamma: float, epsilon: float, L: int, mode: str = "continuous",
                          kmax: int | None = None) -> float:
    """Mean level-``L`` degree from the branching recursion ``K(L) = (D - 1) K(L-1)``.

    Continuous mode uses the large-``n`` constants ``(gamma-1)/(gamma-2)``
    and ``1/(epsilon-2)``; discrete mode uses truncated sums over ``1..kmax``.
    """
    _check(gamma, epsilon)
    if L < 1:
        raise DomainError("L must be at least 1")
    if mode == "continuous":
        return (1.0 / (epsilon - 2)) ** (L - 1) * (gamma - 1) / (gamma - 2)
    if mode == "discrete":
        if kmax is None:
            raise DomainError("discrete mode needs kmax")
        k1 = powerlaw_normalization(gamma - 1, kmax) / powerlaw_normalization(gamma, kmax)
        return k1 * (mean_neighbor_degree(epsilon, "discrete", kmax) - 1) ** (L - 1)
    raise DomainError(f"unknown mode {mode!r}")


class Extendibility(str, enum.Enum):
    EXPANDING = "expanding"
    INVARIANT = "invariant"
    CONTRACTING = "contracting"


def extendibility_class(epsilon: float) -> Extendibility:
    if not epsilon > 2:
        raise DomainError(f"epsilon must exceed 2, got {epsilon}")
    if _is_boundary(epsilon):
        return Extendibility.INVARIANT
    return Extendibility.EXPANDING if epsilon < 3 else Extendibility.CONTRACTING


def _regime(gamma, epsilon, n):
    _check(gamma, epsilon)
    if n < 2:
        raise DomainError("n must be at least 2")
    if epsilon > 3 and not _is_boundary(epsilon):
        raise UnsupportedRegimeError("no closed form for epsilon > 3")


def max_level(gamma: float, epsilon: float, n: int) -> float:
    """Real-valued deepest level at which the level ratios sum to one."""
    _regime(gamma, epsilon, n)
    if _is_boundary(epsilon):
        return (gamma - 2) * (n - 1) / (gamma - 1)
    alpha = 1.0 / (epsilon - 2)
    return math.log((gamma - 2) * (alpha - 1) * (n - 1) / (gamma - 1) + 1) / math.log(alpha)


def level_ratio_sum(gamma: float, epsilon: float, n: int, L: float) -> float:
    """``sum_{l<=L} R(l)`` with ``R(l) = K(l)/(n-1)``, via the geometric closed form
    (valid for real ``L``)."""
    _check(gamma, epsilon)
    r1 = (gamma - 1) / ((gamma - 2) * (n - 1))
    if _is_boundary(epsilon):
        return r1 * L
    alpha = 1.0 / (epsilon - 2)
    return r1 * (alpha ** L - 1) / (alpha - 1)


def hierarchical_hop_factor(gamma: float, epsilon: float, n: int) -> float:
    """Ratio of mean hops with level-weighted destinations to direct-contact hops,
    assuming level-``L`` hops are ``L`` times level-1 hops."""
    _regime(gamma, epsilon, n)
    if _is_boundary(epsilon):
        return ((gamma - 2) * n + 1) / (2 * (gamma - 1))
    alpha = 1.0 / (epsilon - 2)
    lmax = max_level(gamma, epsilon, n)
    a = (gamma - 2) * (n - 1) / (gamma - 1)
    s = lmax * (a * (alpha - 1) + 1) / (alpha - 1) - a / (alpha - 1)
    return (gamma - 1) / ((gamma - 2) * (n - 1)) * s


def capacity_reduction(lambda_direct: float, gamma: float, epsilon: float, n: int) -> float:
    """Hierarchical capacity estimate ``lambda_direct / hop factor``."""
    if not lambda_direct > 0:
        raise DomainError("lambda_direct must be positive")
    return lambda_direct / hierarchical_hop_factor(gamma, epsilon, n)


@dataclass(frozen=True)
class HierarchyAnalytics:
    gamma: float
    epsilon: float
    n: int
    mode: str
    alpha: float
    mean_neighbor_degree: float
    level_degree: tuple[float, ...]
    extendibility: Extendibility
    L_max: float | None
    S: float | None
    hop_factor: float | None


def hierarchy_analytics(gamma: float, epsilon: float, n: int, mode: str = "continuous",
                        kmax: int | None = None, levels: int | None = None) -> HierarchyAnalytics:
    """Bundle the closed-form quantities for one ``(gamma, epsilon, n)``.

    Level degrees are listed up to ``ceil(L_max)`` (capped at 64), or
    ``levels`` when given or when ``L_max`` is undefined.
    """
    _check(gamma, epsilon)
    alpha = 1.0 / (epsilon - 2)
    lmax = s = factor = None
    if epsilon <= 3 or _is_boundary(epsilon):
        lmax = max_level(gamma, epsilon, n)
        factor = hierarchical_hop_factor(gamma, epsilon, n)
        s = factor * (gamma - 2) * (n - 1) / (gamma - 1)
    if levels is None:
        levels = min(64, math.ceil(lmax)) if lmax is not None else 10
    degs = tuple(analytic_level_degree(gamma, epsilon, L, mode, kmax) for L in range(1, levels + 1))
    return HierarchyAnalytics(
        gamma=gamma, epsilon=epsilon, n=n, mode=mode, alpha=alpha,
        mean_neighbor_degree=mean_neighbor_degree(epsilon, mode, kmax),
        level_degree=degs, extendibility=extendibility_class(epsilon),
        L_max=lmax, S=s, hop_factor=factor,
    )
