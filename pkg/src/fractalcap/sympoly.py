"""Elementary symmetric polynomials in the log domain.

For weights ``w_1..w_N`` the order-``p`` elementary symmetric polynomial is
the sum, over all ``p``-subsets, of the product of the chosen weights.  With
weights of the form ``k**-eps`` and ``N`` in the thousands these sums
under/overflow immediately, so every table entry is kept as a natural log and
combined with log-sum-exp.

Indices are 0-based throughout: ``k`` names the position of a weight in the
input sequence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError

__all__ = [
    "SymPolyTable",
    "build_table",
    "excluded_sigma",
    "log_excluded_sigma",
    "contact_probability",
    "contact_probabilities",
    "lemma1_ratio",
]


def _log_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DomainError("weights must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DomainError("all weights must be finite and strictly positive")
    return np.log(w)


def _table_from_logs(logw: np.ndarray, p_max: int) -> np.ndarray:
    n = logw.size
    table = np.full((p_max + 1, n + 1), -np.inf)
    table[0, :] = 0.0
    col = table[:, 0].copy()
    for j in range(1, n + 1):
        shifted = np.empty_like(col)
        shifted[0] = -np.inf
        shifted[1:] = col[:-1] + logw[j - 1]
        col = np.logaddexp(col, shifted)
        table[:, j] = col
    return table


@dataclass(frozen=True, eq=False)
class SymPolyTable:
    """Triangular table ``logsigma[p, j] = log sigma_{p,j}``.

    ``sigma_{p,j}`` uses the first ``j`` weights only; entries with ``p > j``
    are ``-inf``.  The arrays are read-only.
    """

    weights: np.ndarray
    p_max: int
    logsigma: np.ndarray

    @property
    def N(self) -> int:
        return self.weights.size

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def log_sigma(self, p: int, j: int | None = None) -> float:
        j = self.N if j is None else j
        if not 0 <= p <= self.p_max:
            raise DomainError(f"order {p} outside table range 0..{self.p_max}")
        if not 0 <= j <= self.N:
            raise DomainError(f"prefix length {j} outside 0..{self.N}")
        return float(self.logsigma[p, j])

    def sigma(self, p: int, j: int | None = None) -> float:
        return float(np.exp(self.log_sigma(p, j)))


def build_table(weights, p_max: int) -> SymPolyTable:
    """Build the table of ``log sigma_{p,j}`` for ``p <= p_max``.

    Uses the recurrence ``sigma_{p,j} = sigma_{p,j-1} + w_j sigma_{p-1,j-1}``.
    """
    logw = _log_weights(weights)
    p_max = int(p_max)
    if not 1 <= p_max <= logw.size:
        raise DomainError(f"p_max must lie in 1..N={logw.size}, got {p_max}")
    table = _table_from_logs(logw, p_max)
    w = np.exp(logw)
    w.flags.writeable = False
    table.flags.writeable = False
    return SymPolyTable(weights=w, p_max=p_max, logsigma=table)


def _check_index(table: SymPolyTable, k: int) -> int:
    k = int(k)
    if not 0 <= k < table.N:
        raise DomainError(f"index {k} outside 0..{table.N - 1}")
    return k


# downdate error growth tolerated before falling back (~4 of 16 digits)
DOWNDATE_MAX_AMPLIFICATION = 1e4


def log_excluded_sigma(table: SymPolyTable, k: int, p: int, method: str = "rebuild") -> float:
    """``log`` of the order-``p`` polynomial over every weight except ``w_k``.

    ``method="rebuild"`` recomputes a table without ``w_k``.  ``"downdate"``
    unrolls ``sigma^k_p = sigma_p - w_k sigma^k_{p-1}`` from the full table.
    Each step amplifies the running error by ``ratio / (1 - ratio)``; once the
    accumulated factor passes ``DOWNDATE_MAX_AMPLIFICATION`` the result is
    recomputed by rebuilding instead.
    """
    k = _check_index(table, k)
    p = int(p)
    if not 0 <= p <= table.N - 1:
        raise DomainError(f"order {p} outside 0..N-1={table.N - 1}")
    if p == 0:
        return 0.0
    if method not in ("rebuild", "downdate"):
        raise ValueError(f"unknown method {method!r}")
    if method == "downdate":
        if p > table.p_max:
            raise DomainError(f"downdate needs p <= p_max={table.p_max}")
        logwk = float(np.log(table.weights[k]))
        prev, amp = 0.0, 1.0
        for i in range(1, p + 1):
            full = table.logsigma[i, -1]
            ratio = float(np.exp(logwk + prev - full))
            if ratio >= 0.999:
                break
            amp = amp * ratio / (1.0 - ratio) + 1.0
            if amp > DOWNDATE_MAX_AMPLIFICATION:
                break
            prev = float(full + np.log1p(-ratio))
        else:
            return prev
    logw = np.delete(table.log_weights, k)
    return float(_table_from_logs(logw, p)[p, -1])


def excluded_sigma(table: SymPolyTable, k: int, p: int, method: str = "rebuild") -> float:
    return float(np.exp(log_excluded_sigma(table, k, p, method)))


def contact_probability(weights, q: int, k: int) -> float:
    """Probability that candidate ``k`` is among ``q`` weighted picks.

    A ``q``-subset is drawn with probability proportional to the product of
    its weights; the result is ``w_k sigma^k_{q-1,N-1} / sigma_{q,N}``.
    """
    logw = _log_weights(weights)
    q = int(q)
    if not 1 <= q <= logw.size:
        raise DomainError(f"cannot choose q={q} contacts from N={logw.size} candidates")
    table = build_table(np.exp(logw), q)
    k = _check_index(table, k)
    logp = logw[k] + log_excluded_sigma(table, k, q - 1) - table.logsigma[q, -1]
    return float(min(1.0, np.exp(logp)))


def contact_probabilities(weights, q: int) -> np.ndarray:
    """Inclusion probability of every candidate, in one pass.

    The excluded polynomials are assembled from prefix and suffix tables
    (``sigma^k_p = sum_i prefix_i(k) suffix_{p-i}(k+1)``), which involves no
    subtraction and so keeps full relative precision.
    """
    logw = _log_weights(weights)
    n = logw.size
    q = int(q)
    if not 1 <= q <= n:
        raise DomainError(f"cannot choose q={q} contacts from N={n} candidates")
    pre = _table_from_logs(logw, q)
    suf = _table_from_logs(logw[::-1], q)
    p = q - 1
    ks = np.arange(n)
    terms = np.stack([pre[i, ks] + suf[p - i, n - ks - 1] for i in range(p + 1)])
    log_excl = logsumexp(terms, axis=0)
    probs = np.exp(logw + log_excl - pre[q, n])
    return np.minimum(probs, 1.0)


def lemma1_ratio(weights, q: int) -> float:
    """``sigma_1 sigma_q / ((q + 1) sigma_{q+1})`` over all ``N`` weights.

    Equals ``N / (N - q)`` when all weights are equal.
    """
    logw = _log_weights(weights)
    n = logw.size
    q = int(q)
    if n < 2:
        raise DomainError("need at least two weights")
    if not 1 <= q <= n - 1:
        raise DomainError(f"q must lie in 1..N-1={n - 1}, got {q}")
    t = _table_from_logs(logw, q + 1)
    return float(np.exp(t[1, n] + t[q, n] - np.log(q + 1) - t[q + 1, n]))
