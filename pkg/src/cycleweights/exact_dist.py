"""Exact finite-n laws derived from a norm table.

P(l_1 = j) = theta_j h_{n-j} / (n h_n), and the joint law of (l_1, l_2)
splits into the "different cycles" and "same cycle" parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .normalization import NormTable, logsumexp
from .weights import NEG_INF, WeightSequence

DENSE_JOINT_MAX_N = 4000


class ModelUndefinedError(ValueError):
    """h_n = 0, so the weighted permutation law does not exist at this n."""


def _check_n(t: NormTable, n: int, min_n: int = 1) -> None:
    if not min_n <= n <= t.N:
        raise ValueError(f"n={n} outside table range [{min_n}, {t.N}]")
    if t.log_h[n] == NEG_INF:
        raise ModelUndefinedError(f"h_{n} = 0 for {t.weights_id}")


@dataclass(frozen=True, eq=False)
class LengthPMF:
    """Law of l_1 at size n.  ``log_p[j]`` for j = 0..n; entry 0 is -inf."""

    n: int
    log_p: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return np.exp(self.log_p)

    def total(self) -> float:
        return math.fsum(self.p[1:].tolist())


def ell1_pmf(t: NormTable, w: WeightSequence, n: int) -> LengthPMF:
    _check_n(t, n)
    lt = w.log_theta_array(n)
    j = np.arange(n + 1)
    log_p = lt + t.log_h[n - j] - t.log_h[n] - math.log(n)
    log_p[0] = NEG_INF
    return LengthPMF(n, log_p)


def tail_prob(p: LengthPMF, a: float, b: float) -> float:
    """P(l_1 in [a, b]) summed over the integers ceil(a)..floor(b)."""
    lo = max(1, math.ceil(a))
    hi = min(p.n, math.floor(b))
    if lo > hi:
        return 0.0
    return math.fsum(np.exp(p.log_p[lo : hi + 1]).tolist())


def tail_above(p: LengthPMF, x: float) -> float:
    """P(l_1 > x)."""
    return tail_prob(p, math.floor(x) + 1, p.n)


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Joint law of (l_1, l_2) at size n (linear probabilities).

    ``same_cycle[j]``: 1 and 2 lie in a common j-cycle.
    ``diff_cycle[j, k]``: l_1 = j, l_2 = k in different cycles, j + k <= n.
    """

    n: int
    same_cycle: np.ndarray
    diff_cycle: np.ndarray

    def total(self) -> float:
        return math.fsum(self.same_cycle.tolist()) + math.fsum(self.diff_cycle.ravel().tolist())

    def marginal_ell1(self) -> np.ndarray:
        return self.diff_cycle.sum(axis=1) + self.same_cycle


def joint_pmf(t: NormTable, w: WeightSequence, n: int) -> JointPMF:
    _check_n(t, n, min_n=2)
    if n > DENSE_JOINT_MAX_N:
        raise ValueError(
            f"dense joint law limited to n <= {DENSE_JOINT_MAX_N}; use joint_tail"
        )
    lt = w.log_theta_array(n)
    lh = t.log_h
    norm = lh[n] + math.log(n * (n - 1))
    j = np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        same = np.log(np.maximum(j - 1, 0)) + lt + lh[n - j] - norm
    same = np.exp(np.where(j >= 2, same, NEG_INF))
    diff = np.zeros((n + 1, n + 1))
    for jj in range(1, n):
        k = np.arange(1, n - jj + 1)
        diff[jj, k] = np.exp(lt[jj] + lt[k] + lh[n - jj - k] - norm)
    return JointPMF(n, same, diff)


def joint_tail(t: NormTable, w: WeightSequence, n: int, s: float, u: float) -> float:
    """P(l_1 > s n, l_2 > u n) by direct double summation (no dense matrix)."""
    _check_n(t, n, min_n=2)
    lt = w.log_theta_array(n)
    lh = t.log_h
    norm = lh[n] + math.log(n * (n - 1))
    j_lo = math.floor(s * n) + 1
    k_lo = math.floor(u * n) + 1
    rows = []
    for jj in range(max(j_lo, 1), n - max(k_lo, 1) + 1):
        k = np.arange(max(k_lo, 1), n - jj + 1)
        rows.append(lt[jj] + logsumexp(lt[k] + lh[n - jj - k]))
    diff = math.exp(logsumexp(np.array(rows)) - norm) if rows else 0.0
    m_lo = max(j_lo, k_lo, 2)
    if m_lo <= n:
        jj = np.arange(m_lo, n + 1)
        same = math.exp(logsumexp(np.log(jj - 1.0) + lt[jj] + lh[n - jj]) - norm)
    else:
        same = 0.0
    return diff + same


def expected_rk(t: NormTable, w: WeightSequence, n: int, k: int) -> float:
    """E r_k = theta_k h_{n-k} / (k h_n) = n P(l_1 = k) / k."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    _check_n(t, n)
    return math.exp(w.log_theta(k) + t.log_h[n - k] - t.log_h[n] - math.log(k))


def expected_N(t: NormTable, w: WeightSequence, n: int, a: float, b: float) -> float:
    """E N_{a,b}: expected number of indices in cycles of length in [a, b]."""
    return n * tail_prob(ell1_pmf(t, w, n), a, b)
