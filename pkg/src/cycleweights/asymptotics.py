"""Limit-theorem predictions for the three weight regimes.

Ewens-like weights: limits of the l_1 tail and of the (l_1, l_2) joint tail.
Slowly diverging alpha_j: giant cycle limits and the a_n ratio bound.
Quickly diverging alpha_j: saddle radius r_n, the saddle-point estimate of
h_n, the h_{n-j}/h_n ratio bound, and the alpha_j = j^gamma length scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .exact_dist import ell1_pmf, tail_above
from .normalization import (
    CertificationError,
    NormTable,
    empirical_B,
    logsumexp,
    ratio_bound_monitor,
)
from .weights import NEG_INF, WeightSequence, check_hypotheses

SERIES_DROP_NATS = 50.0
SERIES_CHUNK = 32
MAX_SERIES_INDEX = 10**7


class HypothesisError(ValueError):
    """The requested theorem does not apply to this weight family."""


# ---------------------------------------------------------------------------
# power series I_beta(z) = sum_j j^beta theta_j z^j


def log_I(w: WeightSequence, beta: float, r: float) -> float:
    """log I_beta(r) for a family with infinite radius of convergence.

    Finite supports are summed exactly.  Otherwise terms are scanned in
    chunks and the scan stops past the term argmax once a chunk lies 50
    nats below the running max.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    log_r = math.log(r)
    support = w.support_indices()
    if support is not None:
        j = np.asarray(support, dtype=float)
        lt = np.array([w.log_theta(int(k)) for k in support])
        return logsumexp(beta * np.log(j) + lt + j * log_r)
    if w.superexponential is not True:
        raise HypothesisError(
            f"{w.descriptor()}: I_beta needs superexponentially decaying weights"
        )
    parts = []
    best = NEG_INF
    best_j = 0
    j0 = 1
    while True:
        j = np.arange(j0, j0 + SERIES_CHUNK, dtype=float)
        lt = np.array([w.log_theta(int(k)) for k in j])
        terms = beta * np.log(j) + lt + j * log_r
        m = float(terms.max())
        if m > best:
            best = m
            best_j = int(j[terms.argmax()])
        parts.append(terms)
        if j0 > best_j and m < best - SERIES_DROP_NATS:
            break
        j0 += SERIES_CHUNK
        if j0 > MAX_SERIES_INDEX:
            raise CertificationError("I_beta series did not decay")
    return logsumexp(np.concatenate(parts))


# ---------------------------------------------------------------------------
# saddle point


@dataclass(frozen=True)
class SaddleData:
    n: int
    r_n: float
    log_I0: float
    log_I1: float
    log_I2: float
    phi: float
    log_hn_estimate: float
    period: int = 1

    @property
    def residual(self) -> float:
        """|I_0(r_n) - n| / n."""
        return abs(math.expm1(self.log_I0 - math.log(self.n)))


def _support_period(w: WeightSequence) -> int:
    support = w.support_indices()
    if support is None:
        return 1
    return reduce(math.gcd, support)


def solve_rn(w: WeightSequence, n: int, tol: float = 1e-12) -> SaddleData:
    """Solve I_0(r) = n and evaluate the saddle-point quantities at r_n.

    The root is bracketed by doubling (or halving) from r = 1 and then
    bisected until the relative residual of I_0 is at most ``tol``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if w.support_indices() is None and w.superexponential is not True:
        raise HypothesisError(
            f"{w.descriptor()}: r_n needs an infinite radius of convergence"
        )
    log_n = math.log(n)

    def f(r):
        return log_I(w, 0.0, r) - log_n

    lo, hi = 1.0, 1.0
    if f(1.0) < 0:
        while f(hi) < 0:
            lo, hi = hi, hi * 2.0
    else:
        while f(lo) > 0:
            lo, hi = lo / 2.0, lo
    r = lo if f(lo) == 0 else hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(math.expm1(fm)) <= tol:
            r = mid
            break
        if mid <= lo or mid >= hi:
            r = lo if abs(f(lo)) <= abs(f(hi)) else hi
            break
        if fm < 0:
            lo = mid
        else:
            hi = mid
    log_I0 = log_I(w, 0.0, r)
    log_I1 = log_I(w, 1.0, r)
    log_I2 = log_I(w, 2.0, r)
    phi = math.exp(log_I(w, -1.0, r))
    est = -n * math.log(r) - 0.5 * (math.log(2 * math.pi) + log_I1) + phi
    return SaddleData(n, r, log_I0, log_I1, log_I2, phi, est, _support_period(w))


def saddle_log_hn(sd: SaddleData, lattice: bool = False) -> float:
    """Saddle-point estimate log h_n = -n log r_n - log sqrt(2 pi I_1) + phi.

    With ``lattice=True`` the estimate is multiplied by the support period
    d when d divides n: a d-periodic support has d equal saddle points on
    the circle |z| = r_n.
    """
    if lattice and sd.period > 1:
        if sd.n % sd.period:
            return NEG_INF
        return sd.log_hn_estimate + math.log(sd.period)
    return sd.log_hn_estimate


@dataclass(frozen=True)
class RatioBoundRow:
    n: int
    log_ratio_sup: float  # sup_j (log h_{n-j} - log h_n) - (j + 1/2) log r_n
    argmax_j: int
    sanity_j0: float  # the j = 0 value, -1/2 log r_n


@dataclass(frozen=True)
class RatioBoundReport:
    delta: float
    rows: tuple[RatioBoundRow, ...]

    @property
    def log_C_delta(self) -> float:
        return max(r.log_ratio_sup for r in self.rows)

    def non_increasing_after(self, n0: int, slack: float = 0.0) -> bool:
        vals = [r.log_ratio_sup for r in self.rows if r.n >= n0]
        return all(b <= a + slack for a, b in zip(vals, vals[1:]))


def h_ratio_bound_check(
    t: NormTable,
    delta: float,
    grid: Sequence[int],
    sd_provider: Callable[[int], SaddleData],
) -> RatioBoundReport:
    """Empirical log C_delta in h_{n-j}/h_n <= C_delta r_n^{j+1/2}, j < (1-delta) n.

    Grid points with h_n = 0 are skipped.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    rows = []
    lh = t.log_h
    for n in grid:
        if n > t.N:
            raise ValueError(f"n={n} beyond table size {t.N}")
        if lh[n] == NEG_INF:
            continue
        log_r = math.log(sd_provider(n).r_n)
        j = np.arange(0, math.ceil((1 - delta) * n))
        vals = lh[n - j] - lh[n] - (j + 0.5) * log_r
        k = int(np.argmax(vals))
        rows.append(RatioBoundRow(n, float(vals[k]), int(j[k]), -0.5 * log_r))
    return RatioBoundReport(delta, tuple(rows))


# ---------------------------------------------------------------------------
# Ewens-like regime


def ewens_limits(theta: float, s: float, t: float) -> tuple[float, float]:
    """Limits of P(l_1 > s n) and P(l_1 > s n, l_2 > t n) for Ewens-like weights."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not (0 <= s <= 1 and 0 <= t <= 1):
        raise ValueError("s and t must lie in [0, 1]")
    tail = (1 - s) ** theta
    m = max(s, t)
    joint = theta / (1 + theta) * max(1 - s - t, 0.0) ** (theta + 1) + (
        1 + theta * m
    ) / (1 + theta) * (1 - m) ** theta
    return tail, joint


# ---------------------------------------------------------------------------
# slowly diverging regime


@dataclass(frozen=True)
class GiantCycleNormalizer:
    """Truncated sum of h_j over the table, with a certified tail bound.

    ``sum_with_h0`` includes h_0 = 1, ``sum_without_h0`` starts at j = 1.
    The tail bound uses h_j <= B theta_j / j with the empirical B, so it is
    only as good as that estimate.
    """

    sum_with_h0: float
    sum_without_h0: float
    tail_bound: float
    B_empirical: float
    N: int

    @property
    def relative_error(self) -> float:
        return self.tail_bound / self.sum_without_h0


def giant_cycle_normalizer(
    w: WeightSequence, t: NormTable, rel_tol: float = 1e-6
) -> GiantCycleNormalizer:
    report = check_hypotheses(w)
    if not report.giant_cycle_ok:
        raise HypothesisError(f"{w.descriptor()}: giant-cycle hypothesis not certified")
    B = empirical_B(ratio_bound_monitor(t, w))
    tail = B * w.tail_theta_over_j(t.N)
    h = np.exp(t.log_h)
    s1 = math.fsum(h[1:].tolist())
    norm = GiantCycleNormalizer(1.0 + s1, s1, tail, B, t.N)
    if not norm.relative_error < rel_tol:
        raise CertificationError(
            f"tail of sum h_j not certified below {rel_tol} with N={t.N} "
            f"(bound {norm.relative_error:.3g})"
        )
    return norm


CONVENTIONS = ("with_h0", "without_h0")


@dataclass(frozen=True)
class ConventionCheck:
    """Which normalizer makes the limits of P(l_1 = n - m) sum to one."""

    mass_with_h0: float
    mass_without_h0: float
    finite_n: int
    finite_mass: float
    pointwise_with_h0: tuple[float, ...]
    pointwise_without_h0: tuple[float, ...]

    @property
    def resolved(self) -> str:
        err = {
            "with_h0": abs(self.mass_with_h0 - self.finite_mass),
            "without_h0": abs(self.mass_without_h0 - self.finite_mass),
        }
        return min(err, key=err.get)


def resolve_giant_convention(
    w: WeightSequence, t: NormTable, n: int, m_values: Sequence[int] = (0, 1, 2)
) -> ConventionCheck:
    """Decide whether h_0 belongs to the normalizer by a total mass check.

    At finite n, sum_m P(l_1 = n - m) = 1 exactly.  Summed over m, the
    candidate limits give S_with/S_with = 1 and S_with/S_without > 1.
    Pointwise gaps |P(l_1 = n - m) - h_m / S| are reported as well.
    """
    norm = giant_cycle_normalizer(w, t)
    S0, S1 = norm.sum_with_h0, norm.sum_without_h0
    p = ell1_pmf(t, w, n).p
    finite_mass = math.fsum(p[1:].tolist())
    h = np.exp(t.log_h)
    mass_all_m = math.fsum(h.tolist())  # sum over every m of h_m
    pw0 = tuple(abs(p[n - m] - h[m] / S0) for m in m_values)
    pw1 = tuple(abs(p[n - m] - h[m] / S1) for m in m_values)
    return ConventionCheck(mass_all_m / S0, mass_all_m / S1, n, finite_mass, pw0, pw1)


def giant_cycle_limit(
    w: WeightSequence, t: NormTable, m: int, convention: str = "with_h0"
) -> float:
    """lim_n P(l_1 = n - m) = h_m / sum_j h_j."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if not 0 <= m <= t.N:
        raise ValueError("m outside table range")
    norm = giant_cycle_normalizer(w, t)
    S = norm.sum_with_h0 if convention == "with_h0" else norm.sum_without_h0
    return math.exp(t.log_h[m]) / S


# ---------------------------------------------------------------------------
# quickly diverging regime


@dataclass(frozen=True)
class GammaPrediction:
    gamma: float
    n: int
    log_rn: float  # numeric when supplied, otherwise the asymptotic form
    j_max: float
    typical_length: float
    log_rn_asym: float
    small_cycle_threshold: float

    @property
    def log_peak_term(self) -> float:
        """log of e^{-alpha(j_max)} r_n^{j_max}; grows like log n."""
        return -self.j_max**self.gamma + self.j_max * self.log_rn


def gamma_prediction(gamma: float, n: int, log_rn: float | None = None) -> GammaPrediction:
    """Closed-form length scales for alpha_j = j^gamma, gamma > 1."""
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    if n < 3:
        raise ValueError("n must be >= 3")
    L = math.log(n) / (gamma - 1)
    typical = L ** (1 / gamma)
    log_rn_asym = gamma * L ** ((gamma - 1) / gamma)
    if log_rn is None:
        log_rn = log_rn_asym
    j_max = (log_rn / gamma) ** (1 / (gamma - 1)) if log_rn > 0 else 0.0
    threshold = small_cycle_threshold(n, log_rn)
    return GammaPrediction(gamma, n, log_rn, j_max, typical, log_rn_asym, threshold)


def small_cycle_threshold(n: int, log_rn: float) -> float:
    """log n / log r_n - 3/4."""
    return math.log(n) / log_rn - 0.75


def macroscopic_tail(t: NormTable, w: WeightSequence, n: int, delta: float) -> float:
    """Union bound n P(l_1 > delta n) on P(max_i l_i > delta n)."""
    if delta >= 1:
        return 0.0
    return n * tail_above(ell1_pmf(t, w, n), delta * n)
