"""Normalization constants h_n in log domain.

h_0 = 1 and h_n = (1/n) sum_{j=1}^n theta_j h_{n-j}.  The table stores
log h_n; ``-inf`` marks h_n = 0, which happens for periodic supports.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .weights import (
    NEG_INF,
    Ewens,
    PerturbedEwens,
    WeightSequence,
    check_hypotheses,
    shift_weights,
)

__all__ = [
    "CertificationError",
    "EwensAsymptote",
    "NormTable",
    "NormTableCache",
    "TruncationPolicy",
    "build_norm_table",
    "ewens_log_hn",
    "load_table",
    "logsumexp",
    "prop22_constant",
    "ratio_bound_monitor",
    "save_table",
    "shift_weights",
]

CACHE_MAGIC = "cycleweights-norm v1"
ADAPTIVE_CHUNK = 16


class CertificationError(RuntimeError):
    """A truncated series or sum could not be certified."""


def logsumexp(x: np.ndarray) -> float:
    """log(sum(exp(x))), skipping ``-inf`` entries."""
    if x.size == 0:
        return NEG_INF
    m = x.max()
    if m == NEG_INF:
        return NEG_INF
    return float(m + math.log(np.exp(x - m).sum()))


@dataclass(frozen=True)
class TruncationPolicy:
    kind: str = "full"
    drop_threshold: float = 50.0

    def __post_init__(self):
        if self.kind not in ("full", "adaptive"):
            raise ValueError(f"unknown truncation policy {self.kind!r}")
        if not self.drop_threshold > 0:
            raise ValueError("drop_threshold must be positive")

    @classmethod
    def adaptive(cls, drop_threshold: float = 50.0) -> "TruncationPolicy":
        return cls("adaptive", float(drop_threshold))

    @classmethod
    def parse(cls, text: str) -> "TruncationPolicy":
        if text == "full":
            return cls()
        kind, _, nats = text.partition(":")
        if kind != "adaptive":
            raise ValueError(f"bad policy {text!r}")
        return cls.adaptive(float(nats) if nats else 50.0)

    def __str__(self):
        if self.kind == "full":
            return "full"
        return f"adaptive:{self.drop_threshold!r}"


FULL = TruncationPolicy()


@dataclass(frozen=True, eq=False)
class NormTable:
    weights_id: str
    N: int
    log_h: np.ndarray
    policy: TruncationPolicy = FULL

    def __post_init__(self):
        self.log_h.setflags(write=False)

    def h(self, n: int) -> float:
        return math.exp(self.log_h[n])

    def recursion_residual(self, w: WeightSequence, n: int) -> float:
        """Relative error of the stored h_n against the recursion."""
        lt = w.log_theta_array(n)
        rhs = logsumexp(lt[1 : n + 1] + self.log_h[n - 1 :: -1][:n]) - math.log(n)
        if rhs == NEG_INF and self.log_h[n] == NEG_INF:
            return 0.0
        return abs(math.expm1(self.log_h[n] - rhs))


def _adaptive_row(lt: np.ndarray, lh: np.ndarray, n: int, thr: float) -> float:
    """Truncated log sum_j theta_j h_{n-j} for the quick regime.

    Terms are scanned in chunks of increasing j; the scan stops after the
    running argmax once a whole chunk lies ``thr`` nats below the max.
    """
    best = NEG_INF
    best_j = 0
    acc = 0.0  # sum of exp(term - best) over kept terms
    j0 = 1
    while j0 <= n:
        j1 = min(n, j0 + ADAPTIVE_CHUNK - 1)
        jj = np.arange(j0, j1 + 1)
        terms = lt[jj] + lh[n - jj]
        m = terms.max()
        if m > best:
            if best > NEG_INF:
                acc *= math.exp(best - m)
            best = float(m)
            best_j = int(jj[terms.argmax()])
        if best > NEG_INF:
            keep = terms >= best - thr
            acc += float(np.exp(terms[keep] - best).sum())
            if j0 > best_j and m < best - thr:
                break
        j0 = j1 + 1
    if best == NEG_INF:
        return NEG_INF
    return best + math.log(acc)


def _finite_rows(lt: np.ndarray, support: np.ndarray, N: int) -> np.ndarray:
    lh = np.full(N + 1, NEG_INF)
    lh[0] = 0.0
    for n in range(1, N + 1):
        jj = support[support <= n]
        lh[n] = logsumexp(lt[jj] + lh[n - jj]) - math.log(n)
    return lh


def build_norm_table(
    w: WeightSequence, N: int, policy: TruncationPolicy = FULL
) -> NormTable:
    """Compute log h_0..log h_N.

    ``full`` evaluates every term of the recursion (O(N^2)).  ``adaptive``
    is only allowed for superexponentially decaying weights and drops
    terms more than ``drop_threshold`` nats below the running max.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    lt = w.log_theta_array(N)
    support = w.support_indices()
    if policy.kind == "adaptive":
        if w.superexponential is not True:
            raise ValueError(
                f"adaptive truncation needs superexponentially decaying weights; "
                f"{w.descriptor()} is not certified as such"
            )
    if support is not None:
        # finite support: summing the support is exact under either policy
        lh = _finite_rows(lt, np.asarray(support, dtype=int), N)
        return NormTable(w.descriptor(), N, lh, policy)

    lh = np.full(N + 1, NEG_INF)
    lh[0] = 0.0
    if policy.kind == "full":
        for n in range(1, N + 1):
            lh[n] = logsumexp(lt[1 : n + 1] + lh[n - 1 :: -1]) - math.log(n)
    else:
        thr = policy.drop_threshold
        for n in range(1, N + 1):
            lh[n] = _adaptive_row(lt, lh, n, thr) - math.log(n)
    return NormTable(w.descriptor(), N, lh, policy)


# ---------------------------------------------------------------------------
# Ewens closed forms


def log_ascending_factorial(theta: float, n: int) -> float:
    """log of theta (theta+1) ... (theta+n-1) = log Gamma(n+theta)/Gamma(theta)."""
    return math.lgamma(n + theta) - math.lgamma(theta)


def ewens_log_hn(theta: float, n: int) -> float:
    """Exact log h_n = log((theta)_n / n!) for constant weights theta."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if n < 0:
        raise ValueError("n must be >= 0")
    return log_ascending_factorial(theta, n) - math.lgamma(n + 1)


@dataclass(frozen=True)
class EwensAsymptote:
    theta: float
    log_C: float

    def log_ascending_factorial(self, n: int) -> float:
        return log_ascending_factorial(self.theta, n)

    def log_hn(self, n: int) -> float:
        """Asymptotic log h_n = log C + log((theta)_n / n!)."""
        return self.log_C + ewens_log_hn(self.theta, n)

    @classmethod
    def for_weights(cls, w: WeightSequence) -> "EwensAsymptote":
        if isinstance(w, Ewens):
            return cls(w.theta, 0.0)
        if isinstance(w, PerturbedEwens):
            return cls(w.theta, prop22_constant(w))
        raise TypeError(f"{w.descriptor()} is not an Ewens-type family")


MAX_SERIES_TERMS = 10**7


def prop22_constant(w: WeightSequence, tol: float = 1e-12) -> float:
    """log C = sum_j (theta_j - theta)/j, truncated with a certified tail.

    Raises :class:`CertificationError` if the tail bound cannot be pushed
    below ``tol`` within ``MAX_SERIES_TERMS`` terms.
    """
    if isinstance(w, Ewens):
        return 0.0
    if not isinstance(w, PerturbedEwens):
        raise TypeError("log C is only defined for Ewens-type families")
    report = check_hypotheses(w)
    if not report.ewens_ok:
        raise CertificationError("Ewens-regime hypothesis not certified")
    pert = w.perturbation
    J = 16
    while pert.abs_tail(J, weighted=True) >= tol:
        J *= 2
        if J > MAX_SERIES_TERMS:
            raise CertificationError(
                f"tail of sum (theta_j - theta)/j not below {tol} "
                f"within {MAX_SERIES_TERMS} terms"
            )
    j = np.arange(1, J + 1, dtype=float)
    terms = pert.values(j) / j
    # smallest terms first
    return math.fsum(terms[::-1].tolist())


# ---------------------------------------------------------------------------
# slowly diverging regime


def ratio_bound_monitor(t: NormTable, w: WeightSequence) -> np.ndarray:
    """log a_n with a_n = n h_n / theta_n, for n = 0..N.

    Entries where theta_n = 0 (and entry 0) are NaN.
    """
    lt = w.log_theta_array(t.N)
    n = np.arange(t.N + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(n) + t.log_h - lt
    out[0] = np.nan
    out[lt == NEG_INF] = np.nan
    return out


def empirical_B(log_a: np.ndarray) -> float:
    """max_n a_n over the monitored range."""
    return float(np.exp(np.nanmax(log_a)))


# ---------------------------------------------------------------------------
# disk cache


def _table_header(descriptor: str, N: int, policy: TruncationPolicy) -> str:
    return f"{CACHE_MAGIC} {descriptor} N={N} policy={policy}"


def _fmt_log(x: float) -> str:
    return "-inf" if x == NEG_INF else format(float(x), ".17g")


def save_table(t: NormTable, path: str | os.PathLike) -> None:
    lines = [_table_header(t.weights_id, t.N, t.policy)]
    lines += [f"{n}\t{_fmt_log(v)}" for n, v in enumerate(t.log_h)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path: str | os.PathLike) -> NormTable:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(CACHE_MAGIC + " "):
        raise ValueError(f"{path}: not a norm table file")
    head = text[0][len(CACHE_MAGIC) + 1 :]
    descriptor, n_tok, p_tok = head.rsplit(" ", 2)
    if not (n_tok.startswith("N=") and p_tok.startswith("policy=")):
        raise ValueError(f"{path}: malformed header")
    N = int(n_tok[2:])
    policy = TruncationPolicy.parse(p_tok[len("policy=") :])
    rows = text[1:]
    if len(rows) != N + 1:
        raise ValueError(f"{path}: expected {N + 1} rows, found {len(rows)}")
    log_h = np.empty(N + 1)
    for i, row in enumerate(rows):
        n, val = row.split("\t")
        if int(n) != i:
            raise ValueError(f"{path}: row {i} labelled {n}")
        log_h[i] = float(val)
    return NormTable(descriptor, N, log_h, policy)


class NormTableCache:
    """Norm tables keyed by (family descriptor, N, policy).

    Files are named by a hash of the key; the header is re-checked on load
    and any mismatch forces a recompute.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory else None
        self._mem: dict[tuple[str, int, str], NormTable] = {}

    def path_for(self, descriptor: str, N: int, policy: TruncationPolicy) -> Path:
        key = _table_header(descriptor, N, policy).encode()
        return self.directory / f"norm-{hashlib.sha256(key).hexdigest()[:20]}.tsv"

    def get(
        self, w: WeightSequence, N: int, policy: TruncationPolicy = FULL
    ) -> NormTable:
        desc = w.descriptor()
        key = (desc, N, str(policy))
        if key in self._mem:
            return self._mem[key]
        cacheable = self.directory is not None and not desc.startswith("family=custom")
        table = None
        if cacheable:
            path = self.path_for(desc, N, policy)
            if path.exists():
                try:
                    cand = load_table(path)
                except ValueError:
                    cand = None
                if (
                    cand is not None
                    and cand.weights_id == desc
                    and cand.N == N
                    and str(cand.policy) == str(policy)
                ):
                    table = cand
        if table is None:
            table = build_norm_table(w, N, policy)
            if cacheable:
                self.directory.mkdir(parents=True, exist_ok=True)
                save_table(table, self.path_for(desc, N, policy))
        self._mem[key] = table
        return table
