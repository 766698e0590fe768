"""Brute-force ground truth by enumerating partitions and permutations.

Nothing here touches the recursion code path; sums are plain ``math.fsum``
over enumerated objects.  Intended for small n only.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from typing import Iterator

from .weights import WeightSequence

MAX_PARTITION_N = 30
MAX_JOINT_N = 10
MAX_PERMUTATION_N = 7


class OracleCapError(ValueError):
    pass


def enumerate_partitions(n: int) -> Iterator[dict[int, int]]:
    """Yield each partition of n once as an occupation map ``{j: r_j}``.

    Order is reverse lexicographic on the weakly decreasing part list,
    e.g. 3, 2+1, 1+1+1.
    """
    if not 1 <= n <= MAX_PARTITION_N:
        raise OracleCapError(f"partition oracle supports 1 <= n <= {MAX_PARTITION_N}")
    parts = [n]
    while True:
        yield dict(Counter(parts))
        # rightmost part > 1
        i = len(parts) - 1
        while i >= 0 and parts[i] == 1:
            i -= 1
        if i < 0:
            return
        rest = len(parts) - i
        k = parts[i] - 1
        del parts[i:]
        # parts[i] - 1 plus the trailing ones, refilled greedily with parts <= k
        remaining = k + rest
        while remaining:
            take = min(k, remaining)
            parts.append(take)
            remaining -= take


def partition_count(n: int) -> int:
    return sum(1 for _ in enumerate_partitions(n))


def partition_log_weight(w: WeightSequence, r: dict[int, int]) -> float:
    """sum_j r_j (log theta_j - log j) - log r_j!  (``-inf`` off support)."""
    total = 0.0
    for j, rj in r.items():
        lt = w.log_theta(j)
        if lt == -math.inf:
            return -math.inf
        total += rj * (lt - math.log(j)) - math.lgamma(rj + 1)
    return total


def _weighted_partitions(w, n):
    out = []
    for r in enumerate_partitions(n):
        lw = partition_log_weight(w, r)
        if lw > -math.inf:
            out.append((r, lw))
    return out


def _partition_law(w, n):
    """[(r, P(r))] plus log h_n; raises if h_n = 0."""
    parts = _weighted_partitions(w, n)
    if not parts:
        raise ZeroDivisionError(f"h_{n} = 0 for {w.descriptor()}")
    top = max(lw for _, lw in parts)
    scaled = [math.exp(lw - top) for _, lw in parts]
    z = math.fsum(scaled)
    return [(r, s / z) for (r, _), s in zip(parts, scaled)], top + math.log(z)


def oracle_hn(w: WeightSequence, n: int) -> float:
    """log h_n as a sum over partitions of n."""
    if n == 0:
        return 0.0
    parts = _weighted_partitions(w, n)
    if not parts:
        return -math.inf
    top = max(lw for _, lw in parts)
    return top + math.log(math.fsum(math.exp(lw - top) for _, lw in parts))


def oracle_ell1_pmf(w: WeightSequence, n: int) -> list[float]:
    """P(l_1 = j) for j = 0..n (entry 0 is 0), via P(l_1 = j | r) = j r_j / n."""
    law, _ = _partition_law(w, n)
    acc: list[list[float]] = [[] for _ in range(n + 1)]
    for r, p in law:
        for j, rj in r.items():
            acc[j].append(p * j * rj / n)
    return [math.fsum(a) for a in acc]


def oracle_joint(w: WeightSequence, n: int) -> tuple[list[float], list[list[float]]]:
    """Joint law of (l_1, l_2) by counting ordered index pairs per partition.

    Returns ``(same, diff)`` with ``same[j]`` = P(1, 2 share a j-cycle) and
    ``diff[j][k]`` = P(l_1 = j, l_2 = k, different cycles).
    """
    if not 2 <= n <= MAX_JOINT_N:
        raise OracleCapError(f"joint oracle supports 2 <= n <= {MAX_JOINT_N}")
    law, _ = _partition_law(w, n)
    pairs = n * (n - 1)
    same_acc: list[list[float]] = [[] for _ in range(n + 1)]
    diff_acc = [[[] for _ in range(n + 1)] for _ in range(n + 1)]
    for r, p in law:
        for j, rj in r.items():
            same_acc[j].append(p * j * rj * (j - 1) / pairs)
            for k, rk in r.items():
                count = j * rj * (k * rk if k != j else j * (rj - 1))
                if count:
                    diff_acc[j][k].append(p * count / pairs)
    same = [math.fsum(a) for a in same_acc]
    diff = [[math.fsum(a) for a in row] for row in diff_acc]
    return same, diff


def oracle_erk(w: WeightSequence, n: int, k: int) -> float:
    law, _ = _partition_law(w, n)
    return math.fsum(p * r.get(k, 0) for r, p in law)


def oracle_cycle_type_law(w: WeightSequence, n: int) -> dict[tuple, float]:
    """Exact law of the cycle type, keyed by sorted ``((j, r_j), ...)``."""
    law, _ = _partition_law(w, n)
    return {tuple(sorted(r.items())): p for r, p in law}


def _cycle_type_of(perm: tuple[int, ...]) -> tuple:
    n = len(perm)
    seen = [False] * n
    counts: Counter = Counter()
    for i in range(n):
        if seen[i]:
            continue
        length = 0
        x = i
        while not seen[x]:
            seen[x] = True
            x = perm[x]
            length += 1
        counts[length] += 1
    return tuple(sorted(counts.items()))


def oracle_permutation_check(w: WeightSequence, n: int, tol: float = 1e-10) -> bool:
    """Check the permutation-level weights against the partition formula.

    Sums prod_j theta_j^{r_j(pi)} over all n! permutations grouped by cycle
    type, and compares each group with n! prod_j (theta_j/j)^{r_j} / r_j!.
    """
    if not 1 <= n <= MAX_PERMUTATION_N:
        raise OracleCapError(f"permutation oracle supports 1 <= n <= {MAX_PERMUTATION_N}")
    by_type: dict[tuple, list[float]] = {}
    for perm in itertools.permutations(range(n)):
        ct = _cycle_type_of(perm)
        weight = 1.0
        for j, rj in ct:
            weight *= math.exp(w.log_theta(j)) ** rj
        by_type.setdefault(ct, []).append(weight)
    fact = math.factorial(n)
    for r in enumerate_partitions(n):
        ct = tuple(sorted(r.items()))
        got = math.fsum(by_type.get(ct, []))
        lw = partition_log_weight(w, r)
        want = fact * math.exp(lw) if lw > -math.inf else 0.0
        if not math.isclose(got, want, rel_tol=tol, abs_tol=0.0):
            return False
    return True


def permutation_sum_hn(w: WeightSequence, n: int) -> float:
    """h_n = (1/n!) sum over S_n of prod theta_j^{r_j}, by brute force."""
    if not 1 <= n <= MAX_PERMUTATION_N:
        raise OracleCapError(f"permutation oracle supports 1 <= n <= {MAX_PERMUTATION_N}")
    total = []
    for perm in itertools.permutations(range(n)):
        weight = 1.0
        for j, rj in _cycle_type_of(perm):
            weight *= math.exp(w.log_theta(j)) ** rj
        total.append(weight)
    return math.fsum(total) / math.factorial(n)
