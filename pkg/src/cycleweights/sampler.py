"""Exact sampling of cycle types and permutations.

The sampler draws the length j of the cycle holding the smallest remaining
index from theta_j h_{m-j} / (m h_m), removes that cycle, and repeats on
the m - j indices left.  Given the removed cycle, the remaining indices
carry the same weighted model at size m - j, so the product of these
conditional laws is the cycle-type law of the full model.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import accumulate

import numpy as np
from scipy import stats

from .exact_dist import LengthPMF, ModelUndefinedError
from .normalization import NormTable
from .weights import NEG_INF, WeightSequence

DEFAULT_CHUNK = 4096


@dataclass(frozen=True)
class CycleType:
    """Occupation numbers ``r[j]`` with sum j r_j = n.

    ``ell1`` is the length of the cycle containing index 1 when the sample
    came from :func:`sample_cycle_type` (it is the first length drawn).
    """

    n: int
    r: dict[int, int]
    ell1: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if sum(j * c for j, c in self.r.items()) != self.n:
            raise ValueError(f"occupation numbers {self.r} do not sum to {self.n}")
        if any(c <= 0 or j <= 0 for j, c in self.r.items()):
            raise ValueError(f"bad occupation numbers {self.r}")

    def key(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.r.items()))

    def __str__(self) -> str:
        return " ".join(f"{j}:{c}" for j, c in self.key())


@dataclass(frozen=True)
class RandomSource:
    """Seeded stream: identical (seed, stream_id) replays identical draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


class CycleTypeSampler:
    """Sequential sampler bound to one norm table.

    Per-size cumulative weights are computed on first use and kept, so
    repeated draws at small n cost O(number of cycles) each.
    """

    def __init__(self, t: NormTable, w: WeightSequence, drop_threshold: float | None = None):
        self.table = t
        self.weights = w
        self.log_theta = w.log_theta_array(t.N)
        if drop_threshold is None and t.policy.kind == "adaptive":
            drop_threshold = t.policy.drop_threshold
        self.drop_threshold = drop_threshold
        self._cdf: dict[int, tuple[list[float], list[int]]] = {}

    def _step_law(self, m: int) -> tuple[list[float], list[int]]:
        cached = self._cdf.get(m)
        if cached is not None:
            return cached
        lh = self.table.log_h
        if lh[m] == NEG_INF:
            raise ModelUndefinedError(f"h_{m} = 0 for {self.table.weights_id}")
        j = np.arange(1, m + 1)
        logw = self.log_theta[1 : m + 1] + lh[m - j]
        top = logw.max()
        keep = logw > NEG_INF
        if self.drop_threshold is not None:
            keep &= logw >= top - self.drop_threshold
        lengths = j[keep].tolist()
        cdf = list(accumulate(np.exp(logw[keep] - top).tolist()))
        self._cdf[m] = (cdf, lengths)
        return cdf, lengths

    def draw(self, n: int, rng: np.random.Generator) -> CycleType:
        if not 1 <= n <= self.table.N:
            raise ValueError(f"n={n} outside table range [1, {self.table.N}]")
        counts: Counter = Counter()
        first = None
        m = n
        while m:
            cdf, lengths = self._step_law(m)
            u = rng.random() * cdf[-1]
            j = lengths[min(bisect_right(cdf, u), len(lengths) - 1)]
            if first is None:
                first = j
            counts[j] += 1
            m -= j
        return CycleType(n, dict(counts), first)

    def draw_many(self, n: int, count: int, source: RandomSource) -> list[CycleType]:
        rng = source.generator()
        return [self.draw(n, rng) for _ in range(count)]


def sample_cycle_type(
    t: NormTable, w: WeightSequence, n: int, rng: RandomSource | np.random.Generator
) -> CycleType:
    if isinstance(rng, RandomSource):
        rng = rng.generator()
    return CycleTypeSampler(t, w).draw(n, rng)


def sample_cycle_types(
    t: NormTable,
    w: WeightSequence,
    n: int,
    count: int,
    seed: int,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> list[CycleType]:
    """Draw ``count`` cycle types.

    Chunk i always uses stream i, so the output does not depend on
    ``workers``.
    """
    sampler = CycleTypeSampler(t, w)
    if t.log_h[n] == NEG_INF:
        raise ModelUndefinedError(f"h_{n} = 0 for {t.weights_id}")
    sizes = [min(chunk, count - s) for s in range(0, count, chunk)]
    jobs = list(enumerate(sizes))

    def run(job):
        i, k = job
        return sampler.draw_many(n, k, RandomSource(seed, i))

    if workers <= 1:
        parts = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    return [ct for part in parts for ct in part]


def realize_permutation(
    ct: CycleType, rng: RandomSource | np.random.Generator
) -> tuple[int, ...]:
    """Uniform permutation of 1..n with cycle type ``ct``, in one-line form.

    A uniform shuffle cut into consecutive blocks of the prescribed lengths
    hits every compatible permutation prod_j j^{r_j} r_j! times.
    """
    if isinstance(rng, RandomSource):
        rng = rng.generator()
    order = (rng.permutation(ct.n) + 1).tolist()
    image = [0] * (ct.n + 1)
    pos = 0
    for j, c in ct.key():
        for _ in range(c):
            block = order[pos : pos + j]
            for a, b in zip(block, block[1:] + block[:1]):
                image[a] = b
            pos += j
    return tuple(image[1:])


def cycle_type_of(perm) -> CycleType:
    """Cycle type of a permutation given in one-line form on 1..n."""
    n = len(perm)
    seen = [False] * (n + 1)
    counts: Counter = Counter()
    first = None
    for i in range(1, n + 1):
        if seen[i]:
            continue
        length = 0
        x = i
        while not seen[x]:
            seen[x] = True
            x = perm[x - 1]
            length += 1
        if i == 1:
            first = length
        counts[length] += 1
    return CycleType(n, dict(counts), first)


# ---------------------------------------------------------------------------
# diagnostics


def _ell1_samples(samples: list[CycleType]) -> Counter:
    """Empirical l_1 law; size-biased weights j r_j / n if l_1 is unknown."""
    out: Counter = Counter()
    for ct in samples:
        if ct.ell1 is not None:
            out[ct.ell1] += 1.0
        else:
            for j, c in ct.r.items():
                out[j] += j * c / ct.n
    return out


def empirical_law(samples: list[CycleType]) -> dict[tuple, float]:
    counts = Counter(ct.key() for ct in samples)
    total = len(samples)
    return {k: v / total for k, v in counts.items()}


def empirical_tv(samples: list[CycleType], exact: dict | LengthPMF) -> float:
    """Total variation distance between samples and an exact law.

    ``exact`` is either a cycle-type law (dict keyed like
    :meth:`CycleType.key`) or a :class:`LengthPMF`, in which case the l_1
    pushforward is compared.
    """
    if not samples:
        raise ValueError("need at least one sample")
    if isinstance(exact, LengthPMF):
        counts = _ell1_samples(samples)
        total = len(samples)
        p = exact.p
        keys = set(counts) | {j for j in range(1, exact.n + 1) if p[j] > 0}
        diff = [abs(counts.get(j, 0.0) / total - (p[j] if j <= exact.n else 0.0)) for j in keys]
    else:
        emp = empirical_law(samples)
        keys = set(emp) | set(exact)
        diff = [abs(emp.get(k, 0.0) - exact.get(k, 0.0)) for k in keys]
    return 0.5 * math.fsum(diff)


def chi_square_test(
    samples: list[CycleType], exact: dict[tuple, float], min_expected: float = 5.0
) -> tuple[float, float]:
    """Pearson chi-square of sampled cycle types against ``exact``.

    Categories with expected count below ``min_expected`` are pooled into
    one bin.  Returns ``(statistic, p_value)``.
    """
    total = len(samples)
    counts = Counter(ct.key() for ct in samples)
    unknown = [k for k in counts if k not in exact]
    if unknown:
        return math.inf, 0.0
    obs, exp_ = [], []
    pool_obs, pool_exp = 0.0, 0.0
    for k in sorted(exact):
        e = exact[k] * total
        if e < min_expected:
            pool_obs += counts.get(k, 0)
            pool_exp += e
        else:
            obs.append(counts.get(k, 0))
            exp_.append(e)
    if pool_exp > 0 or pool_obs > 0:
        if pool_exp >= min_expected or not exp_:
            obs.append(pool_obs)
            exp_.append(pool_exp)
        else:
            # fold a thin pooled bin into the smallest regular bin
            i = int(np.argmin(exp_))
            obs[i] += pool_obs
            exp_[i] += pool_exp
    if len(obs) < 2:
        return 0.0, 1.0
    exp_arr = np.asarray(exp_)
    exp_arr *= sum(obs) / exp_arr.sum()
    res = stats.chisquare(np.asarray(obs, dtype=float), exp_arr)
    return float(res.statistic), float(res.pvalue)
