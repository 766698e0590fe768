"""Cycle weight families and hypothesis checks.

A weight family assigns a nonnegative weight ``theta_j`` to cycles of
length ``j``.  Everything downstream works with ``log theta_j`` and uses
``-inf`` for vanishing weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Mapping

import numpy as np
from scipy.special import exp1

NEG_INF = -math.inf

REGIMES = ("ewens", "slow", "quick")


class FamilyParseError(ValueError):
    """Raised for malformed or unknown weight family configs."""


class WeightSequence:
    """Base class for weight families.

    Subclasses implement :meth:`log_theta` and :meth:`descriptor`.  All
    instances are immutable.
    """

    #: largest index with nonzero weight, ``None`` for infinite support
    max_support: int | None = None

    def log_theta(self, j: int) -> float:
        raise NotImplementedError

    def descriptor(self) -> str:
        raise NotImplementedError

    def log_theta_array(self, N: int) -> np.ndarray:
        """``log theta_j`` for j = 0..N; entry 0 is ``-inf``."""
        out = np.full(N + 1, NEG_INF)
        for j in range(1, N + 1):
            out[j] = self.log_theta(j)
        return out

    def weight(self, j: int) -> float:
        return math.exp(self.log_theta(j))

    def support(self, j: int) -> bool:
        return self.log_theta(j) > NEG_INF

    @property
    def superexponential(self) -> bool | None:
        """Whether theta_j decays faster than any exponential.

        This is the infinite radius of convergence condition used by the
        adaptive norm table and the saddle-point solver.  ``None`` means
        the family cannot tell.
        """
        return False

    def support_indices(self) -> tuple[int, ...] | None:
        """Sorted indices with nonzero weight, or ``None`` if infinite."""
        return None

    def tail_theta_over_j(self, J: int) -> float:
        """Upper bound on sum_{j > J} theta_j / j (``inf`` if unknown)."""
        return math.inf

    def __str__(self) -> str:
        return self.descriptor()


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Ewens(WeightSequence):
    """Constant weights theta_j = theta."""

    theta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    def log_theta(self, j):
        return math.log(self.theta)

    def log_theta_array(self, N):
        out = np.full(N + 1, math.log(self.theta))
        out[0] = NEG_INF
        return out

    def descriptor(self):
        return f"family=ewens theta={_fmt(self.theta)}"


@dataclass(frozen=True)
class Perturbation:
    """Absolutely summable perturbation ``delta_j``.

    ``kind="geometric"``: delta_j = scale * rate**j with 0 < rate < 1.
    ``kind="power"``: delta_j = scale * j**(-rate) with rate > 1.
    ``kind="head"``: delta_j = scale for j <= rate, 0 afterwards (integer rate >= 1).
    """

    kind: str
    scale: float
    rate: float

    def __post_init__(self):
        if self.kind == "geometric":
            if not 0 < self.rate < 1:
                raise ValueError("geometric perturbation needs 0 < rate < 1")
        elif self.kind == "power":
            if not self.rate > 1:
                raise ValueError("power perturbation needs rate > 1")
        elif self.kind == "head":
            if not (self.rate >= 1 and float(self.rate).is_integer()):
                raise ValueError("head perturbation needs an integer rate >= 1")
        else:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")

    def value(self, j: int) -> float:
        if self.kind == "geometric":
            return self.scale * self.rate**j
        if self.kind == "head":
            return self.scale if j <= self.rate else 0.0
        return self.scale * float(j) ** (-self.rate)

    def values(self, j: np.ndarray) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        if self.kind == "geometric":
            return self.scale * np.power(self.rate, j)
        if self.kind == "head":
            return np.where(j <= self.rate, self.scale, 0.0)
        return self.scale * np.power(j, -self.rate)

    def abs_tail(self, J: int, weighted: bool) -> float:
        """Bound on sum_{j > J} |delta_j| (divided by j if ``weighted``)."""
        a = abs(self.scale)
        if self.kind == "head":
            last = int(self.rate)
            if J >= last:
                return 0.0
            if weighted:
                return a * math.fsum(1.0 / j for j in range(J + 1, last + 1))
            return a * (last - J)
        if self.kind == "geometric":
            q = self.rate
            bound = a * q ** (J + 1) / (1 - q)
            return bound / (J + 1) if weighted else bound
        p = self.rate + (1 if weighted else 0)
        # integral comparison for a decreasing summand
        return a * float(J) ** (1 - p) / (p - 1)


@dataclass(frozen=True)
class PerturbedEwens(WeightSequence):
    """theta_j = theta + delta_j with a summable perturbation."""

    theta: float
    perturbation: Perturbation

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        # every rule is monotone in j, so the extreme value sits at j = 1
        if self.theta + min(self.perturbation.value(1), 0.0) < 0:
            raise ValueError("perturbation makes theta_j negative")

    def log_theta(self, j):
        v = self.theta + self.perturbation.value(j)
        return math.log(v) if v > 0 else NEG_INF

    def log_theta_array(self, N):
        j = np.arange(N + 1)
        with np.errstate(divide="ignore"):
            vals = self.theta + self.perturbation.values(np.maximum(j, 1))
            out = np.log(np.maximum(vals, 0.0))
        out[0] = NEG_INF
        return out

    def descriptor(self):
        p = self.perturbation
        return (
            f"family=perturbed theta={_fmt(self.theta)} kind={p.kind} "
            f"scale={_fmt(p.scale)} rate={_fmt(p.rate)}"
        )


@dataclass(frozen=True)
class PowerAlpha(WeightSequence):
    """alpha_j = j**gamma, i.e. theta_j = exp(-j**gamma)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def log_theta(self, j):
        return -float(j) ** self.gamma

    def log_theta_array(self, N):
        out = -np.power(np.arange(N + 1, dtype=float), self.gamma)
        out[0] = NEG_INF
        return out

    @property
    def superexponential(self):
        return self.gamma > 1

    def tail_theta_over_j(self, J):
        # sum_{j>J} e^{-j^g}/j <= int_J^inf e^{-x^g}/x dx = E1(J^g)/g
        return float(exp1(float(J) ** self.gamma)) / self.gamma

    def descriptor(self):
        return f"family=power gamma={_fmt(self.gamma)}"


@dataclass(frozen=True)
class NegPower(WeightSequence):
    """theta_j = j**(-gamma)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def log_theta(self, j):
        return -self.gamma * math.log(j)

    def log_theta_array(self, N):
        with np.errstate(divide="ignore"):
            out = -self.gamma * np.log(np.arange(N + 1, dtype=float))
        out[0] = NEG_INF
        return out

    def tail_theta_over_j(self, J):
        return float(J) ** (-self.gamma) / self.gamma

    def descriptor(self):
        return f"family=negpower gamma={_fmt(self.gamma)}"


@dataclass(frozen=True)
class FiniteSupport(WeightSequence):
    """Finitely many nonzero weights, given as ``{j: theta_j}``."""

    weights: tuple[tuple[int, float], ...]

    def __init__(self, weights: Mapping[int, float] | tuple):
        items = dict(weights).items()
        clean = []
        for j, v in sorted(items):
            j = int(j)
            v = float(v)
            if j < 1:
                raise ValueError(f"support index must be >= 1, got {j}")
            if v < 0:
                raise ValueError(f"weights must be nonnegative, got {v} at {j}")
            if v > 0:
                clean.append((j, v))
        if not clean:
            raise ValueError("finite support family needs a positive weight")
        object.__setattr__(self, "weights", tuple(clean))

    @property
    def max_support(self):
        return self.weights[-1][0]

    def log_theta(self, j):
        for k, v in self.weights:
            if k == j:
                return math.log(v)
        return NEG_INF

    def log_theta_array(self, N):
        out = np.full(N + 1, NEG_INF)
        for k, v in self.weights:
            if k <= N:
                out[k] = math.log(v)
        return out

    def support_indices(self):
        return tuple(k for k, _ in self.weights)

    @property
    def superexponential(self):
        return True

    def tail_theta_over_j(self, J):
        return sum(v / k for k, v in self.weights if k > J)

    def descriptor(self):
        body = ",".join(f"{k}:{_fmt(v)}" for k, v in self.weights)
        return f"family=finite support={body}"


@dataclass(frozen=True)
class Custom(WeightSequence):
    """User rule ``j -> log theta_j``.

    ``regime`` lets the caller assert the weight regime manually, since
    hypothesis checks cannot classify an arbitrary rule.
    """

    rule: Callable[[int], float] = field(compare=False)
    name: str = "custom"
    regime: str | None = None

    def __post_init__(self):
        if self.regime is not None and self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")

    def log_theta(self, j):
        v = float(self.rule(j))
        if math.isnan(v) or v == math.inf:
            raise ValueError(f"custom rule returned {v} at j={j}")
        return v

    @property
    def superexponential(self):
        if self.regime == "quick":
            return True
        return None

    def descriptor(self):
        return f"family=custom name={self.name}"


@dataclass(frozen=True)
class Shifted(WeightSequence):
    """``base`` with alpha_j -> alpha_j + c*j (log theta_j - c*j)."""

    base: WeightSequence
    c: float

    def log_theta(self, j):
        v = self.base.log_theta(j)
        return v - self.c * j if v > NEG_INF else NEG_INF

    def log_theta_array(self, N):
        out = self.base.log_theta_array(N) - self.c * np.arange(N + 1)
        out[0] = NEG_INF
        return out

    @property
    def max_support(self):
        return self.base.max_support

    def support_indices(self):
        return self.base.support_indices()

    @property
    def superexponential(self):
        return self.base.superexponential

    def descriptor(self):
        return f"{self.base.descriptor()} shift={_fmt(self.c)}"


def log_theta(w: WeightSequence, j: int) -> float:
    if j < 1:
        raise ValueError(f"cycle length must be >= 1, got {j}")
    return w.log_theta(j)


def shift_weights(w: WeightSequence, c: float) -> WeightSequence:
    """Apply alpha_j -> alpha_j + c*j.

    The permutation law is unchanged and h_n picks up a factor e^{-cn}.
    """
    if c == 0:
        return w
    if isinstance(w, Shifted):
        return shift_weights(w.base, w.c + c) if w.c + c != 0 else w.base
    return Shifted(w, float(c))


# ---------------------------------------------------------------------------
# config text format


def parse_family(text: str) -> WeightSequence:
    """Parse ``family=<name> key=value ...`` into a weight family.

    >>> parse_family("family=power gamma=1.5")
    PowerAlpha(gamma=1.5)
    """
    fields: dict[str, str] = {}
    for tok in text.split():
        if "=" not in tok:
            raise FamilyParseError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k in fields:
            raise FamilyParseError(f"duplicate key {k!r}")
        fields[k] = v
    name = fields.pop("family", None)
    if name is None:
        raise FamilyParseError("missing family=...")
    shift = fields.pop("shift", None)

    def num(key: str) -> float:
        try:
            return float(fields.pop(key))
        except KeyError:
            raise FamilyParseError(f"family={name} needs {key}=") from None
        except ValueError as exc:
            raise FamilyParseError(f"bad number for {key}: {exc}") from None

    try:
        if name == "ewens":
            w: WeightSequence = Ewens(num("theta"))
        elif name == "power":
            w = PowerAlpha(num("gamma"))
        elif name == "negpower":
            w = NegPower(num("gamma"))
        elif name == "finite":
            spec = fields.pop("support", None)
            if not spec:
                raise FamilyParseError("family=finite needs support=j:theta,...")
            pairs = {}
            for item in spec.split(","):
                j, _, v = item.partition(":")
                try:
                    pairs[int(j)] = float(v) if v else 1.0
                except ValueError:
                    raise FamilyParseError(f"bad support entry {item!r}") from None
            w = FiniteSupport(pairs)
        elif name == "perturbed":
            theta = num("theta")
            kind = fields.pop("kind", "geometric")
            w = PerturbedEwens(theta, Perturbation(kind, num("scale"), num("rate")))
        else:
            raise FamilyParseError(f"unknown family {name!r}")
    except ValueError as exc:
        if isinstance(exc, FamilyParseError):
            raise
        raise FamilyParseError(str(exc)) from None
    if fields:
        raise FamilyParseError(f"unexpected keys for family={name}: {sorted(fields)}")
    if shift is not None:
        try:
            w = shift_weights(w, float(shift))
        except ValueError:
            raise FamilyParseError(f"bad shift {shift!r}") from None
    return w


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the regime hypothesis checks.

    Flags are ``True``/``False`` when the family's closed form decides
    them, ``None`` when undetermined.
    """

    family: str
    giant_cycle_ok: bool | None
    giant_c: tuple[float, ...]
    giant_partial_sums: tuple[float, ...]
    ewens_ok: bool | None
    ewens_theta: float | None
    ewens_tail: float | None
    quick_ok: bool | None
    quick_M: float | None
    quick_pair: tuple[int, int] | None
    support_gcd: int
    notes: tuple[str, ...] = ()

    @property
    def regime(self) -> str:
        if self.ewens_ok:
            return "ewens"
        if self.giant_cycle_ok:
            return "slow"
        if self.quick_ok:
            return "quick"
        if None in (self.ewens_ok, self.giant_cycle_ok, self.quick_ok):
            return "undetermined"
        return "other"


def _coprime_pair(indices) -> tuple[int, int] | None:
    big = [j for j in indices if j >= 4]
    for a_i, a in enumerate(big):
        for b in big[a_i + 1 :]:
            if math.gcd(a, b) == 1:
                return (a, b)
    return None


def _giant_witness(c_of_j: Callable[[np.ndarray], np.ndarray], depth: int):
    j = np.arange(1, depth + 1, dtype=float)
    c = c_of_j(j)
    return tuple(c.tolist()), tuple(np.cumsum(c / j).tolist())


def _probe_ratio_constants(w: WeightSequence, depth: int) -> np.ndarray:
    """Empirical c_j = max_{2j <= n <= depth} theta_{n-j} theta_j / theta_n."""
    lt = w.log_theta_array(depth)
    c = np.full(depth // 2 + 1, NEG_INF)
    with np.errstate(invalid="ignore"):
        for n in range(2, depth + 1):
            if lt[n] == NEG_INF:
                c[1 : n // 2 + 1] = np.inf
                continue
            jj = np.arange(1, n // 2 + 1)
            c[jj] = np.maximum(c[jj], lt[n - jj] + lt[jj] - lt[n])
    return np.exp(c[1:])


def check_hypotheses(w: WeightSequence, probe_depth: int = 64) -> HypothesisReport:
    """Check which regime theorems apply to ``w``.

    Family closed forms decide the flags where known; otherwise numeric
    probes up to ``probe_depth`` are attached and the flags stay ``None``.
    The report is advisory and never a proof.
    """
    if probe_depth < 10:
        raise ValueError("probe_depth must be >= 10")
    D = probe_depth
    none_giant = ((), ())
    notes: list[str] = []

    if isinstance(w, Ewens):
        return HypothesisReport(
            w.descriptor(), False, *none_giant, True, w.theta, 0.0,
            False, None, None, 1,
        )

    if isinstance(w, PerturbedEwens):
        tail = w.perturbation.abs_tail(D, weighted=w.theta >= 1)
        return HypothesisReport(
            w.descriptor(), False, *none_giant, True, w.theta, tail,
            False, None, None, 1,
        )

    if isinstance(w, PowerAlpha):
        g = w.gamma
        if g < 1:
            # n^g - (n-j)^g <= g j^g for j <= n/2, so the ratio is at most
            # exp(-(1-g) j^g)
            cs, sums = _giant_witness(lambda j: np.exp(-(1 - g) * j**g), D)
            return HypothesisReport(
                w.descriptor(), True, cs, sums, False, None, None,
                False, None, None, 1,
            )
        if g == 1:
            notes.append("gamma=1 is the uniform model up to the shift symmetry")
            return HypothesisReport(
                w.descriptor(), False, *none_giant, False, None, None,
                False, None, None, 1, tuple(notes),
            )
        # log k!/k <= log k, and log x - x^(g-1) peaks at x = (g-1)^(-1/(g-1))
        bound = (-math.log(g - 1) - 1) / (g - 1)
        return HypothesisReport(
            w.descriptor(), False, *none_giant, False, None, None,
            True, max(bound, 1.0), (4, 5), 1,
        )

    if isinstance(w, NegPower):
        g = w.gamma
        # theta_{n-j} theta_j / theta_n = (n/(n-j))^g j^-g <= 2^g j^-g
        cs, sums = _giant_witness(lambda j: 2.0**g * j ** (-g), D)
        ewens_ok = False
        return HypothesisReport(
            w.descriptor(), True, cs, sums, ewens_ok, None, None,
            False, None, None, 1,
        )

    if isinstance(w, FiniteSupport):
        idx = w.support_indices()
        M = max(
            (math.log(v) + math.lgamma(k + 1)) / k for k, v in w.weights
        )
        pair = _coprime_pair(idx)
        gcd = reduce(math.gcd, idx)
        return HypothesisReport(
            w.descriptor(), False, *none_giant, False, None, None,
            pair is not None, max(M, 1.0), pair, gcd,
        )

    if isinstance(w, Shifted):
        base = check_hypotheses(w.base, D)
        notes.append("shifted family: only the quick-regime flag carries over")
        M = None
        if base.quick_ok:
            M = base.quick_M + max(-w.c, 0.0)
        return HypothesisReport(
            w.descriptor(), None, (), (), None, None, None,
            base.quick_ok, M, base.quick_pair, base.support_gcd, tuple(notes),
        )

    # Custom and unknown subclasses: probes only
    c = _probe_ratio_constants(w, D)
    j = np.arange(1, len(c) + 1)
    with np.errstate(invalid="ignore"):
        sums = np.cumsum(c / j)
    lt = w.log_theta_array(D)
    idx = [k for k in range(1, D + 1) if lt[k] > NEG_INF]
    gcd = reduce(math.gcd, idx) if idx else 0
    notes.append(f"numeric probes only (depth {D}); assert the regime manually")
    return HypothesisReport(
        w.descriptor(), None, tuple(c.tolist()), tuple(sums.tolist()),
        None, None, None, None, None, _coprime_pair(idx), gcd, tuple(notes),
    )
