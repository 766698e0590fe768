"""Random permutations with cycle weights: exact finite-n laws, exact
samplers, and asymptotic predictions."""

__version__ = "0.1.0"

from .weights import (  # noqa: E402
    Custom,
    Ewens,
    FiniteSupport,
    NegPower,
    PerturbedEwens,
    Perturbation,
    PowerAlpha,
    WeightSequence,
    check_hypotheses,
    log_theta,
    parse_family,
    shift_weights,
)
from .normalization import (  # noqa: E402
    NormTable,
    TruncationPolicy,
    build_norm_table,
    ewens_log_hn,
    prop22_constant,
    ratio_bound_monitor,
)
from .exact_dist import (  # noqa: E402
    ModelUndefinedError,
    ell1_pmf,
    expected_rk,
    joint_pmf,
    joint_tail,
    tail_prob,
)
from .sampler import (  # noqa: E402
    CycleType,
    RandomSource,
    realize_permutation,
    sample_cycle_type,
)
from .asymptotics import (  # noqa: E402
    ewens_limits,
    gamma_prediction,
    giant_cycle_limit,
    saddle_log_hn,
    solve_rn,
)
