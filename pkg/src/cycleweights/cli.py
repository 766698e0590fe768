"""Command line front end.

Exit codes: 0 success, 2 model undefined (h_n = 0), 3 hypothesis check
failed for the requested theorem, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import __version__
from .asymptotics import (
    HypothesisError,
    ewens_limits,
    gamma_prediction,
    giant_cycle_normalizer,
    macroscopic_tail,
    saddle_log_hn,
    solve_rn,
)
from .exact_dist import (
    ModelUndefinedError,
    ell1_pmf,
    joint_tail,
    tail_above,
    tail_prob,
)
from .normalization import (
    CertificationError,
    NormTableCache,
    TruncationPolicy,
    empirical_B,
    ratio_bound_monitor,
    save_table,
)
from .sampler import (
    RandomSource,
    realize_permutation,
    sample_cycle_types,
)
from .weights import (
    FamilyParseError,
    PowerAlpha,
    WeightSequence,
    check_hypotheses,
    parse_family,
)

EXIT_OK = 0
EXIT_UNDEFINED = 2
EXIT_HYPOTHESIS = 3
EXIT_USAGE = 64

THEOREMS = (
    "ewens-tail",
    "ewens-joint",
    "giant",
    "length-gamma",
    "no-macro",
    "no-small",
    "saddle-hn",
    "ratio-bound",
)

# full O(N^2) tables above this size switch to adaptive truncation when allowed
AUTO_ADAPTIVE_N = 5000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    family: str | None = None
    n: int | None = None
    grid: list[int] | None = None
    seed: int | None = None
    fmt: str = "tsv"
    cache_dir: str | None = None
    options: dict = field(default_factory=dict)

    def header(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _fmt_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _json_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        s = fmt_float(v)
        return s if s not in ("nan", "inf", "-inf") else json.dumps(s)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return json.dumps(v)


def emit(out: TextIO, cfg: RunConfig, columns: Sequence[str], rows, notes=()) -> None:
    if cfg.fmt == "json":
        body = ",\n    ".join("[" + ", ".join(_json_cell(v) for v in r) + "]" for r in rows)
        out.write("{\n")
        out.write(f'  "version": {json.dumps(_versions())},\n')
        out.write(f'  "config": {cfg.header()},\n')
        out.write(f'  "notes": {json.dumps(list(notes))},\n')
        out.write(f'  "columns": {json.dumps(list(columns))},\n')
        out.write(f'  "rows": [\n    {body}\n  ]\n' if rows else '  "rows": []\n')
        out.write("}\n")
        return
    out.write(f"# {_versions()}\n")
    out.write(f"# config: {cfg.header()}\n")
    for note in notes:
        out.write(f"# {note}\n")
    out.write("# " + "\t".join(columns) + "\n")
    for r in rows:
        out.write("\t".join(_fmt_cell(v) for v in r) + "\n")


def _versions() -> str:
    return f"cycleweights {__version__} numpy {np.__version__}"


def _policy_for(w: WeightSequence, N: int, adaptive: float | None) -> TruncationPolicy:
    if adaptive is not None:
        return TruncationPolicy.adaptive(adaptive)
    if N > AUTO_ADAPTIVE_N and w.superexponential is True and w.support_indices() is None:
        return TruncationPolicy.adaptive()
    return TruncationPolicy()


# ---------------------------------------------------------------------------
# subcommands


def cmd_norm(args, cfg, cache, out):
    w = parse_family(args.family)
    policy = _policy_for(w, args.n, args.adaptive)
    t = cache.get(w, args.n, policy)
    if args.out_path:
        save_table(t, args.out_path)
        notes = [f"table written to {args.out_path}"]
    else:
        notes = []
    emit(out, cfg, ["n", "log_h"], [(n, v) for n, v in enumerate(t.log_h)], notes)
    return EXIT_OK


def cmd_dist(args, cfg, cache, out):
    w = parse_family(args.family)
    t = cache.get(w, args.n, _policy_for(w, args.n, args.adaptive))
    p = ell1_pmf(t, w, args.n)
    if args.tail is not None:
        rows = [(args.tail, tail_above(p, args.tail * args.n))]
        emit(out, cfg, ["s", "P(l1>sn)"], rows)
    else:
        probs = p.p
        emit(out, cfg, ["j", "p"], [(j, probs[j]) for j in range(1, args.n + 1)])
    return EXIT_OK


def cmd_joint(args, cfg, cache, out):
    w = parse_family(args.family)
    t = cache.get(w, args.n, _policy_for(w, args.n, args.adaptive))
    v = joint_tail(t, w, args.n, args.s, args.t)
    emit(out, cfg, ["n", "s", "t", "P(l1>sn,l2>tn)"], [(args.n, args.s, args.t, v)])
    return EXIT_OK


def cmd_sample(args, cfg, cache, out):
    w = parse_family(args.family)
    t = cache.get(w, args.n, _policy_for(w, args.n, args.adaptive))
    samples = sample_cycle_types(t, w, args.n, args.count, args.seed, workers=args.workers)
    if args.emit == "cycletype":
        lines = [str(ct) for ct in samples]
    elif args.emit == "ell1":
        lines = [str(ct.ell1) for ct in samples]
    else:
        # permutation realisation uses its own stream family
        rng = RandomSource(args.seed, 1 << 32).generator()
        lines = [" ".join(map(str, realize_permutation(ct, rng))) for ct in samples]
    out.write(f"# {_versions()}\n# config: {cfg.header()}\n")
    out.write("\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK


def cmd_saddle(args, cfg, cache, out):
    w = parse_family(args.family)
    sd = solve_rn(w, args.n)
    rows = [
        ("r_n", sd.r_n),
        ("residual", sd.residual),
        ("log_I0", sd.log_I0),
        ("log_I1", sd.log_I1),
        ("log_I2", sd.log_I2),
        ("phi", sd.phi),
        ("log_hn_estimate", sd.log_hn_estimate),
    ]
    if sd.period > 1:
        rows.append(("log_hn_estimate_lattice", saddle_log_hn(sd, lattice=True)))
    if not args.no_exact:
        t = cache.get(w, args.n, _policy_for(w, args.n, args.adaptive))
        rows.append(("log_hn_exact", t.log_h[args.n]))
    emit(out, cfg, ["quantity", "value"], rows)
    return EXIT_OK


def _require(flag, theorem, w):
    if not flag:
        raise HypothesisError(f"{theorem}: hypotheses not certified for {w.descriptor()}")


def cmd_validate(args, cfg, cache, out):
    if args.oracle:
        return _validate_oracle(args, cfg, out)
    if args.theorem is None:
        raise UsageError("validate needs --theorem or --oracle")
    w = parse_family(args.family)
    grid = args.grid
    if not grid:
        raise UsageError("validate needs --grid")
    N = max(grid)
    rep = check_hypotheses(w)
    th = args.theorem
    notes = [f"theorem={th}"]
    rows = []

    if th in ("ewens-tail", "ewens-joint"):
        _require(rep.ewens_ok, th, w)
        theta = rep.ewens_theta
        t = cache.get(w, N, _policy_for(w, N, args.adaptive))
        for n in grid:
            if th == "ewens-tail":
                p = ell1_pmf(t, w, n)
                svals = [args.s] if args.s is not None else [k / 10 for k in range(1, 10)]
                cand = []
                for s in svals:
                    ex = tail_above(p, s * n)
                    pred = ewens_limits(theta, s, 0.0)[0]
                    cand.append((abs(ex - pred), s, ex, pred))
                err, s, ex, pred = max(cand)
                rows.append((n, ex, pred, err))
                notes.append(f"n={n}: worst s={s}")
            else:
                s = 0.5 if args.s is None else args.s
                u = 0.25 if args.t is None else args.t
                ex = joint_tail(t, w, n, s, u)
                pred = ewens_limits(theta, s, u)[1]
                rows.append((n, ex, pred, abs(ex - pred)))
    elif th in ("giant", "ratio-bound"):
        _require(rep.giant_cycle_ok, th, w)
        t = cache.get(w, N, _policy_for(w, N, args.adaptive))
        if th == "giant":
            m = args.m
            norm = giant_cycle_normalizer(w, t)
            pred = math.exp(t.log_h[m]) / norm.sum_with_h0
            notes.append(f"m={m}; normalizer includes h_0; B_empirical={fmt_float(norm.B_empirical)}")
            for n in grid:
                ex = float(ell1_pmf(t, w, n).p[n - m])
                rows.append((n, ex, pred, abs(ex - pred)))
        else:
            log_a = ratio_bound_monitor(t, w)
            logB = math.log(empirical_B(log_a))
            notes.append(f"B_empirical={fmt_float(math.exp(logB))} over n<={N}")
            for n in grid:
                rows.append((n, log_a[n], logB, logB - log_a[n]))
    elif th == "length-gamma":
        _require(isinstance(w, PowerAlpha) and w.gamma > 1, th, w)
        t = cache.get(w, N, _policy_for(w, N, args.adaptive))
        for n in grid:
            g = gamma_prediction(w.gamma, n, math.log(solve_rn(w, n).r_n))
            p = ell1_pmf(t, w, n)
            ex = tail_prob(p, 0.5 * g.typical_length, 1.5 * g.typical_length)
            rows.append((n, ex, 1.0, 1.0 - ex))
    elif th in ("no-macro", "no-small"):
        _require(rep.quick_ok, th, w)
        t = cache.get(w, N, _policy_for(w, N, args.adaptive))
        delta = 0.1 if args.delta is None else args.delta
        for n in grid:
            if th == "no-macro":
                ex = macroscopic_tail(t, w, n, delta)
            else:
                thr = math.log(n) / math.log(solve_rn(w, n).r_n) - 0.75
                ex = tail_prob(ell1_pmf(t, w, n), 1, thr)
            rows.append((n, ex, 0.0, ex))
    elif th == "saddle-hn":
        _require(w.superexponential, th, w)
        t = cache.get(w, N, _policy_for(w, N, args.adaptive))
        for n in grid:
            sd = solve_rn(w, n)
            pred = saddle_log_hn(sd, lattice=args.lattice)
            ex = t.log_h[n]
            if ex == -math.inf:
                raise ModelUndefinedError(f"h_{n} = 0 for {w.descriptor()}")
            rows.append((n, ex, pred, abs(pred - ex) / abs(ex) if ex else abs(pred)))
    else:
        raise UsageError(f"unknown theorem {th!r}")
    emit(out, cfg, ["n", "exact", "predicted", "error"], rows, notes)
    return EXIT_OK


def _validate_oracle(args, cfg, out):
    from .oracle import oracle_ell1_pmf, oracle_hn, oracle_permutation_check

    w = parse_family(args.family)
    nmax = max(args.grid) if args.grid else 8
    t = NormTableCache().get(w, nmax)
    rows = []
    for n in range(1, nmax + 1):
        ex = t.log_h[n]
        orc = oracle_hn(w, n)
        err = 0.0 if ex == orc == -math.inf else abs(ex - orc)
        rows.append((n, "log_h", ex, orc, err))
        if ex > -math.inf:
            p = ell1_pmf(t, w, n).p
            q = oracle_ell1_pmf(w, n)
            rows.append((n, "ell1_pmf", 1.0, 1.0, max(abs(p[j] - q[j]) for j in range(1, n + 1))))
        if n <= 7:
            ok = oracle_permutation_check(w, n)
            rows.append((n, "permutation_check", 1.0, float(ok), 0.0 if ok else 1.0))
    emit(out, cfg, ["n", "quantity", "exact", "oracle", "error"], rows)
    return EXIT_OK


def cmd_oracle_check(args, cfg, cache, out):
    from .oracle import oracle_permutation_check, permutation_sum_hn

    w = parse_family(args.family)
    ok = oracle_permutation_check(w, args.n)
    h = permutation_sum_hn(w, args.n)
    emit(out, cfg, ["n", "permutation_sum_hn", "agrees"], [(args.n, h, int(ok))])
    return EXIT_OK if ok else 1


# ---------------------------------------------------------------------------


def _grid(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cycleweights", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_versions())
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, n=True):
        p.add_argument("--family", required=True, help='e.g. "family=ewens theta=2"')
        if n:
            p.add_argument("--n", type=int, required=True)
        p.add_argument("--format", dest="fmt", choices=("tsv", "json"), default="tsv")
        p.add_argument("--cache-dir", default=os.environ.get("CYCLEWEIGHTS_CACHE"))
        p.add_argument("--adaptive", type=float, metavar="NATS", default=None)

    p = sub.add_parser("norm", help="log h_0..log h_N")
    common(p)
    p.add_argument("--out", dest="out_path", default=None, help="write the table file here")

    p = sub.add_parser("dist", help="law of l_1")
    common(p)
    p.add_argument("--tail", type=float, default=None, metavar="s")
    p.add_argument("--out", dest="fmt", choices=("tsv", "json"), help="alias of --format")

    p = sub.add_parser("joint", help="P(l_1 > s n, l_2 > t n)")
    common(p)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("sample", help="exact samples")
    common(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--emit", choices=("cycletype", "perm", "ell1"), default="cycletype")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("saddle", help="saddle-point quantities at r_n")
    common(p)
    p.add_argument("--no-exact", action="store_true", help="skip the exact table")

    p = sub.add_parser("validate", help="exact vs predicted along an n grid")
    p.add_argument("--theorem", choices=THEOREMS)
    p.add_argument("--family", required=True)
    p.add_argument("--grid", type=_grid, default=None)
    p.add_argument("--oracle", action="store_true", help="compare with brute force, n <= 8")
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--lattice", action="store_true", help="periodic-support saddle correction")
    p.add_argument("--format", dest="fmt", choices=("tsv", "json"), default="tsv")
    p.add_argument("--cache-dir", default=os.environ.get("CYCLEWEIGHTS_CACHE"))
    p.add_argument("--adaptive", type=float, metavar="NATS", default=None)

    p = sub.add_parser("oracle-check", help="permutation-level brute force, n <= 7")
    common(p)
    return parser


COMMANDS = {
    "norm": cmd_norm,
    "dist": cmd_dist,
    "joint": cmd_joint,
    "sample": cmd_sample,
    "saddle": cmd_saddle,
    "validate": cmd_validate,
    "oracle-check": cmd_oracle_check,
}


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        opts = {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in ("command", "family", "n", "grid", "seed", "fmt", "cache_dir")
        }
        cfg = RunConfig(
            command=args.command,
            family=args.family,
            n=getattr(args, "n", None),
            grid=getattr(args, "grid", None),
            seed=getattr(args, "seed", None),
            fmt=args.fmt or "tsv",
            cache_dir=None,  # not part of the result; keeps output byte-stable
            options=opts,
        )
        args.fmt = cfg.fmt
        cache = NormTableCache(args.cache_dir)
        return COMMANDS[args.command](args, cfg, cache, out)
    except (UsageError, FamilyParseError) as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except ModelUndefinedError as exc:
        err.write(f"model undefined: {exc}\n")
        return EXIT_UNDEFINED
    except (HypothesisError, CertificationError) as exc:
        err.write(f"hypothesis check failed: {exc}\n")
        return EXIT_HYPOTHESIS
    except ValueError as exc:  # out-of-range arguments, oracle caps
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
