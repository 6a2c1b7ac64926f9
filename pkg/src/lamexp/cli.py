"""Command-line surface: every operation behind flag-only subcommands with
reproducible CSV/JSON output.

Exit codes: 0 success, 1 an asserted inequality failed (the counterexample is
printed in full), 2 usage error.  Re-running a command with the same flags
produces byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import betashift, dimension, expansion, proximity, scans

PROG = "lamexp"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (tuple, list)) and all(v in (0, 1) for v in value):
        return "".join(str(int(v)) for v in value)
    return str(value)


def _jsonable(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return value


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"handler", "out", "format"}
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        cfg[key] = _jsonable(value)
    cfg["command"] = args.handler.__name__.removeprefix("cmd_")
    return cfg


def _emit(args, columns, rows, verification) -> None:
    if args.format == "json":
        payload = {
            "config": _config_dict(args),
            "rows": [{k: _jsonable(row[k]) for k in columns} for row in rows],
            "verification": verification,
        }
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(row[k]) for k in columns))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_lambda(args) -> expansion.Lambda:
    if getattr(args, "multinacci", None) is not None:
        return betashift.multinacci(args.multinacci)
    if getattr(args, "lam", None) is not None:
        return expansion.as_lambda(args.lam)
    raise SystemExit2("one of --lambda/--multinacci is required")


def _resolve_beta(args) -> float:
    if getattr(args, "multinacci_reciprocal", None) is not None:
        return 1.0 / betashift.multinacci(args.multinacci_reciprocal).value
    if getattr(args, "beta", None) is not None:
        return args.beta
    raise SystemExit2("one of --beta/--multinacci-reciprocal is required")


class SystemExit2(Exception):
    """Usage error detected after argparse; exits with status 2."""


# --------------------------------------------------------------------------
# plain subcommands


def cmd_levelset(args):
    lam = _resolve_lambda(args)
    cap = 40 if args.allow_large else expansion.DEFAULT_LEVEL_CAP
    level = expansion.enumerate_level(lam, args.n, merge_tol=args.merge_tol, n_cap=cap)
    print(
        f"level={level.n} merged={level.count} raw_distinct={level.raw_distinct} "
        f"raw_words={level.raw_count}",
        file=sys.stderr,
    )
    rows = [{"index": i, "value": float(v)} for i, v in enumerate(level.values)]
    return ["index", "value"], rows, _no_verification()


def cmd_tau(args):
    lam = _resolve_lambda(args)
    cap = 40 if args.allow_large else expansion.DEFAULT_LEVEL_CAP
    data = expansion.tau_estimate(lam, args.n_max, merge_tol=args.merge_tol, n_cap=cap)
    rows = [{"n": n, "log2_count_over_n": v} for n, v in data]
    return ["n", "log2_count_over_n"], rows, _no_verification()


def cmd_gamma_witness(args):
    lam = _resolve_lambda(args)
    word = expansion.gamma_witness(
        lam, n_max=args.n_max, tol=args.tol, exhaustive=args.exhaustive
    )
    if word is None:
        rows = [{"found": False, "word": "", "length": 0, "sum_error": ""}]
    else:
        err = expansion.eval_word(lam, word) - 1.0
        rows = [{"found": True, "word": word, "length": len(word), "sum_error": err}]
    return ["found", "word", "length", "sum_error"], rows, _no_verification()


def cmd_proximity(args):
    lam = _resolve_lambda(args)
    pc = proximity.proximity_counts(lam, args.n, args.k, args.r)
    rows = [
        {
            "n": pc.n,
            "k": pc.k,
            "r": pc.r,
            "tilde": pc.tilde_count,
            "restricted": pc.restricted_count,
        }
    ]
    return ["n", "k", "r", "tilde", "restricted"], rows, _no_verification()


def cmd_scan_exceptional(args):
    table = proximity.exceptional_scan(
        s=args.s,
        r=args.r,
        n_values=tuple(range(args.n_min, args.n_max + 1)),
        k_max=args.k_max,
        grid=args.grid_points,
    )
    rows = [
        {
            "lambda_fraction": row.lam,
            "lambda_float": float(row.lam),
            "n": row.n,
            "k": row.k,
            "restricted": row.restricted,
            "threshold": row.threshold,
            "flagged": row.flagged,
        }
        for row in table
    ]
    cols = ["lambda_fraction", "lambda_float", "n", "k", "restricted", "threshold", "flagged"]
    return cols, rows, _no_verification()


# --------------------------------------------------------------------------
# verify sub-verbs


def _no_verification():
    return {"asserted": [], "failed": []}


def cmd_verify_proximity_inequality(args):
    grid = proximity.rational_grid(args.lambda_grid)
    r_values = tuple(args.r) if args.r else (1, 2)
    rows = []
    failed = []
    for frac in grid:
        cache_rows = proximity.scan_proximity_inequality(
            [float(frac)], n_max=args.n_max, k_max=args.k_max, r_values=r_values
        )
        for lam, report in cache_rows:
            row = {
                "lambda_fraction": frac,
                "lambda_float": float(frac),
                "n": report.n,
                "k": report.k,
                "r": report.r,
                "lhs": report.lhs,
                "rhs": report.rhs,
                "holds": report.holds,
            }
            rows.append(row)
            if not report.holds:
                failed.append(
                    f"proximity inequality fails at lambda={frac} "
                    f"n={report.n} k={report.k} r={report.r}: "
                    f"lhs={report.lhs} rhs={report.rhs}"
                )
    cols = ["lambda_fraction", "lambda_float", "n", "k", "r", "lhs", "rhs", "holds"]
    return cols, rows, {"asserted": ["tilde_n <= 2^n + sum 2^(n-l) P_l"], "failed": failed}


def cmd_verify_translation(args):
    failed = []
    try:
        res = proximity.translation_ratio_scan(args.trials, args.seed)
        rows = [
            {
                "trials": res.trials,
                "seed": res.seed,
                "max_ratio": res.max_ratio,
                "below_two": res.below_two,
            }
        ]
    except proximity.VerificationError as exc:
        failed.append(str(exc))
        rows = [{"trials": args.trials, "seed": args.seed, "max_ratio": "", "below_two": ""}]
    return (
        ["trials", "seed", "max_ratio", "below_two"],
        rows,
        {"asserted": ["N_r(phi, phi+t) <= 4 N_r(phi, phi)"], "failed": failed},
    )


def cmd_verify_interval_diameter(args):
    coeffs = tuple(int(c) for c in args.coeffs.split(","))
    delta = args.delta
    if delta is None:
        delta = proximity.estimate_delta(args.delta_degree, args.delta_step)
    failed = []
    try:
        ok = proximity.verify_interval_diameter(coeffs, args.gamma, delta)
    except proximity.PreconditionError as exc:
        raise SystemExit2(str(exc))
    solution = proximity.param_interval(coeffs, args.gamma)
    bound = 4.0 * args.gamma / delta
    rows = [
        {
            "lo": iv.lo,
            "hi": iv.hi,
            "diameter": iv.diameter,
            "bound": bound,
            "within": iv.diameter <= bound * (1 + 1e-9),
        }
        for iv in solution
    ]
    if not ok:
        failed.append(
            f"some interval of |p|<=gamma exceeds 4*gamma/delta={bound} "
            f"for coeffs={coeffs} gamma={args.gamma} delta={delta}"
        )
    return (
        ["lo", "hi", "diameter", "bound", "within"],
        rows,
        {"asserted": ["diam <= 4 gamma / delta"], "failed": failed},
    )


def cmd_verify_rams(args):
    res = scans.rams_random_scan(args.families, args.seed, samples=args.samples)
    cols = [
        "family",
        "size",
        "b",
        "rho",
        "pieces",
        "sup_piece",
        "sup_family",
        "rho_sum",
        "rho_budget",
        "coverage_ok",
        "ok",
    ]
    return (
        cols,
        res.rows,
        {
            "asserted": [
                "sup piece <= 4 sup family",
                "sum piece^rho <= 4^rho/b sum family^rho",
                "b-fold region covered",
            ],
            "failed": res.failures,
        },
    )


def cmd_verify_cylinders(args):
    lams = args.lam if args.lam else None
    res = scans.cylinder_random_scan(args.trials, args.seed, lams=lams)
    return (
        ["lambda", "trials", "violations"],
        res.rows,
        {
            "asserted": [
                "placed interval contained in target",
                "placed diameter >= lam/4 target diameter",
                "word length matches the floor formula",
            ],
            "failed": res.failures,
        },
    )


def cmd_verify_tree(args):
    sims = [dimension.Similarity(*map(float, spec.split(","))) for spec in args.sim] or [
        dimension.Similarity(2.0, 0.0)
    ]
    tree = dimension.build_intersection_tree(args.lam, args.alpha, args.s, sims, args.depth)
    report = dimension.verify_tree(tree)
    rows = [
        {
            "n": level.n,
            "block_q": level.block_q,
            "nodes": int(level.lo.size),
            "delta": level.delta,
            "hat_delta": level.hat_delta,
            "block_end": level.is_block_end,
        }
        for level in tree.levels
    ]
    failed = list(report.failures)
    if not tree.schedule_feasible:
        print(f"schedule: {tree.infeasible_reason}", file=sys.stderr)
    print(
        f"completed_q={tree.completed_q} feasible={tree.schedule_feasible} "
        f"s_estimate={tree.s_estimate}",
        file=sys.stderr,
    )
    return (
        ["n", "block_q", "nodes", "delta", "hat_delta", "block_end"],
        rows,
        {
            "asserted": [
                "nesting outer >= hat >= child",
                "uniform level diameters within lam^(n+1)/(1-lam)",
                "m-step sandwich",
                "sibling hats disjoint at block ends",
                "hats inside their approximation layer",
            ],
            "failed": failed,
        },
    )


# --------------------------------------------------------------------------
# beta sub-verbs


def cmd_beta_digits(args):
    b = _resolve_beta(args)
    digits = betashift.greedy_digits(b, args.x, args.n)
    return (
        ["beta", "x", "n", "digits"],
        [{"beta": b, "x": args.x, "n": args.n, "digits": digits}],
        _no_verification(),
    )


def cmd_beta_parry(args):
    b = _resolve_beta(args)
    seq = tuple(int(c) for c in args.digits)
    ok = betashift.parry_admissible(seq, b)
    return (
        ["beta", "digits", "admissible"],
        [{"beta": b, "digits": seq, "admissible": ok}],
        _no_verification(),
    )


def cmd_beta_sft(args):
    b = _resolve_beta(args)
    ok = betashift.is_sft(b, n_max=args.n_max, tol=args.tol)
    return (
        ["beta", "n_max", "tol", "is_sft"],
        [{"beta": b, "n_max": args.n_max, "tol": args.tol, "is_sft": ok}],
        _no_verification(),
    )


def cmd_beta_perron(args):
    sft = betashift.forbidden_word_adjacency(args.m)
    res = betashift.perron_eigenvalue(sft)
    root = betashift.multinacci(args.m).value
    rows = [{"m": args.m, "mu": res.mu, "mu_times_root": res.mu * root}]
    return ["m", "mu", "mu_times_root"], rows, _no_verification()


def cmd_beta_cylinders(args):
    sft = betashift.forbidden_word_adjacency(args.m)
    beta = 1.0 / betashift.multinacci(args.m).value
    stats = betashift.cylinder_stats(sft, beta, args.n)
    scale = beta ** (-args.n)
    rows = [
        {
            "m": args.m,
            "n": args.n,
            "count": stats.count,
            "min_len": stats.min_len,
            "max_len": stats.max_len,
            "min_ratio": stats.min_len / scale,
            "max_ratio": stats.max_len / scale,
        }
    ]
    cols = ["m", "n", "count", "min_len", "max_len", "min_ratio", "max_ratio"]
    return cols, rows, _no_verification()


def cmd_beta_orbit(args):
    b = _resolve_beta(args)
    hits = betashift.a_beta_membership(b, args.kappa, args.x, args.depth)
    rows = [{"hit": i, "n": n} for i, n in enumerate(hits)]
    return ["hit", "n"], rows, _no_verification()


# --------------------------------------------------------------------------
# dimension sub-verbs


def cmd_dimension_cover(args):
    lam = _resolve_lambda(args)
    est = dimension.cover_estimate(lam, args.alpha, args.n, merge_tol=args.merge_tol)
    rows = [
        {
            "n": est.n,
            "cover_count": est.cover_count,
            "scale": est.scale,
            "estimate": est.estimate,
            "upper": est.upper,
            "lower": est.lower,
        }
    ]
    return ["n", "cover_count", "scale", "estimate", "upper", "lower"], rows, _no_verification()


def cmd_dimension_bounds(args):
    lam = _resolve_lambda(args)
    rows = [
        {
            "lower": dimension.lower_bound(lam, args.alpha),
            "upper": dimension.upper_bound(lam, args.alpha, args.n),
            "one_over_alpha": 1.0 / args.alpha,
        }
    ]
    return ["lower", "upper", "one_over_alpha"], rows, _no_verification()


# --------------------------------------------------------------------------
# parser assembly


def _add_output_flags(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _add_lambda_flags(p):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda", dest="lam", type=float, help="ratio in (1/2, 1)")
    group.add_argument("--multinacci", type=int, help="use the order-m multinacci root")


def _add_beta_flags(p):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--beta", type=float, help="base in (1, 2]")
    group.add_argument(
        "--multinacci-reciprocal",
        type=int,
        help="use the reciprocal of the order-m multinacci root",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="level sets of binary power sums, proximity counts, "
        "base-beta digit dynamics, and covering dimension estimates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("levelset", help="enumerate the n-th level sums")
    _add_lambda_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--merge-tol", type=float, default=expansion.DEFAULT_MERGE_TOL)
    p.add_argument(
        "--allow-large",
        action="store_true",
        help="lift the level cap to 40 (2**n float values are held in memory)",
    )
    _add_output_flags(p)
    p.set_defaults(handler=cmd_levelset)

    p = sub.add_parser("tau", help="normalised log level counts per depth")
    _add_lambda_flags(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--merge-tol", type=float, default=expansion.DEFAULT_MERGE_TOL)
    p.add_argument("--allow-large", action="store_true")
    _add_output_flags(p)
    p.set_defaults(handler=cmd_tau)

    p = sub.add_parser("gamma-witness", help="search for a unit-sum witness word")
    _add_lambda_flags(p)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--exhaustive", action="store_true")
    _add_output_flags(p)
    p.set_defaults(handler=cmd_gamma_witness)

    p = sub.add_parser("proximity", help="pair proximity counts at one level")
    _add_lambda_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--r", type=int, default=1)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_proximity)

    p = sub.add_parser("scan-exceptional", help="flag ratios with oversized proximity counts")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--k-max", type=int, default=0)
    p.add_argument("--grid-points", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_scan_exceptional)

    verify = sub.add_parser("verify", help="asserted inequality scans")
    vsub = verify.add_subparsers(dest="verify_command", required=True)

    p = vsub.add_parser("proximity-inequality")
    p.add_argument("--lambda-grid", type=int, required=True, help="rational grid size")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--r", type=int, action="append", default=None)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_verify_proximity_inequality)

    p = vsub.add_parser("translation")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_verify_translation)

    p = vsub.add_parser("interval-diameter")
    p.add_argument("--coeffs", required=True, help="comma separated, e.g. 1,-1,-1")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--delta-degree", type=int, default=8)
    p.add_argument("--delta-step", type=float, default=1e-3)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_verify_interval_diameter)

    p = vsub.add_parser("rams")
    p.add_argument("--families", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_verify_rams)

    p = vsub.add_parser("cylinders")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, action="append", default=None)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_verify_cylinders)

    p = vsub.add_parser("tree")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument(
        "--sim",
        action="append",
        default=[],
        help="similarity as slope,offset (repeatable; default 2,0)",
    )
    _add_output_flags(p)
    p.set_defaults(handler=cmd_verify_tree)

    beta = sub.add_parser("beta", help="base-beta digit dynamics")
    bsub = beta.add_subparsers(dest="beta_command", required=True)

    p = bsub.add_parser("digits")
    _add_beta_flags(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_beta_digits)

    p = bsub.add_parser("parry")
    _add_beta_flags(p)
    p.add_argument("--digits", required=True, help="e.g. 010010")
    _add_output_flags(p)
    p.set_defaults(handler=cmd_beta_parry)

    p = bsub.add_parser("sft")
    _add_beta_flags(p)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-12)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_beta_sft)

    p = bsub.add_parser("perron")
    p.add_argument("--m", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_beta_perron)

    p = bsub.add_parser("cylinders")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_beta_cylinders)

    p = bsub.add_parser("orbit")
    _add_beta_flags(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--depth", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_beta_orbit)

    dim = sub.add_parser("dimension", help="covering estimates and bounds")
    dsub = dim.add_subparsers(dest="dimension_command", required=True)

    p = dsub.add_parser("cover")
    _add_lambda_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--merge-tol", type=float, default=expansion.DEFAULT_MERGE_TOL)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_dimension_cover)

    p = dsub.add_parser("bounds")
    _add_lambda_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_output_flags(p)
    p.set_defaults(handler=cmd_dimension_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        columns, rows, verification = args.handler(args)
    except SystemExit2 as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, expansion.LevelTooLargeError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    _emit(args, columns, rows, verification)
    if verification["failed"]:
        for line in verification["failed"]:
            print(f"{PROG}: verification failure: {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
