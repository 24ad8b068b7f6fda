"""Command line front end.

Every subcommand writes long-format CSV rows (to --csv, default stdout) and
optionally a JSON summary (--json). Options may also come from a JSON config
document given with --config; flags on the command line win.

Body specs::

    slab:e<k>:<d>            {|x_k| <= d}
    slab:<d>                 same with k = 1
    ball:<r0> | ball:median  Euclidean ball
    cube:<c> | cube:half     [-c, c]^n
    halfspace:e<k>:<theta>   {x_k >= theta}
    sympoly:<k>:<offset>:<seed>   random centrally symmetric polytope, k facet pairs
    poly:<k>:<offset>:<seed>      random polytope, k facets
    full | empty

Radii accept numbers, ``sqrt_n``, ``<f>*sqrt_n`` and ``median``.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._mc import workers
from .bodies import (ball, build_random_polytope, build_random_symmetric_polytope, cube, cube_half_width, empty_set,
                     full_space, halfspace, slab)
from .boolean_fourier import dictator, low_level_weight_boolean, majority, random_monotone, tribes
from .density import increment_check, raz_experiment, shell_density
from .errors import ContractViolation
from .hermite import (ball_correlation, find_r_star, low_level_weight, noise_stability, product_of_signs,
                      sign_function)
from .learners import GaussianExamples, evaluate_hypothesis, general_convex_weak_learner, three_hypothesis_learner
from .lowerbound import C_LB, advantage_bound, build_hard_params, run_query_sweep
from .sampling import RngStream, chi_quantile
from .suite import PROFILES, run_suite

CSV_VERSION = "gausskk-results/1"
JSON_VERSION = "gausskk-summary/1"
ROW_FIELDS = ["op", "body", "params", "estimate", "std_error", "samples", "status", "seed"]


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_count(text) -> int:
    """Integer counts, accepting forms like 1e6."""
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"not a number: {text!r}") from None
    if v != int(v) or v < 0:
        raise ConfigError(f"expected a nonnegative integer, got {text!r}")
    return int(v)


def parse_radius(text: str, n: int) -> float:
    t = str(text).strip()
    if t == "median":
        return chi_quantile(n, 0.5)
    if t.endswith("sqrt_n"):
        head = t[: -len("sqrt_n")].rstrip("*")
        return (float(head) if head else 1.0) * math.sqrt(n)
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"bad radius {text!r}") from None


def _axis(tok: str, n: int) -> int:
    if not (tok.startswith("e") and tok[1:].isdigit()) or not 1 <= int(tok[1:]) <= n:
        raise ConfigError(f"bad axis {tok!r}; use e1..e{n}")
    return int(tok[1:]) - 1


def parse_body(spec: str, n: int):
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "slab" and len(parts) == 3:
            return slab(n, float(parts[2]), _axis(parts[1], n))
        if kind == "slab" and len(parts) == 2:
            return slab(n, float(parts[1]))
        if kind == "ball" and len(parts) == 2:
            return ball(n, chi_quantile(n, 0.5) if parts[1] == "median" else float(parts[1]))
        if kind == "cube" and len(parts) == 2:
            return cube(n, cube_half_width(n) if parts[1] == "half" else float(parts[1]))
        if kind == "halfspace" and len(parts) == 3:
            w = np.zeros(n)
            w[_axis(parts[1], n)] = 1.0
            return halfspace(w, float(parts[2]))
        if kind in ("sympoly", "poly") and len(parts) == 4:
            build = build_random_symmetric_polytope if kind == "sympoly" else build_random_polytope
            return build(n, int(parts[1]), float(parts[2]), RngStream(int(parts[3])))
        if kind == "full" and len(parts) == 1:
            return full_space(n)
        if kind == "empty" and len(parts) == 1:
            return empty_set(n)
    except ContractViolation as exc:
        raise ConfigError(f"body {spec!r}: {exc}") from None
    except ValueError:
        raise ConfigError(f"bad body spec {spec!r}") from None
    raise ConfigError(f"bad body spec {spec!r}")


def _list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v for v in str(text).split(",") if v]


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def row(op, body, params: dict, estimate, std_error, samples, status, seed) -> dict:
    p = ";".join(f"{k}={_fmt(v)}" for k, v in params.items())
    return dict(op=op, body=body, params=p, estimate=_fmt(estimate), std_error=_fmt(std_error),
                samples=samples, status=status, seed=seed)


def write_csv(stream, rows: list[dict], fields: list[str]) -> None:
    stream.write(f"# {CSV_VERSION}\n")
    w = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)


# ---------------------------------------------------------------- subcommands

def cmd_density(a) -> tuple[list[dict], dict]:
    body = parse_body(a.body, a.n)
    samples = parse_count(a.samples)
    rows = []
    for i, rt in enumerate(_list(a.r)):
        r = parse_radius(rt, a.n)
        e = shell_density(body, r, samples, RngStream(a.seed, i))
        rows.append(row("density", body.label, {"n": a.n, "r": r}, e.mean, e.std_error, samples, "ok", a.seed))
    return rows, {}


def cmd_increment(a):
    body = parse_body(a.body, a.n)
    samples = parse_count(a.samples)
    rows = []
    for i, rt in enumerate(_list(a.r)):
        r = parse_radius(rt, a.n)
        rep = increment_check(body, r, a.kappa, samples, RngStream(a.seed, i), regime=a.regime)
        rows.append(row("increment", body.label,
                        {"n": a.n, "r": r, "kappa": a.kappa, "alpha": rep.alpha_r.mean, "bound": rep.theorem_bound,
                         "regime": rep.regime},
                        rep.increment, rep.combined_std_error, samples, rep.status, a.seed))
    return rows, {}


def cmd_raz(a):
    body = parse_body(a.body, a.n)
    r = parse_radius(a.r, a.n)
    planes = parse_count(a.planes)
    rep = raz_experiment(body, r, planes, RngStream(a.seed))
    status = "pass" if rep.frequency >= rep.target - 3 * rep.std_error else "fail"
    return [row("raz", body.label, {"n": a.n, "r": r, "alpha": rep.alpha, "lo": rep.interval[0],
                                    "hi": rep.interval[1], "target": rep.target},
                rep.frequency, rep.std_error, planes, status, a.seed)], {}


def cmd_learn(a):
    body = parse_body(a.body, a.n)
    budget = parse_count(a.budget)
    src = GaussianExamples(body, RngStream(a.seed, 0))
    learner = three_hypothesis_learner if a.learner == "three" else general_convex_weak_learner
    res = learner(src, budget, a.n)
    ev = evaluate_hypothesis(res.hypothesis, body, parse_count(a.eval_samples), RngStream(a.seed, 1))
    status = "pass" if ev.mean - 0.5 > 3 * ev.std_error else "fail"
    return [row("learn", body.label, {"n": a.n, "learner": a.learner, "hypothesis": res.hypothesis.describe(),
                                      "gate": res.gate, "heldout_advantage": res.advantage},
                ev.mean - 0.5, ev.std_error, budget, status, a.seed)], {}


def cmd_hermite(a):
    body = parse_body(a.body, a.n)
    samples = parse_count(a.samples)
    wr = low_level_weight(body, samples, RngStream(a.seed, 0))
    rows = [row("hermite", body.label, {"n": a.n, "level": k}, v, se, samples, "ok", a.seed)
            for k, v, se in ((0, wr.w0, wr.w0_se), (1, wr.w1, wr.w1_se), (2, wr.w2, wr.w2_se))]
    if a.ball_correlation:
        rs = find_r_star(body, rng=RngStream(a.seed, 1))
        bc = ball_correlation(body, rs.r_star, samples, RngStream(a.seed, 2))
        rows.append(row("ball_correlation", body.label, {"n": a.n, "r_star": rs.r_star, "flat": rs.flat,
                                                         "weight_bound": bc.weight_bound},
                        bc.estimate, bc.std_error, samples, "ok", a.seed))
    return rows, {}


def cmd_stability(a):
    if a.function:
        kind = a.function.split(":")
        if kind[0] == "sign":
            f, label = sign_function(a.n), "sign:x1"
        elif kind[0] == "psi1":
            T = round(a.n ** 0.25)
            f, label = product_of_signs(a.n, T), f"psi1:{T}"
        else:
            raise ConfigError(f"bad function {a.function!r}; use sign or psi1")
    else:
        body = parse_body(a.body, a.n)
        f, label = body, body.label
    samples = parse_count(a.samples)
    rows = []
    for i, t in enumerate(_list(a.t)):
        e = noise_stability(f, float(t), samples, RngStream(a.seed, i))
        rows.append(row("stability", label, {"n": a.n, "t": float(t)}, e.mean, e.std_error, samples, "ok", a.seed))
    return rows, {}


def cmd_fourier(a):
    parts = a.function.split(":")
    try:
        if parts[0] == "tribes":
            f = tribes(int(parts[1]), int(parts[2]))
        elif parts[0] == "majority":
            f = majority(int(parts[1]))
        elif parts[0] == "dictator":
            f = dictator(int(parts[1]))
        elif parts[0] == "monotone":
            f = random_monotone(int(parts[1]), int(parts[2]), RngStream(a.seed))
        else:
            raise ConfigError(f"bad function {a.function!r}")
    except (IndexError, ValueError):
        raise ConfigError(f"bad function {a.function!r}") from None
    w0, w1 = low_level_weight_boolean(f)
    pr = float(np.mean(f.table == 1))
    return [row("fourier", a.function, {"n": f.n, "quantity": q}, v, 0.0, 1 << f.n, "exact", a.seed)
            for q, v in (("pr_true", pr), ("W0", w0), ("W1", w1))], {}


LB_FIELDS = ["trial", "queries", "ones", "zeros", "error"]


def cmd_lowerbound(a):
    par = build_hard_params(a.n, a.s, a.gamma, M_override=a.support, seed=RngStream(a.seed, 0))
    qs = [parse_count(q) for q in _list(a.queries)]
    trials = parse_count(a.trials)
    sweep = run_query_sweep(par, a.strategy, qs, trials, parse_count(a.eval_samples), RngStream(a.seed, 1))
    rows = []
    for rep in sweep.reports:
        for t in range(trials):
            rows.append(dict(trial=t, queries=rep.queries, ones=int(rep.ones[t]), zeros=int(rep.zeros[t]),
                             error=_fmt(float(rep.errors[t]))))
    bound = advantage_bound(a.n, a.s, a.gamma, C_LB)
    summary = {
        "params": {"n": a.n, "s": a.s, "gamma": a.gamma, "d": par.d, "Lambda": par.Lambda, "M": par.M, "p": par.p},
        "advantage_bound": bound,
        "constant": C_LB,
        "results": [{"queries": r.queries, "error": r.error, "std_error": r.std_error,
                     "advantage": 0.5 - r.error, "within_bound": 0.5 - r.error <= bound} for r in sweep.reports],
    }
    return rows, summary


def cmd_suite(a):
    crit = [int(v) for v in _list(a.criteria)] if a.criteria else None
    wc = (a.workers, a.recheck_workers) if a.recheck_workers else (a.workers,)

    def show(res):
        print(res.line(), file=sys.stderr, flush=True)

    results = run_suite(a.seed, a.profile, crit, wc, progress=show)
    rows = [row("criterion", r.name, {"number": r.number}, int(r.passed), 0.0, 0,
                "pass" if r.passed else "fail", a.seed) for r in results]
    summary = {"profile": a.profile,
               "criteria": [{"number": r.number, "name": r.name, "status": "pass" if r.passed else "fail",
                             "detail": r.detail, "estimates": r.estimates} for r in results]}
    return rows, summary


COMMANDS = {
    "density": cmd_density,
    "increment": cmd_increment,
    "raz": cmd_raz,
    "learn": cmd_learn,
    "hermite": cmd_hermite,
    "stability": cmd_stability,
    "fourier": cmd_fourier,
    "lowerbound": cmd_lowerbound,
    "suite": cmd_suite,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gausskk", description="Gaussian-space convex-body experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON document of option values; flags override it")
        sp.add_argument("--seed", type=int, help="master seed (required)")
        sp.add_argument("--workers", type=int, default=int(os.environ.get("GAUSSKK_WORKERS", "1")))
        sp.add_argument("--csv", help="CSV output path (default stdout)")
        sp.add_argument("--json", help="JSON summary output path")
        return sp

    def body_n(sp):
        sp.add_argument("--body")
        sp.add_argument("--n", type=int)

    sp = common(sub.add_parser("density", help="shell density at one or more radii"))
    body_n(sp)
    sp.add_argument("--r", default="sqrt_n", help="comma separated radii")
    sp.add_argument("--samples", default="1e5")

    sp = common(sub.add_parser("increment", help="density increment check"))
    body_n(sp)
    sp.add_argument("--r", default="sqrt_n")
    sp.add_argument("--kappa", type=float, default=0.1)
    sp.add_argument("--samples", default="1e5")
    sp.add_argument("--regime", choices=["symmetric", "general"])

    sp = common(sub.add_parser("raz", help="random-plane section frequency"))
    body_n(sp)
    sp.add_argument("--r", default="sqrt_n")
    sp.add_argument("--planes", default="2000")

    sp = common(sub.add_parser("learn", help="run a weak learner"))
    body_n(sp)
    sp.add_argument("--learner", choices=["three", "general"], default="three")
    sp.add_argument("--budget", default="1e5")
    sp.add_argument("--eval-samples", default="1e5")

    sp = common(sub.add_parser("hermite", help="Hermite weight at levels 0-2"))
    body_n(sp)
    sp.add_argument("--samples", default="1e5")
    sp.add_argument("--ball-correlation", action="store_true")

    sp = common(sub.add_parser("stability", help="noise stability"))
    body_n(sp)
    sp.add_argument("--function", help="sign or psi1 instead of a body")
    sp.add_argument("--t", default="0.5,1,2")
    sp.add_argument("--samples", default="1e5")

    sp = common(sub.add_parser("fourier", help="exact Boolean Fourier data"))
    sp.add_argument("--function", help="tribes:w:k, majority:n, dictator:n or monotone:n:seeds")

    sp = common(sub.add_parser("lowerbound", help="membership-query game on the hard distribution"))
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--s", type=int, default=16)
    sp.add_argument("--gamma", type=float, default=2.0)
    sp.add_argument("--queries", default="0,4,16,64")
    sp.add_argument("--trials", default="100")
    sp.add_argument("--strategy", choices=["random", "ball"], default="random")
    sp.add_argument("--support", type=int, default=20000, help="support size M")
    sp.add_argument("--eval-samples", default="250")

    sp = common(sub.add_parser("suite", help="acceptance suite"))
    sp.add_argument("--profile", choices=sorted(PROFILES), default="acceptance")
    sp.add_argument("--criteria", help="comma separated criterion numbers (default all)")
    sp.add_argument("--recheck-workers", type=int, default=2,
                    help="worker count for the determinism rerun; 0 skips it")
    return p


REQUIRED = {
    "density": ["body", "n"], "increment": ["body", "n"], "raz": ["body", "n"], "learn": ["body", "n"],
    "hermite": ["body", "n"], "stability": ["n"], "fourier": ["function"], "lowerbound": [], "suite": [],
}


def parse_config(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {act.dest for act in sp._actions}
        unknown = set(k.replace("-", "_") for k in doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in doc.items()})
        args = parser.parse_args(argv)
    if args.seed is None:
        raise ConfigError("--seed is required")
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    for key in REQUIRED[args.command]:
        if getattr(args, key, None) is None:
            raise ConfigError(f"--{key} is required for {args.command}")
    if getattr(args, "n", None) is not None and args.n < 1:
        raise ConfigError("--n must be positive")
    if args.command == "stability" and not args.function and not args.body:
        raise ConfigError("stability needs --body or --function")
    return args


def main(argv=None) -> int:
    try:
        args = parse_config(argv)
        # validate the body spec up front so bad specs fail before sampling
        if getattr(args, "body", None) and getattr(args, "n", None):
            parse_body(args.body, args.n)
    except ConfigError as exc:
        print(f"gausskk: error: {exc}", file=sys.stderr)
        return 2
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        with workers(args.workers):
            rows, extra = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"gausskk: error: {exc}", file=sys.stderr)
        return 2
    except ContractViolation as exc:
        rows = [row(args.command, getattr(args, "body", "") or "", {}, "nan", "nan", 0, "error", args.seed)]
        extra = {"error": str(exc)}
        print(f"gausskk: contract violation: {exc}", file=sys.stderr)
    fields = LB_FIELDS if args.command == "lowerbound" and rows and "trial" in rows[0] else ROW_FIELDS
    buf = io.StringIO()
    write_csv(buf, rows, fields)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    failed = any(r.get("status") in ("fail", "error") for r in rows)
    if args.command == "lowerbound" and "results" in extra:
        failed = not all(r["within_bound"] for r in extra["results"])
    if args.json:
        summary = {
            "schema": JSON_VERSION,
            "command": args.command,
            "seed": args.seed,
            "status": "fail" if failed else "pass",
            **extra,
            "metadata": {"started": started, "workers": args.workers, "version": __version__},
        }
        with open(args.json, "w") as fh:
            json.dump(summary, fh, indent=2, default=float)
            fh.write("\n")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
