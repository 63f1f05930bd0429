"""Batch experiment runner with seeded, reproducible JSON reports.

Subcommands: ``games-check`` (model invariant suites at small n),
``influence`` (the coordinate-fixing loop on a decision-tree corpus),
``collide`` / ``forge`` (the collision attack and the forgery demo
against the toy authentication fixture), and ``prf-distinguish`` (the
second-order pseudorandomness harness).

One JSON document per run, embedding the full configuration and seed;
for a fixed build, identical configurations and seeds reproduce the
report byte for byte.  Wall-clock timing is informational only and is
written only when requested, so it never breaks reproducibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from . import games as G
from .attacks import (
    FunctionalOracle,
    collision_finder,
    forge,
    mac_fixture,
)
from .errors import IterationCapError, NoInfluentialFoundError, ParamGameError
from .games import enumerate_plays, encoded_length, format_transcript
from .influence import (
    RandomStream,
    SemiUniformDist,
    TreeOracle,
    algorithm_a,
    parse_tree,
    random_tree,
)
from .poly import IDENT, PolyParseError, const, parse_poly
from .prf import (
    ToyPRF,
    advantage_report,
    builtin_adversaries,
    candidate,
    default_w,
)
from .strategies import carac_plays, compose, copycat, random_total_strategy
from .util import derive_seed, int_to_bits

SEED_ENV = "PARAMGAME_SEED"

EXIT_OK = 0
EXIT_EXPERIMENT_FAILED = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(ValueError):
    pass


def _poly_arg(text: str):
    try:
        return parse_poly(text)
    except PolyParseError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(doc: dict, out_path: str | None) -> None:
    blob = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out_path is None or out_path == "-":
        sys.stdout.write(blob)
    else:
        with open(out_path, "w") as fh:
            fh.write(blob)


def _fraction_fields(value: Fraction | None) -> tuple[float | None, str | None]:
    if value is None:
        return None, None
    return float(value), str(value)


# --- games-check -------------------------------------------------------------


def _games_zoo():
    return [
        G.unit_game(),
        G.bool_game(),
        G.str_game(IDENT),
        G.str_le_game(const(2)),
        G.tstr_game(const(2)),
        G.oracle_game(IDENT),
        G.bang(IDENT, G.bool_game()),
        G.lolli(G.bool_game(), G.bool_game()),
        G.lolli(G.oracle_game(const(2)), G.str_game(const(2))),
        G.tensor(G.bool_game(), G.bool_game()),
    ]


def run_games_check(args) -> tuple[int, dict]:
    checks = []
    ok = True
    for game in _games_zoo():
        for n in range(1, args.max_n + 1):
            plays = enumerate_plays(game, n)
            seen = set(plays)
            bound = game.length_bound.eval(n)
            prefix_closed = all(p[:-1] in seen for p in plays if p)
            alternating = all(
                m.side == ("O" if k % 2 == 0 else "P")
                for p in plays
                for k, m in enumerate(p)
            )
            bounded = all(encoded_length(p) <= bound for p in plays)
            checks.append(
                {
                    "game": game.label(),
                    "n": n,
                    "plays": len(plays),
                    "prefix_closed": prefix_closed,
                    "alternating": alternating,
                    "length_bounded": bounded,
                }
            )
            ok = ok and prefix_closed and alternating and bounded

    iso = []
    for n in range(1, min(args.max_n, 4) + 1):
        oracle_count = len(enumerate_plays(G.oracle_game(IDENT), n))
        bang_count = len(enumerate_plays(G.bang(IDENT, G.bool_game()), n))
        iso.append({"n": n, "oracle_plays": oracle_count, "bang_bool_plays": bang_count})
        ok = ok and oracle_count == bang_count

    laws = []
    small = [G.bool_game(), G.unit_game(), G.str_game(const(1))]
    for k in range(4):
        a, b, c = small[k % 3], small[(k + 1) % 3], small[(k + 2) % 3]
        f = random_total_strategy(G.lolli(a, b), (args.seed, "f", k))
        g = random_total_strategy(G.lolli(b, c), (args.seed, "g", k))
        h = random_total_strategy(G.lolli(c, a), (args.seed, "h", k))
        for n in (1, 2):
            assoc = carac_plays(compose(compose(f, g), h), n, enforce_budget=False) == carac_plays(
                compose(f, compose(g, h)), n, enforce_budget=False
            )
            ident = carac_plays(compose(f, copycat(b)), n, enforce_budget=False) == carac_plays(
                f, n, enforce_budget=False
            )
            laws.append({"triple": k, "n": n, "associative": assoc, "identity": ident})
            ok = ok and assoc and ident

    if args.dump_transcript:
        cc = copycat(G.bool_game())
        play = sorted(carac_plays(cc, 1), key=len)[-1]
        with open(args.dump_transcript, "w") as fh:
            fh.write(format_transcript(play) + "\n")

    doc = {
        "config": {"subcommand": "games-check", "max_n": args.max_n, "seed": args.seed},
        "checks": checks,
        "isomorphism": iso,
        "laws": laws,
        "ok": ok,
    }
    return (EXIT_OK if ok else EXIT_EXPERIMENT_FAILED), doc


# --- influence ----------------------------------------------------------------


def _load_corpus(path: str, n_bits: int):
    instances = []
    block: list[str] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("#"):
                continue
            if not line:
                if block:
                    instances.append(block)
                    block = []
                continue
            block.append(line)
    if block:
        instances.append(block)
    return [[parse_tree(text, n_bits) for text in chunk] for chunk in instances]


def _random_corpus(count: int, n_bits: int, out_bits: int, depth: int, seed) -> list:
    import random as _random

    out = []
    for k in range(count):
        rng = _random.Random(derive_seed(seed, "corpus", k))
        out.append([random_tree(n_bits, depth, rng) for _ in range(1 + rng.randrange(out_bits))])
    return out


def run_influence(args) -> tuple[int, dict]:
    if args.corpus:
        instances = _load_corpus(args.corpus, args.N)
    else:
        instances = _random_corpus(args.random_corpus, args.N, args.L, args.depth, args.seed)
    import math

    results = []
    successes = 0
    dom_bound = math.ceil(math.ceil(10 * args.L * args.depth * args.depth / args.eps) / args.delta)
    for k, trees in enumerate(instances):
        oracle = TreeOracle(trees)
        rng = RandomStream(args.seed, "influence", k)
        record = {"instance": k, "L": len(trees)}
        try:
            g = algorithm_a(
                oracle,
                args.depth,
                args.eps,
                args.delta,
                rng,
                sample_cap=args.sample_cap,
            )
            dist = SemiUniformDist(g)
            exact = [float(t.variance(dist)) for t in trees]
            achieved = all(v <= args.eps for v in exact)
            record.update(
                {
                    "dom_size": g.size,
                    "exact_variances": exact,
                    "achieved": achieved,
                    "queries": oracle.query_count,
                }
            )
            successes += achieved
        except (IterationCapError, NoInfluentialFoundError) as exc:
            record.update({"achieved": False, "error": type(exc).__name__})
        results.append(record)
    fraction = successes / max(len(instances), 1)
    ok = fraction >= 1 - args.delta - 0.05
    doc = {
        "config": {
            "subcommand": "influence",
            "N": args.N,
            "L": args.L,
            "depth": args.depth,
            "eps": args.eps,
            "delta": args.delta,
            "corpus": args.corpus,
            "random_corpus": args.random_corpus,
            "sample_cap": args.sample_cap,
            "seed": args.seed,
        },
        "dom_bound": dom_bound,
        "instances": results,
        "success_fraction": fraction,
        "ok": ok,
    }
    return (EXIT_OK if ok else EXIT_EXPERIMENT_FAILED), doc


# --- collide / forge ------------------------------------------------------------


def _collision_trials(args, with_forgery: bool):
    q, p = const(args.q), const(args.p)
    trials = []
    successes = 0
    forgery_matches = 0
    forgery_total = 0
    for t in range(args.trials):
        key = int_to_bits(derive_seed(args.seed, "key", t) % (1 << args.n), args.n)
        mac = mac_fixture(key, q, p)
        oracle = FunctionalOracle(mac, args.n, q=q, p=p)
        rng = RandomStream(args.seed, "collide", t)
        started = time.perf_counter()
        record = {"trial": t}
        try:
            g_fn, h_fn, report = collision_finder(
                oracle,
                args.delta,
                big_n=args.N,
                rng=rng,
                eps=args.eps,
                sample_cap=args.sample_cap,
            )
            ham_f, ham_s = _fraction_fields(report.hamming_gh)
            mqd_f, mqd_s = _fraction_fields(report.min_query_distance)
            record.update(
                {
                    "hamming_gh": ham_f,
                    "hamming_gh_exact": ham_s,
                    "tags_equal": report.tags_equal,
                    "min_query_distance": mqd_f,
                    "min_query_distance_exact": mqd_s,
                    "dom_size": report.g.size,
                    "functional_queries": report.functional_queries,
                    "interactions": report.interactions,
                    "success": report.success,
                }
            )
            successes += report.success
            if with_forgery and report.success:
                forgery_total += 1
                fr = forge(oracle, g_fn, h_fn)
                record.update(
                    {
                        "predicted_tag": int_to_bits(fr.predicted_tag, args.p),
                        "actual_tag": int_to_bits(fr.actual_tag, args.p),
                        "forgery_match": fr.match,
                    }
                )
                forgery_matches += fr.match
        except (IterationCapError, NoInfluentialFoundError) as exc:
            record.update({"success": False, "error": type(exc).__name__})
        if args.timings:
            record["wall_ms"] = round(1000 * (time.perf_counter() - started), 3)
        trials.append(record)
    return trials, successes, forgery_matches, forgery_total


def run_collide(args) -> tuple[int, dict]:
    trials, successes, _, _ = _collision_trials(args, with_forgery=False)
    rate = successes / max(args.trials, 1)
    ok = rate >= args.min_success_rate
    doc = {
        "config": {
            "subcommand": "collide",
            "n": args.n,
            "N": args.N,
            "q": args.q,
            "p": args.p,
            "delta": args.delta,
            "eps": args.eps,
            "trials": args.trials,
            "sample_cap": args.sample_cap,
            "min_success_rate": args.min_success_rate,
            "seed": args.seed,
        },
        "seed": args.seed,
        "n": args.n,
        "N": args.N,
        "q": args.q,
        "p": args.p,
        "delta": args.delta,
        "trials": trials,
        "success_rate": rate,
        "ok": ok,
    }
    if args.csv:
        _write_collision_csv(args.csv, doc)
    if args.dump_transcript:
        _dump_mac_transcript(args)
    return (EXIT_OK if ok else EXIT_EXPERIMENT_FAILED), doc


def _write_collision_csv(path: str, doc: dict) -> None:
    import csv

    fields = [
        "trial",
        "hamming_gh",
        "tags_equal",
        "min_query_distance",
        "dom_size",
        "functional_queries",
        "success",
        "error",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in doc["trials"]:
            writer.writerow(row)


def _dump_mac_transcript(args) -> None:
    from .attacks import extend

    key = int_to_bits(derive_seed(args.seed, "key", 0) % (1 << args.n), args.n)
    mac = mac_fixture(key, const(args.q), const(args.p))
    oracle = FunctionalOracle(
        mac, args.n, q=const(args.q), p=const(args.p), cache=False, log_probes=True
    )
    transcript: list = []
    sess = mac.session(args.n)
    from .games import Move

    move = Move("O", "?", "", ("R",))
    transcript.append(move)
    f = extend("10" * (args.N // 2), args.n)
    while move.path != ("R",):
        reply = sess.step(move)
        transcript.append(reply)
        if reply.path == ("R",):
            break
        i = reply.path[1]
        ask = Move("O", "?", "", ("L", i, "L"))
        transcript.append(ask)
        point = sess.step(ask)
        transcript.append(point)
        from .util import bits_to_int

        move = Move("O", "ans", str(f(bits_to_int(point.payload))), ("L", i, "R"))
        transcript.append(move)
    with open(args.dump_transcript, "w") as fh:
        fh.write(format_transcript(transcript) + "\n")


def run_forge(args) -> tuple[int, dict]:
    trials, successes, matches, total = _collision_trials(args, with_forgery=True)
    rate = successes / max(args.trials, 1)
    all_match = matches == total
    ok = rate >= args.min_success_rate and all_match
    doc = {
        "config": {
            "subcommand": "forge",
            "n": args.n,
            "N": args.N,
            "q": args.q,
            "p": args.p,
            "delta": args.delta,
            "eps": args.eps,
            "trials": args.trials,
            "sample_cap": args.sample_cap,
            "min_success_rate": args.min_success_rate,
            "seed": args.seed,
        },
        "seed": args.seed,
        "trials": trials,
        "success_rate": rate,
        "forgeries_attempted": total,
        "forgeries_matched": matches,
        "ok": ok,
    }
    return (EXIT_OK if ok else EXIT_EXPERIMENT_FAILED), doc


# --- prf-distinguish --------------------------------------------------------------


def _build_prf(spec: str, w):
    if spec == "builtin":
        return ToyPRF(w=w)
    if spec.startswith("hex:"):
        try:
            tweak = int(spec[4:], 16)
        except ValueError as exc:
            raise ConfigError(f"bad hex key in {spec!r}") from exc
        return ToyPRF(w=w, tweak=tweak)
    raise ConfigError(f"unknown prf {spec!r}; use 'builtin' or 'hex:<hexdigits>'")


def run_prf_distinguish(args) -> tuple[int, dict]:
    w = _poly_arg(args.w) if args.w else default_w()
    s = _poly_arg(args.sessions)
    p = _poly_arg(args.p)
    prf = _build_prf(args.prf, w)
    cand = candidate(prf, p)
    suite = builtin_adversaries(s, p)
    if args.adversary != "all":
        if args.adversary not in suite:
            raise ConfigError(
                f"unknown adversary {args.adversary!r}; choose from {sorted(suite)} or 'all'"
            )
        suite = {args.adversary: suite[args.adversary]}
    results = []
    ok = True
    for name in sorted(suite):
        rep = advantage_report(
            cand,
            suite[name],
            args.n,
            trials=args.trials,
            seed=derive_seed(args.seed, name),
            s=s,
            p=p,
        )
        results.append(
            {
                "adversary": name,
                "advantage_estimate": rep["advantage"],
                "stderr_estimate": rep["stderr"],
                "p_candidate": rep["p_candidate"],
                "p_ideal": rep["p_ideal"],
                "trials": args.trials,
            }
        )
        ok = ok and rep["advantage"] <= args.max_advantage
    doc = {
        "config": {
            "subcommand": "prf-distinguish",
            "n": args.n,
            "trials": args.trials,
            "adversary": args.adversary,
            "prf": args.prf,
            "sessions": args.sessions,
            "p": args.p,
            "w": args.w,
            "max_advantage": args.max_advantage,
            "seed": args.seed,
        },
        "n": args.n,
        "results": results,
        "ok": ok,
    }
    return (EXIT_OK if ok else EXIT_EXPERIMENT_FAILED), doc


# --- driver -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paramgame",
        description="Seeded experiments on parametrized games: model checks, "
        "influence analysis, collision/forgery attacks, and the "
        "second-order PRF harness.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help=f"default from ${SEED_ENV} or 0")
        sp.add_argument("--out", default=None, help="report path (default: stdout)")

    sp = sub.add_parser("games-check", help="exhaustive game-model invariants at small n")
    common(sp)
    sp.add_argument("--max-n", type=int, default=4)
    sp.add_argument("--dump-transcript", default=None)
    sp.set_defaults(fn=run_games_check)

    sp = sub.add_parser("influence", help="the coordinate-fixing loop on a tree corpus")
    common(sp)
    sp.add_argument("--corpus", default=None, help="tree file; blocks of lines are instances")
    sp.add_argument("--random-corpus", type=int, default=0, help="generate this many instances")
    sp.add_argument("--N", type=int, default=32)
    sp.add_argument("--L", type=int, default=4)
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--sample-cap", type=int, default=None)
    sp.set_defaults(fn=run_influence)

    for name, fn in (("collide", run_collide), ("forge", run_forge)):
        sp = sub.add_parser(name, help=f"{name} against the authentication fixture")
        common(sp)
        sp.add_argument("--n", type=int, default=16)
        sp.add_argument("--N", type=int, default=256)
        sp.add_argument("--q", type=int, default=8)
        sp.add_argument("--p", type=int, default=8)
        sp.add_argument("--delta", type=float, default=0.2)
        sp.add_argument("--eps", type=float, default=None, help="default delta/p")
        sp.add_argument("--trials", type=int, default=50)
        sp.add_argument("--sample-cap", type=int, default=192)
        sp.add_argument("--min-success-rate", type=float, default=0.8)
        sp.add_argument("--timings", action="store_true", help="include wall-clock fields")
        sp.add_argument("--csv", default=None, help="flatten per-trial rows to CSV")
        sp.add_argument("--dump-transcript", default=None)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("prf-distinguish", help="second-order pseudorandomness harness")
    common(sp)
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--adversary", default="all")
    sp.add_argument("--prf", default="builtin")
    sp.add_argument("--sessions", default="id", help="replication bound (poly text)")
    sp.add_argument("--p", default="id", help="answer width (poly text)")
    sp.add_argument("--w", default=None, help="PRF output width (poly text)")
    sp.add_argument("--max-advantage", type=float, default=0.1)
    sp.set_defaults(fn=run_prf_distinguish)

    return parser


def _validate(args) -> None:
    if args.seed is None:
        args.seed = int(os.environ.get(SEED_ENV, "0"))
    sub = args.subcommand
    if sub == "games-check" and args.max_n < 1:
        raise ConfigError("--max-n must be >= 1")
    if sub == "influence":
        if bool(args.corpus) == bool(args.random_corpus):
            raise ConfigError("give exactly one of --corpus or --random-corpus")
        if not (0 < args.eps < 1 and 0 < args.delta < 1):
            raise ConfigError("eps and delta must lie in (0, 1)")
    if sub in ("collide", "forge"):
        if args.N & (args.N - 1) or args.N.bit_length() - 1 > args.n:
            raise ConfigError("--N must be a power of two dividing 2^n")
        if not (0 < args.delta < 1):
            raise ConfigError("delta must lie in (0, 1)")
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
    if sub == "prf-distinguish" and args.trials < 1:
        raise ConfigError("--trials must be >= 1")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG_ERROR if exc.code not in (0, None) else 0
    try:
        _validate(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        code, doc = args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (ParamGameError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT_FAILED
    _emit(doc, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
