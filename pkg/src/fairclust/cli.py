"""Command-line front end.

Every subcommand writes one JSON document (``bench`` writes CSV) to
``--out`` or standard output.  Exit status is 0 on success, 1 for invalid
input or usage, 2 when an internal invariant fails.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .algorithms import DEFAULT_TRIALS, baseline_norm_swap, relax_and_reduce, solve_pgeq_full, solve_pleq_full
from .errors import InputError, InternalError, RegimeMismatch, TooLarge
from .hardness import gen_dense_case, gen_random_case, reduce_to_clustering
from .io import FORMAT_VERSION, dumps, instance_hash, instance_to_doc, load_instance
from .oracle import CLAIMS, brute_force_opt, exhaustive_claim_check
from .reduction import DEFAULT_GAMMA, bipartition, build_reduction, verify_properties
from .relax import DEFAULT_MAX_ROUNDS, DEFAULT_TOL, FractionalSolution, Regime, regime_of, round_or_cut, solve_pgeq
from .rounding import claim41_bound, closing_probabilities, run_trials, select_kprime

CSV_COLUMNS = ["instance", "m", "n", "k", "p", "q", "method", "seed", "cost", "B", "opt", "ratio", "millis"]
BENCH_METHODS = ("auto", "pgeq", "pleq", "baseline")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _record(command: str, args, payload: dict, inst=None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "func", "out", "input", "timing")}
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "run",
        "command": command,
        "parameters": params,
        "tool_version": __version__,
        "payload": payload,
    }
    if inst is not None:
        doc["instance_hash"] = instance_hash(inst)
    return doc


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _timed(args, doc: dict, t0: float) -> dict:
    if getattr(args, "timing", False):
        doc["wall_millis"] = round((time.perf_counter() - t0) * 1000, 3)
    return doc


# -- subcommands ---------------------------------------------------------------


def _solve_one(inst, method, seed, trials, cache):
    if method == "auto":
        method = "pgeq" if inst.p >= inst.q else "pleq"
    if "pgeq" not in cache and method in ("pgeq", "baseline") and inst.p >= inst.q:
        cache["pgeq"] = solve_pgeq(inst)
    if "pleq" not in cache and method in ("pleq", "baseline") and inst.p < inst.q:
        cache["pleq"] = round_or_cut(inst)
    if method == "pgeq":
        if inst.p < inst.q:
            raise RegimeMismatch("method pgeq needs p >= q")
        return solve_pgeq_full(inst, seed, trials, relaxation=cache["pgeq"])
    if method == "pleq":
        if inst.p > inst.q:
            raise RegimeMismatch("method pleq needs p <= q")
        if "pleq" not in cache:  # p == q: both regimes apply
            cache["pleq"] = round_or_cut(inst)
        return solve_pleq_full(inst, seed, trials, relaxation=cache["pleq"])
    if method == "baseline":
        lower = cache["pgeq"].lower if regime_of(inst) is Regime.PGEQ else cache["pleq"].sol.lower
        return baseline_norm_swap(inst, lower=lower)
    raise InputError(f"unknown method {method!r}")


def cmd_solve(args):
    t0 = time.perf_counter()
    inst = load_instance(args.input)
    sol = _solve_one(inst, args.method, args.seed, args.trials, {})
    return _timed(args, _record("solve", args, sol.to_doc(), inst), t0)


def _pool_doc(pool) -> list:
    return [{"group": e.group, "kind": e.kind.value, "family": e.family.key()} for e in pool.families]


def cmd_relax(args):
    t0 = time.perf_counter()
    inst = load_instance(args.input)
    regime = args.regime
    if regime == "auto":
        regime = "pgeq" if regime_of(inst) is Regime.PGEQ else "pleq"
    if regime == "pgeq" and inst.p < inst.q or regime == "pleq" and inst.p > inst.q:
        raise RegimeMismatch(f"regime {regime} does not apply to p={inst.p}, q={inst.q}")
    payload = {"kind": "relaxation"}
    if regime == "pgeq":
        sol = solve_pgeq(inst, args.tol)
    else:
        rc = round_or_cut(inst, tol=args.tol, max_rounds=args.max_rounds)
        sol = rc.sol
        payload.update(rounds=rc.rounds, converged=rc.converged, history=rc.history, pool=_pool_doc(rc.pool))
    payload.update(
        regime=sol.regime.value, B=sol.B, lower=sol.lower, iterations=sol.iterations, x=sol.x, y=sol.y, z=sol.z
    )
    return _timed(args, _record("relax", args, payload, inst), t0)


def _solution_from_doc(path, inst) -> FractionalSolution:
    doc = json.loads(Path(path).read_text())
    doc = doc.get("payload", doc)
    if doc.get("kind") != "relaxation":
        raise InputError(f"{path}: not a relaxation document")
    x = np.asarray(doc["x"], dtype=float)
    if x.shape != (inst.m, inst.m):
        raise InputError(f"{path}: x has shape {x.shape}, expected {(inst.m, inst.m)}")
    return FractionalSolution(x, np.asarray(doc["z"], dtype=float), float(doc["B"]), Regime(doc["regime"]), float(doc["lower"]))


def _reduction_doc(red) -> dict:
    return {
        "kind": "reduction",
        "K": red.K,
        "U": {l: red.U[l] for l in red.K},
        "V": {l: red.V[l] for l in red.K},
        "sigma": {l: red.sigma[l] for l in red.K},
        "wprime": red.wprime,
        "xprime": red.xprime,
        "yprime": red.yprime,
        "zprime": red.zprime,
        "B": red.B,
        "Bprime": red.Bprime,
        "gamma": red.gamma,
    }


def cmd_reduce(args):
    t0 = time.perf_counter()
    inst = load_instance(args.input)
    if args.solution:
        sol = _solution_from_doc(args.solution, inst)
        red = build_reduction(inst, sol, args.gamma)
    else:
        sol, red = relax_and_reduce(inst, gamma=args.gamma)
    payload = _reduction_doc(red)
    payload["properties"] = verify_properties(inst, red, sol).to_doc()
    if len(red.K) >= 2:
        bip = bipartition(red)
        payload["K1"], payload["K2"] = bip.K1, bip.K2
    return _timed(args, _record("reduce", args, payload, inst), t0)


def cmd_round(args):
    t0 = time.perf_counter()
    inst = load_instance(args.input)
    sol, red = relax_and_reduce(inst, gamma=args.gamma)
    kprime = select_kprime(red, bipartition(red))
    traces = run_trials(red, kprime, args.seed, args.trials)
    rows = []
    for t in traces:
        d = t.to_doc()
        d["claim41_bound"] = claim41_bound(t, sol.B)
        rows.append(d)
    best = min(range(len(traces)), key=lambda a: traces[a].cost)
    payload = {
        "kind": "rounding",
        "K": red.K,
        "Kprime": kprime,
        "probabilities": closing_probabilities(red, kprime),
        "B": sol.B,
        "best": best,
    }
    if args.best_of:
        payload["best_trace"] = rows[best]
    else:
        payload["traces"] = rows
    return _timed(args, _record("round", args, payload, inst), t0)


def cmd_brute(args):
    t0 = time.perf_counter()
    inst = load_instance(args.input)
    res = brute_force_opt(inst, limit=args.limit)
    return _timed(args, _record("brute", args, res.to_doc(), inst), t0)


def cmd_verify(args):
    t0 = time.perf_counter()
    inst = load_instance(args.input)
    claims = CLAIMS if args.claims == "all" else tuple(c.strip() for c in args.claims.split(","))
    for c in claims:
        if c not in CLAIMS:
            raise InputError(f"unknown claim {c!r}; expected some of {', '.join(CLAIMS)}")
    sol, red = relax_and_reduce(inst)
    reports = {}
    for c in claims:
        kw = {}
        if c in ("items13", "item4", "item5", "claim41"):
            kw = {"red": red, "sol": sol}
        if c in ("item4", "claim41"):
            kw["seed"] = args.seed
        if c == "claim41":
            kw["trials"] = args.trials
        try:
            reports[c] = exhaustive_claim_check(inst, c, **kw).to_doc()
        except TooLarge as e:
            reports[c] = {"claim": c, "passed": None, "skipped_reason": str(e)}
    payload = {"kind": "verify", "claims": reports, "passed": all(r["passed"] is not False for r in reports.values())}
    return _timed(args, _record("verify", args, payload, inst), t0)


def cmd_gen_hardness(args):
    t0 = time.perf_counter()
    if args.case == "random":
        msu = gen_random_case(args.m, args.eps, args.seed)
    else:
        if args.delta is None:
            raise InputError("--delta is required for the dense case")
        msu = gen_dense_case(args.m, args.eps, args.delta, args.seed)
    inst = reduce_to_clustering(msu, args.p, args.q, name=f"{args.case}-m{args.m}-s{args.seed}")
    payload = {"kind": "hardness", "min_s_union": msu.to_doc(), "instance": instance_to_doc(inst)}
    if msu.plant:
        payload["plant"] = {k: sorted(v) for k, v in msu.plant.items()}
    return _timed(args, _record("gen-hardness", args, payload, inst), t0)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def bench_rows(instances, methods, seeds, trials=DEFAULT_TRIALS, timing=False, errors=None):
    """Cross product of instances x methods x seeds, stable-ordered."""
    rows = []
    for inst in sorted(instances, key=lambda i: i.name):
        cache: dict = {}
        try:
            opt = brute_force_opt(inst).optimum
        except TooLarge:
            opt = None
        for method in sorted(methods):
            for seed in seeds:
                t0 = time.perf_counter()
                row = dict(instance=inst.name, m=inst.m, n=inst.n, k=inst.k, p=inst.p, q=inst.q)
                row.update(method=method, seed=seed, opt=opt)
                try:
                    sol = _solve_one(inst, method, seed, trials, cache)
                    row.update(cost=sol.cost, B=sol.relaxation_B, ratio=sol.certified_ratio)
                except (InputError, InternalError) as e:
                    if errors is not None:
                        errors.append({"instance": inst.name, "method": method, "seed": seed, "error": str(e)})
                if timing:
                    row["millis"] = round((time.perf_counter() - t0) * 1000, 3)
                rows.append(row)
    return rows


def bench_summary(rows) -> list[dict]:
    cells: dict = {}
    for r in rows:
        if r.get("ratio") is None:
            continue
        key = (r["p"], r["q"])
        cells[key] = max(cells.get(key, 0.0), r["ratio"])
    return [{"p": p, "q": q, "max_certified_ratio": v} for (p, q), v in sorted(cells.items())]


def cmd_bench(args):
    from .corpus import read_corpus

    d = Path(args.corpus)
    if not d.is_dir():
        raise InputError(f"{d} is not a directory")
    instances = read_corpus(d)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in BENCH_METHODS:
            raise InputError(f"unknown method {m!r}")
    seeds = list(range(args.seeds))
    errors: list = []
    rows = bench_rows(instances, methods, seeds, args.trials, args.timing, errors)
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _fmt(r.get(c)) for c in CSV_COLUMNS})
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    summary = {"format_version": FORMAT_VERSION, "kind": "bench_summary", "cells": bench_summary(rows), "errors": errors}
    text = dumps(summary)
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stderr.write(text)
    return None


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fairclust", description="(p, q)-fair clustering approximation toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=False, trials=False):
        p.add_argument("--in", dest="input", required=True, help="instance JSON")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical output)")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if trials:
            p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)

    p = sub.add_parser("solve", help="run an approximation pipeline")
    common(p, seed=True, trials=True)
    p.add_argument("--method", choices=["auto", "pgeq", "pleq", "baseline"], default="auto")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("relax", help="solve the convex relaxation")
    common(p)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
    p.add_argument("--regime", choices=["auto", "pgeq", "pleq"], default="auto")
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("reduce", help="relax and sparsify to representatives")
    common(p)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--solution", help="relaxation document from `relax` (default: solve afresh)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("round", help="seeded rounding traces with per-trace bounds")
    common(p, seed=True, trials=True)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--best-of", action="store_true", help="emit only the best trace")
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("brute", help="exact optimum by enumeration")
    common(p)
    p.add_argument("--limit", type=int, default=1_000_000)
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("verify", help="check structural claims exhaustively")
    common(p, seed=True)
    p.add_argument("--claims", default="all", help=f"'all' or a comma list of {', '.join(CLAIMS)}")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-hardness", help="generate a Min s-Union instance and its clustering transcription")
    p.add_argument("--case", choices=["random", "dense"], required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_gen_hardness)

    p = sub.add_parser("bench", help="run methods over a corpus directory, write CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--summary", help="JSON path for the per-(p, q) summary (default: stderr)")
    p.add_argument("--methods", default="auto,baseline")
    p.add_argument("--seeds", type=int, default=5, help="seeds 0..N-1")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--timing", action="store_true", help="fill the millis column")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        doc = args.func(args)
        if doc is not None:
            _emit(dumps(doc), getattr(args, "out", None))
    except (InputError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as e:
        print(f"fairclust: error: {e}", file=sys.stderr)
        return 1
    except (InternalError, AssertionError) as e:
        print(f"fairclust: internal error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
