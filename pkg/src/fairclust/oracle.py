"""Exact and statistical ground truth: brute force, exhaustive claim checks, Monte Carlo."""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Callable, Iterator

import numpy as np

from .errors import InputError, TooLarge
from .instance import ClusterFamily, Instance, cluster_bound_residuals, cluster_bound_rewritten, gencost, group_power_costs
from .io import dumps, instance_hash

BRUTE_LIMIT = 1_000_000
FAMILY_LIMIT = 10_000
CHUNK = 4096
CACHE_ENV = "FAIRCLUST_CACHE"


@dataclass(frozen=True)
class BruteForceResult:
    optimum: float
    argmin: tuple[int, ...]
    enumerated: int

    def to_doc(self) -> dict:
        return {"kind": "brute", "optimum": self.optimum, "argmin": self.argmin, "enumerated": self.enumerated}


def _check_size(inst: Instance, limit: int) -> int:
    total = math.comb(inst.m, inst.k)
    if total > limit:
        raise TooLarge(f"C({inst.m}, {inst.k}) = {total} subsets exceeds limit {limit}")
    return total


def _lex_enumeration(inst: Instance) -> BruteForceResult:
    # vectorised over chunks of lexicographic combinations; argmin keeps the first minimum
    r = inst.q / inst.p
    best, arg, count = math.inf, None, 0
    combos = itertools.combinations(range(inst.m), inst.k)
    while True:
        chunk = np.array(list(itertools.islice(combos, CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        count += len(chunk)
        d = inst.dist[:, chunk].min(axis=2)  # m x chunk
        power = inst.weights @ d**inst.p  # n x chunk
        costs = np.sum(power**r, axis=0) ** (1.0 / inst.q)
        a = int(np.argmin(costs))
        if costs[a] < best:
            best, arg = float(costs[a]), tuple(int(c) for c in chunk[a])
    return BruteForceResult(gencost(inst, arg), arg, count)


def _descending_enumeration(inst: Instance) -> BruteForceResult:
    """Depth-first from the largest index down, maintaining nearest distances incrementally."""
    m, k = inst.m, inst.k
    r = inst.q / inst.p
    best = [math.inf, None]
    count = 0

    def rec(start: int, chosen: list[int], dmin: np.ndarray):
        nonlocal count
        if len(chosen) == k:
            count += 1
            c = float(np.sum((inst.weights @ dmin**inst.p) ** r) ** (1.0 / inst.q))
            C = tuple(sorted(chosen))
            if c < best[0] or (c == best[0] and C < best[1]):
                best[0], best[1] = c, C
            return
        for j in range(start, k - len(chosen) - 2, -1):
            chosen.append(j)
            rec(j - 1, chosen, np.minimum(dmin, inst.dist[:, j]))
            chosen.pop()

    rec(m - 1, [], np.full(m, np.inf))
    return BruteForceResult(gencost(inst, best[1]), best[1], count)


def _cache_path(inst: Instance) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / f"brute-{instance_hash(inst)}.json"


def brute_force_opt(inst: Instance, limit: int = BRUTE_LIMIT, use_cache: bool = True) -> BruteForceResult:
    """Exact minimum of gencost over all k-subsets (lexicographically first on ties).

    When ``FAIRCLUST_CACHE`` names a directory, results are memoised there by
    instance content hash.
    """
    _check_size(inst, limit)
    path = _cache_path(inst) if use_cache else None
    if path is not None and path.exists():
        doc = json.loads(path.read_text())
        return BruteForceResult(doc["optimum"], tuple(doc["argmin"]), doc["enumerated"])
    res = _lex_enumeration(inst)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(res.to_doc()))
    return res


def brute_force_alt(inst: Instance, limit: int = BRUTE_LIMIT) -> BruteForceResult:
    """Independent enumeration order used to cross-check :func:`brute_force_opt`."""
    _check_size(inst, limit)
    return _descending_enumeration(inst)


# -- exhaustive checks ---------------------------------------------------------


def disjoint_families(m: int, limit: int = FAMILY_LIMIT) -> Iterator[ClusterFamily]:
    """Every collection of pairwise disjoint non-empty subsets of [m].

    These correspond to set partitions of [m + 1] (the block holding the extra
    element is discarded), so there are Bell(m + 1) of them.
    """
    count = 0

    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1 :]
            yield [[first]] + part

    for part in partitions(list(range(m + 1))):
        sets = [b for b in part if m not in b]
        if not sets:
            continue
        count += 1
        if count > limit:
            raise TooLarge(f"more than {limit} families over [{m}]")
        yield ClusterFamily.from_sets(sets)


@dataclass
class ClaimReport:
    claim: str
    checked: int = 0
    skipped: int = 0
    violation: object = None
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violation is None

    def to_doc(self) -> dict:
        return {
            "claim": self.claim,
            "passed": self.passed,
            "checked": self.checked,
            "skipped": self.skipped,
            "violation": self.violation,
            **self.notes,
        }


def _below(lhs: float, rhs: float, rtol: float) -> bool:
    return lhs <= rhs + rtol * max(abs(lhs), abs(rhs), 1e-12)


def check_claim23(inst: Instance, rtol: float = 1e-9, family_limit: int = FAMILY_LIMIT) -> ClaimReport:
    rep = ClaimReport("claim23")
    if inst.m > 8:
        raise TooLarge("exhaustive family enumeration needs m <= 8")
    fams = list(disjoint_families(inst.m, family_limit))
    r = inst.q / inst.p
    for C in itertools.combinations(range(inst.m), inst.k):
        power = group_power_costs(inst.dist, inst.weights, inst.p, C)
        for fam in fams:
            s1, s2 = cluster_bound_residuals(inst, C, fam)
            a, b = cluster_bound_rewritten(inst, C, fam)
            rep.checked += 1
            lhs = power**r
            checks = [(power - s1, power), (a, lhs)]
            if s2 is not None:
                checks += [(lhs - s2, lhs), (b, lhs)]
            for rhs_side, cost_side in checks:
                for i in range(inst.n):
                    if not _below(float(rhs_side[i]), float(cost_side[i]), rtol):
                        rep.violation = {"C": C, "family": fam.key(), "group": i}
                        return rep
    return rep


def random_center_sets(inst: Instance, count: int, seed: int) -> list[tuple[int, ...]]:
    rng = np.random.default_rng(seed)
    return [tuple(sorted(int(c) for c in rng.choice(inst.m, inst.k, replace=False))) for _ in range(count)]


def check_items13(inst: Instance, red=None, sol=None) -> ClaimReport:
    """Structure, size and items 1-3 of the reduction."""
    from .algorithms import relax_and_reduce
    from .reduction import verify_properties

    if red is None:
        sol, red = relax_and_reduce(inst)
    pr = verify_properties(inst, red, sol, lambdas=())
    rep = ClaimReport("items13")
    for item in ("structure", "size", "item1", "item2", "item3"):
        entry = pr.items.get(item)
        if entry is None:
            continue
        rep.checked += entry["checked"]
        if not entry["pass"] and rep.violation is None:
            rep.violation = {"item": item, "witness": entry["witness"]}
    return rep


def check_item4(inst: Instance, samples: int = 100, seed: int = 0, red=None, sol=None) -> ClaimReport:
    from .algorithms import relax_and_reduce
    from .reduction import verify_properties

    if red is None:
        sol, red = relax_and_reduce(inst)
    Ls = random_center_sets(inst, samples, seed)
    pr = verify_properties(inst, red, sol, sampleL=Ls, lambdas=())
    rep = ClaimReport("item4", checked=len(Ls))
    entry = pr.items.get("item4")
    if entry and not entry["pass"]:
        rep.violation = entry["witness"]
    return rep


def check_item5(inst: Instance, red=None, sol=None) -> ClaimReport:
    from .algorithms import relax_and_reduce
    from .reduction import valid_lambdas, verify_properties

    if red is None:
        sol, red = relax_and_reduce(inst)
    if len(red.K) > 10:
        raise TooLarge("item 5 enumeration needs |K| <= 10")
    lams = list(valid_lambdas(red))
    total = 2 ** len(red.K)
    pr = verify_properties(inst, red, sol, lambdas=lams)
    rep = ClaimReport("item5", checked=len(lams), skipped=total - len(lams))
    entry = pr.items.get("item5")
    if entry and not entry["pass"]:
        rep.violation = entry["witness"]
    return rep


def check_claim41(inst: Instance, trials: int = 1000, seed: int = 0, rtol: float = 1e-9, red=None, sol=None) -> ClaimReport:
    from .algorithms import relax_and_reduce
    from .reduction import bipartition
    from .rounding import claim41_bound, run_trials, select_kprime

    if red is None:
        sol, red = relax_and_reduce(inst)
    rep = ClaimReport("claim41")
    if len(red.K) <= inst.k:
        rep.notes["vacuous"] = "no surplus"
        return rep
    kprime = select_kprime(red, bipartition(red))
    for t in run_trials(red, kprime, seed, trials):
        rep.checked += 1
        bound = claim41_bound(t, sol.B)
        if not _below(t.cost, bound, rtol):
            rep.violation = {"seed": t.seed, "cost": t.cost, "bound": bound}
            return rep
    return rep


CLAIMS = ("claim23", "items13", "item4", "item5", "claim41")


def exhaustive_claim_check(inst: Instance, claim: str, **kw) -> ClaimReport:
    if claim == "claim23":
        return check_claim23(inst, **kw)
    if claim == "items13":
        return check_items13(inst, **kw)
    if claim == "item4":
        return check_item4(inst, **kw)
    if claim == "item5":
        return check_item5(inst, **kw)
    if claim == "claim41":
        return check_claim41(inst, **kw)
    raise InputError(f"unknown claim {claim!r}; expected one of {CLAIMS}")


# -- Monte Carlo ---------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    stderr: float
    trials: int


def monte_carlo(estimator: Callable[[np.random.Generator], float], trials: int, confidence: float = 0.99, seed: int = 0) -> Estimate:
    """Sample mean with a normal-approximation confidence half-width.

    Each trial gets its own generator spawned from ``seed``.
    """
    if trials < 30:
        raise InputError("monte_carlo needs at least 30 trials")
    gens = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]
    vals = np.array([estimator(g) for g in gens], dtype=float)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(trials))
    zq = NormalDist().inv_cdf(0.5 + confidence / 2)
    return Estimate(mean, zq * se, se, trials)
