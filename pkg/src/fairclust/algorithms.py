"""End-to-end approximation pipelines and the norm-swap baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewPoints
from .instance import Instance, as_centers, gencost
from .reduction import DEFAULT_GAMMA, ReducedInstance, bipartition, build_reduction
from .relax import (
    DEFAULT_TOL,
    FractionalSolution,
    Regime,
    RoundOrCutResult,
    regime_of,
    round_or_cut,
    solve_pgeq,
)
from .rounding import (
    ENUMERATION_LIMIT,
    best_of,
    closure_patterns,
    enumerate_closures,
    greedy_reopen,
    run_trials,
    select_kprime,
)

DEFAULT_TRIALS = 50
SWAP_RTOL = 1e-4


@dataclass(frozen=True)
class Solution:
    centers: tuple[int, ...]
    cost: float
    relaxation_B: float
    certified_ratio: float
    method: str  # rounding | reweight | enumeration | baseline
    details: dict = field(default_factory=dict, compare=False)

    def to_doc(self) -> dict:
        return {
            "kind": "solution",
            "centers": self.centers,
            "cost": self.cost,
            "relaxation_B": self.relaxation_B,
            "certified_ratio": self.certified_ratio,
            "method": self.method,
            "details": self.details,
        }


def certified_ratio(cost: float, lower: float) -> float:
    if cost <= 0:
        return 1.0
    return cost / lower if lower > 0 else math.inf


def _solution(inst: Instance, centers, lower: float, method: str, **details) -> Solution:
    centers = as_centers(centers, inst.m)
    cost = gencost(inst, centers)
    return Solution(centers, cost, lower, certified_ratio(cost, lower), method, details)


# -- weighted l_q k-clustering -------------------------------------------------


def _lq_cost(dist, points, w, C, r) -> float:
    d = dist[np.ix_(points, C)].min(axis=1)
    return float((w @ d**r) ** (1.0 / r))


def kcluster_lq_local_search(dist: np.ndarray, points, w, k: int, r: float) -> tuple[int, ...]:
    """Single-swap local search for min (sum_l w(l) d(l, C)^r)^{1/r}, C a k-subset of ``points``.

    Greedy start; a swap is taken only if it improves the cost by a relative
    ``1e-4``, and the best such swap is applied each round.
    """
    points = list(points)
    w = np.asarray(w, dtype=float)
    if len(points) < k:
        raise TooFewPoints(f"{len(points)} points for k = {k}")
    C: list[int] = []
    for _ in range(k):
        rest = [c for c in points if c not in C]
        costs = [_lq_cost(dist, points, w, C + [c], r) for c in rest]
        C.append(rest[int(np.argmin(costs))])
    cur = _lq_cost(dist, points, w, C, r)
    while cur > 0:
        best, best_swap = cur, None
        for a in range(k):
            for o in points:
                if o in C:
                    continue
                trial = C[:a] + [o] + C[a + 1 :]
                c = _lq_cost(dist, points, w, trial, r)
                if c < best:
                    best, best_swap = c, trial
        if best_swap is None or best > cur * (1 - SWAP_RTOL):
            break
        C, cur = best_swap, best
    return tuple(sorted(C))


def reweight_hat(red: ReducedInstance) -> np.ndarray:
    """Per representative, sum_i w'_i(l)^{q/p}."""
    inst = red.instance
    return (red.wprime ** (inst.q / inst.p)).sum(axis=0)


# -- pipelines -------------------------------------------------------------------


def _pad(inst: Instance, K) -> tuple[int, ...]:
    return tuple(sorted(list(K) + list(greedy_reopen(inst, K, inst.k - len(K)))))


def _round(inst, red: ReducedInstance, B: float, lower: float, seed: int, trials: int, **details) -> Solution:
    bip = bipartition(red)
    kprime = select_kprime(red, bip)
    best = best_of(run_trials(red, kprime, seed, trials))
    method = "rounding"
    if closure_patterns(red, kprime) <= ENUMERATION_LIMIT:
        enum = enumerate_closures(red, kprime)
        if enum.cost < best.cost:
            best, method = enum, "enumeration"
    return _solution(inst, best.L, lower, method, Kprime=kprime, closed=best.closed, seed=best.seed, **details)


def solve_reweight_path(inst: Instance, red: ReducedInstance, lower: float, **details) -> Solution:
    what = reweight_hat(red)
    L = kcluster_lq_local_search(inst.dist, red.K, what, inst.k, inst.q)
    return _solution(inst, L, lower, "reweight", **details)


def solve_pgeq_full(
    inst: Instance,
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    gamma: float = DEFAULT_GAMMA,
    tol: float = DEFAULT_TOL,
    relaxation: FractionalSolution | None = None,
) -> Solution:
    """Relax, reduce, then round (large surplus) or reweight (surplus <= sqrt k)."""
    sol = relaxation if relaxation is not None else solve_pgeq(inst, tol)
    red = build_reduction(inst, sol, gamma)
    surplus = len(red.K) - inst.k
    details = {"K": red.K, "B": sol.B}
    if surplus <= 0:
        return _solution(inst, _pad(inst, red.K), sol.lower, "rounding", **details)
    if surplus > math.sqrt(inst.k):
        return _round(inst, red, sol.B, sol.lower, seed, trials, **details)
    return solve_reweight_path(inst, red, sol.lower, **details)


def solve_pleq_full(
    inst: Instance,
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    gamma: float = DEFAULT_GAMMA,
    tol: float = DEFAULT_TOL,
    relaxation: RoundOrCutResult | None = None,
) -> Solution:
    """Round-or-cut relaxation, reduction, then best-of-``trials`` rounding."""
    rc = relaxation if relaxation is not None else round_or_cut(inst, tol=tol, gamma=gamma)
    sol, red = rc.sol, rc.reduced
    details = {"K": red.K, "B": sol.B, "rounds": rc.rounds, "converged": rc.converged}
    if len(red.K) <= inst.k:
        return _solution(inst, _pad(inst, red.K), sol.lower, "rounding", **details)
    return _round(inst, red, sol.B, sol.lower, seed, trials, **details)


def baseline_norm_swap(inst: Instance, lower: float | None = None) -> Solution:
    """Merge the groups (w = sum_i w_i), solve the l_p k-clustering, evaluate under (p, q)."""
    w = inst.weights.sum(axis=0)
    L = kcluster_lq_local_search(inst.dist, range(inst.m), w, inst.k, inst.p)
    if lower is None:
        lower = relaxation_lower_bound(inst)
    return _solution(inst, L, lower, "baseline")


def relaxation_lower_bound(inst: Instance, tol: float = DEFAULT_TOL) -> float:
    if regime_of(inst) is Regime.PGEQ:
        return solve_pgeq(inst, tol).lower
    return round_or_cut(inst, tol=tol).sol.lower


def solve(inst: Instance, method: str = "auto", seed: int = 0, trials: int = DEFAULT_TRIALS, **kw) -> Solution:
    if method == "auto":
        method = "pgeq" if inst.p >= inst.q else "pleq"
    if method == "pgeq":
        return solve_pgeq_full(inst, seed, trials, **kw)
    if method == "pleq":
        return solve_pleq_full(inst, seed, trials, **kw)
    if method == "baseline":
        return baseline_norm_swap(inst)
    raise ValueError(f"unknown method {method!r}")


def relax_and_reduce(inst: Instance, tol: float = DEFAULT_TOL, gamma: float = DEFAULT_GAMMA):
    """Regime-appropriate relaxation and its reduction: ``(sol, red)``."""
    if regime_of(inst) is Regime.PGEQ:
        sol = solve_pgeq(inst, tol)
        return sol, build_reduction(inst, sol, gamma)
    rc = round_or_cut(inst, tol=tol, gamma=gamma)
    return rc.sol, rc.reduced
