"""Randomised closing of representatives on the reduced instance."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSurplus, ProbabilityOverflow
from .instance import Instance, norm_of_costs
from .reduction import Bipartition, ReducedInstance

MAX_RESAMPLE = 100
ENUMERATION_LIMIT = 100_000


@dataclass(frozen=True, eq=False)
class RoundingTrace:
    Kprime: tuple[int, ...]
    closed: tuple[int, ...]
    reopened: tuple[int, ...]
    L: tuple[int, ...]
    Z: np.ndarray  # per group, sum of vol_i(V_l) over closed l
    Zprime: np.ndarray  # per group, sum of w'_i(l) d(l, sigma(l))^p over closed l
    cost: float  # gencost of L in the original instance
    seed: int | None
    p: float
    q: float
    gamma: float
    nu: float
    attempts: int = 1
    fallback: bool = False

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "Kprime": self.Kprime,
            "closed": self.closed,
            "reopened": self.reopened,
            "L": self.L,
            "Z": self.Z,
            "Zprime": self.Zprime,
            "cost": self.cost,
            "attempts": self.attempts,
            "fallback": self.fallback,
        }


def select_kprime(red: ReducedInstance, bip: Bipartition) -> tuple[int, ...]:
    """Members of K1 whose partner mass x'_{l sigma(l)} reaches (|K|-k) / (4|K1|)."""
    surplus = len(red.K) - red.instance.k
    if surplus <= 0:
        raise NoSurplus(f"|K| = {len(red.K)} <= k = {red.instance.k}")
    thresh = surplus / (4 * len(bip.K1))
    return tuple(l for l in bip.K1 if red.x_sigma(l) >= thresh)


def closing_probabilities(red: ReducedInstance, kprime) -> np.ndarray:
    """x'_{l sigma(l)} / gamma, i.e. 5 x' for the default gamma = 1/5."""
    probs = np.array([red.x_sigma(l) for l in kprime]) / red.gamma
    if np.any(probs > 1 + 1e-6):
        bad = kprime[int(np.argmax(probs))]
        raise ProbabilityOverflow(f"closing probability {probs.max()} > 1 for representative {bad}")
    return np.minimum(probs, 1.0)


def sample_closures(red: ReducedInstance, kprime, rng: np.random.Generator) -> tuple[int, ...]:
    """One independent Bernoulli draw per member of K'."""
    probs = closing_probabilities(red, kprime)
    hits = rng.random(len(kprime)) < probs
    return tuple(l for l, h in zip(kprime, hits) if h)


def _costs_with(inst: Instance, dmin: np.ndarray, cand: np.ndarray) -> np.ndarray:
    nd = np.minimum(dmin[:, None], inst.dist[:, cand]) ** inst.p
    power = inst.weights @ nd
    return np.sum(power ** (inst.q / inst.p), axis=0) ** (1.0 / inst.q)


def greedy_reopen(inst: Instance, L, count: int) -> tuple[int, ...]:
    """Add ``count`` centers one at a time, each the largest cost reduction (lowest index on ties)."""
    L = list(L)
    added = []
    dmin = inst.dist[:, L].min(axis=1) if L else np.full(inst.m, np.inf)
    for _ in range(count):
        cand = np.setdiff1d(np.arange(inst.m), L)
        best = int(cand[np.argmin(_costs_with(inst, dmin, cand))])
        L.append(best)
        added.append(best)
        dmin = np.minimum(dmin, inst.dist[:, best])
    return tuple(added)


def _finish_trace(red, kprime, closed, seed, attempts=1, fallback=False) -> RoundingTrace:
    inst = red.instance
    pos = red.pos
    cl = set(closed)
    L = [l for l in red.K if l not in cl]
    reopened = ()
    if len(L) < inst.k:
        reopened = greedy_reopen(inst, L, inst.k - len(L))
    L = tuple(sorted(L + list(reopened)))
    idx = [pos[l] for l in sorted(closed)]
    Z = red.cell_vols[:, idx].sum(axis=1)
    Zp = (red.wprime[:, idx] * red.sigma_dist[idx] ** inst.p).sum(axis=1)
    dmin = inst.dist[:, list(L)].min(axis=1)
    cost = norm_of_costs(inst.weights @ dmin**inst.p, inst.p, inst.q)
    return RoundingTrace(
        tuple(kprime), tuple(sorted(closed)), reopened, L, Z, Zp, cost, seed,
        inst.p, inst.q, red.gamma, red.nu, attempts, fallback,
    )


def randomized_round(red: ReducedInstance, kprime, seed: int, max_resample: int = MAX_RESAMPLE) -> RoundingTrace:
    """Close members of K' independently, reopen greedily up to k centers.

    When fewer than |K| - k representatives close, the draw is repeated (up to
    ``max_resample`` times); after that the |K| - k members of K' with the
    largest partner mass are closed deterministically.
    """
    inst = red.instance
    surplus = len(red.K) - inst.k
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_resample + 1):
        closed = sample_closures(red, kprime, rng)
        if len(closed) >= surplus:
            return _finish_trace(red, kprime, closed, seed, attempt)
    order = sorted(kprime, key=lambda l: (-red.x_sigma(l), l))
    # K' can be too small only in degenerate inputs; continue outside it in the same order
    rest = set(kprime)
    order += sorted((l for l in red.K if l not in rest), key=lambda l: (-red.x_sigma(l), l))
    return _finish_trace(red, kprime, order[:surplus], seed, max_resample, fallback=True)


def trial_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def run_trials(red: ReducedInstance, kprime, seed: int, trials: int) -> list[RoundingTrace]:
    return [randomized_round(red, kprime, s) for s in trial_seeds(seed, trials)]


def best_of(traces) -> RoundingTrace:
    return min(traces, key=lambda t: t.cost)


def closure_patterns(red: ReducedInstance, kprime) -> int:
    surplus = len(red.K) - red.instance.k
    return math.comb(len(kprime), surplus)


def enumerate_closures(red: ReducedInstance, kprime) -> RoundingTrace:
    """Best trace over every way of closing exactly |K| - k members of K'."""
    surplus = len(red.K) - red.instance.k
    best = None
    for closed in itertools.combinations(kprime, surplus):
        t = _finish_trace(red, kprime, closed, None, attempts=0)
        if best is None or t.cost < best.cost:
            best = t
    return best


def claim41_bound(trace: RoundingTrace, B: float) -> float:
    """min{30B + 2 (sum Z_i^{q/p})^{1/q}, 10B + (sum Z'_i^{q/p})^{1/q}}.

    The constants are 6 / gamma and 2 / gamma (30 and 10 at gamma = 1/5),
    which dominate 6 / gamma^{1/nu} and 2 / gamma^{1/nu} for every nu >= 1.
    """
    g = 1.0 / trace.gamma
    a = 6 * g * B + 2 * norm_of_costs(trace.Z, trace.p, trace.q)
    b = 2 * g * B + norm_of_costs(trace.Zprime, trace.p, trace.q)
    return min(a, b)
