"""Min s-Union instances and their transcription into fair clustering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterOrder
from .instance import Instance, make_instance


@dataclass(frozen=True)
class MinSUnionInstance:
    universe: int
    sets: tuple[frozenset, ...]
    s: int
    plant: dict = field(default_factory=dict, compare=False)  # {"J": ..., "I": ...} for dense cases

    def __post_init__(self):
        m = len(self.sets)
        if not 1 <= self.s <= m:
            raise InputError(f"s = {self.s} outside [1, {m}]")
        for j, S in enumerate(self.sets):
            if not S:
                raise InputError(f"set {j} is empty")
            if min(S) < 0 or max(S) >= self.universe:
                raise InputError(f"set {j} leaves the universe [0, {self.universe})")

    @property
    def m(self) -> int:
        return len(self.sets)

    def to_doc(self) -> dict:
        doc = {
            "kind": "min_s_union",
            "universe": self.universe,
            "sets": [sorted(S) for S in self.sets],
            "s": self.s,
        }
        if self.plant:
            doc["plant"] = {k: sorted(v) for k, v in self.plant.items()}
        return doc


def union_cost(msu: MinSUnionInstance, J) -> int:
    out: set = set()
    for j in J:
        out |= msu.sets[j]
    return len(out)


def incidence(msu: MinSUnionInstance) -> np.ndarray:
    """Element by set 0/1 matrix, with rows for elements that appear somewhere."""
    A = np.zeros((msu.universe, msu.m))
    for j, S in enumerate(msu.sets):
        A[list(S), j] = 1.0
    return A[A.any(axis=1)]


def reduce_to_clustering(msu: MinSUnionInstance, p: float, q: float, name: str = "") -> Instance:
    """Uniform metric on the sets, one group per covered element, k = m - s."""
    m = msu.m
    dist = 1.0 - np.eye(m)
    return make_instance(dist=dist, weights=incidence(msu), k=m - msu.s, p=p, q=q, name=name)


def closed_form_cost(msu: MinSUnionInstance, J, p: float, q: float) -> float:
    """(sum_i |{j in J : i in S_j}|^{q/p})^{1/q}: the cost of opening every set outside J."""
    counts: dict = {}
    for j in J:
        for e in msu.sets[j]:
            counts[e] = counts.get(e, 0) + 1
    return sum(c ** (q / p) for c in counts.values()) ** (1.0 / q)


def dense_sizes(m: int, eps: float, delta: float) -> dict:
    """Integral cardinalities used by :func:`gen_dense_case`."""
    universe = math.ceil(10 * m**eps * math.log(m))
    s = math.ceil(m**eps)
    draws = math.ceil(10 * math.log(m))
    return {"universe": universe, "s": s, "draws": draws, "I": min(universe, math.ceil((10 * s * math.log(m)) ** delta))}


def dense_upper_bound(m: int, eps: float, delta: float, p: float, q: float, integral: bool = True) -> float:
    """Upper bound on the planted solution's cost, valid for p >= q.

    With ``integral=False`` this is (10 m^eps ln m)^{(delta (p - q) + q) / (p q)}
    over real cardinalities.  By default the same Hoelder chain is evaluated
    at the ceilinged sizes the generator uses, |I|^{(p - q)/(pq)} (s draws)^{1/p},
    since rounding s and the draw count up can push the cost past the real form.
    """
    if not integral:
        return (10 * m**eps * math.log(m)) ** ((delta * (p - q) + q) / (p * q))
    z = dense_sizes(m, eps, delta)
    return z["I"] ** ((p - q) / (p * q)) * (z["s"] * z["draws"]) ** (1.0 / p)


def planted_bound(msu: MinSUnionInstance, p: float, q: float) -> float:
    """|I|^{(p - q)/(pq)} (sum_{j in J} |S_j|)^{1/p}: the Hoelder step evaluated on the plant."""
    J, I = msu.plant["J"], msu.plant["I"]
    return len(I) ** ((p - q) / (p * q)) * sum(len(msu.sets[j]) for j in J) ** (1.0 / p)


def _draw_sets(rng: np.random.Generator, count: int, pool: np.ndarray, draws: int) -> list[frozenset]:
    return [frozenset(int(e) for e in rng.choice(pool, size=draws, replace=True)) for _ in range(count)]


def gen_random_case(m: int, eps: float, rng: np.random.Generator | int) -> MinSUnionInstance:
    """Universe and s both ceil(m^eps); each set from ceil(10 ln m) draws with replacement."""
    if m < 3 or not 0 < eps <= 0.5:
        raise InputError("random case needs m >= 3 and 0 < eps <= 1/2")
    rng = np.random.default_rng(rng)
    universe = math.ceil(m**eps)
    draws = math.ceil(10 * math.log(m))
    sets = _draw_sets(rng, m, np.arange(universe), draws)
    return MinSUnionInstance(universe, tuple(sets), math.ceil(m**eps))


def gen_dense_case(m: int, eps: float, delta: float, rng: np.random.Generator | int) -> MinSUnionInstance:
    """Random noise over a universe of ceil(10 m^eps ln m) with s planted sets inside a small I."""
    if not 0 < eps < delta < 1:
        raise ParameterOrder(f"need 0 < eps < delta < 1, got eps={eps}, delta={delta}")
    if m < 3 or eps > 0.5:
        raise InputError("dense case needs m >= 3 and eps <= 1/2")
    rng = np.random.default_rng(rng)
    z = dense_sizes(m, eps, delta)
    universe, s, draws, size_I = z["universe"], z["s"], z["draws"], z["I"]
    J = np.sort(rng.choice(m, size=s, replace=False))
    I = np.sort(rng.choice(universe, size=size_I, replace=False))
    sets = _draw_sets(rng, m, np.arange(universe), draws)
    for j, S in zip(J, _draw_sets(rng, s, I, draws)):
        sets[j] = S
    plant = {"J": frozenset(int(j) for j in J), "I": frozenset(int(e) for e in I)}
    return MinSUnionInstance(universe, tuple(sets), s, plant)
