"""Instances, metric validation and the cost / volume evaluators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    Asymmetric,
    EmptyCenterSet,
    FullSet,
    InputError,
    NegativeDistance,
    NonzeroDiagonal,
    TriangleViolation,
)

TRIANGLE_RTOL = 1e-9
Centers = tuple[int, ...]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MetricSpace:
    dist: np.ndarray

    @property
    def m(self) -> int:
        return self.dist.shape[0]


def validate_metric(raw) -> MetricSpace:
    """Check a square distance matrix and wrap it.

    Raises the first violation found. Triangle violations carry the witness
    triple ``(a, b, c)`` with ``dist[a][c] > dist[a][b] + dist[b][c]``.
    """
    d = np.asarray(raw, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
        raise InputError(f"distance matrix must be square and non-empty, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise InputError("distance matrix has non-finite entries")
    m = d.shape[0]
    neg = np.argwhere(d < 0)
    if len(neg):
        raise NegativeDistance(*map(int, neg[0]))
    diag = np.flatnonzero(np.diag(d) != 0)
    if len(diag):
        raise NonzeroDiagonal(int(diag[0]))
    asym = np.argwhere(d != d.T)
    if len(asym):
        raise Asymmetric(*map(int, asym[0]))
    # via[a, b, c] = d[a, b] + d[b, c]
    for a in range(m):
        via = (d[a][:, None] + d) * (1 + TRIANGLE_RTOL)
        bad = np.argwhere(d[a][None, :] > via)
        if len(bad):
            b, c = map(int, bad[0])
            raise TriangleViolation(a, b, c)
    return MetricSpace(_frozen(d))


def line_metric(coords: Sequence[float]) -> MetricSpace:
    x = np.asarray(coords, dtype=float)
    return validate_metric(np.abs(x[:, None] - x[None, :]))


@dataclass(frozen=True, eq=False)
class Instance:
    """A (p,q)-fair clustering instance: metric, group weights (n x m), k, p, q."""

    metric: MetricSpace
    weights: np.ndarray
    k: int
    p: float
    q: float
    name: str = field(default="", compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[1] != self.metric.m:
            raise InputError(f"weights must be n x {self.metric.m}, got shape {w.shape}")
        if w.shape[0] == 0:
            raise InputError("at least one group is required")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and non-negative")
        zero = np.flatnonzero(~np.any(w > 0, axis=1))
        if len(zero):
            raise InputError(f"group {int(zero[0])} has all-zero weights")
        if int(self.k) != self.k or not 1 <= self.k <= self.metric.m:
            raise InputError(f"k must be an integer in [1, {self.metric.m}], got {self.k}")
        if not (np.isfinite(self.p) and np.isfinite(self.q)) or self.p < 1 or self.q < 1:
            raise InputError(f"p and q must be finite and >= 1, got p={self.p}, q={self.q}")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    @property
    def dist(self) -> np.ndarray:
        return self.metric.dist

    @property
    def m(self) -> int:
        return self.metric.m

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def nu(self) -> float:
        return min(self.p, self.q)

    def with_params(self, **changes) -> "Instance":
        kw = dict(metric=self.metric, weights=self.weights, k=self.k, p=self.p, q=self.q, name=self.name)
        kw.update(changes)
        return Instance(**kw)


def make_instance(dist=None, weights=None, k=1, p=1.0, q=1.0, coords=None, name="") -> Instance:
    if (dist is None) == (coords is None):
        raise InputError("give exactly one of dist or coords")
    metric = line_metric(coords) if coords is not None else validate_metric(dist)
    return Instance(metric, np.asarray(weights, dtype=float), k, p, q, name)


def as_centers(C: Iterable[int], m: int | None = None) -> Centers:
    c = tuple(int(j) for j in C)
    if not c:
        raise EmptyCenterSet("center set is empty")
    if len(set(c)) != len(c):
        raise InputError(f"duplicate centers in {c}")
    if m is not None and any(j < 0 or j >= m for j in c):
        raise InputError(f"center index out of range in {c}")
    return tuple(sorted(c))


@dataclass(frozen=True)
class ClusterFamily:
    """Disjoint sets ``V_l`` indexed by labels ``l`` (the index set Lambda)."""

    sets: Mapping[int, tuple[int, ...]]

    def __post_init__(self):
        norm = {int(l): tuple(sorted(int(j) for j in V)) for l, V in self.sets.items()}
        seen: set[int] = set()
        for V in norm.values():
            if seen.intersection(V) or len(set(V)) != len(V):
                raise InputError("family sets must be pairwise disjoint")
            seen.update(V)
        object.__setattr__(self, "sets", dict(sorted(norm.items())))

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self.sets)

    def key(self) -> tuple:
        return tuple((l, V) for l, V in self.sets.items())

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, ClusterFamily) and self.key() == other.key()

    def __len__(self):
        return len(self.sets)

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]]) -> "ClusterFamily":
        """Label each non-empty set by its smallest member."""
        out = {}
        for V in sets:
            V = tuple(sorted(V))
            if V:
                out[V[0]] = V
        return cls(out)


def nearest_distances(dist: np.ndarray, C: Sequence[int]) -> np.ndarray:
    if len(C) == 0:
        raise EmptyCenterSet("center set is empty")
    return dist[:, list(C)].min(axis=1)


def dist_to_set(inst: Instance, j: int, C: Iterable[int]) -> float:
    C = as_centers(C, inst.m)
    return float(inst.dist[j, list(C)].min())


def group_power_costs(dist, weights, p, C) -> np.ndarray:
    """Vector over groups of sum_j w_i(j) d(j, C)^p."""
    return weights @ nearest_distances(dist, C) ** p


def norm_of_costs(power_costs: np.ndarray, p: float, q: float) -> float:
    """(sum_i a_i^{q/p})^{1/q} for a_i = cost_p^p."""
    return float(np.sum(power_costs ** (q / p)) ** (1.0 / q))


def gencost_arrays(dist, weights, p, q, C) -> float:
    return norm_of_costs(group_power_costs(dist, weights, p, C), p, q)


def cost_p(inst: Instance, C: Iterable[int], i: int) -> float:
    C = as_centers(C, inst.m)
    if not 0 <= i < inst.n:
        raise IndexError(f"group index {i} out of range")
    return float(inst.weights[i] @ nearest_distances(inst.dist, C) ** inst.p) ** (1.0 / inst.p)


def cost_vector(inst: Instance, C: Iterable[int]) -> np.ndarray:
    C = as_centers(C, inst.m)
    return group_power_costs(inst.dist, inst.weights, inst.p, C) ** (1.0 / inst.p)


def gencost(inst: Instance, C: Iterable[int]) -> float:
    C = as_centers(C, inst.m)
    return gencost_arrays(inst.dist, inst.weights, inst.p, inst.q, C)


def vol_all(inst: Instance, U: Iterable[int]) -> np.ndarray:
    """Vector over groups of sum_{j in U} w_i(j) d(j, [m] minus U)^p."""
    U = sorted(set(int(j) for j in U))
    if len(U) >= inst.m:
        raise FullSet("vol is undefined for U = [m]")
    if not U:
        return np.zeros(inst.n)
    outside = np.setdiff1d(np.arange(inst.m), U)
    dout = inst.dist[np.ix_(U, outside)].min(axis=1)
    return inst.weights[:, U] @ dout**inst.p


def vol(inst: Instance, i: int, U: Iterable[int]) -> float:
    return float(vol_all(inst, U)[i])


def _family_terms(inst: Instance, C: Centers, fam: ClusterFamily):
    Cs = set(C)
    uncovered = []
    for V in fam.sets.values():
        if Cs.isdisjoint(V):
            uncovered.append(vol_all(inst, V))
    if not uncovered:
        return np.zeros((0, inst.n))
    return np.array(uncovered)


def cluster_bound_residuals(inst: Instance, C: Iterable[int], fam: ClusterFamily):
    """Slacks of the disjoint-cluster lower bounds, per group.

    Returns ``(s1, s2)`` where ``s1 = cost^p - sum vol`` over sets missed by C
    and ``s2 = cost^q - sum vol^{q/p}`` (``None`` unless p <= q).
    """
    C = as_centers(C, inst.m)
    power = group_power_costs(inst.dist, inst.weights, inst.p, C)
    vols = _family_terms(inst, C, fam)
    s1 = power - vols.sum(axis=0)
    s2 = None
    if inst.p <= inst.q:
        s2 = power ** (inst.q / inst.p) - (vols ** (inst.q / inst.p)).sum(axis=0)
    return s1, s2


def cluster_bound_rewritten(inst: Instance, C: Iterable[int], fam: ClusterFamily):
    """Right-hand sides of the max(0, 1 - |C cap V|) forms, per group.

    Returns ``(power_of_sum, sum_of_powers)`` both to be compared against
    ``cost_p^q``; they agree with :func:`cluster_bound_residuals` whenever
    the family is valid.
    """
    C = as_centers(C, inst.m)
    Cs = set(C)
    r = inst.q / inst.p
    a = np.zeros(inst.n)
    b = np.zeros(inst.n)
    for V in fam.sets.values():
        if len(V) >= inst.m:
            continue
        coef = max(0, 1 - len(Cs.intersection(V)))
        if coef:
            v = vol_all(inst, V)
            a += coef * v
            b += coef * v**r
    return a**r, b
