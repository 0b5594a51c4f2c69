"""Sparsifying reduction of a fractional solution to O(k) representative points.

Points are scanned in order of their fractional service cost
``C(j) = (sum_j' x_jj' d(j,j')^nu)^{1/nu}`` with ``nu = min(p, q)``; each
unassigned point opens a representative that absorbs every later point
within ``(2 / gamma^{1/nu}) C(j')``.  All ties are broken by lowest index.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateK
from .instance import ClusterFamily, Instance, gencost, gencost_arrays, vol_all
from .relax import FractionalSolution, Regime

DEFAULT_GAMMA = 0.2


@dataclass(frozen=True, eq=False)
class ReducedInstance:
    instance: Instance
    K: tuple[int, ...]  # ascending point indices
    wprime: np.ndarray  # n x |K|, column order follows K
    sigma: dict  # l -> nearest other representative (None if |K| == 1)
    U: dict  # l -> points absorbed by l
    V: dict  # l -> Voronoi cell of l
    xprime: np.ndarray  # |K| x |K|
    yprime: np.ndarray
    zprime: np.ndarray
    gamma: float
    nu: float
    C: np.ndarray  # fractional service cost of every original point
    B: float  # value of the source solution
    regime: Regime

    @cached_property
    def pos(self) -> dict:
        return {l: a for a, l in enumerate(self.K)}

    @cached_property
    def cell_vols(self) -> np.ndarray:
        """n x |K| matrix of vol_i(V_l); zero for a cell covering all of [m]."""
        inst = self.instance
        out = np.zeros((inst.n, len(self.K)))
        for a, l in enumerate(self.K):
            if len(self.V[l]) < inst.m:
                out[:, a] = vol_all(inst, self.V[l])
        out.setflags(write=False)
        return out

    @cached_property
    def sigma_dist(self) -> np.ndarray:
        """d(l, sigma(l)) per representative, zero when |K| == 1."""
        d = self.instance.dist
        return np.array([0.0 if self.sigma[l] is None else d[l, self.sigma[l]] for l in self.K])

    @property
    def radius_factor(self) -> float:
        return 2.0 / self.gamma ** (1.0 / self.nu)

    @property
    def dist_K(self) -> np.ndarray:
        return self.instance.dist[np.ix_(self.K, self.K)]

    @property
    def Bprime(self) -> float:
        return float(self.zprime.sum() ** (1.0 / self.instance.q))

    def x_sigma(self, l: int) -> float:
        """x'_{l sigma(l)}, the mass ``l`` sends to its partner."""
        a = self.pos[l]
        s = self.sigma[l]
        return 0.0 if s is None else float(self.xprime[a, self.pos[s]])

    def voronoi_family(self) -> ClusterFamily:
        return ClusterFamily(self.V)

    def reduced_gencost(self, L) -> float:
        """gencost in the reduced instance for centers L contained in K."""
        pos = self.pos
        idx = [pos[l] for l in L]
        inst = self.instance
        return gencost_arrays(self.dist_K, self.wprime, inst.p, inst.q, idx)

    def steiner_reduced_gencost(self, L) -> float:
        """Reduced-instance cost when arbitrary points of [m] act as centers."""
        inst = self.instance
        d = inst.dist[np.ix_(self.K, list(L))].min(axis=1)
        return float(np.sum((self.wprime @ d**inst.p) ** (inst.q / inst.p)) ** (1.0 / inst.q))


def cp_point_cost(inst: Instance, sol: FractionalSolution, j: int | None = None):
    """C(j) = (sum_j' x_jj' d(j,j')^nu)^{1/nu}; all points when ``j`` is None."""
    nu = inst.nu
    C = ((sol.x * inst.dist**nu).sum(axis=1)) ** (1.0 / nu)
    return C if j is None else float(C[j])


def _nearest(dist_row: np.ndarray, candidates) -> int:
    cand = np.asarray(candidates)
    return int(cand[np.argmin(dist_row[cand])])  # argmin returns the first, i.e. lowest index


def build_reduction(inst: Instance, sol: FractionalSolution, gamma: float = DEFAULT_GAMMA) -> ReducedInstance:
    if not 0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    m, d = inst.m, inst.dist
    C = cp_point_cost(inst, sol)
    factor = 2.0 / gamma ** (1.0 / inst.nu)
    order = sorted(range(m), key=lambda j: (C[j], j))
    owner = [-1] * m
    K = []
    for a, j in enumerate(order):
        if owner[j] >= 0:
            continue
        K.append(j)
        owner[j] = j
        for jp in order[a + 1 :]:
            if owner[jp] < 0 and d[j, jp] <= factor * C[jp]:
                owner[jp] = j
    K = tuple(sorted(K))
    U = {l: tuple(j for j in range(m) if owner[j] == l) for l in K}
    vor = [_nearest(d[j], K) for j in range(m)]
    V = {l: tuple(j for j in range(m) if vor[j] == l) for l in K}
    sigma = {}
    for l in K:
        others = [l2 for l2 in K if l2 != l]
        sigma[l] = _nearest(d[l], others) if others else None

    y = sol.y
    n = inst.n
    wprime = np.zeros((n, len(K)))
    for a, l in enumerate(K):
        wprime[:, a] = inst.weights[:, list(U[l])].sum(axis=1)
    yprime = np.array([min(1.0, float(y[list(V[l])].sum())) for l in K])
    xprime = np.zeros((len(K), len(K)))
    pos = {l: a for a, l in enumerate(K)}
    for a, l in enumerate(K):
        xprime[a, a] = yprime[a]
        if sigma[l] is not None:
            xprime[a, pos[sigma[l]]] = 1.0 - yprime[a]
    zprime = 2.0**inst.q * np.asarray(sol.z)
    for arr in (wprime, xprime, yprime, zprime, C):
        arr.setflags(write=False)
    return ReducedInstance(
        inst, K, wprime, sigma, U, V, xprime, yprime, zprime, gamma, inst.nu, C, sol.B, sol.regime
    )


def nearest_in_K(red: ReducedInstance, L) -> tuple[int, ...]:
    d = red.instance.dist
    return tuple(sorted({_nearest(d[j], red.K) for j in L}))


@dataclass(frozen=True)
class Bipartition:
    K1: tuple[int, ...]
    K2: tuple[int, ...]


def bipartition(red: ReducedInstance) -> Bipartition:
    """Two-colour the forest of (l, sigma(l)) edges; K1 gets the larger x' mass."""
    K = red.K
    if len(K) < 2:
        raise DegenerateK("bipartition needs |K| >= 2")
    adj = {l: set() for l in K}
    for l in K:
        s = red.sigma[l]
        adj[l].add(s)
        adj[s].add(l)
    depth = {}
    for root in K:
        if root in depth:
            continue
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if v not in depth:
                    depth[v] = depth[u] + 1
                    queue.append(v)
    odd = tuple(l for l in K if depth[l] % 2 == 1)
    even = tuple(l for l in K if depth[l] % 2 == 0)
    mass = lambda S: sum(red.x_sigma(l) for l in S)
    if mass(odd) >= mass(even):
        return Bipartition(odd, even)
    return Bipartition(even, odd)


# -- verification --------------------------------------------------------------


def _le(lhs: float, rhs: float, rtol: float, atol: float = 1e-12) -> bool:
    return lhs <= rhs + rtol * max(abs(lhs), abs(rhs)) + atol


@dataclass
class PropertyReport:
    items: dict = field(default_factory=dict)  # item -> {"pass": bool, "checked": int, "witness": ...}

    def record(self, item: str, ok: bool, witness=None):
        entry = self.items.setdefault(item, {"pass": True, "checked": 0, "witness": None})
        entry["checked"] += 1
        if not ok and entry["pass"]:
            entry["pass"] = False
            entry["witness"] = witness

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.items.values())

    def to_doc(self) -> dict:
        return {"passed": self.passed, "items": self.items}


def reduced_cost_rhs(red: ReducedInstance) -> np.ndarray:
    """Regime cost constraint of the reduced solution: (sum_l w'_i(l) C'(l)^p)^{q/p}."""
    inst = red.instance
    Cp = np.array(
        [
            0.0 if red.sigma[l] is None else inst.dist[l, red.sigma[l]] * red.x_sigma(l) ** (1.0 / red.nu)
            for l in red.K
        ]
    )
    return (red.wprime @ Cp**inst.p) ** (inst.q / inst.p)


def valid_lambdas(red: ReducedInstance):
    """Subsets Lambda of K with sigma(l) outside Lambda for every l in Lambda."""
    K = red.K
    for r in range(len(K) + 1):
        for lam in itertools.combinations(K, r):
            s = set(lam)
            if all(red.sigma[l] not in s for l in lam) and len(lam) < len(K):
                yield lam


def item5_rhs(red: ReducedInstance, lam) -> float:
    inst = red.instance
    tot = np.zeros(inst.n)
    for l in lam:
        tot += vol_all(inst, red.V[l])
    gp = red.gamma ** (-1.0 / red.nu)
    return 6 * gp * red.B + 2 * float(np.sum(tot ** (inst.q / inst.p)) ** (1.0 / inst.q))


def verify_properties(
    inst: Instance,
    red: ReducedInstance,
    sol: FractionalSolution,
    sampleL=(),
    tol: float = 1e-7,
    rtol: float = 1e-9,
    lambdas=None,
) -> PropertyReport:
    """Check the five reduction properties; failures are reported, not raised.

    ``tol`` covers quantities inheriting the solver's feasibility tolerance;
    ``rtol`` is used for the cost inequalities.  ``lambdas`` defaults to an
    exhaustive enumeration when |K| <= 10 and to none otherwise.
    """
    rep = PropertyReport()
    K, pos, m = red.K, red.pos, inst.m
    gp = red.gamma ** (-1.0 / red.nu)
    B = sol.B

    # structure
    Us = sorted(j for l in K for j in red.U[l])
    Vs = sorted(j for l in K for j in red.V[l])
    rep.record("structure", Us == list(range(m)) and Vs == list(range(m)), "U or V is not a partition")
    for l in K:
        rep.record("structure", l in red.U[l] and l in red.V[l], l)
        for j in red.U[l]:
            ok = red.C[l] <= red.C[j] and inst.dist[l, j] <= red.radius_factor * red.C[j]
            rep.record("structure", ok, (l, j))
    rep.record("size", len(K) <= inst.k / (1 - red.gamma) * (1 + tol), (len(K), inst.k / (1 - red.gamma)))

    # item 1
    rep.record("item1", _le(red.Bprime, 2 * B, rtol), (red.Bprime, 2 * B))
    rhs = reduced_cost_rhs(red)
    for i in range(inst.n):
        rep.record("item1", _le(rhs[i], red.zprime[i], rtol), (i, rhs[i], red.zprime[i]))
    xp = red.xprime
    rep.record("item1", np.allclose(xp.sum(axis=1), 1.0, atol=1e-12), "rows of x'")
    rep.record("item1", red.yprime.sum() <= inst.k + tol * max(1, inst.k), red.yprime.sum())
    for a, l in enumerate(K):
        s = red.sigma[l]
        if s is not None:
            rep.record("item1", xp[a, pos[s]] <= red.yprime[pos[s]] + tol, (l, s))

    # item 2
    for a, l in enumerate(K):
        s = red.sigma[l]
        row = xp[a].copy()
        ok = row[a] == red.yprime[a]
        if s is not None:
            ok = ok and row[pos[s]] == 1 - red.yprime[a]
            row[pos[s]] = 0
            others = [l2 for l2 in K if l2 != l]
            ok = ok and inst.dist[l, s] == inst.dist[l, others].min()
        row[a] = 0
        ok = ok and not row.any()
        rep.record("item2", bool(ok), l)
        rep.record("item2", red.x_sigma(l) <= red.gamma + tol, (l, red.x_sigma(l)))

    # item 3
    y = sol.y
    for a, l in enumerate(K):
        ok = red.yprime[a] == min(1.0, float(y[list(red.V[l])].sum()))
        for j in red.V[l]:
            ok = ok and inst.dist[j, l] == inst.dist[j, list(K)].min()
        rep.record("item3", bool(ok), l)

    # item 4
    for L in sampleL:
        L = tuple(L)
        Lp = nearest_in_K(red, L)
        for l in K:
            dl = inst.dist[l, list(L)].min()
            rep.record("item4", _le(inst.dist[l, list(Lp)].min(), 2 * dl, rtol), ("nearest", L, l))
        lhs, g = red.reduced_gencost(Lp), gencost(inst, L)
        rep.record("item4", _le(lhs, 2 * g + 4 * gp * B, rtol), ("forward", L, lhs, g))
        for S in {Lp, L} if set(L) <= set(K) else {Lp}:
            g, gr = gencost(inst, S), red.reduced_gencost(S)
            rep.record("item4", _le(g, gr + 2 * gp * B, rtol), ("backward", S, g, gr))

    # item 5
    if lambdas is None:
        lambdas = valid_lambdas(red) if len(K) <= 10 else ()
    for lam in lambdas:
        kept = [l for l in K if l not in lam]
        if not kept:
            continue
        lhs, r = gencost(inst, kept), item5_rhs(red, lam)
        rep.record("item5", _le(lhs, r, rtol), (lam, lhs, r))
    return rep


def observation_bound(red: ReducedInstance, bip: Bipartition, tol: float = 1e-7) -> dict:
    """Mass facts about the bipartition; see :func:`bipartition`."""
    total = sum(red.x_sigma(l) for l in red.K)
    k1 = sum(red.x_sigma(l) for l in bip.K1)
    k = red.instance.k
    return {
        "total": total,
        "K1": k1,
        "identity": math.isclose(total, len(red.K) - red.yprime.sum(), rel_tol=1e-9, abs_tol=1e-9),
        "half": k1 >= total / 2 - 1e-12,
        "surplus_half": k1 >= (len(red.K) - k) / 2 - tol * len(red.K),
    }
