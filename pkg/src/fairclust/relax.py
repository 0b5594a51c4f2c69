"""Convex relaxations for both parameter regimes and the round-or-cut loop.

``p >= q``: the assignment polytope plus, per group,
``z_i >= (sum_j w_i(j) (sum_j' d(j,j')^q x_jj')^{p/q})^{q/p}``.

``p <= q``: the polytope plus the natural constraint
``z_i >= (sum_j w_i(j) sum_j' d(j,j')^p x_jj')^{q/p}`` and, for disjoint
families ``(V_l)``, the cluster constraints built from ``vol_i(V_l)``.  Those
families are exponentially many, so only the ones discovered by the
reduction-based separation oracle are ever added.

The objective ``B = (sum_i z_i)^{1/q}`` is minimised directly.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .cutting_plane import Cut, minimize_outer
from .errors import RegimeMismatch
from .instance import ClusterFamily, Instance, vol_all

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 5000
DEFAULT_MAX_ROUNDS = 50
_PERTURB = 1e-15


class Regime(str, enum.Enum):
    PGEQ = "PGeQ"
    PLEQ = "PLeQ"


class Kind(str, enum.Enum):
    POWER_OF_SUM = "PowerOfSum"
    SUM_OF_POWERS = "SumOfPowers"


def regime_of(inst: Instance) -> Regime:
    return Regime.PGEQ if inst.p >= inst.q else Regime.PLEQ


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    x: np.ndarray
    z: np.ndarray
    B: float
    regime: Regime
    lower: float = 0.0  # certified lower bound on the relaxation optimum
    iterations: int = 0

    @property
    def y(self) -> np.ndarray:
        return np.diag(self.x).copy()

    def polytope_violation(self, k: int) -> float:
        x = self.x
        y = np.diag(x)
        off = x - y[None, :]
        np.fill_diagonal(off, 0.0)
        return float(
            max(
                np.abs(x.sum(axis=1) - 1).max(),
                off.max(initial=0.0),
                y.sum() - k,
                -x.min(),
                x.max() - 1,
                0.0,
            )
        )


@dataclass(frozen=True)
class PoolEntry:
    group: int
    family: ClusterFamily
    kind: Kind

    def key(self):
        return (self.group, self.family.key(), self.kind.value)


@dataclass
class ConstraintPool:
    families: list[PoolEntry] = field(default_factory=list)
    cuts: list[Cut] = field(default_factory=list)
    _keys: set = field(default_factory=set, repr=False)

    def add(self, entry: PoolEntry) -> bool:
        if entry.key() in self._keys:
            return False
        self._keys.add(entry.key())
        self.families.append(entry)
        return True

    def __contains__(self, entry: PoolEntry) -> bool:
        return entry.key() in self._keys

    def __len__(self):
        return len(self.families)

    @classmethod
    def singletons(cls, inst: Instance) -> "ConstraintPool":
        """Every ({j}) family for every group with w_i(j) > 0, as SumOfPowers (the stronger kind on one cell)."""
        pool = cls()
        for j in range(inst.m):
            if inst.m == 1:
                break
            fam = ClusterFamily({j: (j,)})
            for i in range(inst.n):
                if inst.weights[i, j] > 0:
                    pool.add(PoolEntry(i, fam, Kind.SUM_OF_POWERS))
        return pool


# -- constraint right-hand sides ------------------------------------------------


def _pgeq_values(inst: Instance, x: np.ndarray):
    """Values and gradients of the p >= q cost function for every group."""
    m, n = inst.m, inst.n
    r = inst.p / inst.q
    Dq = inst.dist**inst.q
    u = (Dq * x).sum(axis=1)
    W = inst.weights
    S = W @ u**r
    vals = S ** (1.0 / r)
    grads = np.empty((n, m * m))
    for i in range(n):
        Si, ui = S[i], u
        if Si <= 0:
            ui = u + _PERTURB
            Si = W[i] @ ui**r
        coef = Si ** (1.0 / r - 1.0) * W[i] * ui ** (r - 1.0)
        grads[i] = (coef[:, None] * Dq).ravel()
    return vals, grads


def _natural_values(inst: Instance, x: np.ndarray):
    m, n = inst.m, inst.n
    s = inst.q / inst.p
    Dp = inst.dist**inst.p
    a_rows = (Dp * x).sum(axis=1)  # per point
    a = inst.weights @ a_rows
    vals = a**s
    grads = np.empty((n, m * m))
    for i in range(n):
        scale = s * a[i] ** (s - 1.0) if a[i] > 0 else (1.0 if s == 1.0 else 0.0)
        grads[i] = (scale * inst.weights[i][:, None] * Dp).ravel()
    return vals, grads


class _FamilyTerm:
    """Cached data for one (group, family, kind) constraint."""

    def __init__(self, inst: Instance, entry: PoolEntry):
        self.group = entry.group
        self.kind = entry.kind
        self.s = inst.q / inst.p
        members, coefs = [], []
        for V in entry.family.sets.values():
            if len(V) >= inst.m:
                continue
            v = vol_all(inst, V)[entry.group]
            c = v if entry.kind is Kind.POWER_OF_SUM else v**self.s
            members.append(np.array(V, dtype=int))
            coefs.append(c)
        self.members = members
        self.coefs = np.array(coefs)
        self.m = inst.m

    def inner(self, y: np.ndarray) -> np.ndarray:
        return np.array([max(0.0, 1.0 - y[V].sum()) for V in self.members])

    def value(self, y: np.ndarray) -> float:
        h = float(self.inner(y) @ self.coefs) if len(self.members) else 0.0
        return h**self.s if self.kind is Kind.POWER_OF_SUM else h

    def value_grad(self, x: np.ndarray):
        y = np.diag(x)
        gaps = self.inner(y) if len(self.members) else np.zeros(0)
        h = float(gaps @ self.coefs) if len(self.members) else 0.0
        grad = np.zeros(self.m * self.m)
        if self.kind is Kind.POWER_OF_SUM:
            val = h**self.s
            scale = self.s * h ** (self.s - 1.0) if h > 0 else (1.0 if self.s == 1.0 else 0.0)
        else:
            val, scale = h, 1.0
        for V, gap, c in zip(self.members, gaps, self.coefs):
            if gap > 0:
                grad[V * self.m + V] -= scale * c
        return val, grad


def _check(sol: FractionalSolution, regime: Regime):
    if sol.regime is not regime:
        raise RegimeMismatch(f"solution regime {sol.regime.value} where {regime.value} is required")


def eval_pgeq_cost(inst: Instance, sol: FractionalSolution, i: int) -> float:
    _check(sol, Regime.PGEQ)
    if inst.p < inst.q:
        raise RegimeMismatch("p >= q required")
    return float(_pgeq_values(inst, sol.x)[0][i])


def eval_natural_cost(inst: Instance, sol: FractionalSolution, i: int) -> float:
    _check(sol, Regime.PLEQ)
    return float(_natural_values(inst, sol.x)[0][i])


def eval_family_constraint(inst: Instance, sol: FractionalSolution, i: int, fam: ClusterFamily, kind: Kind) -> float:
    _check(sol, Regime.PLEQ)
    return _FamilyTerm(inst, PoolEntry(i, fam, Kind(kind))).value(sol.y)


# -- solvers -------------------------------------------------------------------


def _pgeq_oracle(inst: Instance):
    groups = np.arange(inst.n)

    def oracle(x):
        vals, grads = _pgeq_values(inst, x)
        return groups, vals, grads

    return oracle


def _pleq_oracle(inst: Instance, pool: ConstraintPool):
    terms = [_FamilyTerm(inst, e) for e in pool.families]
    base_groups = np.arange(inst.n)
    fam_groups = np.array([t.group for t in terms], dtype=int)

    def oracle(x):
        vals, grads = _natural_values(inst, x)
        if not terms:
            return base_groups, vals, grads
        fv = np.empty(len(terms))
        fg = np.empty((len(terms), inst.m * inst.m))
        for t, term in enumerate(terms):
            fv[t], fg[t] = term.value_grad(x)
        return (
            np.concatenate([base_groups, fam_groups]),
            np.concatenate([vals, fv]),
            np.vstack([grads, fg]),
        )

    return oracle


def _finish(inst, res, regime) -> FractionalSolution:
    x = res.x.copy()
    x.setflags(write=False)
    z = res.z.copy()
    z.setflags(write=False)
    B = float(z.sum() ** (1.0 / inst.q))
    lower = float(max(res.lower, 0.0) ** (1.0 / inst.q))
    return FractionalSolution(x, z, B, regime, min(lower, B), res.iterations)


def solve_pgeq(inst: Instance, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FractionalSolution:
    """Solve the p >= q relaxation; ``z`` is the exact constraint value at ``x``."""
    if inst.p < inst.q:
        raise RegimeMismatch("solve_pgeq needs p >= q")
    res = minimize_outer(inst.m, inst.k, inst.n, inst.q, _pgeq_oracle(inst), tol=tol, max_iter=max_iter)
    return _finish(inst, res, Regime.PGEQ)


def solve_pleq(
    inst: Instance,
    pool: ConstraintPool | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: np.ndarray | None = None,
) -> FractionalSolution:
    """Solve the p <= q relaxation restricted to the families in ``pool``.

    Cuts accumulated in ``pool.cuts`` stay valid when families are added, so
    later calls on the same pool start from the previous outer approximation.
    """
    if inst.p > inst.q:
        raise RegimeMismatch("solve_pleq needs p <= q")
    pool = ConstraintPool() if pool is None else pool
    res = minimize_outer(
        inst.m, inst.k, inst.n, inst.q, _pleq_oracle(inst, pool), tol=tol, max_iter=max_iter, cuts=pool.cuts, x0=x0
    )
    return _finish(inst, res, Regime.PLEQ)


def natural_solution(inst: Instance, x: np.ndarray) -> FractionalSolution:
    """Wrap a polytope point as a p <= q solution with z at the natural cost constraint."""
    if inst.p > inst.q:
        raise RegimeMismatch("natural_solution needs p <= q")
    x = np.array(x, dtype=float)
    z, _ = _natural_values(inst, x)
    x.setflags(write=False)
    z.setflags(write=False)
    return FractionalSolution(x, z, float(z.sum() ** (1.0 / inst.q)), Regime.PLEQ)


def solve_relaxation(inst: Instance, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    if regime_of(inst) is Regime.PGEQ:
        return solve_pgeq(inst, tol, max_iter)
    return round_or_cut(inst, tol=tol).sol


# -- round or cut --------------------------------------------------------------


def separation_oracle(
    inst: Instance, sol: FractionalSolution, voronoi: ClusterFamily, tol: float = DEFAULT_TOL
) -> list[PoolEntry]:
    """Cluster constraints violated on the reduction's Voronoi cells.

    Only cells with ``sum_{j in V_l} y_j < 1`` can contribute, so the family
    is restricted to those before checking both kinds for every group.
    """
    _check(sol, Regime.PLEQ)
    y = sol.y
    active = {l: V for l, V in voronoi.sets.items() if y[list(V)].sum() < 1 and len(V) < inst.m}
    if not active:
        return []
    fam = ClusterFamily(active)
    out = []
    for i in range(inst.n):
        for kind in (Kind.POWER_OF_SUM, Kind.SUM_OF_POWERS):
            if len(fam) == 1 and kind is Kind.POWER_OF_SUM:
                continue  # dominated by SumOfPowers on a single cell
            rhs = _FamilyTerm(inst, PoolEntry(i, fam, kind)).value(y)
            if rhs - sol.z[i] > tol * max(1.0, sol.z[i]):
                out.append(PoolEntry(i, fam, kind))
    return out


@dataclass
class RoundOrCutResult:
    sol: FractionalSolution
    reduced: object  # reduction.ReducedInstance
    pool: ConstraintPool
    history: list[float]
    rounds: int
    converged: bool


def round_or_cut(
    inst: Instance,
    tol: float = DEFAULT_TOL,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    gamma: float = 0.2,
    pool: ConstraintPool | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: FractionalSolution | None = None,
) -> RoundOrCutResult:
    """Alternate relaxation solves, the reduction and separation until no cut is found.

    ``history`` records B after every round.  If ``max_rounds`` is exhausted
    the last solution is returned with ``converged=False``.  A feasible
    ``initial`` solution replaces the first solve.
    """
    from .reduction import build_reduction

    pool = ConstraintPool.singletons(inst) if pool is None else pool
    history = []
    sol = red = None
    for rnd in range(1, max_rounds + 1):
        if rnd == 1 and initial is not None:
            _check(initial, Regime.PLEQ)
            sol = initial
        else:
            sol = solve_pleq(inst, pool, tol=tol, max_iter=max_iter, x0=None if sol is None else sol.x)
        history.append(sol.B)
        red = build_reduction(inst, sol, gamma)
        violated = separation_oracle(inst, sol, red.voronoi_family(), tol)
        added = sum(pool.add(e) for e in violated)
        log.debug("round %d: B=%.6g, %d violated, %d new", rnd, sol.B, len(violated), added)
        if added == 0:
            return RoundOrCutResult(sol, red, pool, history, rnd, True)
    return RoundOrCutResult(sol, red, pool, history, max_rounds, False)
