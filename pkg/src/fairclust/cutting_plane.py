"""Outer-approximation engine for min sum_i z_i over the clustering polytope.

Each group ``i`` has a collection of convex functions ``f_t(x)`` and the
program is ``min sum_i z_i`` subject to ``z_i >= f_t(x)`` and ``(x, y)`` in
the clustering polytope (``y_l = x_ll``).  Nonlinear constraints enter the
linear master problem through supporting hyperplanes.  Separation points are
taken on the segment between the master solution and the best feasible point
found so far (in-out stabilisation), which keeps Kelley's method from
zig-zagging.

The master LP is solved with HiGHS through :func:`scipy.optimize.linprog`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, csr_matrix, vstack

from .errors import Infeasible, IterationLimit

log = logging.getLogger(__name__)

# oracle(x) -> (groups, values, grads): one entry per convex term
Oracle = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass
class Cut:
    group: int
    coef: np.ndarray  # over flattened x
    rhs: float  # coef @ x - z_group <= rhs


@dataclass
class CutResult:
    x: np.ndarray  # m x m
    z: np.ndarray  # exact term maxima at x
    lower: float  # lower bound on min sum z
    upper: float  # sum z at x
    iterations: int
    cuts: list[Cut] = field(default_factory=list)


def polytope(m: int, k: int, n: int):
    """Static rows of the clustering polytope over variables [x (m*m), z (n)]."""
    nv = m * m + n
    rows, cols, vals = [], [], []
    r = 0
    for j in range(m):
        for l in range(m):
            if l != j:
                rows += [r, r]
                cols += [j * m + l, l * m + l]
                vals += [1.0, -1.0]
                r += 1
    for j in range(m):
        rows.append(r)
        cols.append(j * m + j)
        vals.append(1.0)
    r += 1
    A_ub = coo_matrix((vals, (rows, cols)), shape=(r, nv)).tocsr()
    b_ub = np.zeros(r)
    b_ub[-1] = k
    er, ec = [], []
    for j in range(m):
        for l in range(m):
            er.append(j)
            ec.append(j * m + l)
    A_eq = coo_matrix((np.ones(len(er)), (er, ec)), shape=(m, nv)).tocsr()
    b_eq = np.ones(m)
    return A_ub, b_ub, A_eq, b_eq


def clean_assignment(x: np.ndarray) -> np.ndarray:
    """Clip LP round-off so entries lie in [0, 1]."""
    return np.clip(x, 0.0, 1.0) + 0.0  # also turns -0.0 into 0.0


def term_maxima(n: int, groups, values) -> np.ndarray:
    z = np.zeros(n)
    np.maximum.at(z, groups, np.maximum(values, 0.0))
    return z


def minimize_outer(
    m: int,
    k: int,
    n: int,
    q: float,
    oracle: Oracle,
    tol: float = 1e-6,
    max_iter: int = 5000,
    cuts: list[Cut] | None = None,
    x0: np.ndarray | None = None,
) -> CutResult:
    """Minimise ``sum_i max_t f_t(x)`` over the polytope by cutting planes.

    Stops once ``(upper)^{1/q}`` and ``(lower)^{1/q}`` agree to relative
    tolerance ``tol``.  ``cuts`` is extended in place so callers can reuse
    the accumulated hyperplanes on a tightened problem.
    """
    cuts = [] if cuts is None else cuts
    nx = m * m
    A_ub0, b_ub0, A_eq, b_eq = polytope(m, k, n)
    c = np.concatenate([np.zeros(nx), np.ones(n)])
    bounds = [(0.0, 1.0)] * nx + [(0.0, None)] * n

    best_x = None
    best_z = None
    upper = np.inf
    lower = 0.0

    def consider(x):
        nonlocal best_x, best_z, upper
        g, v, G = oracle(x)
        z = term_maxima(n, g, v)
        if z.sum() < upper:
            best_x, best_z, upper = x, z, float(z.sum())
        return g, v, G

    def add_cuts(x, g, v, G, zref=None):
        added = 0
        xf = x.ravel()
        for t in range(len(g)):
            if zref is not None and v[t] <= zref[g[t]] + 1e-12 * max(1.0, abs(v[t])):
                continue
            coef = G[t]
            cuts.append(Cut(int(g[t]), coef.copy(), float(coef @ xf - v[t])))
            added += 1
        return added

    if x0 is not None:
        consider(clean_assignment(x0))

    alpha = 0.5
    it = 0
    for it in range(1, max_iter + 1):
        if cuts:
            cc = np.array([cu.coef for cu in cuts])
            zz = np.zeros((len(cuts), n))
            zz[np.arange(len(cuts)), [cu.group for cu in cuts]] = -1.0
            A_cut = csr_matrix(np.hstack([cc, zz]))
            A_ub = vstack([A_ub0, A_cut]).tocsr()
            b_ub = np.concatenate([b_ub0, [cu.rhs for cu in cuts]])
        else:
            A_ub, b_ub = A_ub0, b_ub0
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status != 0:
            raise Infeasible(f"master LP failed: {res.message}")
        lower = max(lower, float(res.fun))
        x_lp = clean_assignment(res.x[:nx].reshape(m, m))
        z_lp = res.x[nx:]

        g, v, G = consider(x_lp)
        n_lp = add_cuts(x_lp, g, v, G, zref=z_lp)

        if _converged(lower, upper, q, tol):
            break
        if best_x is not None and best_x is not x_lp:
            x_sep = alpha * x_lp + (1 - alpha) * best_x
            before = upper
            g, v, G = consider(x_sep)
            add_cuts(x_sep, g, v, G, zref=z_lp)
            # no progress from the interior point: move it closer to the master solution
            if upper >= before:
                alpha = min(1.0, alpha * 1.5)
            if _converged(lower, upper, q, tol):
                break
        elif n_lp == 0:
            # master point is feasible, hence optimal
            break
    else:
        raise IterationLimit(f"no convergence in {max_iter} iterations (lower={lower}, upper={upper})")

    return CutResult(best_x, best_z, min(lower, upper), upper, it, cuts)


def _converged(lower: float, upper: float, q: float, tol: float) -> bool:
    if not np.isfinite(upper):
        return False
    ub = upper ** (1.0 / q)
    lb = max(lower, 0.0) ** (1.0 / q)
    return ub - lb <= tol * max(ub, 1e-12) or ub <= 1e-12
