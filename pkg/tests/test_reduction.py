import math

import numpy as np
import pytest

from fairclust.errors import DegenerateK
from fairclust.instance import gencost, make_instance
from fairclust.reduction import (
    bipartition,
    build_reduction,
    cp_point_cost,
    nearest_in_K,
    observation_bound,
    verify_properties,
)
from fairclust.relax import FractionalSolution, Regime, natural_solution, solve_pgeq

from conftest import line4


def frac(x, z=(0.0,), regime=Regime.PGEQ):
    x = np.array(x, dtype=float)
    z = np.array(z, dtype=float)
    return FractionalSolution(x, z, float(z.sum()), regime)


def test_cp_point_cost_examples():
    inst = make_instance(dist=[[0, 2], [2, 0]], weights=[[1, 1]], k=1, p=2.0, q=2.0)
    sol = frac([[0.5, 0.5], [0.0, 1.0]])
    assert cp_point_cost(inst, sol, 0) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert cp_point_cost(inst, sol, 1) == 0
    assert cp_point_cost(inst, frac([[0, 1], [0, 1]]), 0) == pytest.approx(2.0)


def test_integral_solution_keeps_open_centers():
    inst = line4(p=1.0, q=2.0)
    x = np.zeros((4, 4))
    for j, c in enumerate([0, 0, 2, 2]):
        x[j, c] = 1
    sol = natural_solution(inst, x)
    red = build_reduction(inst, sol)
    assert red.K == (0, 2)
    assert np.array_equal(red.xprime, np.eye(2))
    assert np.allclose(red.zprime, 4.0 * sol.z)


def test_uniform_no_absorption():
    m, c = 6, 0.05
    inst = make_instance(dist=1 - np.eye(m), weights=np.ones((1, m)), k=m - 1, p=1.0, q=1.0)
    x = np.eye(m) * (1 - c)
    for j in range(m):
        x[j, (j + 1) % m] = c
    red = build_reduction(inst, frac(x))
    # radius 10 * 0.05 = 0.5 < 1
    assert red.K == tuple(range(m))


def test_line4_size():
    inst = line4(p=2.0, q=1.0)
    red = build_reduction(inst, solve_pgeq(inst))
    assert len(red.K) <= 2


def test_gamma_range():
    inst = line4()
    with pytest.raises(ValueError):
        build_reduction(inst, solve_pgeq(inst), gamma=0.5)


def test_nearest_in_K_identity_on_subsets(relaxed):
    for sol, red in relaxed.values():
        L = red.K[: max(1, len(red.K) - 1)]
        assert nearest_in_K(red, L) == tuple(sorted(L))


def test_nearest_in_K_distance(corpus, relaxed):
    rng = np.random.default_rng(5)
    for inst in corpus:
        _, red = relaxed[inst.name]
        d = inst.dist
        for _ in range(10):
            L = rng.choice(inst.m, size=inst.k, replace=False)
            Lp = nearest_in_K(red, L)
            for l in red.K:
                assert d[l, list(Lp)].min() <= 2 * d[l, list(L)].min() * (1 + 1e-12) + 1e-12


def test_corpus_properties(corpus, relaxed):
    for inst in corpus:
        sol, red = relaxed[inst.name]
        rep = verify_properties(inst, red, sol, lambdas=())
        for item in ("structure", "size", "item1", "item2", "item3"):
            assert rep.items[item]["pass"], (inst.name, item, rep.items[item]["witness"])


def test_L_equals_K_bound(corpus, relaxed):
    for inst in corpus:
        sol, red = relaxed[inst.name]
        if len(red.K) < inst.m:
            # second inequality of item 4 at L = K
            bound = 2 * red.gamma ** (-1 / red.nu) * sol.B
            assert gencost(inst, red.K) <= bound * (1 + 1e-9) + 1e-12


def test_bipartition_two_points():
    inst = make_instance(dist=1 - np.eye(2), weights=[[1, 1]], k=1, p=1.0, q=1.0)
    red = build_reduction(inst, frac([[0.95, 0.05], [0.0, 1.0]]))
    assert red.K == (0, 1)
    bip = bipartition(red)
    assert bip.K1 == (0,) and bip.K2 == (1,)


def test_bipartition_degenerate():
    inst = make_instance(dist=1 - np.eye(2), weights=[[1, 1]], k=1, p=1.0, q=1.0)
    red = build_reduction(inst, frac([[0.5, 0.5], [0.0, 1.0]]))
    if len(red.K) == 1:
        with pytest.raises(DegenerateK):
            bipartition(red)


def test_bipartition_invariants(relaxed, rrelaxed):
    for sol, red in list(relaxed.values()) + list(rrelaxed.values()):
        if len(red.K) < 2:
            continue
        bip = bipartition(red)
        assert sorted(bip.K1 + bip.K2) == list(red.K)
        side = {l: 1 for l in bip.K1} | {l: 2 for l in bip.K2}
        for l in red.K:
            assert side[l] != side[red.sigma[l]]
        obs = observation_bound(red, bip)
        assert obs["identity"] and obs["half"]
        if len(red.K) > sol_k(red):
            assert obs["surplus_half"]


def sol_k(red):
    return red.instance.k
