import itertools
import math
from types import SimpleNamespace

import numpy as np
import pytest

from fairclust.algorithms import (
    _lq_cost,
    baseline_norm_swap,
    certified_ratio,
    kcluster_lq_local_search,
    reweight_hat,
    solve,
    solve_pgeq_full,
    solve_pleq_full,
)
from fairclust.errors import TooFewPoints
from fairclust.instance import gencost
from fairclust.oracle import brute_force_opt

from conftest import line4


def fake_red(wprime, p, q):
    return SimpleNamespace(wprime=np.array(wprime, dtype=float), instance=SimpleNamespace(p=p, q=q))


def test_reweight_hat_examples():
    assert np.allclose(reweight_hat(fake_red([[1, 4], [9, 16]], 2.0, 1.0)), [4, 6])
    assert np.allclose(reweight_hat(fake_red([[2, 3]], 3.0, 1.0)), [2 ** (1 / 3), 3 ** (1 / 3)])
    assert np.allclose(reweight_hat(fake_red([[1, 2], [3, 4]], 2.0, 2.0)), [4, 6])


def test_certified_ratio_edges():
    assert certified_ratio(0.0, 0.0) == 1.0
    assert certified_ratio(1.0, 0.0) == math.inf
    assert certified_ratio(3.0, 2.0) == 1.5


def test_local_search_full_set_cost_zero():
    d = line4().dist
    assert kcluster_lq_local_search(d, [0, 1, 3], np.ones(3), 3, 2.0) == (0, 1, 3)


def test_local_search_uniform():
    m = 7
    d = 1 - np.eye(m)
    for k in range(1, m):
        C = kcluster_lq_local_search(d, range(m), np.ones(m), k, 2.0)
        assert _lq_cost(d, list(range(m)), np.ones(m), list(C), 2.0) == pytest.approx((m - k) ** 0.5)


def test_local_search_too_few_points():
    with pytest.raises(TooFewPoints):
        kcluster_lq_local_search(line4().dist, [0, 1], np.ones(2), 3, 1.0)


def test_local_search_near_optimal():
    rng = np.random.default_rng(17)
    for _ in range(20):
        m = int(rng.integers(4, 11))
        pts = rng.random((m, 2))
        d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        w = rng.random(m)
        k = int(rng.integers(1, m))
        r = float(rng.choice([1.0, 2.0, 3.0]))
        pts_all = list(range(m))
        best = min(_lq_cost(d, pts_all, w, list(C), r) for C in itertools.combinations(pts_all, k))
        got = _lq_cost(d, pts_all, w, list(kcluster_lq_local_search(d, pts_all, w, k, r)), r)
        assert got <= 10 * best + 1e-12


@pytest.mark.parametrize("pq", [(2.0, 1.0), (1.0, 2.0), (1.0, 1.0)])
def test_k_equals_m_cost_zero(pq):
    inst = line4(p=pq[0], q=pq[1], k=4)
    assert solve(inst).cost == 0


def test_line4_p3_q1():
    inst = line4(p=3.0, q=1.0)
    opt = brute_force_opt(inst, use_cache=False).optimum
    sol = solve_pgeq_full(inst)
    assert sol.cost <= 25 * 2 ** (1 / 3) * opt


def test_solutions_valid(corpus):
    for inst in corpus[::3]:
        for method in ("auto", "baseline"):
            sol = solve(inst, method)
            assert len(sol.centers) == inst.k == len(set(sol.centers))
            assert all(0 <= c < inst.m for c in sol.centers)
            assert sol.cost == pytest.approx(gencost(inst, sol.centers), rel=1e-12)
            assert sol.certified_ratio >= 1 - 1e-9


def test_baseline_bound(corpus, optima):
    for inst in corpus:
        sol = baseline_norm_swap(inst, lower=1.0)
        factor = 10 * inst.n ** abs(1 / inst.p - 1 / inst.q)
        assert sol.cost <= factor * optima[inst.name] + 1e-12


def test_baseline_single_group_matches_lp():
    inst = line4(p=2.0, q=3.0, weights=((1, 2, 1, 3),))
    lp = inst.with_params(q=2.0)
    assert baseline_norm_swap(inst, 1.0).centers == baseline_norm_swap(lp, 1.0).centers


def test_reweight_path_on_unit_surplus(rcorpus):
    for inst in rcorpus:
        sol = solve_pgeq_full(inst)
        assert sol.method == "reweight"
        assert len(sol.details["K"]) == inst.k + 1
        opt = brute_force_opt(inst, use_cache=False).optimum
        assert sol.cost <= 25 * opt


def test_pleq_pipeline_seed_determinism(corpus):
    inst = corpus[20]
    a, b = solve_pleq_full(inst, seed=4), solve_pleq_full(inst, seed=4)
    assert a == b


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(line4(), "nope")
