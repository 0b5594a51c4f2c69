import math

import numpy as np
import pytest

from fairclust.errors import InputError, TooLarge
from fairclust.instance import make_instance
from fairclust.oracle import (
    brute_force_alt,
    brute_force_opt,
    check_claim23,
    check_claim41,
    disjoint_families,
    exhaustive_claim_check,
    monte_carlo,
)
from fairclust.reduction import valid_lambdas

from conftest import line4

BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]


def test_k_equals_m():
    res = brute_force_opt(line4(k=4), use_cache=False)
    assert res.optimum == 0 and res.argmin == (0, 1, 2, 3)


def test_uniform_singleton_groups():
    m = 6
    for p, q in [(1.0, 1.0), (2.0, 3.0), (3.0, 1.0)]:
        inst = make_instance(dist=1 - np.eye(m), weights=np.eye(m), k=m - 1, p=p, q=q)
        assert brute_force_opt(inst, use_cache=False).optimum == pytest.approx(1.0, rel=1e-15)


def test_line4_enumeration():
    inst = line4(p=2.0, q=1.0)
    res = brute_force_opt(inst, use_cache=False)
    assert res.enumerated == 6
    # by hand: centers at coords 1 and 7 leave group costs 1 and 2
    assert res.optimum == pytest.approx(3.0, rel=1e-12) and res.argmin == (1, 3)
    assert brute_force_alt(inst).optimum == res.optimum


def test_orders_agree_on_corpus(corpus):
    for inst in corpus:
        a, b = brute_force_opt(inst, use_cache=False), brute_force_alt(inst)
        assert a.optimum == pytest.approx(b.optimum, rel=1e-12, abs=1e-15)
        assert a.enumerated == b.enumerated == math.comb(inst.m, inst.k)


def test_too_large():
    inst = make_instance(dist=1 - np.eye(30), weights=np.ones((1, 30)), k=15)
    with pytest.raises(TooLarge):
        brute_force_opt(inst)


def test_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("FAIRCLUST_CACHE", str(tmp_path))
    inst = line4(p=1.0, q=2.0)
    first = brute_force_opt(inst)
    assert len(list(tmp_path.glob("brute-*.json"))) == 1
    assert brute_force_opt(inst) == first


def test_family_counts():
    for m in range(1, 6):
        assert sum(1 for _ in disjoint_families(m)) == BELL[m + 1] - 1
    with pytest.raises(TooLarge):
        list(disjoint_families(8))


def test_claim23_small():
    for pq in [(1.0, 2.0), (2.0, 1.0)]:
        assert check_claim23(line4(p=pq[0], q=pq[1])).passed


def test_claim41_vacuous_without_surplus():
    rep = check_claim41(line4(p=2.0, q=1.0), trials=10)
    assert rep.passed and rep.notes["vacuous"] == "no surplus"


def test_claim41_on_surplus(rcorpus, rrelaxed):
    inst = rcorpus[0]
    sol, red = rrelaxed[inst.name]
    rep = check_claim41(inst, trials=100, red=red, sol=sol)
    assert rep.passed and rep.checked == 100


def test_item5_skips_sigma_pairs(corpus, relaxed):
    seen = 0
    for inst in corpus:
        sol, red = relaxed[inst.name]
        if len(red.K) < 2:
            continue
        for lam in valid_lambdas(red):
            assert all(red.sigma[l] not in lam for l in lam)
        rep = exhaustive_claim_check(inst, "item5", red=red, sol=sol)
        assert rep.passed and rep.skipped > 0  # sigma is mutual for some pair
        seen += 1
    assert seen


def test_unknown_claim():
    with pytest.raises(InputError):
        exhaustive_claim_check(line4(), "claim99")


def test_monte_carlo_constant():
    est = monte_carlo(lambda g: 3.0, 100)
    assert est.mean == 3.0 and est.half_width == 0


def test_monte_carlo_bernoulli():
    est = monte_carlo(lambda g: float(g.random() < 0.5), 10_000, seed=1)
    assert abs(est.mean - 0.5) < 0.02
    assert est.half_width == pytest.approx(2.5758 * 0.005, rel=0.01)


def test_monte_carlo_seeded():
    f = lambda g: g.normal()
    assert monte_carlo(f, 50, seed=3) == monte_carlo(f, 50, seed=3)
    with pytest.raises(InputError):
        monte_carlo(f, 10)
