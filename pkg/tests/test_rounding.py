import dataclasses

import numpy as np
import pytest

from fairclust.errors import NoSurplus
from fairclust.instance import vol
from fairclust.io import dumps
from fairclust.reduction import bipartition
from fairclust.rounding import (
    _finish_trace,
    claim41_bound,
    closing_probabilities,
    enumerate_closures,
    greedy_reopen,
    randomized_round,
    run_trials,
    select_kprime,
    trial_seeds,
)

from conftest import line4


@pytest.fixture(scope="module")
def setup(rcorpus, rrelaxed):
    out = []
    for inst in rcorpus:
        sol, red = rrelaxed[inst.name]
        out.append((inst, sol, red, select_kprime(red, bipartition(red))))
    return out


def test_rounding_corpus_has_surplus(setup):
    for inst, _, red, kp in setup:
        assert len(red.K) > inst.k and kp


def test_kprime_sum_bound(setup):
    for inst, _, red, kp in setup:
        assert sum(red.x_sigma(l) for l in kp) >= (len(red.K) - inst.k) / 4 - 1e-12


def test_uniform_partner_mass_selects_all_of_K1(setup):
    inst, _, red, kp = setup[0]
    xs = [red.x_sigma(l) for l in red.K]
    assert max(xs) - min(xs) < 1e-3  # equal up to solver tolerance
    assert kp == bipartition(red).K1


def test_no_surplus_raises(relaxed):
    sol, red = next(iter(relaxed.values()))
    if len(red.K) >= 2:
        with pytest.raises(NoSurplus):
            select_kprime(red, bipartition(red))


def test_probabilities_are_five_x(setup):
    for _, _, red, kp in setup:
        assert np.allclose(closing_probabilities(red, kp), [5 * red.x_sigma(l) for l in kp], rtol=1e-12)


def test_zero_probabilities_fall_back(setup):
    inst, _, red, kp = setup[0]
    flat = dataclasses.replace(red, xprime=np.eye(len(red.K)))
    a = randomized_round(flat, kp, seed=1)
    b = randomized_round(flat, kp, seed=2)
    assert a.fallback and a.L == b.L and len(a.L) == inst.k


def test_fallback_without_candidates(setup):
    inst, _, red, _ = setup[0]
    t = randomized_round(red, (), seed=0)
    assert t.fallback and len(t.L) == inst.k


def test_same_seed_same_trace(setup):
    _, _, red, kp = setup[1]
    assert dumps(randomized_round(red, kp, 9).to_doc()) == dumps(randomized_round(red, kp, 9).to_doc())
    assert trial_seeds(3, 5) == trial_seeds(3, 5)


def test_trace_has_k_centers(setup):
    for inst, _, red, kp in setup:
        for t in run_trials(red, kp, 0, 20):
            assert len(t.L) == inst.k and len(set(t.L)) == inst.k


def test_nothing_closed_bound_is_10B(setup):
    _, sol, red, kp = setup[0]
    t = _finish_trace(red, kp, (), None)
    assert claim41_bound(t, sol.B) == pytest.approx(10 * sol.B, rel=1e-15)


def test_single_closure_bound_second_implementation(setup):
    inst, sol, red, kp = setup[2]
    l = kp[0]
    t = _finish_trace(red, kp, (l,), None)
    # one group, so each norm collapses to Z^{1/p}
    Z = vol(inst, 0, red.V[l])
    s = red.sigma[l]
    Zp = red.wprime[0, red.pos[l]] * inst.dist[l, s] ** inst.p
    expect = min(30 * sol.B + 2 * Z ** (1 / inst.p), 10 * sol.B + Zp ** (1 / inst.p))
    assert claim41_bound(t, sol.B) == pytest.approx(expect, rel=1e-12)


def test_enumeration_beats_every_trial(setup):
    for _, _, red, kp in setup:
        best = enumerate_closures(red, kp)
        assert all(best.cost <= t.cost * (1 + 1e-12) for t in run_trials(red, kp, 0, 30))


def test_greedy_reopen_picks_best_first():
    inst = line4(p=1.0, q=1.0, k=2, weights=((1, 1, 1, 1),))
    assert greedy_reopen(inst, [0], 1) == (3,)
