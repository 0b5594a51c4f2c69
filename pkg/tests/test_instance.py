import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairclust.errors import Asymmetric, EmptyCenterSet, FullSet, InputError, NegativeDistance, NonzeroDiagonal, TriangleViolation
from fairclust.instance import (
    ClusterFamily,
    cluster_bound_residuals,
    cluster_bound_rewritten,
    cost_p,
    cost_vector,
    dist_to_set,
    gencost,
    line_metric,
    make_instance,
    validate_metric,
    vol,
)
from fairclust.oracle import disjoint_families

from conftest import LINE, line4


def test_two_point_metric():
    assert validate_metric([[0, 1], [1, 0]]).m == 2


def test_triangle_violation_witness():
    d = [[0, 1, 10], [1, 0, 1], [10, 1, 0]]
    with pytest.raises(TriangleViolation) as e:
        validate_metric(d)
    assert e.value.witness == (0, 1, 2)


@pytest.mark.parametrize(
    "d,err",
    [
        ([[0, -1], [-1, 0]], NegativeDistance),
        ([[1, 1], [1, 0]], NonzeroDiagonal),
        ([[0, 1], [2, 0]], Asymmetric),
        ([[0, 1, 2]], InputError),
    ],
)
def test_metric_errors(d, err):
    with pytest.raises(err):
        validate_metric(d)


def test_line_metric_valid():
    assert line_metric(LINE).dist[0, 3] == 7


def test_dist_to_set():
    inst = line4()
    assert dist_to_set(inst, 1, [0, 2]) == 1
    assert dist_to_set(inst, 2, [0, 2]) == 0
    assert dist_to_set(inst, 3, [0, 2]) == 4


def test_cost_p_examples():
    inst = line4()
    assert cost_p(inst, [0, 2], 0) == pytest.approx(1.0, rel=1e-12)
    assert np.all(cost_vector(inst, range(4)) == 0)


def test_cost_p_indicator_group():
    inst = line4(p=3.0, weights=((0, 0, 0, 1),))
    assert cost_p(inst, [0, 2], 0) == pytest.approx(4.0, rel=1e-12)


def test_gencost_examples():
    inst = line4()
    # cost vector (1, 4) by hand
    assert np.allclose(cost_vector(inst, [0, 2]) ** 2, [1, 16])
    assert gencost(inst, [0, 2]) == pytest.approx(5.0, rel=1e-12)
    assert gencost(inst, range(4)) == 0


def test_gencost_single_group_ignores_q():
    a = line4(q=1.0, weights=((1, 2, 3, 4),))
    b = a.with_params(q=3.0)
    assert gencost(a, [1]) == pytest.approx(gencost(b, [1]), rel=1e-12)


def test_vol_examples():
    inst = line4()
    assert vol(inst, 0, [0, 1]) == pytest.approx(13.0, rel=1e-12)
    assert vol(inst, 1, [0, 1]) == 0
    assert vol(inst, 0, [1]) == pytest.approx(1.0)  # nearest other point at distance 1
    with pytest.raises(FullSet):
        vol(inst, 0, range(4))


def test_empty_centers_rejected():
    with pytest.raises(EmptyCenterSet):
        gencost(line4(), [])


@pytest.mark.parametrize("bad", [dict(k=0), dict(k=5), dict(p=0.5), dict(q=float("inf")), dict(weights=((0, 0, 0, 0),))])
def test_instance_validation(bad):
    kw = dict(p=2.0, q=1.0, k=2, weights=((1, 1, 0, 0),))
    kw.update(bad)
    with pytest.raises(InputError):
        line4(**kw)


def test_family_must_be_disjoint():
    with pytest.raises(InputError):
        ClusterFamily.from_sets([[0, 1], [1, 2]])


def test_empty_family_slack_is_cost():
    inst = line4(p=1.0, q=2.0)
    s1, s2 = cluster_bound_residuals(inst, [0, 2], ClusterFamily({}))
    power = cost_vector(inst, [0, 2]) ** inst.p
    assert np.allclose(s1, power)
    assert np.allclose(s2, power**2)


def test_covered_cells_contribute_nothing():
    inst = line4(p=1.0, q=2.0)
    a, b = cluster_bound_rewritten(inst, [0, 2], ClusterFamily.from_sets([[0, 1], [2, 3]]))
    assert np.all(a == 0) and np.all(b == 0)


def test_slacks_nonnegative_exhaustively():
    rng = np.random.default_rng(3)
    for pq in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)]:
        pts = rng.random((5, 2))
        d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        inst = make_instance(dist=d, weights=rng.random((2, 5)), k=2, p=pq[0], q=pq[1])
        for C in itertools.combinations(range(5), 2):
            for fam in disjoint_families(5):
                s1, s2 = cluster_bound_residuals(inst, C, fam)
                assert np.all(s1 >= -1e-12)
                if s2 is not None:
                    assert np.all(s2 >= -1e-12)


# -- properties ----------------------------------------------------------------

coords = st.lists(st.integers(0, 30), min_size=3, max_size=7, unique=True)


@st.composite
def instances(draw):
    xs = draw(coords)
    m = len(xs)
    n = draw(st.integers(1, 3))
    W = np.array(draw(st.lists(st.lists(st.integers(0, 5), min_size=m, max_size=m), min_size=n, max_size=n)), float)
    W[:, 0] += 1  # no all-zero group
    p = draw(st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    q = draw(st.sampled_from([1.0, 2.0, 3.0]))
    k = draw(st.integers(1, m - 1))
    return make_instance(coords=xs, weights=W, k=k, p=p, q=q)


@given(instances(), st.data())
def test_gencost_monotone_in_centers(inst, data):
    C = data.draw(st.lists(st.integers(0, inst.m - 1), min_size=1, max_size=inst.m, unique=True))
    extra = data.draw(st.integers(0, inst.m - 1))
    assert gencost(inst, set(C) | {extra}) <= gencost(inst, C) * (1 + 1e-12)


@given(instances(), st.floats(0.1, 10.0))
def test_gencost_scales_linearly(inst, lam):
    scaled = make_instance(dist=inst.dist * lam, weights=inst.weights, k=inst.k, p=inst.p, q=inst.q)
    assert gencost(scaled, [0]) == pytest.approx(lam * gencost(inst, [0]), rel=1e-9)


@given(instances())
def test_outer_norm_nesting(inst):
    # l_q norms decrease in q
    lo = inst.with_params(q=1.0)
    hi = inst.with_params(q=4.0)
    assert gencost(hi, [0]) <= gencost(lo, [0]) * (1 + 1e-12)
