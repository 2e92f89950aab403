from fractions import Fraction as F
import random

import pytest

from coxflat.exactla import RatMatrix, determinant, rank_profile
from coxflat.groups import (GROUP_NAMES, UnknownGroup, apply_linear, basic_invariants,
                            build_basic_invariant, cartan_metric, check_invariance, group_spec,
                            invariant_at, reflect_poly, to_manifest)
from coxflat.polycore import poly_diff, poly_eval
from coxflat.saito import pairing_raw


@pytest.mark.parametrize("name,degrees", [
    ("E6", (2, 5, 6, 8, 9, 12)),
    ("E7", (2, 6, 8, 10, 12, 14, 18)),
    ("E8", (2, 8, 12, 14, 18, 20, 24, 30)),
    ("A2", (2, 3)),
    ("A3", (2, 3, 4)),
])
def test_catalog(name, degrees):
    g = group_spec(name)
    assert g.degrees == degrees
    assert g.h == degrees[-1]
    assert g.rank == g.ambient_dim - len(g.constraints) == len(degrees)


def test_unknown_group():
    with pytest.raises(UnknownGroup):
        group_spec("E9")


def test_form_counts():
    assert [len(f.forms) for f in group_spec("E6").form_families] == [12, 15]
    assert [len(f.forms) for f in group_spec("E7").form_families] == [56]
    assert [len(f.forms) for f in group_spec("E8").form_families] == [36, 84]


def test_e6_half_forms():
    g = group_spec("E6")
    S = [F(1, 6)] * 6
    a = tuple(S[k] - (k == 0) for k in range(6)) + (F(1, 2), F(-1, 2))
    assert a in g.form_families[0].forms


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_reflections_and_family_closure(name):
    g = group_spec(name)
    for R in g.chart_reflections:
        assert R.matmul(R) == RatMatrix.identity(g.rank)
        assert determinant(R) == -1
    assert g.family_closed()


def test_basic_invariants_small_cases():
    e7, e6 = group_spec("E7"), group_spec("E6")
    assert not build_basic_invariant(e7, 7)
    assert not build_basic_invariant(e6, 1)
    assert not build_basic_invariant(group_spec("E8"), 9)


def test_e8_w8_against_direct_summation():
    g = group_spec("E8")
    w8 = build_basic_invariant(g, 8)
    assert w8.is_homogeneous(8)
    pt = (F(1), F(-2), F(3, 2), F(0), F(5), F(-1, 3), F(2), F(7, 4))
    assert poly_eval(w8, pt) == invariant_at(g, 8, pt)


@pytest.mark.parametrize("name", ["E6", "E7", "A2", "A3"])
def test_basic_invariants_are_invariant(name):
    g = group_spec(name)
    degrees = g.degrees if name != "E7" else (2, 6, 8, 10)
    for d in degrees:
        p = build_basic_invariant(g, d)
        assert p.is_homogeneous(d)
        assert check_invariance(g, p)


def test_reflection_series_matches_substitution():
    g = group_spec("E6")
    R = g.chart_reflections[-1]
    y = g.chart_ring.var
    for p in (build_basic_invariant(g, 6), y(0) ** 4 * y(5) - y(2) * y(3), y(1) ** 7):
        assert reflect_poly(p, R) == apply_linear(p, R)


@pytest.mark.slow
def test_e7_high_degrees_invariant():
    g = group_spec("E7")
    for d in (12, 14, 18):
        assert check_invariance(g, build_basic_invariant(g, d))


def test_e8_low_degrees_invariant():
    g = group_spec("E8")
    assert check_invariance(g, build_basic_invariant(g, 2))
    assert check_invariance(g, build_basic_invariant(g, 8))


def test_non_invariants_are_rejected():
    g = group_spec("E6")
    y1 = g.chart_ring.var(0)
    assert not check_invariance(g, y1)
    assert not check_invariance(g, build_basic_invariant(g, 5) + y1 ** 5)


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_jacobian_full_rank(name):
    g = group_spec(name)
    rng = random.Random(1)
    pt = [F(rng.randint(-20, 20), rng.randint(1, 7)) for _ in range(g.rank)]
    from coxflat.saito import PointEvaluator
    _, grads = PointEvaluator(g).data(pt)
    assert rank_profile(grads)[0] == g.rank


@pytest.mark.parametrize("name", ["E6", "E7", "A3"])
def test_fast_gradients_agree_with_symbolic(name):
    g = group_spec(name)
    from coxflat.saito import PointEvaluator
    pt = [F(k + 1, 3) - 1 for k in range(g.rank)]
    vals, grads = PointEvaluator(g).data(pt)
    for a, d in enumerate(g.degrees[:4]):
        p = build_basic_invariant(g, d)
        assert vals[a] == poly_eval(p, pt)
        assert grads[a] == [poly_eval(poly_diff(p, j), pt) for j in range(g.rank)]


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_cartan_metric(name):
    g = group_spec(name)
    cm = cartan_metric(g)
    n = g.rank
    assert cm.G == cm.G.transpose()
    assert cm.G.matmul(cm.G_inv) == RatMatrix.identity(n)
    for k in range(1, n + 1):
        assert determinant(RatMatrix.from_rows([r[:k] for r in cm.G.to_rows()[:k]])) > 0
    # 1/2 y^T G y reproduces the normalized quadratic invariant
    q = build_basic_invariant(g, 2)
    y = [F(j + 2, j + 1) for j in range(n)]
    Gy = cm.G.matvec(y)
    assert F(1, 2) * sum(a * b for a, b in zip(y, Gy)) == poly_eval(q, y)


def test_unit_chart_quadratic():
    for name in ("E6", "E7", "E8"):
        q = build_basic_invariant(group_spec(name), 2)
        assert set(q.terms.values()) == {1}


def test_pairing_with_u2_in_e6():
    g = group_spec("E6")
    inv = basic_invariants(g)
    for a, k in enumerate(g.degrees):
        assert pairing_raw(g, 0, a, inv) == inv[a].scale(2 * k)


def test_manifest_is_plain_text():
    m = to_manifest(group_spec("E7"))
    assert m["degrees"] == "2,6,8,10,12,14,18"
    assert m["flat_top_scale"] == "2/1229"
