from fractions import Fraction as F

import pytest

from coxflat import golden
from coxflat.groups import build_basic_invariant, group_spec
from coxflat.polycore import enumerate_weighted_monomials
from coxflat.saito import (SURPLUS, InterpolationError, PointEvaluator, check_grading, eta_table,
                           make_grid, metric_table, pairing_in_invariants, pairing_raw, standard_grid,
                           rewrite_in_invariants, rewrite_values)


@pytest.mark.parametrize("n,count", [(6, 84), (7, 330), (8, 1287), (3, 4)])
def test_standard_grid_sizes(n, count):
    grid = standard_grid(n)
    assert len(grid) == count
    assert all(list(p) == sorted(p) for p in grid)
    assert len(set(grid)) == count


def test_grid_provenance_and_surplus():
    g = group_spec("E6")
    basis = enumerate_weighted_monomials(g.degrees, 12)
    grid = make_grid(g, len(basis), basis)
    assert len(grid.points) == len(basis) + SURPLUS
    assert set(grid.provenance) <= {"paper-grid", "random-extension"}


def test_small_basis_in_degree_eight():
    # u2^4, u2*u6, u8
    assert len(enumerate_weighted_monomials((2, 5, 6, 8, 9, 12), 8)) == 3


def test_e6_metric_matches_reference(run):
    r = run("E6")
    fs = golden.load_fixtures("E6")
    assert golden.compare_table(fs, "metric", r.metric.entries) == []
    assert golden.compare_table(fs, "eta", r.eta.entries) == []
    assert len(fs.metric) == 21 and len(fs.eta) == 9


def test_e6_top_entry_size(run):
    r = run("E6")
    assert len(r.metric[5, 5]) == 22


@pytest.mark.parametrize("name", ["A2", "A3", "E6", "E7", "E8"])
def test_tables_graded_and_symmetric(run, name):
    r = run(name)
    assert r.metric.is_symmetric()
    assert check_grading(r.metric) == []
    assert check_grading(r.eta) == []


@pytest.mark.parametrize("name", ["E6", "E7", "E8"])
def test_euler_row(run, name):
    r = run(name)
    ring = r.g.generator_ring
    for k, d in enumerate(r.g.degrees):
        assert r.metric[0, k] == ring.var(k).scale(2 * d)


def test_e8_top_entry_degree(run):
    r = run("E8")
    top = r.metric[7, 7]
    assert top.is_homogeneous(58)
    assert r.eta[7, 7].is_homogeneous(28)


def test_eta_is_derivative_in_top_generator(run):
    r = run("E6")
    assert r.eta[0, 5] == r.g.generator_ring.const(24)
    assert eta_table(r.metric).entries == r.eta.entries


def test_symbolic_pairing_agrees_with_pointwise():
    g = group_spec("E6")
    ev = PointEvaluator(g)
    for a, b in [(0, 3), (1, 1), (1, 2), (2, 3)]:
        raw = pairing_raw(g, a, b)
        d = g.degrees[a] + g.degrees[b] - 2
        assert raw.is_homogeneous(d)
        assert rewrite_in_invariants(g, raw, d) == pairing_in_invariants(g, a, b, ev)


def test_pointwise_gradient_matches_symbolic():
    g = group_spec("E6")
    ev = PointEvaluator(g)
    pt = (F(1), F(-2), F(3, 4), F(5), F(0), F(-1, 3))
    raw = pairing_raw(g, 1, 2)
    from coxflat.polycore import poly_eval
    assert poly_eval(raw, pt) == ev.pairing(pt, 1, 2)


def test_exact_and_modular_solvers_agree():
    g = group_spec("E6")
    ev = PointEvaluator(g)
    for a, b in [(1, 4), (3, 3), (2, 5)]:
        assert (pairing_in_invariants(g, a, b, ev, solver="exact")
                == pairing_in_invariants(g, a, b, ev, solver="modular"))


def test_result_independent_of_seed():
    g = group_spec("E6")
    ev = PointEvaluator(g)
    assert pairing_in_invariants(g, 4, 4, ev, seed=0) == pairing_in_invariants(g, 4, 4, ev, seed=11)


def test_worker_processes_give_identical_tables():
    g = group_spec("A3")
    assert metric_table(g, threads=2).entries == metric_table(g).entries


def test_metric_scale_is_linear():
    g = group_spec("A3")
    one = metric_table(g, scale=F(1))
    two = metric_table(g, scale=F(2))
    assert all(two[i, j] == one[i, j].scale(2) for i in range(3) for j in range(3))


def test_non_invariant_values_are_rejected():
    g = group_spec("E6")
    with pytest.raises(InterpolationError):
        rewrite_values(g, 8, lambda pt: F(pt[0]) ** 8)


def test_rewrite_recovers_basic_invariant():
    g = group_spec("E6")
    u8 = build_basic_invariant(g, 8)
    assert rewrite_in_invariants(g, u8, 8) == g.generator_ring.var(3)
    with pytest.raises(ValueError):
        rewrite_in_invariants(g, u8, 9)


def test_empty_basis_degree():
    g = group_spec("E6")
    assert not rewrite_values(g, 1, lambda pt: F(0))
    with pytest.raises(InterpolationError):
        rewrite_values(g, 1, lambda pt: F(1))
