from fractions import Fraction as F

import pytest

from coxflat import golden
from coxflat.flatsolve import (FlatSolveError, christoffel, eta_in_new_coords, flat_ansatz,
                               invert_triangular, jacobian_determinant, make_frame,
                               polymatrix_inverse, solve_flat, to_flat)
from coxflat.groups import group_spec
from coxflat.polycore import poly_substitute

SCALES = {
    "E6": ["1", "1", "1", "3/16", "1/7", "1"],
    "E7": ["1", "1", "1", "1/70", "1/1800", "1/4466", "2/1229"],
    "E8": ["1", "1", "1", "1", "5/42", "325/2091", "1625/15124", "96/61"],
}


def test_e6_ansatz_unknowns():
    system = flat_ansatz(group_spec("E6"))
    counts = {d: len(system.unknowns_of(a)) for a, d in enumerate((2, 5, 6, 8, 9, 12))}
    assert counts == {2: 0, 5: 0, 6: 1, 8: 2, 9: 1, 12: 5}


@pytest.mark.parametrize("name", ["E6", "E7", "E8"])
def test_frames_match_reference(run, name):
    fs = golden.load_fixtures(name)
    assert golden.compare_frame(fs, run(name).frame.coords) == []


@pytest.mark.parametrize("name", sorted(SCALES))
def test_derived_prefactors(run, name):
    assert [str(s) for s in run(name).frame.scale_factors] == SCALES[name]


@pytest.mark.parametrize("name,value", [("E6", 24), ("E7", 36), ("E8", 60), ("A2", 6), ("A3", 8)])
def test_eta_constant_antidiagonal(run, name, value):
    fr = run(name).frame
    n = fr.group.rank
    for a in range(n):
        for b in range(n):
            assert fr.eta_const[a, b] == (value if a + b == n - 1 else 0)


@pytest.mark.parametrize("name", ["E6", "E7", "A3"])
def test_pushforward_is_constant(run, name):
    r = run(name)
    etap = eta_in_new_coords(r.frame.coords, r.eta.entries)
    assert all(e.is_constant() for row in etap for e in row)


@pytest.mark.parametrize("name", ["E6", "E7", "E8"])
def test_jacobian_determinant_is_product_of_scales(run, name):
    fr = run(name).frame
    prod = F(1)
    for s in fr.scale_factors:
        prod *= s
    assert jacobian_determinant(fr) == prod


@pytest.mark.parametrize("name", ["E6", "E7", "A3"])
def test_inverse_change_of_variables(run, name):
    fr = run(name).frame
    images = fr.inverse_images()
    tring = fr.group.flat_ring
    for a, t in enumerate(fr.coords):
        assert poly_substitute(t, images, tring) == tring.var(a)
    assert to_flat(fr.coords[2], fr) == tring.var(2)


def test_identity_change_is_not_flat(run):
    r = run("E6")
    ring = r.g.generator_ring
    fr = make_frame(r.g, [ring.var(a) for a in range(6)], r.metric.__class__(
        r.g, [[ring.const(int(i + j == 5)) for j in range(6)] for i in range(6)], "eta"))
    assert fr.antidiagonal == 1
    with pytest.raises(FlatSolveError):
        make_frame(r.g, [ring.var(a) for a in range(6)], r.eta)


def test_top_scale_override(run):
    r = run("E6")
    fr = solve_flat(r.g, r.eta, top_scale=F(2))
    assert fr.scale_factors == [F(1), F(1), F(1), F(3, 8), F(2, 7), F(2)]
    assert fr.antidiagonal == 24


def test_self_dual_coordinate_needs_square(run):
    r = run("E7")
    with pytest.raises(FlatSolveError, match="self-dual"):
        solve_flat(r.g, r.eta, top_scale=F(1))


def test_polymatrix_inverse_and_christoffel(run):
    r = run("A3")
    ring = r.g.generator_ring
    inv = polymatrix_inverse(r.eta.entries, ring)
    for i in range(3):
        for j in range(3):
            acc = ring.zero()
            for k in range(3):
                acc = acc + r.eta[i, k] * inv[k][j]
            assert acc == ring.const(int(i == j))
    gamma = christoffel(r.eta.entries, ring)
    assert all(gamma[k][i][j] == gamma[k][j][i] for k in range(3) for i in range(3) for j in range(3))


def test_singular_constant_part_is_rejected():
    ring = group_spec("A2").generator_ring
    with pytest.raises(ArithmeticError):
        polymatrix_inverse([[ring.zero(), ring.zero()], [ring.zero(), ring.zero()]], ring)


def test_wrong_table_kind(run):
    r = run("A2")
    with pytest.raises(ValueError):
        solve_flat(r.g, r.metric)
