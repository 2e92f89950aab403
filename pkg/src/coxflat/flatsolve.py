"""Saito flat coordinates on the orbit space.

A coordinate t_a = p_a + (lower-generator corrections) is flat for eta when
its eta-Hessian vanishes:

    d_i d_j t - Gamma^k_ij d_k t = 0      for all i, j,

which is linear in the unknown correction coefficients.  det(eta) is a
nonzero constant, so the covariant metric and the Christoffel symbols are
polynomial and everything stays in the generator ring.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import exactla
from .exactla import RatMatrix
from .groups import GroupSpec
from .polycore import Poly, enumerate_weighted_monomials, poly_diff, poly_substitute
from .saito import MetricTable

F = Fraction
PolyMatrix = list  # list[list[Poly]]


class FlatSolveError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Unknown:
    coordinate: int  # index into the degree list
    monomial: tuple[int, ...]


@dataclass
class AnsatzSystem:
    group: GroupSpec
    unknowns: list[Unknown]
    leading: list[tuple[int, ...]]  # leading monomial of each coordinate
    equations: list[tuple[int, ...]] = field(default_factory=list)  # (i, j) Hessian slots

    def unknowns_of(self, a: int) -> list[Unknown]:
        return [u for u in self.unknowns if u.coordinate == a]

    def candidate(self, a: int, values: dict[Unknown, Fraction] | None = None) -> Poly:
        ring = self.group.generator_ring
        t = ring.monomial(self.leading[a])
        for u in self.unknowns_of(a):
            if values is not None and u in values:
                t = t + ring.monomial(u.monomial, values[u])
        return t


@dataclass
class FlatFrame:
    group: GroupSpec
    coords: list[Poly]  # t_a in generator variables
    jacobian: list[list[Poly]]  # d t_a / d p_b
    eta_const: RatMatrix  # eta^{ab} in flat coordinates, with e = d/dt_h
    scale_factors: list[Fraction]
    antidiagonal: Fraction

    def inverse_images(self) -> list[Poly]:
        """p_a as polynomials in the flat variables."""
        return invert_triangular(self.group, self.coords)


# matrix helpers -------------------------------------------------------------


def _matmul(A: PolyMatrix, B: PolyMatrix, ring) -> PolyMatrix:
    n, m, k = len(A), len(B[0]), len(B)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = ring.zero()
            for s in range(k):
                if A[i][s] and B[s][j]:
                    acc = acc + A[i][s] * B[s][j]
            row.append(acc)
        out.append(row)
    return out


def polymatrix_inverse(M: PolyMatrix, ring) -> PolyMatrix:
    """Inverse of a graded polynomial matrix with invertible constant part.

    M = C + N with C constant; C^{-1} N is nilpotent for graded metrics, so
    the Neumann series terminates.
    """
    n = len(M)
    C = RatMatrix.from_rows([[e.homogeneous_part(0).constant_value() if e.homogeneous_part(0)
                              else F(0) for e in row] for row in M])
    Ci = exactla.inverse(C)
    Cip = [[ring.const(Ci[i, j]) for j in range(n)] for i in range(n)]
    Nm = [[M[i][j] - ring.const(C[i, j]) for j in range(n)] for i in range(n)]
    X = _matmul(Cip, Nm, ring)
    negX = [[-e for e in row] for row in X]
    term = Cip
    total = Cip
    for _ in range(n):
        term = _matmul(negX, term, ring)
        if all(not e for row in term for e in row):
            break
        total = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(total, term)]
    else:
        raise FlatSolveError("constant part does not make the metric unipotent")
    check = _matmul(M, total, ring)
    for i in range(n):
        for j in range(n):
            if check[i][j] != ring.const(int(i == j)):
                raise FlatSolveError("metric inverse check failed")
    return total


def christoffel(eta: PolyMatrix, ring) -> list[list[list[Poly]]]:
    """Gamma^k_ij of the contravariant metric eta (index order [k][i][j])."""
    n = len(eta)
    cov = polymatrix_inverse(eta, ring)
    d = [[[poly_diff(cov[a][b], s) for s in range(n)] for b in range(n)] for a in range(n)]
    lower = [[[None] * n for _ in range(n)] for _ in range(n)]  # Gamma_{s,ij}
    for s in range(n):
        for i in range(n):
            for j in range(i, n):
                v = (d[s][j][i] + d[s][i][j] - d[i][j][s]).scale(F(1, 2))
                lower[s][i][j] = lower[s][j][i] = v
    gamma = [[[ring.zero()] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = ring.zero()
                for s in range(n):
                    if eta[k][s] and lower[s][i][j]:
                        acc = acc + eta[k][s] * lower[s][i][j]
                gamma[k][i][j] = gamma[k][j][i] = acc
    return gamma


def flat_hessian(f: Poly, gamma) -> list[Poly]:
    """Upper-triangular entries of the covariant Hessian of f."""
    n = f.ring.nvars
    df = [poly_diff(f, i) for i in range(n)]
    out = []
    for i in range(n):
        for j in range(i, n):
            v = poly_diff(df[i], j)
            for k in range(n):
                if gamma[k][i][j] and df[k]:
                    v = v - gamma[k][i][j] * df[k]
            out.append(v)
    return out


# ansatz and solving -------------------------------------------------------


def flat_ansatz(g: GroupSpec) -> AnsatzSystem:
    """t_a = p_a + sum k_i * (other generator monomials of weighted degree d_a)."""
    n = g.rank
    leading = [tuple(int(i == a) for i in range(n)) for a in range(n)]
    unknowns = []
    for a, d in enumerate(g.degrees):
        for mono in enumerate_weighted_monomials(g.degrees, d):
            if mono != leading[a]:
                unknowns.append(Unknown(a, mono))
    eqs = [(i, j) for i in range(n) for j in range(i, n)]
    return AnsatzSystem(g, unknowns, leading, eqs)


def eta_in_new_coords(coords: Sequence[Poly], eta: PolyMatrix) -> PolyMatrix:
    """eta'^{ab} = sum dt_a/dp_l * eta^{lm} * dt_b/dp_m, in generator variables."""
    ring = coords[0].ring
    n = len(coords)
    J = [[poly_diff(t, l) for l in range(n)] for t in coords]
    JT = [[J[j][i] for j in range(n)] for i in range(n)]
    return _matmul(_matmul(J, eta, ring), JT, ring)


def _solve_coordinate(system: AnsatzSystem, a: int, gamma) -> Poly:
    g = system.group
    ring = g.generator_ring
    lead = ring.monomial(system.leading[a])
    unknowns = system.unknowns_of(a)
    base = flat_hessian(lead, gamma)
    if not unknowns:
        if any(base):
            raise FlatSolveError(f"generator of degree {g.degrees[a]} is not flat")
        return lead
    cols = [flat_hessian(ring.monomial(u.monomial), gamma) for u in unknowns]
    keys = sorted({(slot, m) for slot, h in enumerate(base) for m in h.terms}
                  | {(slot, m) for c in cols for slot, h in enumerate(c) for m in h.terms})
    A = [[c[slot].coeff(m) for c in cols] for slot, m in keys]
    b = [-base[slot].coeff(m) for slot, m in keys]
    rep = exactla.solve_exact(A, b)
    if rep.status != exactla.UNIQUE:
        raise FlatSolveError(f"degree {g.degrees[a]}: flatness system is {rep.status}")
    return system.candidate(a, dict(zip(unknowns, rep.solution)))


def _antidual(g: GroupSpec, a: int) -> int:
    return g.rank - 1 - a


def solve_flat(g: GroupSpec, eta: MetricTable, top_scale: Fraction | None = None) -> FlatFrame:
    """Flat coordinates, rescaled so every antidiagonal entry of eta' is equal.

    The lower-degree member of each antidiagonal pair keeps a unit leading
    coefficient and t_2 = p_2.  ``top_scale`` is the leading coefficient of t_h
    (default: the group's catalog value); a self-dual middle coordinate needs
    it chosen so that its scale factor is rational.
    """
    if eta.kind != "eta":
        raise ValueError("solve_flat needs an eta table")
    ring = g.generator_ring
    n = g.rank
    system = flat_ansatz(g)
    gamma = christoffel(eta.entries, ring)
    raw = [_solve_coordinate(system, a, gamma) for a in range(n)]
    etap = eta_in_new_coords(raw, eta.entries)
    c = []
    for a in range(n):
        for b in range(n):
            e = etap[a][b]
            if b == _antidual(g, a):
                if not e.is_constant() or not e:
                    raise FlatSolveError(f"antidiagonal entry ({a},{b}) is not a nonzero constant")
            elif e:
                raise FlatSolveError(f"off-antidiagonal entry ({a},{b}) does not vanish")
        c.append(etap[a][_antidual(g, a)].constant_value())
    s_top = g.flat_top_scale if top_scale is None else F(top_scale)
    # with e = d/dt_h the (2, h) entry is fixed; every pair is matched to it
    target = c[0]
    scales = [F(0)] * n
    scales[0] = F(1)
    scales[n - 1] = s_top
    for a in range(1, n - 1):
        b = _antidual(g, a)
        if a < b:
            scales[a] = F(1)
            scales[b] = target * s_top / c[a]
        elif a == b:
            sq = target * s_top / c[a]
            r = _rational_sqrt(sq)
            if r is None:
                raise FlatSolveError(
                    f"self-dual coordinate needs sqrt({sq}); choose a different top scale")
            scales[a] = r
    coords = [t.scale(s) for t, s in zip(raw, scales)]
    return make_frame(g, coords, eta)


def make_frame(g: GroupSpec, coords: Sequence[Poly], eta: MetricTable) -> FlatFrame:
    n = g.rank
    coords = list(coords)
    J = [[poly_diff(t, l) for l in range(n)] for t in coords]
    etap = eta_in_new_coords(coords, eta.entries)
    s_top = coords[-1].coeff(tuple(int(i == n - 1) for i in range(n)))
    const = RatMatrix.from_rows([[e.constant_value() / s_top if e.is_constant() else _nonconst(e)
                                  for e in row] for row in etap])
    scales = [t.coeff(tuple(int(i == a) for i in range(n))) for a, t in enumerate(coords)]
    return FlatFrame(g, coords, J, const, scales, const[0, n - 1])


def _nonconst(e):
    raise FlatSolveError(f"eta in the new coordinates is not constant: {e}")


def _rational_sqrt(q: Fraction) -> Fraction | None:
    from math import isqrt
    if q <= 0:
        return None
    a, b = isqrt(q.numerator), isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return F(a, b)
    return None


def invert_triangular(g: GroupSpec, coords: Sequence[Poly]) -> list[Poly]:
    """Express each generator p_a through the flat variables.

    t_a = s_a p_a + R_a(p_lower), so p_a = (t_a - R_a(p(t))) / s_a, solved in
    ascending degree.
    """
    n = g.rank
    tring = g.flat_ring
    images: list[Poly | None] = [None] * n
    for a in range(n):
        lead = tuple(int(i == a) for i in range(n))
        s = coords[a].coeff(lead)
        if not s:
            raise FlatSolveError(f"coordinate {a} has no leading generator term")
        rest = coords[a] - coords[a].ring.monomial(lead, s)
        for m in rest.terms:
            if any(e and images[i] is None for i, e in enumerate(m)):
                raise FlatSolveError("change of generators is not triangular")
        # substitute only lower generators; unused slots get zero
        imgs = [images[i] if images[i] is not None else tring.zero() for i in range(n)]
        r = poly_substitute(rest, imgs, tring)
        images[a] = (tring.var(a) - r).scale(1 / s)
    return images


def to_flat(p: Poly, frame: FlatFrame) -> Poly:
    return poly_substitute(p, frame.inverse_images(), frame.group.flat_ring)


def jacobian_determinant(frame: FlatFrame) -> Fraction:
    """det(dt/dp); graded triangularity makes it the product of leading scales."""
    n = frame.group.rank
    const = []
    for a in range(n):
        row = []
        for b in range(n):
            e = frame.jacobian[a][b]
            if frame.group.degrees[b] > frame.group.degrees[a] and e:
                raise FlatSolveError("Jacobian is not triangular")
            row.append(e.constant_value() if a == b else F(0))
        const.append(row)
    det = F(1)
    for a in range(n):
        det *= const[a][a]
    return det
