"""Frobenius potential from the metric in flat coordinates, and its checks.

With eta antidiagonal and constant, the relation between g(t) and the
Hessian of F inverts entry by entry:

    F_{lm} = h / (d_a + d_b - 2) * eta_{la} * eta_{mb} * g^{ab}(t),

a, b being the antidiagonal duals of l, m.  Both g and eta enter with the
true (unscaled) Cartan form, so a table computed with metric scale sigma is
divided by sigma first.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

from .exactla import RatMatrix, inverse
from .flatsolve import FlatFrame, eta_in_new_coords
from .groups import GroupSpec, WeightSystem
from .polycore import Poly, poly_diff, poly_eval, poly_substitute
from .saito import MetricTable

F = Fraction


class IntegrabilityError(ArithmeticError):
    """The Hessian assembled from g(t) is not the Hessian of any polynomial."""


@dataclass
class Potential:
    group: GroupSpec
    F: Poly
    weights: WeightSystem
    unity_index: int
    _third: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def degree(self) -> int:
        return 2 * self.weights.coxeter_number + 2

    def third(self, a: int, b: int, c: int) -> Poly:
        key = tuple(sorted((a, b, c)))
        if key not in self._third:
            x, y, z = key
            self._third[key] = poly_diff(poly_diff(poly_diff(self.F, x), y), z)
        return self._third[key]

    def eta(self) -> RatMatrix:
        """eta_{ab} = d^3 F / dt_h dt_a dt_b (raises if not constant)."""
        n = self.weights.n
        rows = []
        for a in range(n):
            row = []
            for b in range(n):
                e = self.third(self.unity_index, a, b)
                if not e.is_constant():
                    raise ValueError(f"eta entry ({a},{b}) is not constant")
                row.append(e.constant_value())
            rows.append(row)
        return RatMatrix.from_rows(rows)


@dataclass
class StructureConstants:
    c: list[list[list[Poly]]]  # c[a][b][g] = c^g_{ab}


@dataclass
class Report:
    name: str
    passed: bool
    detail: str = ""
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


# g in flat coordinates ------------------------------------------------------


def g_in_flat(g: GroupSpec, frame: FlatFrame, gt: MetricTable) -> MetricTable:
    if gt.kind != "g":
        raise ValueError("g_in_flat needs a g table")
    n = g.rank
    images = frame.inverse_images()
    tring = g.flat_ring
    pushed = eta_in_new_coords(frame.coords, gt.entries)
    entries: list[list[Poly | None]] = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            entries[a][b] = entries[b][a] = poly_substitute(pushed[a][b], images, tring)
    return MetricTable(g, entries, "g_flat", gt.scale)


def _antidual(n: int, a: int) -> int:
    return n - 1 - a


def _check_antidiagonal(eta_const: RatMatrix) -> list[Fraction]:
    n = eta_const.rows
    diag = []
    for a in range(n):
        for b in range(n):
            v = eta_const[a, b]
            if b == _antidual(n, a):
                if not v:
                    raise ValueError("eta is singular on the antidiagonal")
            elif v:
                raise ValueError("eta is not antidiagonal")
        diag.append(eta_const[a, _antidual(n, a)])
    return diag


def hessian_from_g(gft: MetricTable, eta_const: RatMatrix) -> list[list[Poly]]:
    """Hessian of F from g(t); eta_const is eta^{ab} with the table's scale."""
    g = gft.group
    n, h, d = g.rank, g.h, g.degrees
    sigma = gft.scale
    # true contravariant eta and its covariant inverse, one entry per row
    cov = [sigma / c for c in _check_antidiagonal(eta_const)]
    H: list[list[Poly | None]] = [[None] * n for _ in range(n)]
    for l in range(n):
        for m in range(l, n):
            a, b = _antidual(n, l), _antidual(n, m)
            k = F(h, d[a] + d[b] - 2) * cov[l] * cov[m] / sigma
            H[l][m] = H[m][l] = gft.entries[a][b].scale(k)
    return H


def integrate_potential(hessian: Sequence[Sequence[Poly]], ws: WeightSystem,
                        group: GroupSpec | None = None) -> Potential:
    """Recover F from its Hessian.

    Each Hessian term c*t^q in slot (l, m) comes from exactly one ansatz
    monomial t^(q + e_l + e_m), so the linear system for the coefficients is
    diagonal.  Every slot votes for its monomials; disagreeing votes or a
    Hessian that the recovered F does not reproduce mean integrability fails.
    """
    n = ws.n
    target = 2 * ws.coxeter_number + 2
    ring = hessian[0][0].ring
    coeffs: dict[tuple[int, ...], Fraction] = {}
    for l in range(n):
        for m in range(l, n):
            if hessian[l][m] != hessian[m][l]:
                raise IntegrabilityError(f"Hessian not symmetric at ({l},{m})")
            for q, c in hessian[l][m].items():
                mono = list(q)
                mono[l] += 1
                mono[m] += 1
                mono = tuple(mono)
                if ring.wdeg(mono) != target:
                    raise IntegrabilityError(f"Hessian term in slot ({l},{m}) has the wrong degree")
                factor = mono[l] * (mono[m] - 1) if l == m else mono[l] * mono[m]
                v = c / factor
                if coeffs.setdefault(mono, v) != v:
                    raise IntegrabilityError(f"slots disagree on the coefficient of {mono}")
    Fp = Poly(ring, coeffs)
    for l in range(n):
        dl = poly_diff(Fp, l)
        for m in range(l, n):
            if poly_diff(dl, m) != hessian[l][m]:
                raise IntegrabilityError(f"Hessian slot ({l},{m}) is not reproduced")
    return Potential(group, Fp, ws, n - 1)


def potential_from_frame(g: GroupSpec, frame: FlatFrame, gt: MetricTable) -> Potential:
    gft = g_in_flat(g, frame, gt)
    # frame.eta_const is normalised with e = d/dt_h and carries the table's scale
    H = hessian_from_g(gft, frame.eta_const)
    return integrate_potential(H, WeightSystem(g.degrees), g)


def structure_constants(P: Potential) -> StructureConstants:
    n = P.weights.n
    eta_inv = inverse(P.eta())
    ring = P.F.ring
    c = [[[ring.zero() for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            for gm in range(n):
                acc = ring.zero()
                for dl in range(n):
                    if eta_inv[gm, dl]:
                        acc = acc + P.third(dl, a, b).scale(eta_inv[gm, dl])
                c[a][b][gm] = c[b][a][gm] = acc
    return StructureConstants(c)


# verification ---------------------------------------------------------------


def verify_homogeneity(P: Potential) -> Report:
    bad = [m for m in P.F.terms if P.F.ring.wdeg(m) != P.degree]
    return Report("homogeneity", not bad,
                  f"{len(bad)} terms off degree {P.degree}" if bad else f"all {len(P.F)} terms of degree {P.degree}")


def verify_eta_constant(P: Potential) -> Report:
    n = P.weights.n
    u = P.unity_index
    values = set()
    for a in range(n):
        for b in range(a, n):
            e = P.third(u, a, b)
            if not e.is_constant():
                return Report("eta-constant", False, f"entry ({a},{b}) depends on t")
            v = e.constant_value()
            if b == _antidual(n, a):
                if not v:
                    return Report("eta-constant", False, f"antidiagonal entry ({a},{b}) vanishes")
                values.add(v)
            elif v:
                return Report("eta-constant", False, f"off-antidiagonal entry ({a},{b}) = {v}")
    if len(values) != 1:
        return Report("eta-constant", False, f"antidiagonal entries differ: {sorted(values)}")
    (v,) = values
    return Report("eta-constant", True, f"antidiagonal {v}", {"antidiagonal": v})


def verify_euler(P: Potential) -> Report:
    d = P.weights.weights
    lhs = P.F.ring.zero()
    for a in range(P.weights.n):
        lhs = lhs + poly_diff(P.F, a) * P.F.ring.var(a).scale(d[a])
    ok = lhs == P.F.scale(P.degree)
    return Report("euler", ok, "" if ok else "sum d_a t_a dF/dt_a differs from (2h+2) F")


def wdvv_points(n: int, trials: int, seed: int) -> list[tuple[Fraction, ...]]:
    """Deterministic rational points with entries of mixed magnitude."""
    rng = random.Random(seed)
    pts = []
    for _ in range(trials):
        pts.append(tuple(F(rng.randint(-10 ** rng.randint(1, 6), 10 ** rng.randint(1, 6)),
                           rng.randint(1, 97)) for _ in range(n)))
    return pts


def _wdvv_residuals(third, eta_inv: RatMatrix, n: int, zero):
    """Yield (a, b, c, d, lhs - rhs) for the associativity equations."""
    pairs = list(combinations_with_replacement(range(n), 2))
    lam = [[(l, m, eta_inv[l, m]) for m in range(n) if eta_inv[l, m]] for l in range(n)]
    cache = {}

    def contract(a, b, c, d):
        key = (min(a, b), max(a, b), min(c, d), max(c, d))
        if key not in cache:
            acc = zero
            for row in lam:
                for l, m, w in row:
                    x = third(a, b, l)
                    if x:
                        y = third(m, c, d)
                        if y:
                            acc = acc + x * y * w
            cache[key] = acc
        return cache[key]

    for a, b in pairs:
        for c in range(n):
            for d in range(n):
                yield a, b, c, d, contract(a, b, c, d) - contract(c, b, a, d)


def verify_wdvv(P: Potential, trials: int = 50, seed: int = 0, symbolic: bool = False) -> Report:
    n = P.weights.n
    if n <= 2:
        return Report("wdvv", True, "vacuous in two variables")
    eta_inv = inverse(P.eta())
    if symbolic:
        for a, b, c, d, r in _wdvv_residuals(P.third, eta_inv, n, P.F.ring.zero()):
            if r:
                return Report("wdvv-symbolic", False, f"quadruple {(a, b, c, d)} fails",
                              {"quadruple": (a, b, c, d)})
        return Report("wdvv-symbolic", True, "all quadruples vanish identically")
    keys = list(combinations_with_replacement(range(n), 3))
    for k, pt in enumerate(wdvv_points(n, trials, seed)):
        vals = {key: poly_eval(P.third(*key), pt) for key in keys}
        third = lambda a, b, c: vals[tuple(sorted((a, b, c)))]
        for a, b, c, d, r in _wdvv_residuals(third, eta_inv, n, F(0)):
            if r:
                return Report("wdvv", False, f"quadruple {(a, b, c, d)} fails at point {k}",
                              {"quadruple": (a, b, c, d), "point": pt})
    return Report("wdvv", True, f"{trials} points, seed {seed}")


def verify_all(P: Potential, trials: int = 50, seed: int = 0, symbolic: bool = False) -> list[Report]:
    out = [verify_homogeneity(P), verify_eta_constant(P), verify_euler(P),
           verify_wdvv(P, trials, seed)]
    if symbolic:
        out.append(verify_wdvv(P, symbolic=True))
    return out


def eta_factor(P: Potential, frame: FlatFrame) -> Fraction:
    """The constant relating eta from F to the frame's eta: eta_F * eta_frame = factor * I."""
    prod = P.eta().matmul(frame.eta_const)
    n = prod.rows
    f = prod[0, 0]
    if any(prod[i, j] != (f if i == j else 0) for i in range(n) for j in range(n)):
        raise ValueError("eta from F is not proportional to the inverse frame eta")
    return f
