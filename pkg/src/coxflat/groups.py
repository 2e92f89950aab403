"""Catalog of reflection groups with Mehta-style basic invariants.

Each group acts on a subspace V of an ambient R^N cut out by linear
constraints.  V is parametrized by a chart: a subset of the ambient
coordinates is kept and the remaining ones are solved for.  Basic invariants
are power sums over a reflection-stable family of linear forms, written in the
chart variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Sequence

from .exactla import RatMatrix, determinant, inverse, rank_profile
from .polycore import Poly, Ring, lcm_denominator

F = Fraction


class UnknownGroup(KeyError):
    pass


class DegenerateMetric(ValueError):
    pass


@dataclass(frozen=True)
class WeightSystem:
    weights: tuple[int, ...]

    def __post_init__(self):
        w = self.weights
        if list(w) != sorted(w) or not w or w[0] != 2:
            raise ValueError(f"weights must be ascending and start at 2: {w}")

    @property
    def coxeter_number(self) -> int:
        return self.weights[-1]

    @property
    def n(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class FormFamily:
    name: str
    forms: tuple[tuple[Fraction, ...], ...]  # ambient coefficient vectors
    coeff: Fraction = F(1)
    up_to_sign: bool = False  # closure holds only up to sign (even powers)


@dataclass(frozen=True)
class GroupSpec:
    name: str
    ambient_dim: int
    constraints: tuple[tuple[Fraction, ...], ...]
    chart_vars: tuple[int, ...]  # ambient indices kept as chart coordinates
    reflection_generators: tuple[tuple[Fraction, ...], ...]
    form_families: tuple[FormFamily, ...]
    weights: WeightSystem
    quad_normalizer: Fraction
    ambient_names: tuple[str, ...] = field(default=())
    only_even: bool = False
    # leading coefficient of the top flat coordinate; equal antidiagonal
    # entries of eta leave exactly this one scale free
    flat_top_scale: Fraction = F(1)

    @property
    def rank(self) -> int:
        return len(self.chart_vars)

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.weights.weights

    @property
    def h(self) -> int:
        return self.weights.coxeter_number

    @cached_property
    def chart_ring(self) -> Ring:
        return Ring(tuple(self.ambient_names[i] for i in self.chart_vars))

    @cached_property
    def generator_ring(self) -> Ring:
        return Ring(tuple(f"{self.letter}{d}" for d in self.degrees), self.degrees)

    @cached_property
    def flat_ring(self) -> Ring:
        return Ring(tuple(f"t{d}" for d in self.degrees), self.degrees)

    @property
    def letter(self) -> str:
        return {"E6": "u", "E7": "v", "E8": "w"}.get(self.name, "p")

    @cached_property
    def embedding(self) -> RatMatrix:
        """Ambient x = E y for chart coordinates y (ambient_dim x rank)."""
        N, n = self.ambient_dim, self.rank
        free = [i for i in range(N) if i not in self.chart_vars]
        # solve constraints for the eliminated coordinates
        C_free = RatMatrix.from_rows([[c[i] for i in free] for c in self.constraints])
        C_chart = RatMatrix.from_rows([[c[i] for i in self.chart_vars] for c in self.constraints])
        if len(free) != len(self.constraints):
            raise ValueError("chart must eliminate one coordinate per constraint")
        sol = inverse(C_free).matmul(C_chart)  # x_free = -sol y
        rows = [[F(0)] * n for _ in range(N)]
        for k, i in enumerate(self.chart_vars):
            rows[i][k] = F(1)
        for k, i in enumerate(free):
            rows[i] = [-sol[k, j] for j in range(n)]
        return RatMatrix.from_rows(rows)

    def embed(self, y: Sequence) -> list[Fraction]:
        return self.embedding.matvec([F(v) for v in y])

    def chart_form(self, a: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Coefficients of an ambient linear form pulled back to the chart."""
        E = self.embedding
        return tuple(sum((a[i] * E[i, j] for i in range(self.ambient_dim)), F(0))
                     for j in range(self.rank))

    @cached_property
    def chart_families(self) -> tuple[tuple[Fraction, tuple[tuple[Fraction, ...], ...]], ...]:
        return tuple((fam.coeff, tuple(self.chart_form(a) for a in fam.forms))
                     for fam in self.form_families)

    @cached_property
    def form_scale(self) -> int:
        """Common denominator L making every chart form integral."""
        return lcm_denominator(c for _, forms in self.chart_families for a in forms for c in a)

    @cached_property
    def integer_forms(self) -> tuple[tuple[Fraction, tuple[tuple[int, ...], ...]], ...]:
        L = self.form_scale
        return tuple((coeff, tuple(tuple(int(c * L) for c in a) for a in forms))
                     for coeff, forms in self.chart_families)

    def projected_normal(self, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Orthogonal projection of an ambient vector onto V."""
        v = [F(x) for x in v]
        cons = [list(c) for c in self.constraints]
        if not cons:
            return tuple(v)
        gram = RatMatrix.from_rows([[sum((a * b for a, b in zip(ci, cj)), F(0)) for cj in cons]
                                    for ci in cons])
        rhs = [sum((a * b for a, b in zip(ci, v)), F(0)) for ci in cons]
        coef = inverse(gram).matvec(rhs)
        return tuple(v[i] - sum((coef[k] * cons[k][i] for k in range(len(cons))), F(0))
                     for i in range(len(v)))

    @cached_property
    def chart_reflections(self) -> tuple[RatMatrix, ...]:
        """Generating reflections as n x n matrices acting on chart coordinates."""
        out = []
        E = self.embedding
        for v0 in self.reflection_generators:
            v = self.projected_normal(v0)
            vv = sum((x * x for x in v), F(0))
            N = self.ambient_dim
            r = [[F(int(i == j)) - 2 * v[i] * v[j] / vv for j in range(N)] for i in range(N)]
            R = RatMatrix.from_rows(r)
            RE = R.matmul(E)
            M = RatMatrix.from_rows([list(RE.row(i)) for i in self.chart_vars])
            if M.matmul(M) != RatMatrix.identity(self.rank):
                raise ArithmeticError(f"{self.name}: chart reflection is not an involution")
            # r must map V into V: the image of the chart must satisfy the constraints
            for c in self.constraints:
                for j in range(self.rank):
                    if sum((c[i] * RE[i, j] for i in range(N)), F(0)) != 0:
                        raise ArithmeticError(f"{self.name}: reflection leaves V")
            out.append(M)
        return tuple(out)

    def family_closed(self) -> bool:
        """Every generating reflection permutes the forms (families pooled by weight)."""
        pools: dict[tuple, list] = {}
        for fam, (coeff, forms) in zip(self.form_families, self.chart_families):
            pools.setdefault((coeff, fam.up_to_sign), []).extend(forms)
        for (_, up_to_sign), forms in pools.items():
            norm = _sign_normal if up_to_sign else (lambda a: a)
            ref = sorted(norm(a) for a in forms)
            for R in self.chart_reflections:
                # (a . R y) has coefficient vector R^T a
                images = sorted(
                    norm(tuple(sum((a[i] * R[i, j] for i in range(self.rank)), F(0))
                               for j in range(self.rank)))
                    for a in forms)
                if images != ref:
                    return False
        return True


def _sign_normal(a):
    for c in a:
        if c:
            return a if c > 0 else tuple(-x for x in a)
    return a


def _unit(N, i):
    v = [F(0)] * N
    v[i] = F(1)
    return v


def _e6() -> GroupSpec:
    N = 8
    S = [F(1)] * 6 + [F(0), F(0)]
    fam_a = []
    for s in (1, -1):
        for i in range(6):
            a = [F(1, 6) * S[k] for k in range(N)]
            a[i] -= 1
            a[6] += F(s, 2)
            a[7] -= F(s, 2)
            fam_a.append(tuple(a))
    fam_b = []
    for i, j in combinations(range(6), 2):
        a = [-F(1, 3) * S[k] for k in range(N)]
        a[i] += 1
        a[j] += 1
        fam_b.append(tuple(a))
    refl = [tuple(F(x) for x in (_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)))
            for i in range(5)]
    refl.append(tuple(F(x) for x in (1, 1, 1, -1, -1, -1, 1, -1)))
    return GroupSpec(
        name="E6", ambient_dim=N,
        constraints=(tuple(S), tuple(F(x) for x in (0, 0, 0, 0, 0, 0, 1, 1))),
        chart_vars=(0, 1, 2, 3, 4, 6),
        reflection_generators=tuple(refl),
        form_families=(FormFamily("half", tuple(fam_a)), FormFamily("pair", tuple(fam_b))),
        weights=WeightSystem((2, 5, 6, 8, 9, 12)),
        quad_normalizer=F(1, 12),
        ambient_names=tuple(f"x{i}" for i in range(1, N + 1)),
    )


def _e7() -> GroupSpec:
    N = 8
    S = [F(1)] * N
    fam = []
    for i, j in combinations(range(N), 2):
        for s in (1, -1):
            a = [-F(1, 4)] * N
            a[i] += s
            a[j] += s
            fam.append(tuple(a))
    refl = [tuple(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(6)]
    refl.append(tuple(F(x) for x in (1, 1, 1, 1, -1, -1, -1, -1)))
    return GroupSpec(
        name="E7", ambient_dim=N,
        constraints=(tuple(S),),
        chart_vars=tuple(range(7)),
        reflection_generators=tuple(refl),
        form_families=(FormFamily("pair", tuple(fam), coeff=F(1, 2)),),
        weights=WeightSystem((2, 6, 8, 10, 12, 14, 18)),
        quad_normalizer=F(1, 12),
        ambient_names=tuple(f"x{i}" for i in range(1, N + 1)),
        only_even=True,
        flat_top_scale=F(2, 1229),
    )


def _e8() -> GroupSpec:
    N = 9
    fam_a = []
    for i, j in combinations(range(N), 2):
        a = [F(0)] * N
        a[i] += 1
        a[j] -= 1
        fam_a.append(tuple(a))
    fam_b = []
    for i, j, k in combinations(range(N), 3):
        a = [F(1, 3)] * N
        for t in (i, j, k):
            a[t] -= 1
        fam_b.append(tuple(a))
    refl = [tuple(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(7)]
    refl.append(tuple(F(x) for x in (2, 2, 2, -1, -1, -1, -1, -1, -1)))
    return GroupSpec(
        name="E8", ambient_dim=N,
        constraints=(tuple([F(1)] * N),),
        chart_vars=tuple(range(8)),
        reflection_generators=tuple(refl),
        form_families=(FormFamily("diff", tuple(fam_a), up_to_sign=True),
                       FormFamily("triple", tuple(fam_b), up_to_sign=True)),
        weights=WeightSystem((2, 8, 12, 14, 18, 20, 24, 30)),
        quad_normalizer=F(1, 60),
        ambient_names=tuple(f"x{i}" for i in range(1, N + 1)),
        only_even=True,
        flat_top_scale=F(96, 61),
    )


def _a(n: int) -> GroupSpec:
    N = n + 1
    fam = tuple(tuple(_unit(N, i)) for i in range(N))
    refl = [tuple(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(n)]
    return GroupSpec(
        name=f"A{n}", ambient_dim=N,
        constraints=(tuple([F(1)] * N),),
        chart_vars=tuple(range(n)),
        reflection_generators=tuple(refl),
        form_families=(FormFamily("coord", fam),),
        weights=WeightSystem(tuple(range(2, N + 1))),
        quad_normalizer=F(1, 2),
        ambient_names=tuple(f"x{i}" for i in range(1, N + 1)),
    )


_CATALOG = {"E6": _e6, "E7": _e7, "E8": _e8, "A2": lambda: _a(2), "A3": lambda: _a(3)}
GROUP_NAMES = tuple(_CATALOG)


@lru_cache(maxsize=None)
def group_spec(name: str) -> GroupSpec:
    try:
        g = _CATALOG[name]()
    except KeyError:
        raise UnknownGroup(f"unknown group {name!r}; known: {', '.join(GROUP_NAMES)}") from None
    if g.rank != g.ambient_dim - len(g.constraints) or g.rank != g.weights.n:
        raise ValueError(f"{name}: rank mismatch")
    g.chart_reflections  # verifies involution and V-stability
    if not g.family_closed():
        raise ArithmeticError(f"{name}: form family not closed under reflections")
    return g


def _normalizer(g: GroupSpec, m: int) -> Fraction:
    return g.quad_normalizer if m == 2 else F(1)


def build_basic_invariant(g: GroupSpec, m: int) -> Poly:
    """Power-sum invariant of degree m on the chart (normalized for m = 2)."""
    if m < 1:
        raise ValueError("degree must be positive")
    ring = g.chart_ring
    if g.only_even and m % 2:
        # forms are stored up to sign; the +/- pairs cancel in odd degree
        return ring.zero()
    total = ring.zero()
    for coeff, forms in g.chart_families:
        acc = ring.zero()
        for a in forms:
            acc = acc + ring.linear(a) ** m
        total = total + acc.scale(coeff)
    return total.scale(_normalizer(g, m))


def basic_invariants(g: GroupSpec) -> list[Poly]:
    return [build_basic_invariant(g, d) for d in g.degrees]


def apply_linear(p: Poly, M: RatMatrix) -> Poly:
    """p(M y) for an n x n matrix acting on chart coordinates."""
    from .polycore import poly_substitute
    ring = p.ring
    images = [ring.linear(M.row(i)) for i in range(ring.nvars)]
    return poly_substitute(p, images, ring)


def _permutation_of(M: RatMatrix) -> list[int] | None:
    n = M.rows
    perm = []
    for i in range(n):
        row = M.row(i)
        ones = [j for j, v in enumerate(row) if v == 1]
        if len(ones) != 1 or any(v not in (0, 1) for v in row):
            return None
        perm.append(ones[0])
    return perm


def _rank_one(M: RatMatrix) -> tuple[list[Fraction], list[Fraction]] | None:
    """u, w with M = u w^T, or None when M is not rank one."""
    n = M.rows
    pos = next(((i, j) for i in range(n) for j in range(M.cols) if M[i, j]), None)
    if pos is None:
        return None
    i0, j0 = pos
    u = [M[i, j0] / M[i0, j0] for i in range(n)]
    w = list(M.row(i0))
    if any(M[i, j] != u[i] * w[j] for i in range(n) for j in range(M.cols)):
        return None
    return u, w


def reflect_poly(p: Poly, R: RatMatrix) -> Poly:
    """p(R y) for a reflection R = I - u w^T, by the terminating Taylor series

        p(y - u (w.y)) = sum_k (-(w.y))^k / k! * (u.grad)^k p.
    """
    n = p.ring.nvars
    M = RatMatrix.from_rows([[F(int(i == j)) - R[i, j] for j in range(n)] for i in range(n)])
    uw = _rank_one(M)
    if uw is None:
        return apply_linear(p, R)
    u, w = uw
    ring = p.ring
    ell = ring.linear(w)
    result = p
    term = p
    power = ring.one()
    k = 0
    while True:
        k += 1
        nxt = ring.zero()
        for i, ui in enumerate(u):
            if ui:
                nxt = nxt + term.diff(i).scale(ui)
        term = nxt
        if not term:
            return result
        power = power * ell
        result = result + (power * term).scale(F((-1) ** k) / factorial(k))


def check_invariance(g: GroupSpec, p: Poly) -> bool:
    """Exact test that p(R y) == p(y) for every generating reflection R."""
    for R in g.chart_reflections:
        perm = _permutation_of(R)
        if perm is not None:
            # (R y)_i = y_perm[i]: monomial prod y_i^e_i maps to prod y_perm[i]^e_i
            n = len(perm)
            for m, c in p.terms.items():
                img = [0] * n
                for i, e in enumerate(m):
                    img[perm[i]] += e
                if p.terms.get(tuple(img)) != c:
                    return False
        elif reflect_poly(p, R) != p:
            return False
    return True


def invariant_at(g: GroupSpec, m: int, y: Sequence) -> Fraction:
    """Value of the degree-m basic invariant at a chart point, by direct summation."""
    y = [F(v) for v in y]
    total = F(0)
    for coeff, forms in g.chart_families:
        s = F(0)
        for a in forms:
            s += sum((c * v for c, v in zip(a, y)), F(0)) ** m
        total += coeff * s
    return total * _normalizer(g, m)


@dataclass(frozen=True)
class CartanMetric:
    G: RatMatrix
    G_inv: RatMatrix
    scale: Fraction

    @property
    def contravariant(self) -> RatMatrix:
        """scale * G^{-1}: the matrix used in pairings of differentials."""
        n = self.G.rows
        return RatMatrix(n, n, [self.scale * v for v in self.G_inv.entries])


@lru_cache(maxsize=None)
def cartan_metric(g: GroupSpec, scale: Fraction = F(2)) -> CartanMetric:
    """Read G off p_2 = 1/2 y^T G y and invert it exactly."""
    q = build_basic_invariant(g, 2)
    n = g.rank
    rows = [[F(0)] * n for _ in range(n)]
    for m, c in q.terms.items():
        idx = [i for i, e in enumerate(m) for _ in range(e)]
        i, j = idx
        if i == j:
            rows[i][i] = 2 * c
        else:
            rows[i][j] = rows[j][i] = c
    G = RatMatrix.from_rows(rows)
    if rank_profile(G)[0] != n:
        raise DegenerateMetric(f"{g.name}: quadratic invariant is degenerate on the chart")
    for k in range(1, n + 1):
        minor = RatMatrix.from_rows([r[:k] for r in rows[:k]])
        if determinant(minor) <= 0:
            raise DegenerateMetric(f"{g.name}: quadratic invariant is not positive definite")
    G_inv = inverse(G)
    if G.matmul(G_inv) != RatMatrix.identity(n):
        raise ArithmeticError("inverse check failed")
    return CartanMetric(G, G_inv, F(scale))


def to_manifest(g: GroupSpec) -> dict[str, str]:
    """Plain key/value description pinning the chart used for fixtures."""
    names = g.ambient_names
    E = g.embedding
    chart = ";".join(
        f"{names[i]}=" + ",".join(str(E[i, j]) for j in range(g.rank)) for i in range(g.ambient_dim))
    return {
        "group": g.name,
        "ambient_dim": str(g.ambient_dim),
        "chart_vars": ",".join(names[i] for i in g.chart_vars),
        "embedding": chart,
        "degrees": ",".join(map(str, g.degrees)),
        "quad_normalizer": str(g.quad_normalizer),
        "flat_top_scale": str(g.flat_top_scale),
        "forms": ",".join(f"{f.name}:{len(f.forms)}" for f in g.form_families),
    }
