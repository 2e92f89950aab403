"""Contravariant metric on the orbit space, rewritten in the basic invariants.

A pairing <dp_a, dp_b>* is a W-invariant polynomial on V of degree
d_a + d_b - 2.  It is expressed in the generators by evaluating it, together
with every candidate generator monomial of that weighted degree, at sample
points and solving the resulting linear system exactly.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from . import exactla
from .exactla import RatMatrix, SolveReport
from .groups import GroupSpec, cartan_metric
from .polycore import Poly, enumerate_weighted_monomials, poly_diff, poly_eval

log = logging.getLogger(__name__)

F = Fraction
SURPLUS = 5
EXTENSION_BUDGET = 2000


class InterpolationError(ArithmeticError):
    """The sampled system is inconsistent or stays rank-deficient."""


@dataclass(frozen=True)
class SampleGrid:
    points: tuple[tuple[int, ...], ...]
    provenance: tuple[str, ...]  # per point: "paper-grid" or "random-extension"
    seed: int = 0

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise ValueError("sample points must be distinct")


@dataclass
class MetricTable:
    group: GroupSpec
    entries: list[list[Poly]]
    kind: str  # "g" or "eta"
    scale: Fraction = F(2)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def n(self) -> int:
        return len(self.entries)

    def is_symmetric(self) -> bool:
        return all(self.entries[i][j] == self.entries[j][i]
                   for i in range(self.n) for j in range(self.n))


# point evaluation -----------------------------------------------------------


class PointEvaluator:
    """Values and chart gradients of the basic invariants at sample points.

    Forms are linear, so the gradient of sum(l^m) is m * sum(l^(m-1) * grad l);
    nothing is expanded symbolically.
    """

    def __init__(self, g: GroupSpec, scale: Fraction = F(2)):
        self.g = g
        self.metric = cartan_metric(g, F(scale))
        self.contra = self.metric.contravariant.to_rows()
        self._cache: dict[tuple, tuple[list[Fraction], list[list[Fraction]]]] = {}

    def data(self, point: Sequence) -> tuple[list[Fraction], list[list[Fraction]]]:
        key = tuple(F(v) for v in point)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        g = self.g
        D = 1
        for v in key:
            D = D * v.denominator // _gcd(D, v.denominator)
        y = [int(v * D) for v in key]
        L = g.form_scale
        n = g.rank
        values, grads = [], []
        for m in g.degrees:
            val = F(0)
            grad = [F(0)] * n
            for coeff, forms in g.integer_forms:
                s = 0
                gs = [0] * n
                for a in forms:
                    lv = 0
                    for c, yi in zip(a, y):
                        if c:
                            lv += c * yi
                    if lv == 0:
                        continue
                    pw = lv ** (m - 1)
                    s += pw * lv
                    for j, c in enumerate(a):
                        if c:
                            gs[j] += c * pw
                norm = coeff * (self.g.quad_normalizer if m == 2 else 1)
                val += norm * F(s, (L * D) ** m)
                for j in range(n):
                    grad[j] += norm * m * F(gs[j], L ** m * D ** (m - 1))
            values.append(val)
            grads.append(grad)
        self._cache[key] = (values, grads)
        return values, grads

    def pairing(self, point: Sequence, a: int, b: int) -> Fraction:
        _, grads = self.data(point)
        ga, gb = grads[a], grads[b]
        C = self.contra
        total = F(0)
        for i, x in enumerate(ga):
            if x:
                total += x * sum((C[i][j] * z for j, z in enumerate(gb) if z), F(0))
        return total

    def generator_values(self, point: Sequence) -> list[Fraction]:
        return self.data(point)[0]


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


# symbolic path ------------------------------------------------------------


def pairing_raw(g: GroupSpec, a: int, b: int, invariants: Sequence[Poly] | None = None,
                scale: Fraction = F(2)) -> Poly:
    """sum_ij dp_a/dy_i * scale*G^{ij} * dp_b/dy_j, expanded in chart variables."""
    from .groups import build_basic_invariant
    if invariants is None:
        pa = build_basic_invariant(g, g.degrees[a])
        pb = pa if b == a else build_basic_invariant(g, g.degrees[b])
    else:
        pa, pb = invariants[a], invariants[b]
    C = cartan_metric(g, F(scale)).contravariant
    n = g.rank
    da = [poly_diff(pa, i) for i in range(n)]
    db = da if b == a and invariants is None else [poly_diff(pb, j) for j in range(n)]
    total = g.chart_ring.zero()
    for i in range(n):
        if not da[i]:
            continue
        right = g.chart_ring.zero()
        for j in range(n):
            if C[i, j]:
                right = right + db[j].scale(C[i, j])
        total = total + da[i] * right
    return total


# sampling -----------------------------------------------------------------


def standard_grid(n: int) -> list[tuple[int, ...]]:
    """Nondecreasing integer n-tuples with entries in 1..n-2 (at least 1..2)."""
    top = max(n - 2, 2)
    return [tuple(c) for c in combinations_with_replacement(range(1, top + 1), n)]


def _rows_mod(rows: Sequence[Sequence[Fraction]], p: int) -> np.ndarray:
    return np.array([[(v.numerator % p) * pow(v.denominator, -1, p) % p for v in r]
                     for r in rows], dtype=np.int64).reshape(len(rows), len(rows[0]) if rows else 0)


def _independent_subset(rows: Sequence[Sequence[Fraction]], p: int) -> list[int]:
    """Indices of a maximal independent prefix-greedy subset of rows, mod p."""
    if not rows or not rows[0]:
        return []
    M = _rows_mod(rows, p).T.copy()  # columns are sample points
    _, pivots, _ = exactla._modular_echelon(M, M.shape[1], p)
    return pivots


def make_grid(g: GroupSpec, needed: int, basis: Sequence[tuple[int, ...]] | None = None,
              evaluator: PointEvaluator | None = None, seed: int = 0) -> SampleGrid:
    """Sample points for an interpolation with ``needed`` unknowns.

    Starts from the nondecreasing integer grid.  When a basis is given
    the points are filtered to an independent set for that basis, extended with
    seeded pseudo-random small-integer points if the grid is rank-deficient;
    ``SURPLUS`` extra points are always appended as a consistency check.
    """
    if needed < 1:
        raise ValueError("needed must be positive")
    base = standard_grid(g.rank)
    total = needed + SURPLUS
    if basis is None:
        pts = list(base[:total])
        prov = ["paper-grid"] * len(pts)
        rng = random.Random(seed)
        while len(pts) < total:
            q = tuple(rng.randint(-9, 9) for _ in range(g.rank))
            if q not in pts:
                pts.append(q)
                prov.append("random-extension")
        return SampleGrid(tuple(pts), tuple(prov), seed)

    ev = evaluator or PointEvaluator(g)
    p = exactla.PRIMES[-1]
    candidates = list(base)
    provenance = ["paper-grid"] * len(candidates)
    rng = random.Random(seed)
    chosen: list[int] = []
    start = 0
    batch = max(2 * needed, 16)
    while True:
        # evaluate the next batch and recompute the independent set on the pool so far
        while start >= len(candidates) or len(candidates) - start < batch:
            if len(candidates) - len(base) >= EXTENSION_BUDGET:
                break
            q = tuple(rng.randint(-9, 9) for _ in range(g.rank))
            if q not in candidates:
                candidates.append(q)
                provenance.append("random-extension")
        end = min(len(candidates), start + batch)
        pool = chosen + list(range(start, end))
        rows = [basis_row(basis, ev.generator_values(candidates[i])) for i in pool]
        ind = _independent_subset(rows, p)
        chosen = [pool[k] for k in ind]
        start = end
        if len(chosen) >= needed:
            break
        if start >= len(candidates):
            raise InterpolationError(
                f"{g.name}: rank {len(chosen)} < {needed} after extension budget")
    used = set(chosen)
    surplus = [i for i in range(len(candidates)) if i not in used][:SURPLUS]
    idx = sorted(chosen[:needed]) + surplus
    return SampleGrid(tuple(candidates[i] for i in idx), tuple(provenance[i] for i in idx), seed)


def basis_row(basis: Sequence[tuple[int, ...]], values: Sequence[Fraction]) -> list[Fraction]:
    row = []
    for mono in basis:
        v = F(1)
        for x, e in zip(values, mono):
            if e:
                v *= x ** e
        row.append(v)
    return row


# interpolation ------------------------------------------------------------


def rewrite_values(g: GroupSpec, degree: int, evaluate: Callable[[tuple], Fraction],
                   evaluator: PointEvaluator | None = None, solver: str = "modular",
                   seed: int = 0, checks: int = 3) -> Poly:
    """Express an invariant of the given degree, known through point values."""
    ring = g.generator_ring
    ev = evaluator or PointEvaluator(g)
    basis = enumerate_weighted_monomials(g.degrees, degree)
    if not basis:
        for pt in standard_grid(g.rank)[:SURPLUS]:
            if evaluate(pt) != 0:
                raise InterpolationError(f"nonzero invariant in degree {degree} with empty basis")
        return ring.zero()
    grid = make_grid(g, len(basis), basis, ev, seed)
    A = RatMatrix.from_rows([basis_row(basis, ev.generator_values(pt)) for pt in grid.points])
    b = [evaluate(pt) for pt in grid.points]
    rep: SolveReport = exactla.solve(A, b, solver)
    if rep.status != exactla.UNIQUE:
        raise InterpolationError(f"degree {degree}: interpolation system is {rep.status}")
    result = Poly(ring, dict(zip(basis, rep.solution)))
    rng = random.Random(seed + 7919)
    for _ in range(checks):
        pt = tuple(F(rng.randint(-50, 50), rng.randint(1, 9)) for _ in range(g.rank))
        if poly_eval(result, ev.generator_values(pt)) != evaluate(pt):
            raise InterpolationError(f"degree {degree}: back-substitution check failed")
    return result


def rewrite_in_invariants(g: GroupSpec, q: Poly | Callable, degree: int, **kw) -> Poly:
    if isinstance(q, Poly):
        if not q.is_homogeneous(degree):
            raise ValueError(f"input is not homogeneous of degree {degree}")
        return rewrite_values(g, degree, lambda pt: poly_eval(q, pt), **kw)
    return rewrite_values(g, degree, q, **kw)


def pairing_in_invariants(g: GroupSpec, a: int, b: int, evaluator: PointEvaluator,
                          solver: str = "modular", seed: int = 0) -> Poly:
    degree = g.degrees[a] + g.degrees[b] - 2
    return rewrite_values(g, degree, lambda pt: evaluator.pairing(pt, a, b),
                          evaluator=evaluator, solver=solver, seed=seed)


def _entry_worker(args) -> tuple[int, int, Poly]:
    name, scale, solver, seed, a, b = args
    from .groups import group_spec
    g = group_spec(name)
    return a, b, pairing_in_invariants(g, a, b, _worker_evaluator(name, scale), solver, seed)


_EVALUATORS: dict[tuple, PointEvaluator] = {}


def _worker_evaluator(name: str, scale: Fraction) -> PointEvaluator:
    from .groups import group_spec
    key = (name, scale)
    if key not in _EVALUATORS:
        _EVALUATORS[key] = PointEvaluator(group_spec(name), scale)
    return _EVALUATORS[key]


def metric_table(g: GroupSpec, scale: Fraction = F(2), solver: str = "modular", seed: int = 0,
                 progress: Callable[[int, int], None] | None = None, threads: int = 1) -> MetricTable:
    """All pairings <dp_a, dp_b>*; entries are independent, so ``threads`` > 1
    farms them out to worker processes (results are identical)."""
    n = g.rank
    entries: list[list[Poly | None]] = [[None] * n for _ in range(n)]
    slots = [(a, b) for a in range(n) for b in range(a, n)]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor
        # heaviest entries first
        order = sorted(slots, key=lambda ab: -(g.degrees[ab[0]] + g.degrees[ab[1]]))
        jobs = [(g.name, F(scale), solver, seed, a, b) for a, b in order]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_entry_worker, jobs))
    else:
        ev = PointEvaluator(g, scale)
        results = [(a, b, pairing_in_invariants(g, a, b, ev, solver, seed)) for a, b in slots]
    for a, b, p in results:
        entries[a][b] = entries[b][a] = p
        if progress:
            progress(a, b)
        log.info("%s <d%d,d%d>: %d terms", g.name, g.degrees[a], g.degrees[b], len(p))
    return MetricTable(g, entries, "g", F(scale))


def eta_table(gt: MetricTable) -> MetricTable:
    if gt.kind != "g":
        raise ValueError("eta is extracted from a g table")
    top = gt.group.rank - 1
    return MetricTable(gt.group, [[poly_diff(e, top) for e in row] for row in gt.entries],
                       "eta", gt.scale)


def check_grading(table: MetricTable) -> list[str]:
    """Weighted-degree violations of a metric table (empty when it is graded)."""
    g = table.group
    h = g.h
    out = []
    for a in range(table.n):
        for b in range(table.n):
            e = table.entries[a][b]
            want = g.degrees[a] + g.degrees[b] - 2 - (h if table.kind == "eta" else 0)
            if e and not e.is_homogeneous(want):
                out.append(f"({g.degrees[a]},{g.degrees[b]}) not of degree {want}")
    return out
