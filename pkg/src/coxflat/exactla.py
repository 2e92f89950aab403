"""Exact linear algebra over Q.

Two solvers share one contract: :func:`solve_exact` runs fraction-free
(Bareiss) elimination over the integers; :func:`solve_modular` solves modulo a
sequence of 31-bit primes, recombines by CRT, recovers rationals by
reconstruction and then verifies the candidate exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

UNIQUE = "unique"
INCONSISTENT = "inconsistent"
UNDERDETERMINED = "underdetermined"


class DimensionMismatch(ValueError):
    pass


class RatMatrix:
    """Dense row-major matrix of Fractions."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Sequence):
        entries = [Fraction(v) for v in entries]
        if len(entries) != rows * cols:
            raise DimensionMismatch(f"{len(entries)} entries for a {rows}x{cols} matrix")
        self.rows = rows
        self.cols = cols
        self.entries = tuple(entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RatMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise DimensionMismatch("ragged rows")
        return cls(len(rows), ncols, [v for r in rows for v in r])

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(n, n, [1 if i == j else 0 for i in range(n) for j in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "RatMatrix":
        return RatMatrix(self.cols, self.rows,
                         [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    def matvec(self, x: Sequence) -> list[Fraction]:
        if len(x) != self.cols:
            raise DimensionMismatch("vector length does not match column count")
        return [sum((a * b for a, b in zip(self.row(i), x)), Fraction(0))
                for i in range(self.rows)]

    def matmul(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch("inner dimensions differ")
        cols = [other.transpose().row(j) for j in range(other.cols)]
        return RatMatrix(self.rows, other.cols,
                         [sum((a * b for a, b in zip(self.row(i), c)), Fraction(0))
                          for i in range(self.rows) for c in cols])

    def __eq__(self, other):
        return (isinstance(other, RatMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __repr__(self):
        return f"RatMatrix({self.rows}x{self.cols})"


@dataclass
class SolveReport:
    status: str
    solution: list[Fraction] | None
    rank: int
    primes_used: int = 0
    pivot_columns: list[int] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)  # primes where the rank dropped

    def __eq__(self, other):
        # primes_used is diagnostic, not part of the contract
        return (isinstance(other, SolveReport) and self.status == other.status
                and self.solution == other.solution and self.rank == other.rank)


def _as_matrix(A) -> RatMatrix:
    return A if isinstance(A, RatMatrix) else RatMatrix.from_rows(A)


def _integer_rows(A: RatMatrix, b: Sequence[Fraction] | None) -> list[list[int]]:
    """Scale each row (with its rhs) by the lcm of its denominators."""
    out = []
    for i in range(A.rows):
        row = list(A.row(i))
        if b is not None:
            row.append(Fraction(b[i]))
        d = 1
        for v in row:
            q = v.denominator
            if q != 1:
                d = d * q // _gcd(d, q)
        out.append([int(v * d) for v in row])
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _bareiss(M: list[list[int]], ncols: int) -> tuple[list[list[int]], list[int], list[int]]:
    """Fraction-free forward elimination on the first ncols columns.

    Returns the reduced rows, pivot columns and the original row index of each
    pivot row.  M is modified in place.
    """
    rows = len(M)
    perm = list(range(rows))
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if M[i][c]), None)
        if p is None:
            continue
        if p != r:
            M[r], M[p] = M[p], M[r]
            perm[r], perm[p] = perm[p], perm[r]
        piv = M[r][c]
        rowr = M[r]
        for i in range(r + 1, rows):
            rowi = M[i]
            a = rowi[c]
            if a:
                M[i] = [(piv * x - a * y) // prev for x, y in zip(rowi, rowr)]
            else:
                M[i] = [(piv * x) // prev for x in rowi]
        prev = piv
        pivots.append(c)
        r += 1
    return M, pivots, perm[:len(pivots)]


def rank_profile(A) -> tuple[int, list[int]]:
    A = _as_matrix(A)
    M = _integer_rows(A, None)
    _, pivots, _ = _bareiss(M, A.cols)
    return len(pivots), pivots


def _back_substitute(M: list[list[int]], pivots: list[int], ncols: int) -> list[Fraction]:
    x = [Fraction(0)] * ncols
    for r in range(len(pivots) - 1, -1, -1):
        c = pivots[r]
        row = M[r]
        s = Fraction(row[ncols])
        for j in range(c + 1, ncols):
            if row[j] and x[j]:
                s -= row[j] * x[j]
        x[c] = s / row[c]
    return x


def residual(A: RatMatrix, x: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    return [ax - bi for ax, bi in zip(A.matvec(x), b)]


def _verify_integer(Mint: list[list[int]], x: Sequence[Fraction]) -> bool:
    """Check A x = b on integer-scaled augmented rows with a common denominator."""
    D = 1
    for v in x:
        q = v.denominator
        if q != 1:
            D = D * q // _gcd(D, q)
    nums = [int(v * D) for v in x]
    n = len(nums)
    for row in Mint:
        acc = 0
        for a, v in zip(row, nums):
            if a and v:
                acc += a * v
        if acc != D * row[n]:
            return False
    return True


def solve_exact(A, b: Sequence) -> SolveReport:
    A = _as_matrix(A)
    if len(b) != A.rows:
        raise DimensionMismatch(f"rhs length {len(b)} != {A.rows} rows")
    b = [Fraction(v) for v in b]
    Mint = _integer_rows(A, b)
    M = [list(r) for r in Mint]
    M, pivots, _ = _bareiss(M, A.cols)
    rank = len(pivots)
    for r in range(rank, A.rows):
        if M[r][A.cols]:
            return SolveReport(INCONSISTENT, None, rank, pivot_columns=pivots)
    if rank < A.cols:
        return SolveReport(UNDERDETERMINED, None, rank, pivot_columns=pivots)
    x = _back_substitute(M, pivots, A.cols)
    if not _verify_integer(Mint, x):
        raise ArithmeticError("exact solve produced a nonzero residual")
    return SolveReport(UNIQUE, x, rank, pivot_columns=pivots)


# modular path -------------------------------------------------------------


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_pool(count: int, below: int = 2 ** 31) -> list[int]:
    """Deterministic descending list of primes just below ``below``.

    Primes stay under 2**31 so that products of residues fit in int64.
    """
    out = []
    n = below - 1
    while len(out) < count:
        if _is_prime(n):
            out.append(n)
        n -= 1
    return out


PRIMES = prime_pool(256)


def _modular_echelon(M: np.ndarray, ncols: int, p: int):
    """Reduced row echelon form mod p of the augmented int64 matrix M."""
    M = M.copy()
    rows = M.shape[0]
    pivots = []
    prow = []
    r = 0
    order = np.arange(rows)
    for c in range(ncols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            M[[r, k]] = M[[k, r]]
            order[[r, k]] = order[[k, r]]
        inv = pow(int(M[r, c]), p - 2, p)
        M[r] = (M[r] * inv) % p
        f = M[:, c].copy()
        f[r] = 0
        nzr = np.nonzero(f)[0]
        if nzr.size:
            M[nzr] = (M[nzr] - (f[nzr, None] * M[r][None, :]) % p) % p
        pivots.append(c)
        prow.append(int(order[r]))
        r += 1
    return M, pivots, prow


def rational_reconstruct(a: int, m: int) -> Fraction | None:
    """Find n/d == a (mod m) with |n|, d <= sqrt(m/2); None if none exists."""
    a %= m
    bound = _isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        r1, s1 = -r1, -s1
    if _gcd(r1, s1) != 1:
        return None
    return Fraction(r1, s1)


def _isqrt(n: int) -> int:
    from math import isqrt
    return isqrt(n)


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    t = ((r2 - r1) * pow(m1, -1, m2)) % m2
    return r1 + m1 * t, m1 * m2


def solve_modular(A, b: Sequence, primes: Iterable[int] | None = None,
                  max_primes: int = 200) -> SolveReport:
    A = _as_matrix(A)
    if len(b) != A.rows:
        raise DimensionMismatch(f"rhs length {len(b)} != {A.rows} rows")
    b = [Fraction(v) for v in b]
    n = A.cols
    Mint = _integer_rows(A, b)
    pool = list(primes) if primes is not None else list(PRIMES)
    pool += [q for q in PRIMES if q not in pool]

    combined: list[int] | None = None
    modulus = 1
    last = None
    full_rank_seen = False
    deficient = 0
    skipped: list[int] = []
    for used, p in enumerate(pool[:max_primes], start=1):
        Mp = np.array([[v % p for v in row] for row in Mint], dtype=np.int64)
        R, pivots, _ = _modular_echelon(Mp, n + 1, p)
        rank_a = sum(1 for c in pivots if c < n)
        if rank_a < n:
            skipped.append(p)
            if full_rank_seen:
                log.debug("prime %d drops rank to %d: skipped", p, rank_a)
                continue
            deficient += 1
            if deficient >= 3:
                # rank deficiency persists across primes; certify status exactly
                rep = solve_exact(A, b)
                rep.primes_used = used
                rep.skipped = skipped
                return rep
            continue
        full_rank_seen = True
        if n in pivots:
            # rank of [A|b] mod p can only underestimate the rank over Q
            return SolveReport(INCONSISTENT, None, n, primes_used=used,
                               pivot_columns=list(range(n)), skipped=skipped)
        sol = [int(R[i, n]) for i in range(n)]
        if combined is None:
            combined, modulus = sol, p
        else:
            combined = [crt_pair(r, modulus, s, p)[0] for r, s in zip(combined, sol)]
            modulus *= p
        cand = []
        for v in combined:
            q = rational_reconstruct(v, modulus)
            if q is None:
                cand = None
                break
            cand.append(q)
        if cand is None:
            last = None
            continue
        if (cand == last or _small(cand, modulus)) and _verify_integer(Mint, cand):
            return SolveReport(UNIQUE, cand, n, primes_used=used,
                               pivot_columns=list(range(n)), skipped=skipped)
        last = cand
    raise ArithmeticError("modular solve did not converge within the prime budget")


def _small(cand: Sequence[Fraction], modulus: int) -> bool:
    # far inside the reconstruction bound: unlikely to be a spurious lift
    limit = modulus.bit_length() // 4
    return all(abs(v.numerator).bit_length() <= limit and v.denominator.bit_length() <= limit
               for v in cand)


def solve(A, b, mode: str = "modular") -> SolveReport:
    if mode == "exact":
        return solve_exact(A, b)
    if mode == "modular":
        return solve_modular(A, b)
    raise ValueError(f"unknown solver mode {mode!r}")


def select_independent_rows(rows: Iterable[Sequence], target: int, p: int = PRIMES[0],
                            limit: int | None = None) -> list[int]:
    """Greedily pick row indices whose images mod p are independent.

    Stops once ``target`` rows are found.  Independence mod p implies
    independence over Q.
    """
    basis: list[tuple[int, list[int]]] = []  # (pivot col, reduced row), row normalized
    chosen: list[int] = []
    for idx, row in enumerate(rows):
        if limit is not None and idx >= limit:
            break
        v = [int(Fraction(x).numerator * pow(Fraction(x).denominator, -1, p)) % p for x in row]
        for c, brow in basis:
            f = v[c]
            if f:
                v = [(a - f * bb) % p for a, bb in zip(v, brow)]
        c = next((j for j, a in enumerate(v) if a), None)
        if c is None:
            continue
        inv = pow(v[c], p - 2, p)
        v = [a * inv % p for a in v]
        basis.append((c, v))
        chosen.append(idx)
        if len(chosen) == target:
            break
    return chosen


def determinant(A) -> Fraction:
    A = _as_matrix(A)
    if A.rows != A.cols:
        raise DimensionMismatch("determinant of a non-square matrix")
    n = A.rows
    if n == 0:
        return Fraction(1)
    scales = []
    rows = []
    for i in range(n):
        row = list(A.row(i))
        d = 1
        for v in row:
            q = v.denominator
            if q != 1:
                d = d * q // _gcd(d, q)
        scales.append(d)
        rows.append([int(v * d) for v in row])
    # Bareiss with explicit sign tracking
    sign = 1
    prev = 1
    M = rows
    for k in range(n - 1):
        if M[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if M[i][k]), None)
            if sw is None:
                return Fraction(0)
            M[k], M[sw] = M[sw], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[k][k] * M[i][j] - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = M[k][k]
    det = Fraction(sign * M[n - 1][n - 1])
    for d in scales:
        det /= d
    return det


def inverse(A) -> RatMatrix:
    A = _as_matrix(A)
    n = A.rows
    if A.cols != n:
        raise DimensionMismatch("inverse of a non-square matrix")
    cols = []
    for j in range(n):
        e = [Fraction(int(i == j)) for i in range(n)]
        rep = solve_exact(A, e)
        if rep.status != UNIQUE:
            raise ZeroDivisionError("matrix is singular")
        cols.append(rep.solution)
    return RatMatrix(n, n, [cols[j][i] for i in range(n) for j in range(n)])
