"""Exact Frobenius structures on orbit spaces of the Coxeter groups E6, E7, E8.

Pipeline: basic invariants (groups) -> contravariant metric in the invariants
(saito) -> flat coordinates (flatsolve) -> Frobenius potential and its checks
(potential).  polycore and exactla supply exact polynomial and linear algebra.
"""

__version__ = "0.1.0"
