"""Exact feasibility of {w >= 0 : A w = b} with Farkas certificates.

A revised phase-one simplex over the rationals using Bland's rule.  The
constraint matrix is integer; the right-hand side is rational.  Bases are
solved with FLINT rational matrices so every pivot is exact.

A floating HiGHS solve is used for two shortcuts.  Its basis seeds the
exact phase one; when that basis is slightly primal infeasible, one extra
artificial column repairs it instead of restarting from scratch.  Its dual,
rounded to rationals, may be offered to a caller-supplied check that proves
infeasibility by other means.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import flint
import numpy as np
from scipy.optimize import linprog

log = logging.getLogger(__name__)


def _q(v) -> flint.fmpq:
    v = Fraction(v)
    return flint.fmpq(v.numerator, v.denominator)


def _frac(v: flint.fmpq) -> Fraction:
    return Fraction(int(v.p), int(v.q))


@dataclass
class RowStructure:
    """Independent rows of A and the row dependencies among the rest."""
    independent: list
    dependencies: list  # each a dict row -> Fraction with sum_r c_r A_r = 0


def row_structure(A: np.ndarray) -> RowStructure:
    m, n = A.shape
    At = flint.fmpq_mat(n, m, [int(v) for v in A.T.ravel()])
    R, rank = At.rref()
    pivots, row = [], 0
    for col in range(m):
        if row < rank and R[row, col] != 0:
            pivots.append(col)
            row += 1
    pivset = set(pivots)
    deps = []
    for col in range(m):
        if col in pivset:
            continue
        # column col of rref expresses A_col in terms of the pivot rows
        dep = {col: Fraction(1)}
        for k, p in enumerate(pivots):
            v = R[k, col]
            if v != 0:
                dep[p] = -_frac(v)
        deps.append(dep)
    return RowStructure(pivots, deps)


_structures: dict = {}


def cached_row_structure(key, A: np.ndarray) -> RowStructure:
    if key not in _structures:
        _structures[key] = row_structure(A)
    return _structures[key]


@dataclass
class ExactResult:
    feasible: bool
    x: Optional[list] = None        # exact solution when feasible
    y: Optional[list] = None        # Farkas multipliers: A^T y <= 0 and b.y > 0
    objective: Fraction = Fraction(0)
    iterations: int = 0
    warm_started: bool = False
    log: list = field(default_factory=list)


def _float_phase1(A: np.ndarray, b: Sequence[Fraction]):
    """Floating phase-one solve: (support ordered by value, duals, objective)."""
    m, n = A.shape
    bf = np.array([float(v) for v in b])
    sign = np.where(bf < 0, -1.0, 1.0)
    Aeq = np.hstack([A * sign[:, None], np.eye(m)])
    cost = np.r_[np.zeros(n), np.ones(m)]
    try:
        res = linprog(cost, A_eq=Aeq, b_eq=bf * sign, bounds=(0, None), method="highs-ds")
    except ValueError:
        return None
    if res.status != 0:
        return None
    support = [int(j) for j in np.argsort(-res.x) if res.x[j] > 1e-11]
    return support, sign * np.asarray(res.eqlin.marginals), float(res.fun)


class _Phase1:
    """Phase-one tableau data for A_R w + s = |b_R| with s artificial."""

    def __init__(self, A_R: np.ndarray, b_R: list):
        self.m, self.n = A_R.shape
        self.sign = [(-1 if v < 0 else 1) for v in b_R]
        self.rhs = [abs(v) for v in b_R]
        self.cols = np.hstack([A_R * np.array(self.sign)[:, None], np.eye(self.m, dtype=np.int64)])
        self.full = flint.fmpq_mat(self.m, self.n + self.m, [int(v) for v in self.cols.ravel()])
        self.rhs_mat = flint.fmpq_mat(self.m, 1, [_q(v) for v in self.rhs])

    def add_composite(self, basis: list, negative_rows: list) -> int:
        """Append the column -sum of basis columns at negative rows.

        Entering it at the most negative row makes the basis primal
        feasible, so phase one can start from a nearly right basis.
        """
        col = -self.cols[:, [basis[i] for i in negative_rows]].sum(axis=1)
        self.cols = np.hstack([self.cols, col[:, None]])
        self.full = flint.fmpq_mat(self.m, self.cols.shape[1], [int(v) for v in self.cols.ravel()])
        return self.cols.shape[1] - 1

    def cost(self, j: int) -> int:
        return 1 if j >= self.n else 0

    def basis_matrix(self, basis: list) -> flint.fmpq_mat:
        sub = self.cols[:, basis]
        return flint.fmpq_mat(self.m, self.m, [int(v) for v in sub.ravel()])

    def complete(self, candidates: list) -> list:
        """Greedy independent subset of candidates padded with artificials."""
        order = list(dict.fromkeys(list(candidates) + list(range(self.n, self.n + self.m))))
        sub = self.cols[:, order]
        M = flint.fmpq_mat(self.m, len(order), [int(v) for v in sub.ravel()])
        R, rank = M.rref()
        basis, row = [], 0
        for k in range(len(order)):
            if row < rank and R[row, k] != 0:
                basis.append(order[k])
                row += 1
        return basis


def exact_feasibility(A: np.ndarray, b: Sequence, structure: Optional[RowStructure] = None,
                      warm_start: bool = True, max_iter: int = 20000,
                      accept_dual: Optional[Callable[[list], bool]] = None,
                      dual_denominator: int = 10 ** 6) -> ExactResult:
    """Decide whether A w = b has a solution w >= 0, exactly.

    On infeasibility the returned y satisfies A^T y <= 0 componentwise and
    b . y > 0, which certifies that no such w exists.  When `accept_dual`
    is given, a rationalized floating dual that it accepts is returned
    instead; the caller then owns the proof (it must not rely on
    A^T y <= 0).
    """
    A = np.asarray(A, dtype=np.int64)
    b = [Fraction(v) for v in b]
    m, n = A.shape
    st = structure or row_structure(A)
    notes = []

    # dependent rows must be consistent on the right-hand side
    for dep in st.dependencies:
        val = sum(c * b[r] for r, c in dep.items())
        if val != 0:
            y = [Fraction(0)] * m
            s = 1 if val > 0 else -1
            for r, c in dep.items():
                y[r] = s * c
            notes.append("right-hand side violates a row dependency")
            return ExactResult(False, None, y, abs(val), 0, False, notes)

    rows = st.independent
    A_R = A[rows]
    b_R = [b[r] for r in rows]
    lp = _Phase1(A_R, b_R)
    N = lp.n + lp.m

    basis = None
    warm = False
    if warm_start:
        guess = _float_phase1(A_R, b_R)
        if guess is not None and accept_dual is not None and guess[2] > 1e-9:
            yf = [Fraction(0)] * m
            for k, r in enumerate(rows):
                yf[r] = Fraction(float(guess[1][k])).limit_denominator(dual_denominator)
            if accept_dual(yf):
                notes.append("infeasibility certified from rationalized floating dual")
                return ExactResult(False, None, yf, sum(bi * yi for bi, yi in zip(b, yf)), 0, True, notes)
            notes.append("floating dual rejected; exact phase one")
        if guess is not None:
            cand = lp.complete(guess[0])
            xB = lp.basis_matrix(cand).solve(lp.rhs_mat)
            neg = [i for i in range(lp.m) if xB[i, 0] < 0]
            basis, warm = cand, True
            if neg:
                worst = min(neg, key=lambda i: (xB[i, 0], cand[i]))
                cand[worst] = lp.add_composite(cand, neg)
                N += 1
                notes.append(f"floating basis repaired with a composite artificial ({len(neg)} rows)")
    if basis is None:
        basis = list(range(lp.n, N))

    it = 0
    while True:
        B = lp.basis_matrix(basis)
        xB = B.solve(lp.rhs_mat)
        if all(xB[i, 0] == 0 for i in range(lp.m) if basis[i] >= lp.n):
            break
        cB = flint.fmpq_mat(lp.m, 1, [lp.cost(j) for j in basis])
        y = B.transpose().solve(cB)
        yA = y.transpose() * lp.full
        in_basis = set(basis)
        entering = None
        for j in range(N):
            if j in in_basis:
                continue
            if lp.cost(j) - yA[0, j] < 0:
                entering = j
                break
        if entering is None:
            break
        it += 1
        if it > max_iter:
            raise RuntimeError("simplex iteration limit reached")
        col = flint.fmpq_mat(lp.m, 1, [int(v) for v in lp.cols[:, entering]])
        u = B.solve(col)
        leave, best = None, None
        for i in range(lp.m):
            if u[i, 0] > 0:
                ratio = xB[i, 0] / u[i, 0]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            raise RuntimeError("phase one unbounded; cannot happen")
        basis[leave] = entering

    obj = sum((_frac(xB[i, 0]) for i in range(lp.m) if basis[i] >= lp.n), Fraction(0))
    if obj == 0:
        x = [Fraction(0)] * n
        for i, j in enumerate(basis):
            if j < lp.n:
                x[j] = _frac(xB[i, 0])
        return ExactResult(True, x, None, obj, it, warm, notes)
    yfull = [Fraction(0)] * m
    for k, r in enumerate(rows):
        yfull[r] = lp.sign[k] * _frac(y[k, 0])
    return ExactResult(False, None, yfull, obj, it, warm, notes)
