"""Conditional bipartite locality as an exact linear feasibility problem.

Four parties A, B, C, D with binary outcomes.  For every block
(a, d, x, w) of the outer parties' outcomes and settings the inner pair
(B, C) must behave as a mixture of deterministic strategy pairs; the
mixing weights may depend on the block.  The unknowns are the weights
w(a, d, x, w, lambda_B, lambda_C) >= 0.

Two input modes are supported:

* marginal pair: prescribed A-B-D and A-C-D tables.  The joint table must
  reproduce both and must itself be no-signalling, i.e. the A-B-C marginal
  may not depend on D's setting and the B-C-D marginal may not depend on
  A's setting (no-signalling from B and C holds by construction).
* full table: a prescribed four-party table, matched entry by entry.

Infeasibility comes with a Farkas certificate, exported as a Bell-type
expression on the input tables together with an exact upper bound valid
for every feasible input.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .correlations import (BehaviorTable, BellExpression, QuantumSetup, SignallingError,
                           born_rule, check_no_signalling, marginalize, rationalize)
from .simplex import cached_row_structure, exact_feasibility

PARTIES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class StrategyPair:
    b_strategy: tuple
    c_strategy: tuple


@dataclass(frozen=True)
class LPLayout:
    """Variable indexing and constraint matrices for one settings shape."""
    settings: tuple           # (sA, sB, sC, sD)
    strat_b: tuple
    strat_c: tuple
    var_block: np.ndarray     # (n_vars, 4): a, d, x, w
    var_lb: np.ndarray
    var_lc: np.ndarray
    group: np.ndarray         # normalization group (x, w) of each variable
    n_groups: int

    @property
    def n_vars(self) -> int:
        return len(self.var_lb)

    def strategy_pair(self, j: int) -> StrategyPair:
        return StrategyPair(self.strat_b[self.var_lb[j]], self.strat_c[self.var_lc[j]])


@lru_cache(maxsize=None)
def layout(settings: tuple = (2, 2, 2, 2)) -> LPLayout:
    sA, sB, sC, sD = settings
    SB = tuple(itertools.product(range(2), repeat=sB))
    SC = tuple(itertools.product(range(2), repeat=sC))
    rows = [(a, d, x, w, lb, lc) for a, d, x, w in itertools.product(range(2), range(2), range(sA), range(sD))
            for lb in range(len(SB)) for lc in range(len(SC))]
    arr = np.array(rows)
    group = arr[:, 2] * sD + arr[:, 3]
    return LPLayout(tuple(settings), SB, SC, arr[:, :4], arr[:, 4], arr[:, 5], group, sA * sD)


def _indicator_b(L: LPLayout, y: int, b: int) -> np.ndarray:
    return np.array([L.strat_b[k][y] == b for k in L.var_lb])


def _indicator_c(L: LPLayout, z: int, c: int) -> np.ndarray:
    return np.array([L.strat_c[k][z] == c for k in L.var_lc])


@lru_cache(maxsize=None)
def marginal_system(settings: tuple = (2, 2, 2, 2)):
    """Rows: A-B-D entries, A-C-D entries, then the two no-signalling families.

    Returns (matrix, row keys, number of marginal rows).
    """
    L = layout(settings)
    sA, sB, sC, sD = settings
    blk = L.var_block
    rows, keys = [], []
    for a, b, d, x, y, w in itertools.product(range(2), range(2), range(2), range(sA), range(sB), range(sD)):
        r = (blk[:, 0] == a) & (blk[:, 1] == d) & (blk[:, 2] == x) & (blk[:, 3] == w) & _indicator_b(L, y, b)
        rows.append(r.astype(np.int64))
        keys.append(("ABD", (a, b, d), (x, y, w)))
    for a, c, d, x, z, w in itertools.product(range(2), range(2), range(2), range(sA), range(sC), range(sD)):
        r = (blk[:, 0] == a) & (blk[:, 1] == d) & (blk[:, 2] == x) & (blk[:, 3] == w) & _indicator_c(L, z, c)
        rows.append(r.astype(np.int64))
        keys.append(("ACD", (a, c, d), (x, z, w)))
    n_marg = len(rows)
    # A-B-C marginal independent of D's setting
    for a, b, c, x, y, z in itertools.product(range(2), range(2), range(2), range(sA), range(sB), range(sC)):
        bc = _indicator_b(L, y, b) & _indicator_c(L, z, c)
        base = (blk[:, 0] == a) & (blk[:, 2] == x) & bc
        for w in range(1, sD):
            r = (base & (blk[:, 3] == 0)).astype(np.int64) - (base & (blk[:, 3] == w)).astype(np.int64)
            rows.append(r)
            keys.append(("NS-D", (a, b, c), (x, y, z, w)))
    # B-C-D marginal independent of A's setting
    for b, c, d, y, z, w in itertools.product(range(2), range(2), range(2), range(sB), range(sC), range(sD)):
        bc = _indicator_b(L, y, b) & _indicator_c(L, z, c)
        base = (blk[:, 1] == d) & (blk[:, 3] == w) & bc
        for x in range(1, sA):
            r = (base & (blk[:, 2] == 0)).astype(np.int64) - (base & (blk[:, 2] == x)).astype(np.int64)
            rows.append(r)
            keys.append(("NS-A", (b, c, d), (y, z, w, x)))
    return np.array(rows), tuple(keys), n_marg


@lru_cache(maxsize=None)
def full_system(settings: tuple = (2, 2, 2, 2)):
    L = layout(settings)
    sA, sB, sC, sD = settings
    blk = L.var_block
    rows, keys = [], []
    for a, b, c, d in itertools.product(range(2), repeat=4):
        for x, y, z, w in itertools.product(range(sA), range(sB), range(sC), range(sD)):
            r = ((blk[:, 0] == a) & (blk[:, 1] == d) & (blk[:, 2] == x) & (blk[:, 3] == w)
                 & _indicator_b(L, y, b) & _indicator_c(L, z, c))
            rows.append(r.astype(np.int64))
            keys.append(("ABCD", (a, b, c, d), (x, y, z, w)))
    return np.array(rows), tuple(keys), len(rows)


# ---------------------------------------------------------------------------
# results

@dataclass
class FeasibilityResult:
    status: str                             # "feasible" | "infeasible"
    mode: str                               # "marginal-pair" | "full-table"
    settings: tuple
    inputs: tuple                           # exact input tables
    weights: Optional[dict] = None          # variable index -> Fraction
    certificate: Optional[BellExpression] = None
    margin: Fraction = Fraction(0)          # certificate value minus bound on the input
    rounding_error: float = 0.0             # L1 error introduced by rationalizing inputs
    rounding_bound: float = 0.0             # rounding_error times max |coefficient|
    iterations: int = 0
    diagnostics: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def strategy_weights(self) -> dict:
        """Weights keyed by (a, d, x, w, StrategyPair)."""
        if self.weights is None:
            raise ValueError("no weights on an infeasible result")
        L = layout(self.settings)
        return {tuple(int(v) for v in L.var_block[j]) + (L.strategy_pair(j),): q
                for j, q in self.weights.items()}

    def summary(self) -> dict:
        return {"status": self.status, "mode": self.mode,
                "margin": str(self.margin), "margin_float": float(self.margin),
                "rounding_error": self.rounding_error, "rounding_bound": self.rounding_bound,
                "iterations": self.iterations}


def _exactify(P: BehaviorTable, denominator: int):
    if P.exact:
        return P, 0.0
    r = rationalize(P, denominator)
    return r.table, r.error


def _check_inputs(P_ABD: BehaviorTable, P_ACD: BehaviorTable, tol: float = 0):
    for P, want in ((P_ABD, ("A", "B", "D")), (P_ACD, ("A", "C", "D"))):
        if set(P.parties) != set(want):
            raise ValueError(f"expected parties {want}, got {P.parties}")
        rep = check_no_signalling(P, tol=tol)
        if not rep.passed:
            raise SignallingError(f"{'-'.join(want)} marginal signals (max {rep.max_violation:.3g})")
    ad1 = marginalize(P_ABD, ("A", "D"), tol=tol).probs
    ad2 = marginalize(P_ACD, ("A", "D"), tol=tol).probs
    if ad1.shape != ad2.shape or np.any(ad1 != ad2):
        raise ValueError("the two marginals disagree on the A-D marginal")


def _reconcile_ad(P_ABD: BehaviorTable, P_ACD: BehaviorTable, tol: float = 1e-9):
    """Average tiny A-D inconsistencies of floating inputs; refuse larger ones."""
    ad1 = P_ABD.probs.sum(axis=1)[:, :, :, 0, :]
    ad2 = P_ACD.probs.sum(axis=1)[:, :, :, 0, :]
    gap = float(np.abs(ad1 - ad2).max())
    if gap > tol:
        raise ValueError(f"A-D marginals disagree by {gap:.3g}")
    return gap


def _settings_of(P_ABD: BehaviorTable, P_ACD: BehaviorTable) -> tuple:
    sa, sb, sd = P_ABD.settings_per_party
    sa2, sc, sd2 = P_ACD.settings_per_party
    if (sa, sd) != (sa2, sd2):
        raise ValueError("A and D settings differ between the marginals")
    if any(o != 2 for o in P_ABD.outcomes_per_party + P_ACD.outcomes_per_party):
        raise ValueError("binary outcomes only")
    return (sa, sb, sc, sd)


def _group_bound(L: LPLayout, col_values: list) -> Fraction:
    best = [None] * L.n_groups
    for j, v in enumerate(col_values):
        g = L.group[j]
        if best[g] is None or v > best[g]:
            best[g] = v
    return sum(best, Fraction(0))


def _integerize(y: list) -> list:
    den = lcm(*[v.denominator for v in y if v != 0]) if any(v != 0 for v in y) else 1
    ints = [int(v * den) for v in y]
    g = gcd(*ints) or 1
    return [Fraction(v // g) for v in ints]


def _certificate(L: LPLayout, A: np.ndarray, keys, n_rhs_rows: int, y: list, mode: str):
    """Bell expression F on the input rows and its exact bound.

    For any feasible weight vector w, F.p = (A^T y).w over the constraint
    rows (the homogeneous rows contribute zero), and since the weights in
    each (x, w) group sum to one this is at most the sum of per-group
    maxima of A^T y.
    """
    y = _integerize(y)
    yi = np.array([int(v) for v in y], dtype=object)
    col = (A.astype(object).T @ yi)
    bound = _group_bound(L, [Fraction(int(v)) for v in col])
    sA, sB, sC, sD = L.settings
    if mode == "marginal-pair":
        cAB = np.full((2, 2, 2, sA, sB, sD), Fraction(0), dtype=object)
        cAC = np.full((2, 2, 2, sA, sC, sD), Fraction(0), dtype=object)
        for r in range(n_rhs_rows):
            kind, o, s = keys[r]
            (cAB if kind == "ABD" else cAC)[o + s] = y[r]
        expr = BellExpression((("A", "B", "D"), ("A", "C", "D")), (cAB, cAC), bound,
                              "farkas-group-max")
    else:
        cF = np.full((2, 2, 2, 2, sA, sB, sC, sD), Fraction(0), dtype=object)
        for r in range(n_rhs_rows):
            _, o, s = keys[r]
            cF[o + s] = y[r]
        expr = BellExpression((PARTIES,), (cF,), bound, "farkas-group-max")
    return expr


def _solve(mode, settings, A, keys, n_rhs, rhs, inputs, rounding_error, warm_start):
    L = layout(settings)
    b = list(rhs) + [Fraction(0)] * (A.shape[0] - n_rhs)
    st = cached_row_structure((mode, settings), A)

    def accept(y):
        cert = _certificate(L, A, keys, n_rhs, y, mode)
        value = sum(((c * t.probs).sum() for c, t in zip(cert.coefficients, inputs)), Fraction(0))
        return value > cert.bound

    res = exact_feasibility(A, b, structure=st, warm_start=warm_start, accept_dual=accept)
    out = FeasibilityResult("feasible" if res.feasible else "infeasible", mode, settings, inputs,
                            rounding_error=rounding_error, iterations=res.iterations,
                            diagnostics=list(res.log))
    if res.feasible:
        out.weights = {j: v for j, v in enumerate(res.x) if v != 0}
        return out
    cert = _certificate(L, A, keys, n_rhs, res.y, mode)
    value = sum(((c * t.probs).sum() for c, t in zip(cert.coefficients, inputs)), Fraction(0))
    out.certificate = cert
    out.margin = value - cert.bound
    out.rounding_bound = rounding_bound(cert, rounding_error)
    return out


def rounding_bound(cert: BellExpression, error: float) -> float:
    """Largest change of the certificate value when every setting block of
    each input table moves by at most `error` in L1."""
    total = 0.0
    for scope, coef in zip(cert.scope, cert.coefficients):
        k = len(scope)
        flat = np.abs(coef.astype(float)).reshape(-1, int(np.prod(coef.shape[k:])))
        total += float(flat.max(axis=0).sum())
    return error * total


def decompose_locally(P_ABD: BehaviorTable, P_ACD: Optional[BehaviorTable] = None,
                      denominator: int = 10 ** 6, warm_start: bool = True) -> FeasibilityResult:
    """Exact feasibility of the conditionally local, no-signalling extension.

    Called with two tables it treats them as the A-B-D and A-C-D marginals;
    called with a single four-party table it matches that table entirely.
    Floating inputs are rationalized first and the rounding error recorded.
    """
    if P_ACD is None:
        return _decompose_full(P_ABD, denominator, warm_start)
    err = 0.0
    P_ABD = P_ABD.reorder(("A", "B", "D"))
    P_ACD = P_ACD.reorder(("A", "C", "D"))
    if not (P_ABD.exact and P_ACD.exact):
        _reconcile_ad(P_ABD, P_ACD)
        P_ABD, e1 = _exactify(P_ABD, denominator)
        P_ACD, e2 = _exactify(P_ACD, denominator)
        err = max(e1, e2)
    _check_inputs(P_ABD, P_ACD, tol=0)
    settings = _settings_of(P_ABD, P_ACD)
    A, keys, n_marg = marginal_system(settings)
    rhs = []
    for kind, o, s in keys[:n_marg]:
        rhs.append((P_ABD if kind == "ABD" else P_ACD).probs[o + s])
    return _solve("marginal-pair", settings, A, keys, n_marg, rhs, (P_ABD, P_ACD), err, warm_start)


def _decompose_full(P: BehaviorTable, denominator: int, warm_start: bool) -> FeasibilityResult:
    P = P.reorder(PARTIES)
    err = 0.0
    if not P.exact:
        P, err = _exactify(P, denominator)
    if any(o != 2 for o in P.outcomes_per_party):
        raise ValueError("binary outcomes only")
    settings = tuple(P.settings_per_party)
    A, keys, n = full_system(settings)
    rhs = [P.probs[o + s] for _, o, s in keys]
    return _solve("full-table", settings, A, keys, n, rhs, (P,), err, warm_start)


def quantum_marginals(setup: QuantumSetup, denominator: int = 10 ** 6):
    """Exact A-B-D and A-C-D marginals of a rationalized Born-rule table."""
    P = born_rule(setup)
    r = rationalize(P, denominator)
    T = r.table
    return marginalize(T, ("A", "B", "D"), tol=0), marginalize(T, ("A", "C", "D"), tol=0), r


def decompose_quantum(setup: QuantumSetup, denominator: int = 10 ** 6,
                      warm_start: bool = True) -> FeasibilityResult:
    P_ABD, P_ACD, r = quantum_marginals(setup, denominator)
    res = decompose_locally(P_ABD, P_ACD, warm_start=warm_start)
    res.rounding_error = r.error
    if res.certificate is not None:
        res.rounding_bound = rounding_bound(res.certificate, r.error)
    return res


def extract_certificate(result: FeasibilityResult) -> BellExpression:
    if result.status != "infeasible" or result.certificate is None:
        raise ValueError("certificates exist only for infeasible results")
    return result.certificate


def reconstruct_full_distribution(result: FeasibilityResult) -> BehaviorTable:
    if result.status != "feasible":
        raise ValueError("reconstruction needs a feasible result")
    L = layout(result.settings)
    sA, sB, sC, sD = result.settings
    Q = np.full((2, 2, 2, 2, sA, sB, sC, sD), Fraction(0), dtype=object)
    for j, q in result.weights.items():
        a, d, x, w = (int(v) for v in L.var_block[j])
        lb = L.strat_b[L.var_lb[j]]
        lc = L.strat_c[L.var_lc[j]]
        for y in range(sB):
            for z in range(sC):
                Q[a, lb[y], lc[z], d, x, y, z, w] += q
    return BehaviorTable(Q, PARTIES)


def certificate_vertex_max(cert: BellExpression, settings: tuple = (2, 2, 2, 2)) -> Fraction:
    """Largest value of the certificate over deterministic four-party strategies."""
    sA, sB, sC, sD = settings
    best = None
    strategies = [list(itertools.product(range(2), repeat=s)) for s in settings]
    for sa, sb, sc, sd in itertools.product(*strategies):
        val = Fraction(0)
        for scope, coef in zip(cert.scope, cert.coefficients):
            strat = {"A": sa, "B": sb, "C": sc, "D": sd}
            for s in itertools.product(*[range(len(strat[p])) for p in scope]):
                o = tuple(strat[p][s[k]] for k, p in enumerate(scope))
                val += coef[o + s]
        best = val if best is None else max(best, val)
    return best


# ---------------------------------------------------------------------------
# independent per-block oracle

def brute_force_local_check(P: BehaviorTable) -> bool:
    """Two parties, binary settings and outcomes: local iff no-signalling,
    non-negative, normalized and all eight CHSH inequalities hold."""
    if P.n_parties != 2 or P.probs.shape != (2, 2, 2, 2):
        raise ValueError("expects a two-party binary table")
    T = P if P.exact else P.to_fractions()
    p = T.probs
    if any(v < 0 for v in p.ravel()):
        return False
    if any(p[:, :, x, y].sum() != 1 for x in range(2) for y in range(2)):
        return False
    if not check_no_signalling(T, tol=0).passed:
        return False
    E = {(x, y): p[0, 0, x, y] + p[1, 1, x, y] - p[0, 1, x, y] - p[1, 0, x, y]
         for x in range(2) for y in range(2)}
    total = sum(E.values())
    return all(abs(total - 2 * E[k]) <= 2 for k in E)


# ---------------------------------------------------------------------------
# floating screening used by searches

def screening_score(P: BehaviorTable) -> float:
    """1 - v*, with v* the largest visibility of the marginal pair that stays
    feasible when mixed with white noise; positive means infeasible.

    Floating point only; verdicts come from decompose_locally.
    """
    P = P.reorder(PARTIES)
    settings = tuple(P.settings_per_party)
    A, keys, n_marg = marginal_system(settings)
    p = P.probs.astype(float)
    abd = p.sum(axis=2)[:, :, :, :, :, 0, :]
    acd = p.sum(axis=1)[:, :, :, :, 0, :, :]
    b = np.array([(abd if k == "ABD" else acd)[o + s] for k, o, s in keys[:n_marg]])
    u = np.full(n_marg, 1 / 8.0)
    bb = np.r_[b, np.zeros(A.shape[0] - n_marg)]
    uu = np.r_[u, np.zeros(A.shape[0] - n_marg)]
    # A w = v b + (1 - v) u   <=>   A w - v (b - u) = u
    Aeq = np.hstack([A, -(bb - uu)[:, None]])
    cost = np.r_[np.zeros(A.shape[1]), -1.0]
    res = linprog(cost, A_eq=Aeq, b_eq=uu, bounds=[(0, None)] * A.shape[1] + [(0, 4)],
                  method="highs")
    if res.status != 0:
        return 1.0
    return 1.0 - float(res.x[-1])
