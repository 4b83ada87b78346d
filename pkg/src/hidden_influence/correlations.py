"""Behaviour tables, no-signalling checks, Born-rule statistics, Bell expressions.

A behaviour is stored as one dense array indexed by every party's outcome
followed by every party's setting, so ``P.probs[a, b, x, y]`` is
P(ab|xy).  Tables built combinatorially hold ``Fraction`` objects and are
exact; tables from the Born rule hold doubles.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np


class SignallingError(ValueError):
    """A party's setting changes the statistics of the others."""


# ---------------------------------------------------------------------------
# behaviour tables

@dataclass(frozen=True)
class BehaviorTable:
    probs: np.ndarray
    parties: tuple = ()

    def __post_init__(self):
        probs = np.asarray(self.probs)
        if probs.ndim % 2:
            raise ValueError("table needs one outcome and one setting axis per party")
        n = probs.ndim // 2
        parties = tuple(self.parties) or tuple("ABCDEFGH"[:n])
        if len(parties) != n or len(set(parties)) != n:
            raise ValueError("party labels must be unique and match the table rank")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "parties", parties)

    @property
    def n_parties(self) -> int:
        return self.probs.ndim // 2

    @property
    def outcomes_per_party(self) -> tuple:
        return self.probs.shape[: self.n_parties]

    @property
    def settings_per_party(self) -> tuple:
        return self.probs.shape[self.n_parties:]

    @property
    def exact(self) -> bool:
        return self.probs.dtype == object

    def prob(self, outcomes: Sequence[int], settings: Sequence[int]):
        return self.probs[tuple(outcomes) + tuple(settings)]

    def normalization_error(self):
        n = self.n_parties
        tot = self.probs.sum(axis=tuple(range(n)))
        if self.exact:
            return max(abs(t - 1) for t in tot.ravel())
        return float(np.abs(tot - 1).max())

    def validate(self, tol: float = 1e-9) -> None:
        if self.exact:
            if any(not isinstance(v, Fraction) or v < 0 for v in self.probs.ravel()):
                raise ValueError("exact table entries must be non-negative Fractions")
            if self.normalization_error() != 0:
                raise ValueError("exact table is not normalized")
        else:
            if not np.all(np.isfinite(self.probs)) or self.probs.min() < -tol:
                raise ValueError("negative or non-finite probability")
            if self.normalization_error() > tol:
                raise ValueError("table is not normalized")

    def to_float(self) -> "BehaviorTable":
        return BehaviorTable(self.probs.astype(float), self.parties)

    def to_fractions(self, max_denominator: Optional[int] = None) -> "BehaviorTable":
        """Entry-wise conversion; lossless for doubles when no limit is given."""
        conv = (lambda v: Fraction(v)) if max_denominator is None else (
            lambda v: Fraction(v).limit_denominator(max_denominator))
        return BehaviorTable(_obj(np.vectorize(conv, otypes=[object])(self.probs)), self.parties)

    def reorder(self, parties: Sequence[str]) -> "BehaviorTable":
        idx = [self.parties.index(p) for p in parties]
        n = self.n_parties
        return BehaviorTable(self.probs.transpose(idx + [n + i for i in idx]), tuple(parties))

    # text serialization ----------------------------------------------------
    def dumps(self) -> str:
        lines = ["# behaviour table",
                 "parties: " + " ".join(self.parties),
                 "outcomes: " + " ".join(map(str, self.outcomes_per_party)),
                 "settings: " + " ".join(map(str, self.settings_per_party)),
                 "values: " + ("exact" if self.exact else "float"),
                 "# settings | outcomes | probability"]
        for s in itertools.product(*map(range, self.settings_per_party)):
            for o in itertools.product(*map(range, self.outcomes_per_party)):
                v = self.probs[o + s]
                txt = str(v) if self.exact else repr(float(v))
                lines.append(f"{' '.join(map(str, s))} | {' '.join(map(str, o))} | {txt}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "BehaviorTable":
        header, rows = {}, []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "|" in line:
                rows.append([part.split() for part in line.split("|")])
            else:
                key, _, val = line.partition(":")
                header[key.strip()] = val.split()
        try:
            parties = tuple(header["parties"])
            outs = tuple(int(v) for v in header["outcomes"])
            sets = tuple(int(v) for v in header["settings"])
        except KeyError as exc:
            raise ValueError(f"missing header field {exc}") from None
        exact = header.get("values", ["exact"])[0] == "exact"
        probs = np.zeros(outs + sets, dtype=object if exact else float)
        seen = set()
        for s, o, p in rows:
            key = tuple(map(int, o)) + tuple(map(int, s))
            if key in seen:
                raise ValueError(f"duplicate entry {key}")
            seen.add(key)
            probs[key] = Fraction(p[0]) if exact else float(p[0])
        if len(seen) != probs.size:
            raise ValueError(f"expected {probs.size} entries, found {len(seen)}")
        return cls(probs, parties)


def _obj(a) -> np.ndarray:
    out = np.empty(np.shape(a), dtype=object)
    out[...] = a
    return out


def exact_table(probs, parties=()) -> BehaviorTable:
    """Build an exact table from ints, Fractions or strings."""
    arr = np.asarray(probs, dtype=object)
    return BehaviorTable(_obj(np.vectorize(Fraction, otypes=[object])(arr)), parties)


def product_table(tables: Sequence[BehaviorTable]) -> BehaviorTable:
    """Independent parties: the tensor product of their tables."""
    probs = tables[0].probs
    parties = list(tables[0].parties)
    for t in tables[1:]:
        n1, n2 = probs.ndim // 2, t.n_parties
        outer = np.multiply.outer(probs, t.probs)
        # interleave to (outcomes..., settings...)
        order = (list(range(n1)) + list(range(2 * n1, 2 * n1 + n2))
                 + list(range(n1, 2 * n1)) + list(range(2 * n1 + n2, 2 * n1 + 2 * n2)))
        probs = outer.transpose(order)
        parties += list(t.parties)
    return BehaviorTable(probs, tuple(parties))


def deterministic_table(strategies: Sequence[Sequence[int]], parties=(),
                        outcomes: Optional[Sequence[int]] = None) -> BehaviorTable:
    """Each party outputs strategies[k][setting] with certainty."""
    n = len(strategies)
    outs = tuple(outcomes) if outcomes else (2,) * n
    sets = tuple(len(s) for s in strategies)
    probs = np.full(outs + sets, Fraction(0), dtype=object)
    for s in itertools.product(*map(range, sets)):
        o = tuple(strategies[k][s[k]] for k in range(n))
        probs[o + s] = Fraction(1)
    return BehaviorTable(probs, parties)


def uniform_table(n: int, settings: int = 2, outcomes: int = 2, parties=()) -> BehaviorTable:
    shape = (outcomes,) * n + (settings,) * n
    return BehaviorTable(np.full(shape, Fraction(1, outcomes ** n), dtype=object), parties)


def mixture(tables: Sequence[BehaviorTable], weights: Sequence) -> BehaviorTable:
    probs = sum(w * t.probs for w, t in zip(weights, tables))
    return BehaviorTable(probs, tables[0].parties)


def pr_box(parties=("A", "B")) -> BehaviorTable:
    """a XOR b = x AND y with uniform marginals."""
    probs = np.full((2, 2, 2, 2), Fraction(0), dtype=object)
    for a, b, x, y in itertools.product(range(2), repeat=4):
        if a ^ b == x & y:
            probs[a, b, x, y] = Fraction(1, 2)
    return BehaviorTable(probs, parties)


# ---------------------------------------------------------------------------
# no-signalling

@dataclass(frozen=True)
class SignallingViolation:
    party: str
    settings: tuple      # (setting_i, setting_j) of the signalling party
    context: dict        # other parties' settings and outcomes
    magnitude: float


@dataclass
class NSReport:
    passed: bool
    max_violation: float
    violations: list = field(default_factory=list)

    def parties(self) -> set:
        return {v.party for v in self.violations}


def check_no_signalling(P: BehaviorTable, tol: float = 1e-10, top: int = 20) -> NSReport:
    """Compare each party-dropped marginal across that party's settings.

    Exact tables are compared exactly when tol is 0.
    """
    n = P.n_parties
    found = []
    worst = 0
    for k in range(n):
        marg = P.probs.sum(axis=k)  # axes: outcomes(others), settings(all)
        s_axis = n - 1 + k
        m_k = P.settings_per_party[k]
        others = [q for q in range(n) if q != k]
        for i, j in itertools.combinations(range(m_k), 2):
            diff = np.take(marg, i, axis=s_axis) - np.take(marg, j, axis=s_axis)
            mag = np.abs(diff.astype(float)) if P.exact else np.abs(diff)
            exact_nonzero = (diff != 0) if P.exact else None
            worst = max(worst, float(mag.max()) if mag.size else 0.0)
            bad = (exact_nonzero if (P.exact and tol == 0) else mag > tol)
            for idx in zip(*np.nonzero(bad)):
                outs = idx[: n - 1]
                sets = idx[n - 1:]
                ctx = {}
                for pos, q in enumerate(others):
                    ctx[P.parties[q]] = {"setting": int(sets[pos]), "outcome": int(outs[pos])}
                found.append(SignallingViolation(P.parties[k], (i, j), ctx, float(mag[idx])))
    found.sort(key=lambda v: (-v.magnitude, v.party))
    passed = not found
    return NSReport(passed, worst, found[:top])


def marginalize(P: BehaviorTable, keep: Sequence[str], tol: float = 1e-10) -> BehaviorTable:
    """Sum out dropped parties at their first setting after checking they do not signal."""
    keep = list(keep)
    for p in keep:
        if p not in P.parties:
            raise KeyError(f"unknown party {p!r}")
    drop = [p for p in P.parties if p not in keep]
    if drop:
        rep = check_no_signalling(P, tol=0 if P.exact and tol == 0 else tol)
        culprits = sorted(rep.parties() & set(drop))
        if culprits:
            worst = max(v.magnitude for v in rep.violations if v.party in culprits)
            raise SignallingError(
                f"cannot drop {', '.join(culprits)}: their settings change the rest "
                f"(max discrepancy {worst:.3g})")
    n = P.n_parties
    out = P.probs
    for p in sorted(drop, key=P.parties.index, reverse=True):
        k = P.parties.index(p)
        out = np.take(out, 0, axis=n + k)
        out = out.sum(axis=k)
        n -= 1
    remaining = tuple(p for p in P.parties if p in keep)
    return BehaviorTable(out, remaining).reorder(keep)


# ---------------------------------------------------------------------------
# quantum statistics

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def bloch(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi),
                     math.cos(theta)])


def eigenbasis(axis) -> np.ndarray:
    """Rows are <+| and <-| for the observable axis . sigma."""
    x, y, z = axis
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x)
    cp, sp = math.cos(theta / 2), math.sin(theta / 2)
    plus = np.array([cp, np.exp(1j * phi) * sp])
    minus = np.array([-np.exp(-1j * phi) * sp, cp])
    return np.array([plus, minus]).conj()


@dataclass(frozen=True)
class QuantumSetup:
    state: np.ndarray
    axes: tuple          # axes[party][setting] -> unit 3-vector
    parties: tuple = ()

    def __post_init__(self):
        psi = np.asarray(self.state, dtype=complex).ravel()
        n = len(self.axes)
        if psi.size != 2 ** n:
            raise ValueError(f"state of size {psi.size} does not match {n} qubits")
        if abs(np.linalg.norm(psi) - 1) > 1e-12:
            raise ValueError("state is not normalized")
        axes = tuple(tuple(np.asarray(a, dtype=float) for a in party) for party in self.axes)
        for party in axes:
            for a in party:
                if a.shape != (3,) or abs(np.linalg.norm(a) - 1) > 1e-12:
                    raise ValueError("measurement axes must be unit 3-vectors")
        object.__setattr__(self, "state", psi)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "parties", tuple(self.parties) or tuple("ABCDEFGH"[:n]))

    @property
    def n_parties(self) -> int:
        return len(self.axes)

    def to_dict(self) -> dict:
        return {"parties": list(self.parties),
                "state_real": self.state.real.tolist(), "state_imag": self.state.imag.tolist(),
                "axes": [[a.tolist() for a in party] for party in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantumSetup":
        psi = np.asarray(d["state_real"]) + 1j * np.asarray(d["state_imag"])
        return cls(psi, tuple(tuple(np.asarray(a) for a in p) for p in d["axes"]),
                   tuple(d.get("parties", ())))


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def singlet() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


def born_rule(setup: QuantumSetup) -> BehaviorTable:
    """Outcome 0 is the +1 eigenvalue of each observable."""
    n = setup.n_parties
    amp = setup.state.reshape((2,) * n)
    for k in range(n):
        U = np.array([eigenbasis(ax) for ax in setup.axes[k]])  # (settings, outcome, 2)
        amp = _apply(U, amp, k)
    probs = np.abs(amp) ** 2
    # _apply leaves axes ordered (s_0, o_0, s_1, o_1, ...)
    order = [2 * k + 1 for k in range(n)] + [2 * k for k in range(n)]
    return BehaviorTable(probs.transpose(order), setup.parties)


def _apply(U, amp, k):
    # amp has axes (s_0,o_0,...,s_{k-1},o_{k-1}, q_k, ..., q_{n-1})
    pos = 2 * k
    out = np.tensordot(U, amp, axes=([2], [pos]))      # (s_k, o_k, rest...)
    rest = list(range(2, out.ndim))
    order = rest[:pos] + [0, 1] + rest[pos:]
    return out.transpose(order)


# ---------------------------------------------------------------------------
# exact rational approximation of binary-outcome tables

def _hadamard(probs: np.ndarray, n: int, inverse: bool) -> np.ndarray:
    out = probs
    for k in range(n):
        a0 = np.take(out, 0, axis=k)
        a1 = np.take(out, 1, axis=k)
        if inverse:
            half = Fraction(1, 2) if out.dtype == object else 0.5
            out = np.stack([(a0 + a1) * half, (a0 - a1) * half], axis=k)
        else:
            out = np.stack([a0 + a1, a0 - a1], axis=k)
    return out


@dataclass
class Rationalized:
    table: BehaviorTable
    error: float            # max over settings of the L1 distance to the input
    denominator: int
    mixing: Fraction        # weight of uniform noise added to restore positivity


def rationalize(P: BehaviorTable, denominator: int = 10 ** 6) -> Rationalized:
    """Exactly no-signalling rational table near a binary-outcome behaviour.

    Works on correlators: full-body and lower-order correlators are rounded
    to multiples of 1/denominator after averaging the lower-order ones over
    the settings of absent parties, so the result satisfies no-signalling
    exactly.  A small rational amount of white noise is mixed in only when
    rounding would leave a negative entry.
    """
    n = P.n_parties
    if any(o != 2 for o in P.outcomes_per_party):
        raise ValueError("rationalization is implemented for binary outcomes")
    src = P.probs.astype(float)
    corr = _hadamard(src, n, inverse=False)
    # a party absent from a correlator (index 0) must not depend on its setting
    for k in range(n):
        sl0 = [slice(None)] * (2 * n)
        sl0[k] = 0
        block = corr[tuple(sl0)]
        avg = block.mean(axis=n - 1 + k, keepdims=True)
        corr[tuple(sl0)] = np.broadcast_to(avg, block.shape)
    D = int(denominator)
    rounded = _obj(np.vectorize(lambda v: Fraction(int(round(v * D)), D), otypes=[object])(corr))
    zero = (0,) * n
    rounded[zero] = np.full(rounded[zero].shape, Fraction(1), dtype=object)
    exact = _hadamard(rounded, n, inverse=True)
    lo = min(exact.ravel())
    eta = Fraction(0)
    if lo < 0:
        u = Fraction(1, 2 ** n)
        eta = -lo / (u - lo)
        exact = exact * (1 - eta) + eta * u
    table = BehaviorTable(exact, P.parties)
    err = np.abs(exact.astype(float) - src).sum(axis=tuple(range(n))).max()
    return Rationalized(table, float(err), D, eta)


# ---------------------------------------------------------------------------
# Bell expressions

@dataclass(frozen=True)
class BellExpression:
    """Linear functional on one or more marginals, with an upper bound.

    coefficients[i] has the shape of the marginal table over scope[i]
    (outcomes then settings).
    """
    scope: tuple
    coefficients: tuple
    bound: object
    tag: str = ""

    def __post_init__(self):
        scope = tuple(tuple(s) for s in self.scope)
        coefs = tuple(np.asarray(c) for c in self.coefficients)
        if len(scope) != len(coefs):
            raise ValueError("one coefficient table per scope entry")
        for s, c in zip(scope, coefs):
            if c.ndim != 2 * len(s):
                raise ValueError(f"coefficients for {s} have wrong rank")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "coefficients", coefs)

    @property
    def exact(self) -> bool:
        return all(c.dtype == object for c in self.coefficients) and not isinstance(self.bound, float)

    def dumps(self) -> str:
        lines = ["# bell expression", f"tag: {self.tag or 'none'}", f"bound: {self.bound}"]
        for s, c in zip(self.scope, self.coefficients):
            k = len(s)
            lines.append(f"scope: {','.join(s)} outcomes={','.join(map(str, c.shape[:k]))} "
                         f"settings={','.join(map(str, c.shape[k:]))}")
        lines.append("# term parties settings outcomes coefficient")
        for s, c in zip(self.scope, self.coefficients):
            k = len(s)
            for idx in itertools.product(*map(range, c.shape)):
                v = c[idx]
                if v != 0:
                    val = str(v) if isinstance(v, (Fraction, int)) else repr(float(v))
                    lines.append(f"term {','.join(s)} {','.join(map(str, idx[k:]))} "
                                 f"{','.join(map(str, idx[:k]))} {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "BellExpression":
        tag, bound = "", None
        scopes, tables = [], {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(" ") if line.startswith("term") else line.partition(":")
            if head == "tag":
                tag = "" if rest.strip() == "none" else rest.strip()
            elif head == "bound":
                bound = _num(rest.strip())
            elif head == "scope":
                parts = rest.split()
                s = tuple(parts[0].split(","))
                kv = dict(p.split("=") for p in parts[1:])
                shape = tuple(int(v) for v in kv["outcomes"].split(",")) + tuple(
                    int(v) for v in kv["settings"].split(","))
                scopes.append(s)
                tables[s] = np.full(shape, Fraction(0), dtype=object)
            elif head == "term":
                ps, sets, outs, val = rest.split()
                s = tuple(ps.split(","))
                idx = tuple(map(int, outs.split(","))) + tuple(map(int, sets.split(",")))
                tables[s][idx] = _num(val)
            else:
                raise ValueError(f"unrecognised line: {line!r}")
        if bound is None:
            raise ValueError("missing bound")
        return cls(tuple(scopes), tuple(tables[s] for s in scopes), bound, tag)


def _num(s: str):
    return Fraction(s)


def evaluate_bell_expression(expr: BellExpression, P: BehaviorTable, tol: float = 1e-10):
    total = 0
    for s, c in zip(expr.scope, expr.coefficients):
        if not set(s) <= set(P.parties):
            raise ValueError(f"expression scope {s} not among parties {P.parties}")
        M = P.reorder(s) if len(s) == P.n_parties else marginalize(P, s, tol=0 if P.exact else tol)
        if M.probs.shape != c.shape:
            raise ValueError(f"scope {s}: table shape {M.probs.shape} vs coefficients {c.shape}")
        total = total + (c * M.probs).sum()
    return total


def correlator_expression(pairs: dict, scope=("A", "B"), bound=2, tag="") -> BellExpression:
    """Sum of weighted two-party correlators <A_x B_y> in probability form."""
    coef = np.full((2, 2, 2, 2), Fraction(0), dtype=object)
    for (x, y), wgt in pairs.items():
        for a, b in itertools.product(range(2), repeat=2):
            coef[a, b, x, y] += Fraction(wgt) * (1 if a == b else -1)
    return BellExpression((tuple(scope),), (coef,), Fraction(bound), tag)


def chsh(scope=("A", "B")) -> BellExpression:
    return correlator_expression({(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}, scope, 2, "chsh")


# ---------------------------------------------------------------------------
# search for locality-violating quantum setups

@dataclass(frozen=True)
class StateFamily:
    name: str
    n_params: int
    build: Callable[[np.ndarray], QuantumSetup]


def _axes_from_angles(theta: np.ndarray, n: int, m: int = 2):
    th = np.asarray(theta).reshape(n, m, 2)
    return tuple(tuple(bloch(*th[k, s]) for s in range(m)) for k in range(n))


def ghz_family(n: int = 4) -> StateFamily:
    """GHZ state with two free measurement axes per party."""
    psi = ghz_state(n)
    return StateFamily("ghz", 4 * n, lambda p: QuantumSetup(psi, _axes_from_angles(p, n)))


def product_family(n: int = 4) -> StateFamily:
    """Product of pure qubit states, free axes; every behaviour is local."""
    def build(p):
        p = np.asarray(p)
        psi = np.array([1.0 + 0j])
        for k in range(n):
            th, ph = p[4 * n + 2 * k], p[4 * n + 2 * k + 1]
            q = np.array([math.cos(th / 2), np.exp(1j * ph) * math.sin(th / 2)])
            psi = np.kron(psi, q)
        return QuantumSetup(psi, _axes_from_angles(p[: 4 * n], n))
    return StateFamily("product", 6 * n, build)


@dataclass
class SearchResult:
    setup: QuantumSetup
    params: np.ndarray
    margin: object               # exact certificate margin when certified, else screening score
    certified: bool
    screening_score: float
    certificate: Optional[BellExpression] = None
    history: list = field(default_factory=list)


def violation_search(family: StateFamily, oracle: Optional[Callable] = None,
                     restarts: int = 200, sweeps: int = 6, step: float = 0.4,
                     seed: int = 0, verify: bool = True) -> SearchResult:
    """Random-restart coordinate ascent on the screening score of `oracle`.

    `oracle(P)` returns a float score that is positive exactly when the
    behaviour's tripartite marginals admit no conditionally local
    extension.  The best point is then re-checked with the exact LP and,
    when infeasible, its certificate margin is reported.
    """
    from . import locality_lp

    if oracle is None:
        oracle = locality_lp.screening_score
    rng = np.random.default_rng(seed)

    def score(p):
        return float(oracle(born_rule(family.build(p))))

    best_p, best_s, history = None, -np.inf, []
    for r in range(restarts):
        p = rng.uniform(0, 2 * np.pi, family.n_params)
        s = score(p)
        h = step
        for _ in range(sweeps):
            improved = False
            for i in range(family.n_params):
                for sgn in (1, -1):
                    q = p.copy()
                    q[i] += sgn * h
                    sq = score(q)
                    if sq > s + 1e-12:
                        p, s, improved = q, sq, True
                        break
            if not improved:
                h /= 2
        history.append(s)
        if s > best_s:
            best_p, best_s = p, s
    setup = family.build(best_p)
    result = SearchResult(setup, best_p, best_s, False, best_s, None, history)
    if verify and best_s > 0:
        res = locality_lp.decompose_quantum(setup)
        if res.status == "infeasible" and res.margin > res.rounding_bound:
            result.margin = res.margin
            result.certified = True
            result.certificate = res.certificate
    return result
