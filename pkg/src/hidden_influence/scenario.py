"""Preset configurations, the end-to-end pipeline, reports and sweeps.

The pipeline asks four questions about a configuration of parties A, B, C,
D: is the model forced to produce local correlations between B and C;
can the A-B-D and A-C-D statistics be reproduced by such a model without
signalling; and do the two witness points exist at which a hidden signal
would become readable faster than light.  The verdict is positive only if
locality applies, the LP is certifiably infeasible and both witnesses
exist.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Optional, Union

import numpy as np

from .correlations import (BehaviorTable, QuantumSetup, deterministic_table, marginalize,
                           mixture)
from .influence_models import (FiniteDistance, MultiSim, MultiSimKind, VCausal, describe,
                               influence_graph, locality_condition_applies)
from .locality_lp import decompose_locally, decompose_quantum
from .spacetime import Event, FrameVelocity, WitnessSearchError, find_witness_point, witness_distance

SQRT3 = math.sqrt(3)


class PipelineError(RuntimeError):
    def __init__(self, step: str, message: str):
        super().__init__(f"[{step}] {message}")
        self.step = step


# ---------------------------------------------------------------------------
# behaviour sources

@dataclass(frozen=True)
class QuantumSource:
    setup: QuantumSetup
    denominator: int = 10 ** 6
    name: str = "quantum"


@dataclass(frozen=True)
class TableSource:
    table: BehaviorTable
    name: str = "table"


@dataclass(frozen=True)
class MarginalSource:
    abd: BehaviorTable
    acd: BehaviorTable
    name: str = "marginals"


BehaviorSource = Union[QuantumSource, TableSource, MarginalSource]


def load_cached_setup() -> tuple:
    """The committed best setup from the violation search and its metadata."""
    text = resources.files("hidden_influence").joinpath("data/cached_setup.json").read_text()
    meta = json.loads(text)
    return QuantumSetup.from_dict(meta["setup"]), meta


def cached_quantum_source() -> QuantumSource:
    setup, meta = load_cached_setup()
    return QuantumSource(setup, int(meta.get("denominator", 10 ** 6)), "cached-quantum")


def local_behavior(seed: int = 0, components: int = 3) -> TableSource:
    """Random rational mixture of deterministic four-party strategies."""
    rng = np.random.default_rng(seed)
    tables = [deterministic_table([tuple(int(v) for v in rng.integers(0, 2, 2)) for _ in range(4)],
                                  ("A", "B", "C", "D")) for _ in range(components)]
    w = [Fraction(int(v)) for v in rng.integers(1, 10, components)]
    tot = sum(w)
    return TableSource(mixture(tables, [v / tot for v in w]), f"local(seed={seed})")


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class Scenario:
    name: str
    events: tuple
    model: object
    c: float
    behavior_source: object
    pair_under_test: tuple = ("B", "C")
    params: tuple = ()

    def __post_init__(self):
        labels = [e.label for e in self.events]
        if len(set(labels)) != len(labels):
            raise ValueError("event labels must be unique")
        for p in self.pair_under_test:
            if p not in labels:
                raise ValueError(f"pair party {p!r} has no event")

    def event(self, label: str) -> Event:
        for e in self.events:
            if e.label == label:
                return e
        raise KeyError(label)

    @property
    def outer(self) -> tuple:
        return tuple(e.label for e in self.events if e.label not in self.pair_under_test)

    def with_behavior(self, source) -> "Scenario":
        return Scenario(self.name, self.events, self.model, self.c, source,
                        self.pair_under_test, self.params)

    def with_events(self, events) -> "Scenario":
        return Scenario(self.name, tuple(events), self.model, self.c, self.behavior_source,
                        self.pair_under_test, self.params)


def _rhombus(d: float):
    return {"A": (0.0, 0.0, 0.0), "D": (d, 0.0, 0.0),
            "B": (d / 2, SQRT3 * d / 2, 0.0), "C": (d / 2, -SQRT3 * d / 2, 0.0)}


def build_fig2b(d: float = 1.0, eps: float = 0.1, c: float = 1.0, behavior=None) -> Scenario:
    """Finite-distance model; A, D at distance d from everyone, B-C at sqrt(3) d."""
    if not (d > 0 and eps > 0 and c > 0):
        raise ValueError("need d > 0, eps > 0, c > 0")
    if d <= 4 * eps * c:
        raise ValueError(f"need d > 4*eps*c (d={d}, eps={eps}, c={c})")
    pos = _rhombus(d)
    times = {"A": -2 * eps, "D": -eps, "B": 0.0, "C": 0.0}
    events = tuple(Event(k, pos[k], times[k]) for k in "ABCD")
    return Scenario("fig2b", events, FiniteDistance(d), c,
                    behavior if behavior is not None else cached_quantum_source(),
                    ("B", "C"), (("d", d), ("eps", eps), ("c", c)))


def build_fig3(d: float = 1.0, v: float = 0.1, c: float = 1.0,
               kind: Union[str, MultiSimKind] = MultiSimKind.PAST_DEPENDENT,
               behavior=None) -> Scenario:
    """Multisimultaneity; B and C move along their common axis at speed v.

    Receding for the past-dependent variant, approaching for the
    future-informing one.  A and D are at rest.
    """
    kind = MultiSimKind(kind)
    if not (c > 0 and 0 < v < c / SQRT3 and d > 0):
        raise ValueError(f"need d > 0 and 0 < v < c/sqrt(3) (v={v}, c={c})")
    pos = _rhombus(d)
    t0 = -SQRT3 * v * d / (2 * c * c)
    times = {"A": t0, "D": t0, "B": 0.0, "C": 0.0}
    events = tuple(Event(k, pos[k], times[k]) for k in "ABCD")
    sgn = 1.0 if kind is MultiSimKind.PAST_DEPENDENT else -1.0
    vel = {"A": FrameVelocity(), "D": FrameVelocity(),
           "B": FrameVelocity((0.0, sgn * v, 0.0)), "C": FrameVelocity((0.0, -sgn * v, 0.0))}
    name = "fig3c" if kind is MultiSimKind.PAST_DEPENDENT else "fig3d"
    return Scenario(name, events, MultiSim(kind, vel), c,
                    behavior if behavior is not None else cached_quantum_source(),
                    ("B", "C"), (("d", d), ("v", v), ("c", c), ("kind", kind.value)))


def build_fig1b(v: float = 2.0, c: float = 1.0, L: float = 1.0, behavior=None) -> Scenario:
    """v-causal model; A and D inside the past v-cones of B and C, everyone
    else mutually outside light cones, B and C simultaneous.

    A at the origin at t=0, D at distance L measuring at the midpoint of
    [L/v, L/c); B and C sit just off the A-D axis at a common later time
    chosen so both are v-reachable from A and D but light-separated from
    them.
    """
    if not (c > 0 and L > 0 and v > 0):
        raise ValueError("need v > 0, c > 0, L > 0")
    if v <= c:
        warnings.warn("v <= c: the model is already refuted by experiment; the configuration "
                      "cannot separate light cones from v-cones", stacklevel=2)
        tD = L / v
        delta = L / (4 * v)
        T = tD + delta
        xm, h = L / 2, L / 8
    else:
        tD = (L / v + L / c) / 2
        delta = (L / c - tD) / 4
        T = tD + delta
        lo = max(c * T, L - v * delta)
        hi = L - c * delta
        xm = (lo + hi) / 2
        # keep inside the v-cones and outside the light cones with room to spare
        slack = min(xm - c * T, (L - xm) - c * delta, v * T - xm, v * delta - (L - xm), hi - lo)
        h = 0.25 * math.sqrt(max(slack, 0.0) * min(xm, L - xm))
    events = (Event("A", (0.0, 0.0, 0.0), 0.0), Event("B", (xm, h, 0.0), T),
              Event("C", (xm, -h, 0.0), T), Event("D", (L, 0.0, 0.0), tD))
    return Scenario("fig1b", events, VCausal(v), c,
                    behavior if behavior is not None else cached_quantum_source(),
                    ("B", "C"), (("v", v), ("c", c), ("L", L)))


PRESETS = {
    "fig1b": build_fig1b,
    "fig2b": build_fig2b,
    "fig3c": lambda **kw: build_fig3(kind=MultiSimKind.PAST_DEPENDENT, **kw),
    "fig3d": lambda **kw: build_fig3(kind=MultiSimKind.FUTURE_INFORMING, **kw),
}


def build_preset(name: str, **params) -> Scenario:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return builder(**params)


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class WitnessInfo:
    label: str
    position: Optional[tuple]
    time: Optional[float]
    nearest_distance: Optional[float]   # from the apex it shadows (A for A', D for D')

    def to_dict(self):
        return {"label": self.label, "exists": self.position is not None,
                "position": list(self.position) if self.position else None,
                "time": self.time, "nearest_distance": self.nearest_distance}


@dataclass
class Report:
    scenario: str
    params: dict
    model: str
    behavior: str
    locality_applies: bool
    edges: list
    lp_status: str
    lp_margin: Optional[Fraction]
    lp_rounding_bound: float
    lp_certified: bool
    witnesses: dict
    ftl_verdict: bool
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        expected = (self.locality_applies and self.lp_certified
                    and all(w.position is not None for w in self.witnesses.values()))
        if self.ftl_verdict != expected:
            raise AssertionError("verdict must be the conjunction of the three conditions")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario, "params": self.params, "model": self.model,
            "behavior": self.behavior, "locality_applies": self.locality_applies,
            "influence_edges": [list(e) for e in self.edges],
            "lp": {"status": self.lp_status,
                   "margin": None if self.lp_margin is None else str(self.lp_margin),
                   "margin_float": None if self.lp_margin is None else float(self.lp_margin),
                   "rounding_bound": self.lp_rounding_bound, "certified": self.lp_certified},
            "witness_points": {k: w.to_dict() for k, w in sorted(self.witnesses.items())},
            "ftl_verdict": self.ftl_verdict, "diagnostics": list(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        out = [f"scenario      {self.scenario}  {self.params}",
               f"model         {self.model}",
               f"behaviour     {self.behavior}",
               f"influences    {', '.join(f'{s}->{t}' for s, t in self.edges) or 'none'}",
               f"locality      {'applies' if self.locality_applies else 'does not apply'}",
               f"lp            {self.lp_status}"
               + (f" margin={float(self.lp_margin):.6g} (rounding bound {self.lp_rounding_bound:.3g})"
                  if self.lp_margin is not None else "")]
        for k, w in sorted(self.witnesses.items()):
            if w.position is None:
                out.append(f"witness {k:<5} none")
            else:
                pos = ", ".join(f"{v:.6g}" for v in w.position)
                out.append(f"witness {k:<5} ({pos}) t={w.time:.6g} nearest={w.nearest_distance:.6g}")
        out.append(f"verdict       {'faster-than-light signalling' if self.ftl_verdict else 'not established'}")
        out += [f"  - {d}" for d in self.diagnostics]
        return "\n".join(out) + "\n"


def _marginal_pair(source):
    if isinstance(source, MarginalSource):
        return source.abd, source.acd
    if isinstance(source, TableSource):
        P = source.table
        return (marginalize(P, ("A", "B", "D"), tol=0 if P.exact else 1e-10),
                marginalize(P, ("A", "C", "D"), tol=0 if P.exact else 1e-10))
    raise TypeError(f"unsupported behaviour source {source!r}")


def run_pipeline(s: Scenario, with_locus_distance: bool = True) -> Report:
    diag = []
    p, q = s.pair_under_test
    outer = s.outer
    if len(outer) != 2:
        raise PipelineError("setup", "need exactly two parties besides the tested pair")
    a_lab, d_lab = outer
    try:
        graph = influence_graph(s.model, list(s.events), s.c)
        applies = locality_condition_applies(s.model, list(s.events), (p, q), s.c)
    except (KeyError, ValueError) as exc:
        raise PipelineError("locality", str(exc)) from exc
    diag.append(f"locality: {p}-{q} {'disconnected' if applies else 'connected'} "
                f"under {describe(s.model)}")

    try:
        if isinstance(s.behavior_source, QuantumSource):
            res = decompose_quantum(s.behavior_source.setup, s.behavior_source.denominator)
        else:
            res = decompose_locally(*_marginal_pair(s.behavior_source))
    except (ValueError, TypeError) as exc:
        raise PipelineError("lp", str(exc)) from exc
    certified = res.status == "infeasible" and float(res.margin) > res.rounding_bound
    margin = res.margin if res.status == "infeasible" else None
    diag.append(f"lp: {res.status}" + (f", margin {float(res.margin):.6g} vs rounding bound "
                                       f"{res.rounding_bound:.3g}" if margin is not None else
                                       ", a conditionally local no-signalling extension exists"))

    witnesses = {}
    pair_events = (s.event(p), s.event(q))
    for apex, other in ((a_lab, d_lab), (d_lab, a_lab)):
        lab = apex + "'"
        inc = [s.event(apex)] + list(pair_events)
        exc = [s.event(other)]
        try:
            pt = find_witness_point(inc, exc, pair_events, s.c, label=lab)
            dist = (witness_distance(inc, exc, s.event(apex), pair_events, s.c)
                    if (pt is not None and with_locus_distance) else None)
        except WitnessSearchError as exc_:
            raise PipelineError("witness", str(exc_)) from exc_
        witnesses[lab] = WitnessInfo(lab, pt.position if pt else None, pt.time if pt else None, dist)
        diag.append(f"witness {lab}: " + ("found" if pt else "none on the search domain"))

    verdict = applies and certified and all(w.position is not None for w in witnesses.values())
    params = {k: v for k, v in s.params}
    src = s.behavior_source
    return Report(s.name, params, describe(s.model), getattr(src, "name", type(src).__name__),
                  applies, graph.sorted_edges(), res.status, margin, res.rounding_bound, certified,
                  witnesses, verdict, diag)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = ("index", "params", "locality_applies", "lp_status", "margin",
                 "witness_A_distance", "witness_D_distance", "ftl_verdict", "error")


def _sweep_row(args):
    idx, preset, params, behavior = args
    row = {"index": idx, "params": json.dumps(params, sort_keys=True)}
    try:
        s = build_preset(preset, **params)
        if behavior is not None:
            s = s.with_behavior(behavior)
        rep = run_pipeline(s)
        wa, wd = (rep.witnesses.get(k + "'") for k in s.outer)
        row.update(locality_applies=rep.locality_applies, lp_status=rep.lp_status,
                   margin="" if rep.lp_margin is None else float(rep.lp_margin),
                   witness_A_distance="" if wa.nearest_distance is None else wa.nearest_distance,
                   witness_D_distance="" if wd.nearest_distance is None else wd.nearest_distance,
                   ftl_verdict=rep.ftl_verdict, error="")
    except Exception as exc:  # recorded per row; the sweep continues
        row.update(locality_applies="", lp_status="error", margin="", witness_A_distance="",
                   witness_D_distance="", ftl_verdict=False, error=f"{type(exc).__name__}: {exc}")
    return row


def sweep(preset: str, grid: dict, behavior=None, workers: int = 1) -> list:
    """One pipeline run per point of the Cartesian grid, rows in grid order."""
    names = sorted(grid)
    points = [dict(zip(names, vals)) for vals in itertools.product(*(grid[n] for n in names))]
    jobs = [(i, preset, p, behavior) for i, p in enumerate(points)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    return sorted(rows, key=lambda r: r["index"])


def sweep_table(rows: list, delimiter: str = ",") -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, delimiter=delimiter, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
