"""Command-line front end.

Exit status: 0 when the command's verdict is true, 1 when it is false, 2 on
bad input or a failed precondition.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from .correlations import BehaviorTable, check_no_signalling
from .influence_models import (FiniteDistance, MultiSim, MultiSimKind, VCausal, describe,
                               influence_graph)
from .locality_lp import decompose_locally
from .scenario import (PRESETS, MarginalSource, PipelineError, Scenario, TableSource,
                       build_preset, cached_quantum_source, local_behavior, run_pipeline,
                       sweep, sweep_table)
from .spacetime import Event, FrameVelocity, WitnessSearchError, find_witness_point, witness_distance

PRESET_PARAMS = {"fig1b": ("v", "c", "L"), "fig2b": ("d", "eps", "c"),
                 "fig3c": ("d", "v", "c"), "fig3d": ("d", "v", "c")}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _parse_event(label: str, text: str) -> Event:
    pos, sep, t = text.partition("@")
    if not sep:
        raise UsageError(f"event {label}: expected 'x y z @ t'")
    return Event(label, tuple(_floats(pos)), float(t))


def _model_from_section(sec, velocities) -> object:
    kind = sec.get("kind", "").strip()
    if kind == "v-causal":
        return VCausal(sec.getfloat("v"))
    if kind == "finite-distance":
        return FiniteDistance(sec.getfloat("d"))
    if kind in ("past-dependent", "future-informing"):
        return MultiSim(MultiSimKind(kind), velocities)
    raise UsageError(f"unknown model kind {kind!r}")


def _behavior(kind: str, seed: int, table, abd, acd):
    if kind == "cached":
        return cached_quantum_source()
    if kind == "local":
        return local_behavior(seed)
    if kind == "table":
        if not table:
            raise UsageError("behaviour 'table' needs a table path")
        return TableSource(BehaviorTable.loads(Path(table).read_text()), f"table({table})")
    if kind == "marginals":
        if not (abd and acd):
            raise UsageError("behaviour 'marginals' needs both marginal paths")
        return MarginalSource(BehaviorTable.loads(Path(abd).read_text()),
                              BehaviorTable.loads(Path(acd).read_text()), "marginals")
    raise UsageError(f"unknown behaviour source {kind!r}")


def scenario_from_args(args) -> Scenario:
    """Preset plus overrides from the config file and then the command line."""
    cfg = configparser.ConfigParser()
    if getattr(args, "config", None):
        if not cfg.read(args.config):
            raise UsageError(f"cannot read config {args.config}")
    sc = cfg["scenario"] if cfg.has_section("scenario") else {}
    preset = args.preset or sc.get("preset", "fig2b")
    params = {}
    for key in PRESET_PARAMS.get(preset, ()):
        if key in sc:
            params[key] = float(sc[key])
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    bsec = cfg["behavior"] if cfg.has_section("behavior") else {}
    bkind = args.behavior or bsec.get("source", "cached")
    seed = args.seed if args.seed is not None else int(bsec.get("seed", 0))
    behavior = _behavior(bkind, seed, args.table or bsec.get("table"),
                         getattr(args, "abd", None) or bsec.get("abd"),
                         getattr(args, "acd", None) or bsec.get("acd"))
    if cfg.has_section("events"):
        vel = {k.upper(): FrameVelocity(tuple(_floats(v)))
               for k, v in (cfg["velocities"].items() if cfg.has_section("velocities") else [])}
        events = tuple(_parse_event(k.upper(), v) for k, v in cfg["events"].items())
        if not cfg.has_section("model"):
            raise UsageError("custom events need a [model] section")
        model = _model_from_section(cfg["model"], vel)
        pair = tuple(cfg.get("pair", "parties", fallback="B C").split())
        c = float(sc.get("c", 1.0)) if args.c is None else args.c
        return Scenario(sc.get("name", "custom"), events, model, c, behavior, pair,
                        tuple(sorted(params.items())))
    try:
        return build_preset(preset, behavior=behavior, **params)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def _parse_grid(specs) -> dict:
    grid = {}
    for spec in specs or []:
        name, _, rng = spec.partition("=")
        if not rng:
            raise UsageError(f"bad grid spec {spec!r}; use name=start:stop:num or name=v1,v2")
        if ":" in rng:
            a, b, n = rng.split(":")
            grid[name] = [float(v) for v in np.linspace(float(a), float(b), int(n))]
        else:
            grid[name] = _floats(rng)
    if not grid:
        raise UsageError("sweep needs at least one --param")
    return grid


# ---------------------------------------------------------------------------
# commands

def _emit(args, payload: dict, text: str) -> None:
    out = json.dumps(payload, indent=2, sort_keys=True) + "\n" if args.json else text
    if getattr(args, "out", None):
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def cmd_scenario(args) -> int:
    s = scenario_from_args(args)
    g = influence_graph(s.model, list(s.events), s.c)
    applies = not g.reaches(*s.pair_under_test) and not g.reaches(*reversed(s.pair_under_test))
    payload = {"scenario": s.name, "params": dict(s.params), "model": describe(s.model), "c": s.c,
               "events": [{"label": e.label, "position": list(e.position), "time": e.time}
                          for e in s.events],
               "influence_edges": [list(e) for e in g.sorted_edges()],
               "pair": list(s.pair_under_test), "locality_applies": applies}
    lines = [f"{s.name}  {describe(s.model)}  c={s.c:g}"]
    lines += [f"  {e.label}  x=({', '.join(f'{v:.9g}' for v in e.position)})  t={e.time:.9g}"
              for e in s.events]
    lines.append("  influences: " + (", ".join(f"{a}->{b}" for a, b in g.sorted_edges()) or "none"))
    lines.append(f"  locality for {'-'.join(s.pair_under_test)}: {'applies' if applies else 'does not apply'}")
    _emit(args, payload, "\n".join(lines) + "\n")
    return 0 if applies else 1


def cmd_check_ns(args) -> int:
    P = BehaviorTable.loads(Path(args.table).read_text())
    rep = check_no_signalling(P, tol=args.tol)
    payload = {"passed": rep.passed, "max_violation": rep.max_violation,
               "violations": [{"party": v.party, "settings": list(v.settings),
                               "context": v.context, "magnitude": v.magnitude}
                              for v in rep.violations]}
    lines = [f"no-signalling {'holds' if rep.passed else 'violated'} "
             f"(max discrepancy {rep.max_violation:.3g}, tol {args.tol:g})"]
    for v in rep.violations:
        ctx = " ".join(f"{k}:s{c['setting']}o{c['outcome']}" for k, c in v.context.items())
        lines.append(f"  party {v.party} settings {v.settings[0]} vs {v.settings[1]}  [{ctx}]  {v.magnitude:.3g}")
    _emit(args, payload, "\n".join(lines) + "\n")
    return 0 if rep.passed else 1


def cmd_decompose(args) -> int:
    if args.table:
        res = decompose_locally(BehaviorTable.loads(Path(args.table).read_text()))
    elif args.abd and args.acd:
        res = decompose_locally(BehaviorTable.loads(Path(args.abd).read_text()),
                                BehaviorTable.loads(Path(args.acd).read_text()))
    else:
        raise UsageError("give --table, or both --abd and --acd")
    certified = res.status == "infeasible" and float(res.margin) > res.rounding_bound
    if res.certificate is not None and args.certificate:
        Path(args.certificate).write_text(res.certificate.dumps())
    payload = res.summary()
    payload["certified"] = certified
    if res.certificate is not None:
        payload["bound"] = str(res.certificate.bound)
    text = f"{res.mode}: {res.status}"
    if res.certificate is not None:
        text += f"  bound {res.certificate.bound}  margin {res.margin}"
    _emit(args, payload, text + "\n")
    return 0 if certified else 1


def cmd_witness(args) -> int:
    s = scenario_from_args(args)
    p, q = s.pair_under_test
    pair = (s.event(p), s.event(q))
    a, d = s.outer
    wanted = [args.which] if args.which else [a + "'", d + "'"]
    payload, lines, ok = {}, [], True
    for lab in wanted:
        apex = lab.rstrip("'")
        if apex not in (a, d):
            raise UsageError(f"witness label must be one of {a}' or {d}'")
        other = d if apex == a else a
        inc, exc = [s.event(apex), *pair], [s.event(other)]
        pt = find_witness_point(inc, exc, pair, s.c, label=lab)
        dist = witness_distance(inc, exc, s.event(apex), pair, s.c) if pt else None
        ok &= pt is not None
        payload[lab] = {"exists": pt is not None, "position": list(pt.position) if pt else None,
                        "time": pt.time if pt else None, "nearest_distance": dist}
        lines.append(f"{lab}: " + (f"({', '.join(f'{v:.9g}' for v in pt.position)}) t={pt.time:.9g} "
                                   f"nearest distance from {apex} {dist:.9g}" if pt else "none"))
    _emit(args, payload, "\n".join(lines) + "\n")
    return 0 if ok else 1


def cmd_pipeline(args) -> int:
    rep = run_pipeline(scenario_from_args(args))
    if args.json:
        text = rep.to_json() + "\n"
    else:
        text = rep.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if rep.ftl_verdict else 1


def cmd_sweep(args) -> int:
    grid = _parse_grid(args.param)
    behavior = None
    if args.behavior and args.behavior != "cached":
        behavior = _behavior(args.behavior, args.seed or 0, args.table, None, None)
    rows = sweep(args.preset or "fig2b", grid, behavior, workers=args.workers)
    table = sweep_table(rows, delimiter=args.delimiter)
    if args.out:
        Path(args.out).write_text(table)
    else:
        sys.stdout.write(table)
    return 0 if rows and all(r["ftl_verdict"] is True for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hidden-influence", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def scen(p):
        p.add_argument("--config", help="key-value config file (INI sections)")
        p.add_argument("--preset", choices=sorted(PRESETS))
        for k in ("d", "eps", "v", "c", "L"):
            p.add_argument(f"--{k}", type=float)
        p.add_argument("--behavior", choices=["cached", "local", "table", "marginals"])
        p.add_argument("--seed", type=int)
        p.add_argument("--table", help="four-party behaviour table")
        p.add_argument("--abd")
        p.add_argument("--acd")

    def out(p):
        p.add_argument("--json", action="store_true", help="structured output")
        p.add_argument("--out", help="write output to a file")

    p = sub.add_parser("scenario", help="print a configuration and its influence graph")
    scen(p); out(p); p.set_defaults(func=cmd_scenario)
    p = sub.add_parser("check-ns", help="no-signalling check of a table")
    p.add_argument("table"); p.add_argument("--tol", type=float, default=1e-10)
    out(p); p.set_defaults(func=cmd_check_ns)
    p = sub.add_parser("decompose", help="exact conditional-locality LP")
    p.add_argument("--table"); p.add_argument("--abd"); p.add_argument("--acd")
    p.add_argument("--certificate", help="write the certificate here when infeasible")
    out(p); p.set_defaults(func=cmd_decompose)
    p = sub.add_parser("witness", help="locate the witness points")
    scen(p); p.add_argument("--which", help="A' or D'"); out(p); p.set_defaults(func=cmd_witness)
    p = sub.add_parser("pipeline", help="run the full refutation pipeline")
    scen(p); out(p); p.set_defaults(func=cmd_pipeline)
    p = sub.add_parser("sweep", help="pipeline over a parameter grid")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--param", action="append", help="name=start:stop:num or name=v1,v2,...")
    p.add_argument("--behavior", choices=["cached", "local", "table"])
    p.add_argument("--seed", type=int); p.add_argument("--table")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, PipelineError, WitnessSearchError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
