import json

import pytest

from hidden_influence.correlations import QuantumSetup
from hidden_influence.scenario import (PRESETS, MarginalSource, PipelineError, Report, Scenario,
                                       TableSource, build_fig1b, build_fig2b, build_fig3, build_preset,
                                       cached_quantum_source, load_cached_setup, local_behavior,
                                       run_pipeline, sweep, sweep_table)
from hidden_influence.spacetime import Event, in_future_lightcone

import generators as gen
import oracles

LOCAL = local_behavior(3)


def test_presets_build():
    assert set(PRESETS) == {"fig1b", "fig2b", "fig3c", "fig3d"}
    for name in PRESETS:
        s = build_preset(name, behavior=LOCAL)
        assert s.name == name and s.outer == ("A", "D")


def test_unknown_preset():
    with pytest.raises(ValueError):
        build_preset("fig9")


def test_builder_domains():
    with pytest.raises(ValueError):
        build_fig2b(d=1, eps=0.25)
    with pytest.raises(ValueError):
        build_fig3(v=0.6)
    with pytest.raises(ValueError):
        build_fig1b(v=-1)


def test_scenario_validation():
    e = Event("A", (0, 0, 0), 0)
    with pytest.raises(ValueError):
        Scenario("x", (e, e), None, 1.0, LOCAL)
    with pytest.raises(ValueError):
        Scenario("x", (e,), None, 1.0, LOCAL, ("A", "Q"))


def test_cached_setup_loads():
    setup, meta = load_cached_setup()
    assert isinstance(setup, QuantumSetup) and setup.n_parties == 4
    assert meta["lp_status"] in {"feasible", "infeasible"}
    assert cached_quantum_source().denominator == meta["denominator"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_local_behaviour_never_gives_a_verdict(name):
    rep = run_pipeline(build_preset(name, behavior=LOCAL))
    assert rep.locality_applies
    assert rep.lp_status == "feasible"
    assert rep.ftl_verdict is False
    assert all(w.position is not None for w in rep.witnesses.values())


def test_witness_points_lie_in_the_right_cones():
    s = build_fig2b(behavior=LOCAL)
    rep = run_pipeline(s)
    ev = {e.label: e for e in s.events}
    for apex, other in (("A", "D"), ("D", "A")):
        w = rep.witnesses[apex + "'"]
        W = Event("W", w.position, w.time)
        for lab in (apex, "B", "C"):
            assert in_future_lightcone(W, ev[lab])
        assert not in_future_lightcone(W, ev[other])
    assert rep.witnesses["A'"].nearest_distance == pytest.approx(oracles.FIG2_A_PRIME, rel=1e-6)
    assert rep.witnesses["D'"].nearest_distance == pytest.approx(oracles.FIG2_D_PRIME, rel=1e-6)


def test_infeasible_marginals_give_a_positive_verdict():
    # supra-quantum input; exercises the positive branch of the verdict
    abd, acd = gen.monogamy_pair()
    rep = run_pipeline(build_fig2b(behavior=MarginalSource(abd, acd)))
    assert rep.lp_certified and rep.ftl_verdict
    assert rep.lp_margin > 0


def test_connected_pair_blocks_the_verdict():
    abd, acd = gen.monogamy_pair()
    s = build_fig1b(v=2, behavior=MarginalSource(abd, acd))
    late = [e.shifted(5.0) if e.label == "C" else e for e in s.events]
    rep = run_pipeline(s.with_events(late))
    assert not rep.locality_applies and not rep.ftl_verdict


def test_report_enforces_conjunction():
    rep = run_pipeline(build_fig2b(behavior=LOCAL))
    d = dict(rep.__dict__)
    d["ftl_verdict"] = True
    with pytest.raises(AssertionError):
        Report(**d)


def test_report_serialization():
    rep = run_pipeline(build_fig3(kind="future-informing", behavior=LOCAL))
    data = json.loads(rep.to_json())
    assert data["scenario"] == "fig3d"
    assert data["lp"]["status"] == "feasible"
    assert set(data["witness_points"]) == {"A'", "D'"}
    text = rep.to_text()
    assert "verdict" in text and "A->B" in text


def test_signalling_table_is_a_pipeline_error():
    P = LOCAL.table.probs.copy()
    from fractions import Fraction
    from hidden_influence.correlations import BehaviorTable
    P[0, 0, 0, 0, 0, 0, 0, 0] += Fraction(1, 10)
    P[1, 0, 0, 0, 0, 0, 0, 0] -= Fraction(1, 10)
    with pytest.raises(PipelineError) as err:
        run_pipeline(build_fig2b(behavior=TableSource(BehaviorTable(P, LOCAL.table.parties))))
    assert err.value.step == "lp"


def test_sweep_rows_and_table():
    rows = sweep("fig2b", {"eps": [0.1, 0.2, 0.3]}, behavior=LOCAL)
    assert [r["index"] for r in rows] == [0, 1, 2]
    assert rows[2]["lp_status"] == "error" and "ValueError" in rows[2]["error"]
    assert rows[0]["witness_A_distance"] == pytest.approx(oracles.FIG2_A_PRIME, rel=1e-6)
    text = sweep_table(rows, "\t")
    assert text.splitlines()[0].split("\t")[0] == "index"
    assert len(text.splitlines()) == 4


def test_parallel_sweep_matches_serial():
    grid = {"v": [0.1, 0.3]}
    assert sweep("fig3c", grid, LOCAL, workers=2) == sweep("fig3c", grid, LOCAL, workers=1)


def test_pipeline_is_deterministic():
    s = build_fig2b(behavior=LOCAL)
    assert run_pipeline(s).to_json() == run_pipeline(s).to_json()


@pytest.mark.parametrize("d,eps", [(1.0, 0.1), (3.0, 0.7), (0.2, 0.049)])
def test_fig2b_pairwise_distances(d, eps):
    import math
    ev = {e.label: e for e in build_fig2b(d, eps, behavior=LOCAL).events}
    for p, q in [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D"), ("A", "D")]:
        assert math.dist(ev[p].position, ev[q].position) == pytest.approx(d, abs=1e-12)
    assert math.dist(ev["B"].position, ev["C"].position) == pytest.approx(math.sqrt(3) * d, abs=1e-12)


def test_single_point_sweep_matches_pipeline():
    (row,) = sweep("fig3d", {"v": [0.25]}, behavior=LOCAL)
    rep = run_pipeline(build_fig3(v=0.25, kind="future-informing", behavior=LOCAL))
    assert row["lp_status"] == rep.lp_status and row["ftl_verdict"] == rep.ftl_verdict
    assert row["witness_A_distance"] == pytest.approx(rep.witnesses["A'"].nearest_distance)
