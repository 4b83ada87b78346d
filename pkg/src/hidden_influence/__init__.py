"""Hidden-influence models, conditional-locality LPs and faster-than-light witnesses."""
from .correlations import (BehaviorTable, BellExpression, QuantumSetup, SignallingError,
                           born_rule, check_no_signalling, chsh, evaluate_bell_expression,
                           marginalize, rationalize, violation_search)
from .influence_models import (FiniteDistance, MultiSim, MultiSimKind, VCausal, can_influence,
                               influence_graph, locality_condition_applies, pair_disconnected,
                               postpone)
from .locality_lp import (FeasibilityResult, brute_force_local_check, decompose_locally,
                          extract_certificate, reconstruct_full_distribution)
from .scenario import (Report, Scenario, build_fig1b, build_fig2b, build_fig3, run_pipeline,
                       sweep)
from .spacetime import (Event, FrameVelocity, TimeOrder, WitnessSearchError, find_witness_point,
                        frame_time_order, in_future_lightcone, witness_bound_fig2,
                        witness_bound_fig3, witness_distance)

__all__ = [
    "BehaviorTable", "BellExpression", "QuantumSetup", "SignallingError", "born_rule",
    "check_no_signalling", "chsh", "evaluate_bell_expression", "marginalize", "rationalize",
    "violation_search", "FiniteDistance", "MultiSim", "MultiSimKind", "VCausal",
    "can_influence", "influence_graph", "locality_condition_applies", "pair_disconnected",
    "postpone", "FeasibilityResult", "brute_force_local_check", "decompose_locally",
    "extract_certificate", "reconstruct_full_distribution", "Report", "Scenario",
    "build_fig1b", "build_fig2b", "build_fig3", "run_pipeline", "sweep", "Event",
    "FrameVelocity", "TimeOrder", "WitnessSearchError", "find_witness_point",
    "frame_time_order", "in_future_lightcone", "witness_bound_fig2", "witness_bound_fig3",
    "witness_distance",
]

__version__ = "0.1.0"
