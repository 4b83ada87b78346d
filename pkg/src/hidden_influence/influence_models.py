"""Hidden-influence model families and the influence graphs they induce.

Three families are covered: influences at a finite speed v in a preferred
frame, instantaneous influences limited to a critical distance, and the two
multisimultaneity variants where each device's rest frame decides what
counts as past or future.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import networkx as nx

from .spacetime import Event, FrameVelocity, TimeOrder, frame_time_order


class MultiSimKind(str, enum.Enum):
    PAST_DEPENDENT = "past-dependent"
    FUTURE_INFORMING = "future-informing"


@dataclass(frozen=True)
class VCausal:
    v: float

    def __post_init__(self):
        if not (self.v > 0 and math.isfinite(self.v)):
            raise ValueError("influence speed must be positive and finite")


@dataclass(frozen=True)
class FiniteDistance:
    d: float

    def __post_init__(self):
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValueError("critical distance must be positive and finite")


@dataclass(frozen=True)
class MultiSim:
    kind: MultiSimKind
    velocities: Mapping[str, FrameVelocity] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", MultiSimKind(self.kind))
        object.__setattr__(self, "velocities", dict(self.velocities))

    def __hash__(self):
        return hash((self.kind, tuple(sorted((k, v.velocity) for k, v in self.velocities.items()))))

    def velocity_of(self, label: str) -> FrameVelocity:
        try:
            return self.velocities[label]
        except KeyError:
            raise KeyError(f"no device velocity declared for party {label!r}") from None


ModelSpec = Union[VCausal, FiniteDistance, MultiSim]


def describe(model: ModelSpec) -> str:
    if isinstance(model, VCausal):
        return f"v-causal(v={model.v:g})"
    if isinstance(model, FiniteDistance):
        return f"finite-distance(d={model.d:g})"
    vel = ", ".join(f"{k}={tuple(round(x, 12) for x in v.velocity)}"
                    for k, v in sorted(model.velocities.items()))
    return f"multisimultaneity[{model.kind.value}]({vel})"


def can_influence(model: ModelSpec, source: Event, target: Event, c: float = 1.0) -> bool:
    dt = target.time - source.time
    dx = math.dist(target.position, source.position)
    if isinstance(model, VCausal):
        return dt >= 0 and dx <= model.v * dt
    if isinstance(model, FiniteDistance):
        return dt >= 0 and dx <= model.d
    if isinstance(model, MultiSim):
        if model.kind is MultiSimKind.PAST_DEPENDENT:
            u = model.velocity_of(target.label)
            return frame_time_order(target, source, u, c) is TimeOrder.PAST
        u = model.velocity_of(source.label)
        return frame_time_order(source, target, u, c) is TimeOrder.FUTURE
    raise TypeError(f"unknown model {model!r}")


@dataclass(frozen=True)
class InfluenceGraph:
    nodes: tuple
    edges: frozenset

    def _digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.edges)
        return g

    def reaches(self, p: str, q: str) -> bool:
        return nx.has_path(self._digraph(), p, q)

    def sorted_edges(self) -> list:
        return sorted(self.edges)


def influence_graph(model: ModelSpec, events: Sequence[Event], c: float = 1.0) -> InfluenceGraph:
    labels = [e.label for e in events]
    if len(set(labels)) != len(labels):
        raise ValueError("event labels must be unique")
    edges = {(s.label, t.label) for s in events for t in events
             if s.label != t.label and can_influence(model, s, t, c)}
    return InfluenceGraph(tuple(labels), frozenset(edges))


def pair_disconnected(graph: InfluenceGraph, p: str, q: str) -> bool:
    """No directed path either way, relays through other events included."""
    for lab in (p, q):
        if lab not in graph.nodes:
            raise KeyError(f"party {lab!r} not in graph")
    return not graph.reaches(p, q) and not graph.reaches(q, p)


def locality_condition_applies(model: ModelSpec, events: Sequence[Event],
                               pair: tuple, c: float = 1.0) -> bool:
    """True when the model must produce local correlations for `pair`.

    The pair's joint behaviour conditioned on every other party's setting
    and outcome is then a mixture of product strategies.
    """
    return pair_disconnected(influence_graph(model, events, c), *pair)


def postpone(events: Sequence[Event], party: str, delay: float) -> list:
    if delay < 0:
        raise ValueError("delay must be non-negative")
    if party not in {e.label for e in events}:
        raise KeyError(f"unknown party {party!r}")
    return [e.shifted(delay) if e.label == party else e for e in events]
