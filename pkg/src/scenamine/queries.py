"""Functional-set queries over the graph.

Every function returns a WeightedSet; crisp graph facts come back with
weight 1.0.  Lookups across inheritance follow ``is`` chains in both
directions, so each specific/abstract pair of functions is mutually
inverse: x is in f(y) exactly when y is in g(x).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import GraphError, GraphStore, TimeSpec, WeightedSet


@dataclass(frozen=True)
class QueryScope:
    """Optional role / time / order filters; an absent filter is universal."""

    role: str | None = None
    time: object | None = None  # tick or (start, end)
    order: int | None = None


def _reach(store: GraphStore, start: int, direction: str, kind: str, hop_weight: float = 1.0) -> WeightedSet:
    """Things of a kind reachable over ``is`` edges from ``start``; weight
    decays by hop_weight per hop (1.0 keeps everything crisp)."""
    store.thing(start)
    best: dict[int, float] = {start: 1.0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        weight = best[node]
        edges = store.out_edges(node) if direction == "out" else store.in_edges(node)
        for edge in edges:
            if edge.kind != "is":
                continue
            other = edge.dst if direction == "out" else edge.src
            w = weight * hop_weight
            if other not in best or best[other] < w:
                best[other] = w
                queue.append(other)
    return WeightedSet(
        sorted(
            (node, w)
            for node, w in best.items()
            if node != start and store.thing(node).kind == kind
        )
    )


def _time_matches(store: GraphStore, thing_id: int, time) -> bool:
    if time is None:
        return True
    spec = store.times_of(thing_id)
    return spec is not None and spec.intersects(time)


# -- actors and roles -----------------------------------------------------


def actors_of_role(store: GraphStore, role_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """All actors playing the given role."""
    return _reach(store, role_id, "in", "actor", hop_weight)


def roles_of_actor(store: GraphStore, actor_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """All roles the given actor plays."""
    return _reach(store, actor_id, "out", "role", hop_weight)


def roles_of_appearance(store: GraphStore, appearance_id: int) -> WeightedSet:
    """The role slots of an appearance, read off its possession edges."""
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(appearance_id, "has", "out")
        if store.thing(m).kind == "role"
    )


def appearances_of_role(store: GraphStore, role_id: int) -> WeightedSet:
    """All appearances that include the given role slot."""
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(role_id, "has", "in")
        if store.thing(m).kind == "appearance"
    )


# -- events and appearances ------------------------------------------------


def appearances_of_event(store: GraphStore, event_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """Appearances the event instantiates, through inheritance chains."""
    return _reach(store, event_id, "out", "appearance", hop_weight)


def events_of_appearance(store: GraphStore, appearance_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """Events instantiating the appearance, through inheritance chains."""
    return _reach(store, appearance_id, "in", "event", hop_weight)


def events_at(store: GraphStore, time) -> WeightedSet:
    """Events whose time span intersects the tick or interval."""
    return WeightedSet.crisp(
        t.id for t in store.things("event") if _time_matches(store, t.id, time)
    )


def appearances_at(store: GraphStore, time) -> WeightedSet:
    """Appearances of the events alive at the given time."""
    out = WeightedSet()
    for event_id, _ in events_at(store, time):
        out = out.union(appearances_of_event(store, event_id))
    return out


def actors_of_event(store: GraphStore, event_id: int, scope: QueryScope | None = None) -> WeightedSet:
    """Actors filling the event's roles, optionally narrowed by role and time."""
    scope = scope or QueryScope()
    if not _time_matches(store, event_id, scope.time):
        return WeightedSet()
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(event_id, "has", "out", role=scope.role)
        if store.thing(m).kind == "actor"
    )


def events_of_actor(store: GraphStore, actor_id: int, scope: QueryScope | None = None) -> WeightedSet:
    """Events the actor participates in, optionally narrowed by role and time."""
    scope = scope or QueryScope()
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(actor_id, "has", "in", role=scope.role)
        if store.thing(m).kind == "event" and _time_matches(store, m, scope.time)
    )


# -- situations and coincidences -------------------------------------------


def situations_of_appearance(store: GraphStore, appearance_id: int) -> WeightedSet:
    """Situations whose combination includes the appearance."""
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(appearance_id, "member", "in", set_kind="and")
        if store.thing(m).kind == "situation"
    )


def appearances_of_situation(store: GraphStore, situation_id: int) -> WeightedSet:
    """The appearances combined by a situation."""
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(situation_id, "member", "out", set_kind="and")
        if store.thing(m).kind == "appearance"
    )


def situations_of_coincidence(store: GraphStore, coincidence_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """Situations generalizing the coincidence."""
    return _reach(store, coincidence_id, "out", "situation", hop_weight)


def coincidences_of_situation(store: GraphStore, situation_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """Coincidences generalized by the situation."""
    return _reach(store, situation_id, "in", "coincidence", hop_weight)


def coincidences_of_event(store: GraphStore, event_id: int) -> WeightedSet:
    """Coincidences that include the event."""
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(event_id, "member", "in", set_kind="and")
        if store.thing(m).kind == "coincidence"
    )


def events_of_coincidence(store: GraphStore, coincidence_id: int) -> WeightedSet:
    """The events a coincidence is made of."""
    return WeightedSet.crisp(
        m
        for m, _ in store.neighbors(coincidence_id, "member", "out", set_kind="and")
        if store.thing(m).kind == "event"
    )


def coincidences_at(store: GraphStore, time, event_id: int | None = None) -> WeightedSet:
    """Coincidences alive at the given time, optionally containing an event."""
    out = []
    for t in store.things("coincidence"):
        if not _time_matches(store, t.id, time):
            continue
        if event_id is not None and event_id not in events_of_coincidence(store, t.id):
            continue
        out.append(t.id)
    return WeightedSet.crisp(out)


# -- scenarios and processes -------------------------------------------------


def scenarios_of_situation(store: GraphStore, situation_id: int, order: int | None = None) -> WeightedSet:
    """Scenarios whose sequence includes the situation, optionally at an index."""
    picked = [
        e
        for e in store.in_edges(situation_id)
        if e.kind == "member"
        and e.set_kind == "seq"
        and (order is None or e.order == order)
        and store.thing(e.src).kind == "scenario"
    ]
    return WeightedSet.crisp(sorted({e.src for e in picked}))


def situations_of_scenario(store: GraphStore, scenario_id: int, order: int | None = None) -> WeightedSet:
    """The situations of a scenario in sequence order, optionally one index."""
    picked = [
        e
        for e in store.out_edges(scenario_id)
        if e.kind == "member"
        and e.set_kind == "seq"
        and (order is None or e.order == order)
        and store.thing(e.dst).kind == "situation"
    ]
    picked.sort(key=lambda e: e.order)
    return WeightedSet.crisp(e.dst for e in picked)


def processes_of_scenario(store: GraphStore, scenario_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """Processes implementing the scenario."""
    return _reach(store, scenario_id, "in", "process", hop_weight)


def scenarios_of_process(store: GraphStore, process_id: int, hop_weight: float = 1.0) -> WeightedSet:
    """Scenarios generalizing the process."""
    return _reach(store, process_id, "out", "scenario", hop_weight)


def processes_at(store: GraphStore, time) -> WeightedSet:
    """Processes whose overall time span intersects the tick or interval."""
    out = []
    for t in store.things("process"):
        span = timespan_of(store, t.id)
        if time is None or span.intersects(time):
            out.append(t.id)
    return WeightedSet.crisp(out)


def processes_of_coincidence(store: GraphStore, coincidence_id: int, time=None) -> WeightedSet:
    """Processes that include the coincidence, empty when the coincidence
    lies outside the time filter."""
    if not _time_matches(store, coincidence_id, time):
        return WeightedSet()
    picked = [
        e
        for e in store.in_edges(coincidence_id)
        if e.kind == "member" and e.set_kind == "seq" and store.thing(e.src).kind == "process"
    ]
    return WeightedSet.crisp(sorted({e.src for e in picked}))


def coincidences_of_process(store: GraphStore, process_id: int, time=None) -> WeightedSet:
    """The coincidences of a process in order, filtered by their own times."""
    return WeightedSet.crisp(
        c
        for c in store.member_children(process_id, "seq")
        if store.thing(c).kind == "coincidence" and _time_matches(store, c, time)
    )


# -- temporal extent -----------------------------------------------------


def timespan_of(store: GraphStore, thing_id: int) -> TimeSpec:
    """Temporal continuum of an actor, event, coincidence or process."""
    kind = store.thing(thing_id).kind
    if kind in ("event", "coincidence"):
        return store.times_of(thing_id) or TimeSpec()
    if kind == "actor":
        span = TimeSpec()
        for event_id, _ in events_of_actor(store, thing_id):
            span = span.union(store.times_of(event_id) or TimeSpec())
        return span
    if kind == "process":
        span = TimeSpec()
        for c in store.member_children(thing_id, "seq"):
            span = span.union(store.times_of(c) or TimeSpec())
        return span
    raise GraphError(f"things of kind {kind!r} have no temporal extent")


# -- registry for the command line ------------------------------------------

# name -> (function, kind of the positional argument or None for a time query,
#          scope flags it honors)
REGISTRY = {
    "actors_of_role": (actors_of_role, "role", ()),
    "roles_of_actor": (roles_of_actor, "actor", ()),
    "roles_of_appearance": (roles_of_appearance, "appearance", ()),
    "appearances_of_role": (appearances_of_role, "role", ()),
    "appearances_of_event": (appearances_of_event, "event", ()),
    "events_of_appearance": (events_of_appearance, "appearance", ()),
    "events_at": (events_at, None, ("time",)),
    "appearances_at": (appearances_at, None, ("time",)),
    "actors_of_event": (actors_of_event, "event", ("scope",)),
    "events_of_actor": (events_of_actor, "actor", ("scope",)),
    "situations_of_appearance": (situations_of_appearance, "appearance", ()),
    "appearances_of_situation": (appearances_of_situation, "situation", ()),
    "situations_of_coincidence": (situations_of_coincidence, "coincidence", ()),
    "coincidences_of_situation": (coincidences_of_situation, "situation", ()),
    "coincidences_of_event": (coincidences_of_event, "event", ()),
    "events_of_coincidence": (events_of_coincidence, "coincidence", ()),
    "coincidences_at": (coincidences_at, None, ("time", "event")),
    "scenarios_of_situation": (scenarios_of_situation, "situation", ("order",)),
    "situations_of_scenario": (situations_of_scenario, "scenario", ("order",)),
    "processes_of_scenario": (processes_of_scenario, "scenario", ()),
    "scenarios_of_process": (scenarios_of_process, "process", ()),
    "processes_at": (processes_at, None, ("time",)),
    "processes_of_coincidence": (processes_of_coincidence, "coincidence", ("time",)),
    "coincidences_of_process": (coincidences_of_process, "process", ("time",)),
}
