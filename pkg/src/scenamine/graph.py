"""In-memory typed graph of things, relationships and time spans.

Nodes carry a kind, an optional name and scalar properties.  Edges are
inheritance (``is``), possession (``has`` with a role name), association
with time (``times``) and set membership (``member`` with a set kind of
``and``, ``seq`` or ``any``; ``seq`` members carry a contiguous order).
Time spans are normalized interval sets over an integer tick axis.  The
whole store round-trips through a JSON snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

KINDS = frozenset(
    {
        "actor",
        "role",
        "appearance",
        "event",
        "situation",
        "coincidence",
        "scenario",
        "process",
        "generic",
    }
)

EDGE_KINDS = frozenset({"is", "has", "times", "member"})
SET_KINDS = frozenset({"and", "seq", "any"})


class GraphError(ValueError):
    pass


class SnapshotError(GraphError):
    """Raised when a snapshot stream cannot be loaded."""


@dataclass(frozen=True)
class TimeSpec:
    """A set of [start, end] tick intervals, stored sorted and merged.

    Intervals are over a discrete axis: two intervals whose tick sets
    touch or overlap are coalesced, so {[1,2],[3,4]} becomes [1,4] while
    {[1,1],[3,3]} keeps its gap.
    """

    intervals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        merged: list[list[int]] = []
        for start, end in sorted(tuple(p) for p in self.intervals):
            if start > end:
                raise GraphError(f"bad interval [{start}, {end}]")
            if merged and start <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], end)
            else:
                merged.append([start, end])
        object.__setattr__(self, "intervals", tuple((s, e) for s, e in merged))

    @classmethod
    def point(cls, tick: int) -> "TimeSpec":
        return cls(((tick, tick),))

    def __bool__(self) -> bool:
        return bool(self.intervals)

    @property
    def start(self) -> int | None:
        return self.intervals[0][0] if self.intervals else None

    @property
    def end(self) -> int | None:
        return self.intervals[-1][1] if self.intervals else None

    def contains(self, tick: int) -> bool:
        return any(s <= tick <= e for s, e in self.intervals)

    def union(self, other: "TimeSpec") -> "TimeSpec":
        return TimeSpec(self.intervals + other.intervals)

    def intersects(self, other) -> bool:
        if isinstance(other, int):
            return self.contains(other)
        if isinstance(other, tuple):
            other = TimeSpec((other,))
        return any(
            s1 <= e2 and s2 <= e1
            for s1, e1 in self.intervals
            for s2, e2 in other.intervals
        )

    def gap_to(self, other: "TimeSpec") -> int | None:
        """Smallest tick distance between the two spans; 0 when they share
        a tick, None when either is empty."""
        if not self.intervals or not other.intervals:
            return None
        best: int | None = None
        for s1, e1 in self.intervals:
            for s2, e2 in other.intervals:
                if s1 <= e2 and s2 <= e1:
                    return 0
                d = s2 - e1 if s2 > e1 else s1 - e2
                if best is None or d < best:
                    best = d
        return best


@dataclass(frozen=True)
class Edge:
    kind: str
    src: int
    dst: int
    role: str | None = None
    set_kind: str | None = None
    order: int | None = None


@dataclass
class ThingNode:
    id: int
    kind: str
    name: str | None = None
    properties: dict = field(default_factory=dict)


class WeightedSet:
    """Distinct members with membership weight in [0, 1]; crisp facts use
    weight 1.0.  Member order is whatever the producer chose."""

    __slots__ = ("_pairs",)

    def __init__(self, pairs: Iterable[tuple[int, float]] = ()):
        seen: dict[int, float] = {}
        order: list[int] = []
        for member, weight in pairs:
            if not 0.0 <= weight <= 1.0:
                raise GraphError(f"weight {weight} outside [0, 1]")
            if member in seen:
                seen[member] = max(seen[member], weight)
            else:
                seen[member] = weight
                order.append(member)
        self._pairs = [(m, seen[m]) for m in order]

    @classmethod
    def crisp(cls, members: Iterable[int]) -> "WeightedSet":
        return cls((m, 1.0) for m in members)

    def pairs(self) -> list[tuple[int, float]]:
        return list(self._pairs)

    def ids(self) -> list[int]:
        return [m for m, _ in self._pairs]

    def weight(self, member: int) -> float | None:
        for m, w in self._pairs:
            if m == member:
                return w
        return None

    def union(self, other: "WeightedSet") -> "WeightedSet":
        merged: dict[int, float] = dict(self._pairs)
        for m, w in other._pairs:
            merged[m] = max(merged.get(m, 0.0), w)
        return WeightedSet(sorted(merged.items()))

    def intersect(self, other: "WeightedSet") -> "WeightedSet":
        weights = dict(other._pairs)
        return WeightedSet(
            sorted((m, min(w, weights[m])) for m, w in self._pairs if m in weights)
        )

    def __contains__(self, member: int) -> bool:
        return any(m == member for m, _ in self._pairs)

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(self._pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightedSet) and sorted(self._pairs) == sorted(
            other._pairs
        )

    def __repr__(self) -> str:
        return f"WeightedSet({self._pairs!r})"

    def to_json(self, store: "GraphStore") -> list[dict]:
        out = []
        for member, weight in self._pairs:
            node = store.thing(member)
            out.append(
                {"id": node.id, "name": node.name, "kind": node.kind, "weight": weight}
            )
        return out


_SCALARS = (str, int, float, bool)


class GraphStore:
    """Single-writer, multi-reader store of things, edges and time spans."""

    def __init__(self):
        self._things: dict[int, ThingNode] = {}
        self._times: dict[int, TimeSpec] = {}
        self._out: dict[int, list[Edge]] = {}
        self._in: dict[int, list[Edge]] = {}
        self._edge_set: set[Edge] = set()
        self._by_name: dict[tuple[str, str], list[int]] = {}
        self._next_id = 1

    # -- construction -------------------------------------------------

    def add_thing(
        self,
        kind: str,
        name: str | None = None,
        properties: dict | None = None,
        times: TimeSpec | None = None,
    ) -> int:
        if kind not in KINDS:
            raise GraphError(f"unknown thing kind {kind!r}")
        if kind == "event" and (times is None or not times):
            raise GraphError("events require a non-empty time span")
        if properties:
            for key, value in properties.items():
                if not isinstance(value, _SCALARS):
                    raise GraphError(f"property {key!r} is not a scalar")
        thing_id = self._next_id
        self._next_id += 1
        self._things[thing_id] = ThingNode(thing_id, kind, name, dict(properties or {}))
        self._out[thing_id] = []
        self._in[thing_id] = []
        if name is not None:
            self._by_name.setdefault((kind, name), []).append(thing_id)
        if times is not None:
            self._attach_times(thing_id, times)
        return thing_id

    def _attach_times(self, thing_id: int, times: TimeSpec) -> None:
        spec_id = self._next_id
        self._next_id += 1
        self._times[spec_id] = times
        self.add_edge(Edge("times", thing_id, spec_id))

    def add_edge(self, edge: Edge) -> None:
        if edge.kind not in EDGE_KINDS:
            raise GraphError(f"unknown edge kind {edge.kind!r}")
        if edge.src not in self._things:
            raise GraphError(f"dangling edge source {edge.src}")
        if edge.kind == "times":
            if edge.dst not in self._times:
                raise GraphError(f"dangling time span {edge.dst}")
        elif edge.dst not in self._things:
            raise GraphError(f"dangling edge target {edge.dst}")
        if edge.kind == "has" and not edge.role:
            raise GraphError("has edges require a role name")
        if edge.kind == "member":
            if edge.set_kind not in SET_KINDS:
                raise GraphError(f"bad set kind {edge.set_kind!r}")
            if edge.set_kind == "seq":
                count = sum(
                    1
                    for e in self._out[edge.src]
                    if e.kind == "member" and e.set_kind == "seq"
                )
                if edge.order is None:
                    edge = Edge("member", edge.src, edge.dst, set_kind="seq", order=count)
                elif edge in self._edge_set:
                    return
                elif edge.order != count:
                    raise GraphError(
                        f"seq order {edge.order} breaks contiguity (expected {count})"
                    )
        if edge in self._edge_set:
            return
        self._edge_set.add(edge)
        self._out[edge.src].append(edge)
        if edge.kind != "times":
            self._in[edge.dst].append(edge)

    def find_by_name(self, kind: str, name: str) -> list[int]:
        return list(self._by_name.get((kind, name), []))

    def find_or_create(
        self,
        kind: str,
        name: str,
        properties: dict | None = None,
        times: TimeSpec | None = None,
    ) -> tuple[int, bool]:
        existing = self._by_name.get((kind, name))
        if existing:
            return existing[0], False
        return self.add_thing(kind, name, properties, times), True

    # -- access -------------------------------------------------------

    def thing(self, thing_id: int) -> ThingNode:
        try:
            return self._things[thing_id]
        except KeyError:
            raise GraphError(f"unknown thing {thing_id}") from None

    def __contains__(self, thing_id: int) -> bool:
        return thing_id in self._things

    def things(self, kind: str | None = None) -> list[ThingNode]:
        return [
            t
            for t in sorted(self._things.values(), key=lambda t: t.id)
            if kind is None or t.kind == kind
        ]

    def edges(self) -> list[Edge]:
        return [e for edges in self._out.values() for e in edges]

    def out_edges(self, thing_id: int) -> list[Edge]:
        self.thing(thing_id)
        return list(self._out[thing_id])

    def in_edges(self, thing_id: int) -> list[Edge]:
        self.thing(thing_id)
        return list(self._in[thing_id])

    def times_of(self, thing_id: int) -> TimeSpec | None:
        spec: TimeSpec | None = None
        for edge in self._out[self.thing(thing_id).id]:
            if edge.kind == "times":
                ts = self._times[edge.dst]
                spec = ts if spec is None else spec.union(ts)
        return spec

    def neighbors(
        self,
        thing_id: int,
        kind: str | None = None,
        direction: str = "out",
        role: str | None = None,
        set_kind: str | None = None,
    ) -> WeightedSet:
        """Endpoints over matching edges, each with weight 1.0; results of
        seq membership come back in order, others sorted by id."""
        self.thing(thing_id)
        if direction not in ("out", "in"):
            raise GraphError(f"bad direction {direction!r}")
        edges = self._out[thing_id] if direction == "out" else self._in[thing_id]
        picked = [
            e
            for e in edges
            if (kind is None or e.kind == kind)
            and e.kind != "times"
            and (role is None or e.role == role)
            and (set_kind is None or e.set_kind == set_kind)
        ]
        if kind == "member" and set_kind == "seq" and direction == "out":
            picked.sort(key=lambda e: e.order)
            return WeightedSet.crisp(e.dst for e in picked)
        other = lambda e: e.dst if direction == "out" else e.src
        return WeightedSet.crisp(sorted({other(e) for e in picked}))

    def member_children(self, thing_id: int, set_kind: str) -> list[int]:
        """Members of a set node; seq members ordered, possibly repeating."""
        picked = [
            e
            for e in self._out[self.thing(thing_id).id]
            if e.kind == "member" and e.set_kind == set_kind
        ]
        if set_kind == "seq":
            picked.sort(key=lambda e: e.order)
            return [e.dst for e in picked]
        return sorted({e.dst for e in picked})

    # -- persistence ----------------------------------------------------

    def dumps(self) -> str:
        things = [
            {"id": t.id, "kind": t.kind, "name": t.name, "properties": t.properties}
            for t in self.things()
        ]
        edges = []
        for t in self.things():
            for e in self._out[t.id]:
                item = {"kind": e.kind, "from": e.src, "to": e.dst}
                if e.kind == "has":
                    item["role"] = e.role
                elif e.kind == "member":
                    item["set_kind"] = e.set_kind
                    if e.set_kind == "seq":
                        item["order"] = e.order
                edges.append(item)
        times = [
            {"id": spec_id, "intervals": [list(p) for p in spec.intervals]}
            for spec_id, spec in sorted(self._times.items())
        ]
        return json.dumps(
            {"things": things, "edges": edges, "times": times},
            sort_keys=True,
            separators=(",", ":"),
        )

    def save(self, fp: IO[str]) -> None:
        fp.write(self.dumps())

    @classmethod
    def loads(cls, data: str) -> "GraphStore":
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"malformed snapshot: {exc}") from exc
        if not isinstance(raw, dict) or set(raw) != {"things", "edges", "times"}:
            raise SnapshotError("snapshot must have exactly things/edges/times")
        store = cls()
        for item in raw["things"]:
            _expect_fields(item, {"id", "kind", "name", "properties"}, "thing")
            thing_id, kind = item["id"], item["kind"]
            if not isinstance(thing_id, int) or thing_id in store._things:
                raise SnapshotError(f"bad or duplicate thing id {thing_id!r}")
            if kind not in KINDS:
                raise SnapshotError(f"unknown thing kind {kind!r}")
            node = ThingNode(thing_id, kind, item["name"], dict(item["properties"]))
            store._things[thing_id] = node
            store._out[thing_id] = []
            store._in[thing_id] = []
            if node.name is not None:
                store._by_name.setdefault((kind, node.name), []).append(thing_id)
        for item in raw["times"]:
            _expect_fields(item, {"id", "intervals"}, "time span")
            spec_id = item["id"]
            if not isinstance(spec_id, int) or spec_id in store._times or spec_id in store._things:
                raise SnapshotError(f"bad or duplicate time span id {spec_id!r}")
            try:
                store._times[spec_id] = TimeSpec(tuple(tuple(p) for p in item["intervals"]))
            except (GraphError, TypeError, ValueError) as exc:
                raise SnapshotError(f"bad intervals for {spec_id}: {exc}") from exc
        seq_orders: dict[int, list[int]] = {}
        for item in raw["edges"]:
            if not isinstance(item, dict):
                raise SnapshotError("edge entries must be objects")
            kind = item.get("kind")
            allowed = {"kind", "from", "to"}
            if kind == "has":
                allowed |= {"role"}
            elif kind == "member":
                allowed |= {"set_kind"}
                if item.get("set_kind") == "seq":
                    allowed |= {"order"}
            _expect_fields(item, allowed, "edge")
            edge = Edge(
                kind,
                item["from"],
                item["to"],
                role=item.get("role"),
                set_kind=item.get("set_kind"),
                order=item.get("order"),
            )
            if edge.kind == "member" and edge.set_kind == "seq":
                if not isinstance(edge.order, int):
                    raise SnapshotError("seq member without integer order")
                seq_orders.setdefault(edge.src, []).append(edge.order)
                try:
                    store._check_loaded_edge(edge)
                except GraphError as exc:
                    raise SnapshotError(str(exc)) from exc
                store._edge_set.add(edge)
                store._out[edge.src].append(edge)
                store._in[edge.dst].append(edge)
            else:
                try:
                    store.add_edge(edge)
                except GraphError as exc:
                    raise SnapshotError(str(exc)) from exc
        for src, orders in seq_orders.items():
            if sorted(orders) != list(range(len(orders))):
                raise SnapshotError(f"seq orders of {src} are not contiguous from 0")
        used = list(store._things) + list(store._times)
        store._next_id = max(used, default=0) + 1
        return store

    @classmethod
    def load(cls, fp: IO[str]) -> "GraphStore":
        return cls.loads(fp.read())

    def _check_loaded_edge(self, edge: Edge) -> None:
        if edge.src not in self._things:
            raise GraphError(f"dangling edge source {edge.src}")
        if edge.dst not in self._things:
            raise GraphError(f"dangling edge target {edge.dst}")
        if edge in self._edge_set:
            raise GraphError("duplicate seq member edge")


def _expect_fields(item, allowed: set[str], what: str) -> None:
    if not isinstance(item, dict):
        raise SnapshotError(f"{what} entries must be objects")
    unknown = set(item) - allowed
    if unknown:
        raise SnapshotError(f"unknown {what} fields {sorted(unknown)}")
    missing = allowed - set(item)
    if missing:
        raise SnapshotError(f"missing {what} fields {sorted(missing)}")
