"""Scenario mining: nine analyses from extracted events to triggers.

The pipeline runs role scoping, actor differentiation, appearance
unification, event clustering, situation unification, coincidence
chaining, scenario unification, fork detection and trigger
differentiation, in that order.  Mined nodes are written back into the
graph under content-derived keys, so running the pipeline again over the
same graph finds what it built before instead of duplicating it, and the
report it produces is identical.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import patterns as pat
from .graph import Edge, GraphStore, TimeSpec
from .tokens import tokenize


class MiningStageError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class MiningConfig:
    coincidence_window: int = 1
    chain_max_gap: int = 1
    chain_requires_shared_actor: bool = True
    min_support: int = 2
    fork_epsilon: float = 0.2
    trigger_min_shift: float = 0.2

    def validate(self) -> None:
        if self.coincidence_window < 0:
            raise ValueError("coincidence_window must be >= 0")
        if self.chain_max_gap < 1:
            raise ValueError("chain_max_gap must be >= 1")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")
        if not 0.0 <= self.fork_epsilon <= 1.0:
            raise ValueError("fork_epsilon must lie in [0, 1]")
        if not 0.0 < self.trigger_min_shift <= 1.0:
            raise ValueError("trigger_min_shift must lie in (0, 1]")


@dataclass
class ActorFrequency:
    """How often an actor fills a role of an appearance, relative to all
    events of that appearance in which the role is filled."""

    appearance: int
    role: str
    actor: int
    count: int
    frequency: float


@dataclass
class TreeNode:
    """Prefix-tree node: a situation step, traversal count and the
    processes that pass through."""

    situation: int | None
    count: int = 0
    processes: list[int] = field(default_factory=list)
    children: dict[int, "TreeNode"] = field(default_factory=dict)


@dataclass
class LiftedProcess:
    process: int
    coincidences: list[int]
    lifted: list[tuple[int, int]]  # (coincidence, situation) steps in order

    @property
    def sequence(self) -> list[int]:
        return [s for _, s in self.lifted]


@dataclass
class ScenarioModel:
    """Prefix tree over the situation sequences of all processes."""

    root: TreeNode
    lifted: dict[int, LiftedProcess]


@dataclass
class Fork:
    """A tree node whose continuation splits into nearly equiprobable
    branches."""

    prefix: tuple[int, ...]
    branches: list[tuple[int, float]]
    node: TreeNode


@dataclass
class Trigger:
    """A thing whose presence before a fork shifts the branch odds."""

    fork: int
    thing: int
    score: float
    support: int
    base: list[float]
    shifted: list[float]


@dataclass
class MiningReport:
    config: MiningConfig
    stages: dict[str, dict[str, int]]
    actor_frequencies: list[ActorFrequency]
    typical_actors: dict[tuple[int, str], int]
    model: ScenarioModel
    forks: list[Fork]
    triggers: list[Trigger]

    def to_json_dict(self, store: GraphStore) -> dict:
        name = lambda thing_id: store.thing(thing_id).name
        scenarios = []

        def walk(node: TreeNode, path: list[int]) -> None:
            for sid in sorted(node.children):
                child = node.children[sid]
                if child.count < self.config.min_support:
                    continue
                scenarios.append(
                    {"situations": [name(s) for s in path + [sid]], "support": child.count}
                )
                walk(child, path + [sid])

        walk(self.model.root, [])
        return {
            "stages": self.stages,
            "scenarios": scenarios,
            "forks": [
                {
                    "prefix": [name(s) for s in fork.prefix],
                    "branches": [
                        {"situation": name(s), "p": p} for s, p in fork.branches
                    ],
                }
                for fork in self.forks
            ],
            "triggers": [
                {
                    "fork": t.fork,
                    "thing": name(t.thing),
                    "score": t.score,
                    "base": t.base,
                    "shifted": t.shifted,
                }
                for t in self.triggers
            ],
        }


# -- shared helpers ---------------------------------------------------------


def _direct_appearances(store: GraphStore, event_id: int) -> list[int]:
    return sorted(
        e.dst
        for e in store.out_edges(event_id)
        if e.kind == "is" and store.thing(e.dst).kind == "appearance"
    )


def _event_bindings(store: GraphStore, event_id: int) -> list[tuple[str, int]]:
    return sorted(
        (e.role, e.dst)
        for e in store.out_edges(event_id)
        if e.kind == "has" and store.thing(e.dst).kind == "actor"
    )


def _find_mined(store: GraphStore, kind: str, key: str) -> int | None:
    for t in store.things(kind):
        if t.properties.get("key") == key:
            return t.id
    return None


def _count_origin(store: GraphStore, kind: str, origin: str) -> int:
    return sum(1 for t in store.things(kind) if t.properties.get("origin") == origin)


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def join(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def groups(self) -> list[list]:
        out: dict = {}
        for item in self.parent:
            out.setdefault(self.find(item), []).append(item)
        return [sorted(v) for _, v in sorted(out.items())]


# -- stage 1: role scoping ---------------------------------------------------


def scope_roles(store: GraphStore) -> dict[str, int]:
    """Build the alternative-actor domain of every (appearance, role) pair
    seen across that appearance's events."""
    domains: dict[tuple[int, str], set[int]] = {}
    for event in store.things("event"):
        bindings = _event_bindings(store, event.id)
        for app in _direct_appearances(store, event.id):
            for role, actor in bindings:
                domains.setdefault((app, role), set()).add(actor)
    members = 0
    for (app, role) in sorted(domains):
        actors = sorted(domains[(app, role)])
        set_id, _ = store.find_or_create(
            "generic",
            f"domain:{app}:{role}",
            properties={"origin": "scope_roles", "role": role},
        )
        role_id, _ = store.find_or_create("role", role)
        store.add_edge(Edge("has", role_id, set_id, role="domain"))
        for actor in actors:
            store.add_edge(Edge("member", set_id, actor, set_kind="any"))
        members += len(actors)
    return {
        "domains": _count_origin(store, "generic", "scope_roles"),
        "members": members,
    }


# -- stage 2: actor differentiation -------------------------------------------


def differentiate_actors(
    store: GraphStore,
) -> tuple[list[ActorFrequency], dict[tuple[int, str], int]]:
    """Relative fill frequencies per (actor, role, appearance) and the most
    probable actor per (appearance, role)."""
    counts: dict[tuple[int, str], Counter] = {}
    filled: dict[tuple[int, str], int] = {}
    first_seen: dict[tuple[int, str, int], int] = {}
    for event in store.things("event"):
        span = store.times_of(event.id)
        start = span.start if span is not None and span else 2**62
        bindings = _event_bindings(store, event.id)
        roles_here: dict[str, set[int]] = {}
        for role, actor in bindings:
            roles_here.setdefault(role, set()).add(actor)
        for app in _direct_appearances(store, event.id):
            for role, actors in roles_here.items():
                filled[(app, role)] = filled.get((app, role), 0) + 1
                bucket = counts.setdefault((app, role), Counter())
                for actor in actors:
                    bucket[actor] += 1
                    seen = first_seen.get((app, role, actor))
                    if seen is None or start < seen:
                        first_seen[(app, role, actor)] = start
    rows: list[ActorFrequency] = []
    best: dict[tuple[int, str], int] = {}
    for (app, role) in sorted(counts):
        total = filled[(app, role)]
        entries = []
        for actor, count in counts[(app, role)].items():
            node = store.thing(actor)
            entries.append((-count, first_seen[(app, role, actor)], node.name or "", actor))
            rows.append(ActorFrequency(app, role, actor, count, count / total))
        entries.sort()
        best[(app, role)] = entries[0][3]
    rows.sort(key=lambda r: (r.appearance, r.role, -r.count, store.thing(r.actor).name or "", r.actor))
    return rows, best


# -- stage 3: appearance unification ------------------------------------------


def unify_appearances(store: GraphStore, min_support: int) -> list[tuple[str, int]]:
    """Anti-unify event texts of equal token length that share anchor
    tokens; materialize each generalization covering enough events as an
    abstract appearance with per-slot actor domains."""
    texted: list[tuple[int, tuple[str, ...]]] = []
    for event in store.things("event"):
        text = event.properties.get("text")
        if isinstance(text, str):
            toks = tuple(t.norm for t in tokenize(text))
            if toks:
                texted.append((event.id, toks))
    by_len: dict[int, list[tuple[int, tuple[str, ...]]]] = {}
    for event_id, toks in texted:
        by_len.setdefault(len(toks), []).append((event_id, toks))
    made: list[tuple[str, int]] = []
    for length in sorted(by_len):
        group = by_len[length]
        uf = _UnionFind([event_id for event_id, _ in group])
        seqs = dict(group)
        ids = [event_id for event_id, _ in group]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                a, b = seqs[ids[i]], seqs[ids[j]]
                if any(x == y for x, y in zip(a, b)):
                    uf.join(ids[i], ids[j])
        for component in uf.groups():
            if len(component) < min_support:
                continue
            columns = [sorted({seqs[e][k] for e in component}) for k in range(length)]
            if not any(len(col) == 1 for col in columns):
                continue  # nothing anchors the group
            children: list[pat.PatternNode] = []
            var_domains: list[tuple[str, list[str]]] = []
            for col in columns:
                if len(col) == 1:
                    children.append(pat.Literal(col[0]))
                else:
                    var = f"x{len(var_domains) + 1}"
                    children.append(pat.Variable(var))
                    var_domains.append((var, col))
            pattern = children[0] if len(children) == 1 else pat.SeqSet(tuple(children))
            name = pat.render_pattern(pattern)
            app_id, created = store.find_or_create(
                "appearance",
                name,
                properties={"origin": "unify_appearances", "pattern": name},
            )
            for var, values in var_domains:
                role_id, _ = store.find_or_create("role", var)
                store.add_edge(Edge("has", app_id, role_id, role=var))
                dom_id, _ = store.find_or_create(
                    "generic",
                    f"domain:{app_id}:{var}",
                    properties={"origin": "unify_appearances", "role": var},
                )
                store.add_edge(Edge("has", role_id, dom_id, role="domain"))
                for value in values:
                    actor_id, _ = store.find_or_create("actor", value)
                    store.add_edge(Edge("member", dom_id, actor_id, set_kind="any"))
            for event_id in component:
                for specific in _direct_appearances(store, event_id):
                    if specific != app_id:
                        store.add_edge(Edge("is", specific, app_id))
            made.append((name, len(component)))
    return made


# -- stage 4: event clustering -------------------------------------------------


def _coincide(a: TimeSpec, b: TimeSpec, window: int) -> bool:
    gap = a.gap_to(b)
    return gap is not None and (gap == 0 or gap < window)


def cluster_events(store: GraphStore, window: int) -> dict[str, int]:
    """Group events whose time spans overlap (after widening by the
    window) into coincidences; isolated events become singleton
    coincidences."""
    events = [(t.id, store.times_of(t.id)) for t in store.things("event")]
    uf = _UnionFind([e for e, _ in events])
    for i in range(len(events)):
        for j in range(i + 1, len(events)):
            if _coincide(events[i][1], events[j][1], window):
                uf.join(events[i][0], events[j][0])
    times = dict(events)
    for component in uf.groups():
        key = ",".join(str(e) for e in component)
        span = TimeSpec()
        for event_id in component:
            span = span.union(times[event_id])
        cid, created = store.find_or_create(
            "coincidence",
            f"c[{key}]",
            properties={"origin": "cluster_events", "key": key},
            times=span,
        )
        for event_id in component:
            store.add_edge(Edge("member", cid, event_id, set_kind="and"))
    return {"coincidences": len(store.things("coincidence"))}


# -- stage 5: situation unification ---------------------------------------------


def _coincidence_itemsets(store: GraphStore) -> list[tuple[int, frozenset[int]]]:
    out = []
    for c in store.things("coincidence"):
        items = set()
        for event_id in store.member_children(c.id, "and"):
            items.update(_direct_appearances(store, event_id))
        out.append((c.id, frozenset(items)))
    return out


def _frequent_itemsets(
    rows: list[frozenset[int]], min_support: int
) -> dict[frozenset[int], int]:
    universe = sorted({i for row in rows for i in row})
    frequent: dict[frozenset[int], int] = {}
    level = [(i,) for i in universe]
    while level:
        counts = {cand: 0 for cand in level}
        for row in rows:
            for cand in level:
                if row.issuperset(cand):
                    counts[cand] += 1
        kept = {cand: n for cand, n in counts.items() if n >= min_support}
        frequent.update({frozenset(cand): n for cand, n in kept.items()})
        kept_set = set(kept)
        ordered = sorted(kept)
        nxt = set()
        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                a, b = ordered[i], ordered[j]
                if a[:-1] != b[:-1]:
                    continue
                cand = a + (b[-1],)
                if all(
                    tuple(x for x in cand if x != drop) in kept_set for drop in cand
                ):
                    nxt.add(cand)
        level = sorted(nxt)
    return frequent


def unify_situations(store: GraphStore, min_support: int) -> dict[str, int]:
    """Mine closed frequent combinations of appearance classes across
    coincidences and materialize each as a situation."""
    itemsets = _coincidence_itemsets(store)
    frequent = _frequent_itemsets([items for _, items in itemsets], min_support)
    universe = sorted({i for _, items in itemsets for i in items})
    closed = [
        s
        for s, n in frequent.items()
        if not any(frequent.get(s | {i}) == n for i in universe if i not in s)
    ]
    for s in sorted(closed, key=lambda s: (len(s), sorted(s))):
        ids = sorted(s)
        key = ",".join(str(i) for i in ids)
        sid = _find_mined(store, "situation", key)
        if sid is None:
            label = "{" + ", ".join(sorted(store.thing(i).name or str(i) for i in ids)) + "}"
            sid = store.add_thing(
                "situation", label, {"origin": "unify_situations", "key": key}
            )
        for i in ids:
            store.add_edge(Edge("member", sid, i, set_kind="and"))
        for cid, items in itemsets:
            if items.issuperset(s):
                store.add_edge(Edge("is", cid, sid))
    return {"situations": len(store.things("situation"))}


# -- stage 6: coincidence chaining -----------------------------------------------


def _coincidence_actors(store: GraphStore, cid: int) -> set[int]:
    actors: set[int] = set()
    for event_id in store.member_children(cid, "and"):
        actors.update(a for _, a in _event_bindings(store, event_id))
    return actors


def chain_coincidences(store: GraphStore, config: MiningConfig) -> dict[str, int]:
    """Chain coincidences into processes: strictly increasing start times,
    bounded gaps, and (optionally) a shared actor between neighbours.
    Every maximal chain of length two or more becomes a process."""
    coins = []
    for t in store.things("coincidence"):
        span = store.times_of(t.id)
        if span:
            coins.append((t.id, span))
    actors = {cid: _coincidence_actors(store, cid) for cid, _ in coins}

    def linked(a, b) -> bool:
        (ca, sa), (cb, sb) = a, b
        if sb.start <= sa.start:
            return False
        if sb.start - sa.end > config.chain_max_gap:
            return False
        if config.chain_requires_shared_actor and not (actors[ca] & actors[cb]):
            return False
        return True

    succ: dict[int, list[int]] = {cid: [] for cid, _ in coins}
    has_pred: set[int] = set()
    for a in coins:
        for b in coins:
            if a[0] != b[0] and linked(a, b):
                succ[a[0]].append(b[0])
                has_pred.add(b[0])
    memo: dict[int, list[tuple[int, ...]]] = {}

    def paths_from(cid: int) -> list[tuple[int, ...]]:
        if cid in memo:
            return memo[cid]
        if not succ[cid]:
            memo[cid] = [(cid,)]
        else:
            memo[cid] = [
                (cid,) + rest for nxt in sorted(succ[cid]) for rest in paths_from(nxt)
            ]
        return memo[cid]

    chains = []
    for cid, _ in coins:
        if cid not in has_pred:
            chains.extend(p for p in paths_from(cid) if len(p) >= 2)
    for path in sorted(chains):
        key = ",".join(str(c) for c in path)
        pid, created = store.find_or_create(
            "process", f"p[{key}]", properties={"origin": "chain_coincidences", "key": key}
        )
        if created:
            for cid in path:
                store.add_edge(Edge("member", pid, cid, set_kind="seq"))
    return {"processes": len(store.things("process"))}


# -- stage 7: scenario unification -------------------------------------------------


def _situation_rank(store: GraphStore, sid: int) -> tuple[int, int, int]:
    size = len(store.member_children(sid, "and"))
    support = sum(
        1
        for e in store.in_edges(sid)
        if e.kind == "is" and store.thing(e.src).kind == "coincidence"
    )
    return (-size, -support, sid)


def unify_scenarios(
    store: GraphStore, min_support: int
) -> tuple[ScenarioModel, dict[str, int]]:
    """Lift each process to its situation sequence, grow a prefix tree
    over all sequences, and materialize every frequent prefix as a
    scenario covering its processes."""
    rank: dict[int, tuple[int, int, int]] = {
        t.id: _situation_rank(store, t.id) for t in store.things("situation")
    }
    root = TreeNode(None)
    lifted_all: dict[int, LiftedProcess] = {}
    for proc in store.things("process"):
        coins = store.member_children(proc.id, "seq")
        steps: list[tuple[int, int]] = []
        for cid in coins:
            sits = [
                e.dst
                for e in store.out_edges(cid)
                if e.kind == "is" and store.thing(e.dst).kind == "situation"
            ]
            if sits:
                steps.append((cid, min(sits, key=lambda s: rank[s])))
        lifted_all[proc.id] = LiftedProcess(proc.id, coins, steps)
        node = root
        node.count += 1
        node.processes.append(proc.id)
        for sid in (s for _, s in steps):
            node = node.children.setdefault(sid, TreeNode(sid))
            node.count += 1
            node.processes.append(proc.id)

    def materialize(node: TreeNode, path: list[int]) -> None:
        for sid in sorted(node.children):
            child = node.children[sid]
            if child.count < min_support:
                continue
            full = path + [sid]
            key = ",".join(str(s) for s in full)
            scenario_id = _find_mined(store, "scenario", key)
            if scenario_id is None:
                label = " -> ".join(store.thing(s).name or str(s) for s in full)
                scenario_id = store.add_thing(
                    "scenario", label, {"origin": "unify_scenarios", "key": key}
                )
                for s in full:
                    store.add_edge(Edge("member", scenario_id, s, set_kind="seq"))
            for pid in child.processes:
                store.add_edge(Edge("is", pid, scenario_id))
            materialize(child, full)

    materialize(root, [])
    model = ScenarioModel(root, lifted_all)
    return model, {"scenarios": len(store.things("scenario"))}


# -- stage 8: fork detection ----------------------------------------------------


def detect_forks(model: ScenarioModel, fork_epsilon: float) -> list[Fork]:
    """Tree nodes splitting into two or more branches whose probabilities,
    renormalized over continuing processes, all lie within the epsilon."""
    forks: list[Fork] = []

    def walk(node: TreeNode, path: list[int]) -> None:
        if len(node.children) >= 2:
            total = sum(child.count for child in node.children.values())
            branches = [
                (sid, node.children[sid].count / total) for sid in sorted(node.children)
            ]
            probs = [p for _, p in branches]
            if max(probs) - min(probs) <= fork_epsilon:
                forks.append(Fork(tuple(path), branches, node))
        for sid in sorted(node.children):
            walk(node.children[sid], path + [sid])

    walk(model.root, [])
    return forks


# -- stage 9: trigger differentiation ---------------------------------------------


def differentiate_triggers(
    store: GraphStore,
    model: ScenarioModel,
    forks: list[Fork],
    config: MiningConfig,
) -> list[Trigger]:
    """For each fork, find appearances or situations that occur before the
    branch step — as events left out of the lifted situations or as
    co-present situations — and shift the branch distribution."""
    sit_items = {
        t.id: frozenset(store.member_children(t.id, "and"))
        for t in store.things("situation")
    }
    triggers: list[Trigger] = []
    for fork_index, fork in enumerate(forks):
        branch_ids = [sid for sid, _ in fork.branches]
        base = [p for _, p in fork.branches]
        branch_of: dict[int, int] = {}
        for sid in branch_ids:
            for pid in fork.node.children[sid].processes:
                branch_of[pid] = sid
        presence: dict[int, set[int]] = {}
        depth = len(fork.prefix)
        for pid in sorted(branch_of):
            lp = model.lifted[pid]
            step_situation = dict(lp.lifted)
            branch_coin = lp.lifted[depth][0]
            cutoff = lp.coincidences.index(branch_coin)
            for cid in lp.coincidences[:cutoff]:
                lifted_sid = step_situation.get(cid)
                covered = sit_items.get(lifted_sid, frozenset())
                for event_id in store.member_children(cid, "and"):
                    for app in _direct_appearances(store, event_id):
                        if app not in covered:
                            presence.setdefault(app, set()).add(pid)
                for e in store.out_edges(cid):
                    if (
                        e.kind == "is"
                        and e.dst != lifted_sid
                        and store.thing(e.dst).kind == "situation"
                    ):
                        presence.setdefault(e.dst, set()).add(pid)
        found = []
        for thing_id, pids in presence.items():
            support = len(pids)
            if support < config.min_support:
                continue
            shifted = [
                sum(1 for pid in pids if branch_of[pid] == sid) / support
                for sid in branch_ids
            ]
            score = max(abs(s - b) for s, b in zip(shifted, base))
            if score >= config.trigger_min_shift:
                found.append(
                    Trigger(fork_index, thing_id, score, support, list(base), shifted)
                )
        found.sort(
            key=lambda t: (
                -t.score,
                -t.support,
                store.thing(t.thing).name or "",
                t.thing,
            )
        )
        triggers.extend(found)
    return triggers


# -- the pipeline ------------------------------------------------------------------


def run_pipeline(store: GraphStore, config: MiningConfig | None = None) -> MiningReport:
    """Run all nine analyses in order and aggregate the results.

    A failing stage aborts the run with a MiningStageError naming it.
    """
    cfg = config or MiningConfig()
    cfg.validate()
    stages: dict[str, dict[str, int]] = {}

    def run(name: str, fn, *args):
        try:
            return fn(*args)
        except Exception as exc:  # noqa: BLE001 - report which stage died
            raise MiningStageError(name, exc) from exc

    stages["scope_roles"] = run("scope_roles", scope_roles, store)
    rows, best = run("differentiate_actors", differentiate_actors, store)
    stages["differentiate_actors"] = {"rows": len(rows)}
    made = run("unify_appearances", unify_appearances, store, cfg.min_support)
    stages["unify_appearances"] = {
        "generalizations": _count_origin(store, "appearance", "unify_appearances"),
        "covered_events": sum(n for _, n in made),
    }
    stages["cluster_events"] = run(
        "cluster_events", cluster_events, store, cfg.coincidence_window
    )
    stages["unify_situations"] = run(
        "unify_situations", unify_situations, store, cfg.min_support
    )
    stages["chain_coincidences"] = run(
        "chain_coincidences", chain_coincidences, store, cfg
    )
    model, scenario_stats = run(
        "unify_scenarios", unify_scenarios, store, cfg.min_support
    )
    stages["unify_scenarios"] = scenario_stats
    forks = run("detect_forks", detect_forks, model, cfg.fork_epsilon)
    stages["detect_forks"] = {"forks": len(forks)}
    triggers = run(
        "differentiate_triggers", differentiate_triggers, store, model, forks, cfg
    )
    stages["differentiate_triggers"] = {"triggers": len(triggers)}
    return MiningReport(cfg, stages, rows, best, model, forks, triggers)
