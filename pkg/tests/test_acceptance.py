"""Acceptance criteria, one test per criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -s`` to see the verdict lines.
"""

import json
import random
import time

import networkx as nx
import pytest

from helpers import (
    CROSSWALK_DEFINITIONS,
    CROSSWALK_MIN_SUPPORT,
    CROSSWALK_TRUTH,
    SENTENCE_DEFINITIONS,
    crosswalk_corpus_text,
    crosswalk_documents,
    oracle_sentence_breaks,
    oracle_web_dots,
    random_query_store,
    sentence_fixture_text,
    sentence_symbol_documents,
    add_coincidence,
    add_event,
)
from oracles import (
    brute_matches,
    brute_maximal_chains,
    frequent_prefixes,
    library_match_set,
    powerset_closed_itemsets,
    scan_forks,
    tickset_components,
)
from scenamine import queries
from scenamine.cli import main as cli_main
from scenamine.definitions import parse_definitions
from scenamine.graph import Edge, GraphStore
from scenamine.matching import Document, extract_events, match_pattern
from scenamine.mining import (
    MiningConfig,
    chain_coincidences,
    cluster_events,
    detect_forks,
    run_pipeline,
    unify_scenarios,
    unify_situations,
)
from scenamine.patterns import parse_pattern, render_pattern
from scenamine.tokens import tokenize
from test_matching import _random_pattern
from test_mining import _lay_processes, _partition, _processes, _scenarios, _situations
from test_patterns import FIXTURE_PATTERNS


class _Criterion:
    def __init__(self, number: int, description: str, budget: float):
        self.number = number
        self.description = description
        self.budget = budget

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.started
        verdict = "PASS" if exc_type is None and elapsed <= self.budget else "FAIL"
        print(
            f"ACCEPTANCE {self.number} {verdict} ({elapsed:.2f}s / {self.budget:.0f}s): "
            f"{self.description}"
        )
        if exc_type is None:
            assert elapsed <= self.budget, (
                f"criterion {self.number} exceeded its {self.budget}s budget"
            )
        return False


def test_criterion_1_pattern_fixtures():
    with _Criterion(1, "pattern fixtures parse, render, round-trip; sanctions binds", 1.0):
        for source in FIXTURE_PATTERNS:
            ast = parse_pattern(source)
            assert parse_pattern(render_pattern(ast)) == ast
        pattern = parse_pattern(
            "{obama trump} {forced suggested} $organization to "
            "{impose implement apply} sanctions against $target"
        )
        toks = tokenize("Obama forced the EU to impose sanctions against Russia")
        matches = match_pattern(pattern, toks)
        assert len(matches) == 1
        bound = {n: b.surface for n, b in matches[0].bindings.items()}
        assert bound == {"organization": "EU", "target": "Russia"}


def test_criterion_2_matcher_oracle():
    with _Criterion(2, "1000 randomized matcher cases equal exhaustive enumeration", 60.0):
        rng = random.Random(20180000)
        agreements = 0
        for _ in range(1000):
            variables = ["x", "y"][: rng.randint(0, 2)]
            pattern, _ = _random_pattern(rng, 8, variables)
            toks = tokenize(" ".join(rng.choices("abcde", k=rng.randint(0, 12))))
            assert library_match_set(match_pattern(pattern, toks)) == brute_matches(
                pattern, toks
            )
            agreements += 1
        assert agreements == 1000


def test_criterion_3_query_inverse_pairs():
    with _Criterion(3, "inverse query pairs hold on 20 random graphs", 30.0):
        rng = random.Random(31337)
        pairs = [
            ("role", queries.actors_of_role, "actor", queries.roles_of_actor),
            ("appearance", queries.events_of_appearance, "event", queries.appearances_of_event),
            ("situation", queries.coincidences_of_situation, "coincidence", queries.situations_of_coincidence),
            ("scenario", queries.processes_of_scenario, "process", queries.scenarios_of_process),
        ]
        violations = 0
        for _ in range(20):
            store = random_query_store(rng)
            assert len(store.things()) >= 500
            assert len(store.edges()) >= 2000
            g = nx.DiGraph()
            g.add_nodes_from(t.id for t in store.things())
            g.add_edges_from(
                (e.src, e.dst) for e in store.edges() if e.kind == "is"
            )
            for abstract_kind, fwd, specific_kind, back in pairs:
                for node in store.things(abstract_kind):
                    got = set(fwd(store, node.id).ids())
                    oracle = {
                        d
                        for d in nx.ancestors(g, node.id)
                        if store.thing(d).kind == specific_kind
                    }
                    if got != oracle:
                        violations += 1
                    for member in got:
                        if node.id not in back(store, member):
                            violations += 1
                for node in store.things(specific_kind):
                    got = set(back(store, node.id).ids())
                    oracle = {
                        d
                        for d in nx.descendants(g, node.id)
                        if store.thing(d).kind == abstract_kind
                    }
                    if got != oracle:
                        violations += 1
                    for member in got:
                        if node.id not in fwd(store, member):
                            violations += 1
        assert violations == 0


def _cluster_instance(rng):
    store = GraphStore()
    app = store.add_thing("appearance", "k")
    window = rng.randint(1, 3)
    spans = []
    for _ in range(rng.randint(1, 20)):
        start = rng.randrange(0, 30)
        spans.append((start, start + rng.randrange(0, 3)))
    events = [add_event(store, app, span) for span in spans]
    cluster_events(store, window)
    expected = tickset_components(
        [(e, (span,)) for e, span in zip(events, spans)], window
    )
    assert _partition(store) == expected


def _situations_instance(rng):
    store = GraphStore()
    classes = [f"k{i}" for i in range(rng.randint(2, 8))]
    apps = {name: store.add_thing("appearance", name) for name in classes}
    rows = []
    tick = 0
    for _ in range(rng.randint(1, 20)):
        row = rng.sample(classes, rng.randint(1, len(classes)))
        rows.append(frozenset(apps[n] for n in row))
        add_coincidence(store, [add_event(store, apps[n], tick) for n in row])
        tick += 10
    min_support = rng.randint(1, 3)
    unify_situations(store, min_support)
    assert _situations(store) == powerset_closed_itemsets(rows, min_support)


def _chains_instance(rng):
    store = GraphStore()
    app = store.add_thing("appearance", "k")
    actor_pool = [store.add_thing("actor", f"a{i}") for i in range(4)]
    max_gap = rng.randint(1, 3)
    shared = rng.random() < 0.5
    coins = []
    for _ in range(rng.randint(2, 10)):
        start = rng.randrange(0, 15)
        chosen = rng.sample(actor_pool, rng.randint(1, 2))
        event = add_event(
            store, app, start, actors={f"r{i}": a for i, a in enumerate(chosen)}
        )
        coins.append((add_coincidence(store, [event]), start, start, frozenset(chosen)))
    cfg = MiningConfig(chain_max_gap=max_gap, chain_requires_shared_actor=shared)
    chain_coincidences(store, cfg)
    assert _processes(store) == brute_maximal_chains(coins, max_gap, shared)


def _scenarios_instance(rng):
    store = GraphStore()
    labels = [f"s{i}" for i in range(rng.randint(1, 5))]
    sequences = [
        tuple(rng.choices(labels, k=rng.randint(1, 5)))
        for _ in range(rng.randint(1, 20))
    ]
    min_support = rng.randint(1, 3)
    sits = _lay_processes(store, sequences)
    unify_scenarios(store, min_support)
    expected = {
        tuple(sits[l] for l in prefix): count
        for prefix, count in frequent_prefixes(sequences, min_support).items()
    }
    assert _scenarios(store) == expected


def _forks_instance(rng):
    store = GraphStore()
    labels = [f"s{i}" for i in range(rng.randint(2, 5))]
    sequences = [
        tuple(rng.choices(labels, k=rng.randint(1, 4)))
        for _ in range(rng.randint(2, 20))
    ]
    epsilon = rng.choice([0.0, 0.2, 0.5, 1.0])
    sits = _lay_processes(store, sequences)
    model, _ = unify_scenarios(store, 1)
    label_of = {v: k for k, v in sits.items()}
    got = sorted(
        (
            tuple(label_of[s] for s in fork.prefix),
            tuple(sorted((label_of[s], p) for s, p in fork.branches)),
        )
        for fork in detect_forks(model, epsilon)
    )
    assert got == scan_forks(sequences, epsilon)


def test_criterion_4_mining_oracles():
    with _Criterion(4, "five mining stages match brute-force oracles, 100 cases each", 120.0):
        for seed_base, instance in (
            (1000, _cluster_instance),
            (2000, _situations_instance),
            (3000, _chains_instance),
            (4000, _scenarios_instance),
            (5000, _forks_instance),
        ):
            for case in range(100):
                instance(random.Random(seed_base + case))


def test_criterion_5_crosswalk_reproduction():
    with _Criterion(5, "crosswalk corpus recovers the 50/50 fork and its trigger", 10.0):
        defs = parse_definitions(CROSSWALK_DEFINITIONS)
        store = GraphStore()
        for raw in crosswalk_documents():
            extract_events(
                store, defs, Document(raw["text"], raw["source"], raw["time"])
            )
        report = run_pipeline(store, MiningConfig(min_support=CROSSWALK_MIN_SUPPORT))
        assert len(report.forks) == 1
        fork = report.forks[0]
        assert [store.thing(s).name for s in fork.prefix] == ["{approach}", "{wait}"]
        probs = {store.thing(s).name: p for s, p in fork.branches}
        assert probs["{safe-cross}"] == pytest.approx(
            CROSSWALK_TRUTH["p_safe"], abs=0.07
        )
        assert probs["{injury}"] == pytest.approx(
            CROSSWALK_TRUTH["p_injury"], abs=0.07
        )
        assert report.triggers, "no trigger found"
        top = report.triggers[0]
        assert store.thing(top.thing).name == "enter-on-red"
        assert top.score == pytest.approx(CROSSWALK_TRUTH["trigger_shift"], abs=0.07)


def test_criterion_6_sentence_breaks():
    with _Criterion(6, "sentence-break scenario covers all breaks, none inside web tokens", 30.0):
        text = sentence_fixture_text()
        true_breaks = oracle_sentence_breaks(text)
        web_dots = oracle_web_dots(text)
        assert len(true_breaks) == 50 and web_dots, "fixture must carry both cases"
        store = GraphStore()
        defs = parse_definitions(SENTENCE_DEFINITIONS)
        for raw in sentence_symbol_documents(text):
            extract_events(
                store, defs, Document(raw["text"], raw["source"], raw["time"])
            )
        cfg = MiningConfig(chain_requires_shared_actor=False, fork_epsilon=1.0)
        report = run_pipeline(store, cfg)

        def scenario_named(names):
            for o in store.things("scenario"):
                if [store.thing(s).name for s in store.member_children(o.id, "seq")] == names:
                    return o.id
            raise AssertionError(f"scenario {names} not mined")

        break_scenario = scenario_named(["{dot}", "{gap}", "{cap}"])
        covered = set()
        for e in store.in_edges(break_scenario):
            if e.kind != "is":
                continue
            first_coin = store.member_children(e.src, "seq")[0]
            covered.add(store.times_of(first_coin).start // 10)
        assert covered == true_breaks, "every true break, nothing else"
        assert not (covered & web_dots), "no break inside a web-address token"
        (fork,) = [f for f in report.forks if len(f.prefix) == 1]
        branch_names = {store.thing(s).name for s, _ in fork.branches}
        assert {"{low}", "{num}"} <= branch_names, "follower branches are distinct"
        assert "{gap}" in branch_names


def test_criterion_7_mine_determinism(tmp_path, capsys):
    with _Criterion(7, "mine run twice on the crosswalk corpus is byte-identical", 30.0):
        defs_path = tmp_path / "defs.txt"
        defs_path.write_text(CROSSWALK_DEFINITIONS, encoding="utf-8")
        corpus_path = tmp_path / "corpus.jsonl"
        corpus_path.write_text(crosswalk_corpus_text(), encoding="utf-8")
        snapshot = str(tmp_path / "snap.json")
        assert (
            cli_main(
                [
                    "extract",
                    "--definitions",
                    str(defs_path),
                    "--corpus",
                    str(corpus_path),
                    "--snapshot",
                    snapshot,
                ]
            )
            == 0
        )
        out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
        args = ["mine", "--snapshot", snapshot, "--min-support", str(CROSSWALK_MIN_SUPPORT)]
        assert cli_main(args + ["--out", out1]) == 0
        assert cli_main(args + ["--out", out2]) == 0
        capsys.readouterr()
        first = open(out1, "rb").read()
        second = open(out2, "rb").read()
        assert first and first == second
        report = json.loads(first)
        assert report["forks"] and report["triggers"]
        assert report["triggers"][0]["thing"] == "enter-on-red"
