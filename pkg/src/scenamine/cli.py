"""Command-line front-end: extract events, mine scenarios, query the graph.

Subcommands: ``extract`` (definitions + corpus -> snapshot), ``mine``
(snapshot -> report + updated snapshot), ``query`` (snapshot -> JSON
result set) and ``run`` (extract then mine).  Results go to stdout as
JSON; diagnostics go to stderr.  Exit codes: 0 success, 1 parse or
domain error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import queries
from .definitions import DefinitionError, parse_definitions
from .graph import GraphError, GraphStore, SnapshotError
from .matching import CorpusError, extract_events, read_corpus
from .mining import MiningConfig, MiningStageError, run_pipeline
from .patterns import PatternSyntaxError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2


class CliError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


def _fail(message: str, code: int):
    raise CliError(message, code)


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            return fp.read()
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", EXIT_IO)


def _write_atomic(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scenamine-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fp:
                fp.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        _fail(f"cannot write {path}: {exc}", EXIT_IO)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    raw = _read_text(path)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        _fail(f"bad config file {path}: {exc}", EXIT_DOMAIN)
    if not isinstance(data, dict):
        _fail(f"bad config file {path}: expected an object", EXIT_DOMAIN)
    return data


_MINING_KEYS = (
    "coincidence_window",
    "chain_max_gap",
    "chain_requires_shared_actor",
    "min_support",
    "fork_epsilon",
    "trigger_min_shift",
)


def _mining_config(args: argparse.Namespace, file_cfg: dict) -> MiningConfig:
    cfg = MiningConfig()
    mining = file_cfg.get("mining", {})
    if not isinstance(mining, dict):
        _fail("config key 'mining' must be an object", EXIT_DOMAIN)
    for key in mining:
        if key not in _MINING_KEYS:
            _fail(f"unknown mining config key {key!r}", EXIT_DOMAIN)
        setattr(cfg, key, mining[key])
    overrides = {
        "coincidence_window": args.window,
        "chain_max_gap": args.max_gap,
        "min_support": args.min_support,
        "fork_epsilon": args.fork_epsilon,
        "trigger_min_shift": args.trigger_min_shift,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    try:
        cfg.validate()
    except ValueError as exc:
        _fail(f"bad mining configuration: {exc}", EXIT_DOMAIN)
    return cfg


def _setting(args: argparse.Namespace, file_cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return file_cfg.get(key, default)


def _report_json(report, store) -> str:
    return json.dumps(report.to_json_dict(store), sort_keys=True, indent=2) + "\n"


def _do_extract(args, file_cfg, quiet: bool = False) -> GraphStore:
    definitions_path = _setting(args, file_cfg, "definitions")
    corpus_path = _setting(args, file_cfg, "corpus")
    if not definitions_path or not corpus_path:
        _fail("extract requires --definitions and --corpus", EXIT_DOMAIN)
    granularity = int(_setting(args, file_cfg, "granularity", 1) or 1)
    try:
        definitions = parse_definitions(_read_text(definitions_path))
    except DefinitionError as exc:
        _fail(f"{definitions_path}: {exc}", EXIT_DOMAIN)
    corpus_text = _read_text(corpus_path)
    try:
        docs = read_corpus(corpus_text.splitlines(), granularity)
    except CorpusError as exc:
        _fail(f"{corpus_path}: {exc}", EXIT_DOMAIN)
    store = GraphStore()
    per_definition = {d.name: 0 for d in definitions}
    try:
        for doc in docs:
            for event_id in extract_events(store, definitions, doc):
                for edge in store.out_edges(event_id):
                    if edge.kind == "is":
                        name = store.thing(edge.dst).name
                        if name in per_definition:
                            per_definition[name] += 1
    except PatternSyntaxError as exc:
        _fail(f"bad pattern: {exc}", EXIT_DOMAIN)
    snapshot_path = _setting(args, file_cfg, "snapshot")
    if snapshot_path:
        _write_atomic(snapshot_path, store.dumps())
    summary = {
        "documents": len(docs),
        "events": len(store.things("event")),
        "per_definition": per_definition,
    }
    if not quiet:
        print(json.dumps(summary, sort_keys=True, indent=2))
    return store


def cmd_extract(args) -> int:
    file_cfg = _load_config_file(args.config)
    _do_extract(args, file_cfg)
    return EXIT_OK


def _do_mine(args, file_cfg, store: GraphStore) -> None:
    cfg = _mining_config(args, file_cfg)
    try:
        report = run_pipeline(store, cfg)
    except MiningStageError as exc:
        _fail(str(exc), EXIT_DOMAIN)
    text = _report_json(report, store)
    out_path = _setting(args, file_cfg, "out")
    if out_path:
        _write_atomic(out_path, text)
    snapshot_path = _setting(args, file_cfg, "snapshot")
    if snapshot_path:
        _write_atomic(snapshot_path, store.dumps())
    sys.stdout.write(text)


def cmd_mine(args) -> int:
    file_cfg = _load_config_file(args.config)
    snapshot_path = _setting(args, file_cfg, "snapshot")
    if not snapshot_path:
        _fail("mine requires --snapshot", EXIT_DOMAIN)
    try:
        store = GraphStore.loads(_read_text(snapshot_path))
    except SnapshotError as exc:
        _fail(f"{snapshot_path}: {exc}", EXIT_DOMAIN)
    _do_mine(args, file_cfg, store)
    return EXIT_OK


def cmd_run(args) -> int:
    file_cfg = _load_config_file(args.config)
    store = _do_extract(args, file_cfg, quiet=True)
    _do_mine(args, file_cfg, store)
    return EXIT_OK


def _parse_time_flag(text: str):
    if ":" in text:
        start, _, end = text.partition(":")
        return (int(start), int(end))
    return int(text)


def _resolve_thing(store: GraphStore, kind: str, value: str) -> int:
    if value.isdigit():
        thing_id = int(value)
        node = store.thing(thing_id)  # raises GraphError when unknown
        return node.id
    matches = store.find_by_name(kind, value)
    if not matches:
        _fail(f"no {kind} named {value!r}", EXIT_DOMAIN)
    if len(matches) > 1:
        _fail(f"ambiguous {kind} name {value!r}: ids {matches}", EXIT_DOMAIN)
    return matches[0]


def cmd_query(args) -> int:
    file_cfg = _load_config_file(args.config)
    snapshot_path = _setting(args, file_cfg, "snapshot")
    if not snapshot_path:
        _fail("query requires --snapshot", EXIT_DOMAIN)
    try:
        store = GraphStore.loads(_read_text(snapshot_path))
    except SnapshotError as exc:
        _fail(f"{snapshot_path}: {exc}", EXIT_DOMAIN)
    name = args.function
    if name == "timespan_of":
        if not args.argument:
            _fail("timespan_of requires a thing argument", EXIT_DOMAIN)
        thing_id = int(args.argument) if args.argument.isdigit() else None
        if thing_id is None:
            hits = [
                t.id for t in store.things() if t.name == args.argument
            ]
            if len(hits) != 1:
                _fail(f"need a unique thing named {args.argument!r}", EXIT_DOMAIN)
            thing_id = hits[0]
        try:
            span = queries.timespan_of(store, thing_id)
        except GraphError as exc:
            _fail(str(exc), EXIT_DOMAIN)
        print(json.dumps({"intervals": [list(p) for p in span.intervals]}))
        return EXIT_OK
    if name not in queries.REGISTRY:
        valid = ", ".join(sorted(queries.REGISTRY) + ["timespan_of"])
        _fail(f"unknown query function {name!r}; valid names: {valid}", EXIT_DOMAIN)
    fn, arg_kind, extras = queries.REGISTRY[name]
    time_value = _parse_time_flag(args.time) if args.time is not None else None
    try:
        call_args = []
        if arg_kind is not None:
            if not args.argument:
                _fail(f"{name} requires a {arg_kind} argument", EXIT_DOMAIN)
            call_args.append(_resolve_thing(store, arg_kind, args.argument))
        kwargs = {}
        if "time" in extras and arg_kind is None:
            call_args.insert(0, time_value)
        elif "time" in extras:
            kwargs["time"] = time_value
        if "event" in extras and args.event is not None:
            kwargs["event_id"] = _resolve_thing(store, "event", args.event)
        if "order" in extras and args.order is not None:
            kwargs["order"] = args.order
        if "scope" in extras:
            kwargs["scope"] = queries.QueryScope(role=args.role, time=time_value)
        result = fn(store, *call_args, **kwargs)
    except GraphError as exc:
        _fail(str(exc), EXIT_DOMAIN)
    print(json.dumps(result.to_json(store), sort_keys=True))
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--definitions", help="definitions file path")
    parser.add_argument("--corpus", help="JSON-lines corpus path")
    parser.add_argument("--snapshot", help="graph snapshot path")
    parser.add_argument("--out", help="report output path")
    parser.add_argument("--min-support", dest="min_support", type=int)
    parser.add_argument("--fork-epsilon", dest="fork_epsilon", type=float)
    parser.add_argument("--trigger-min-shift", dest="trigger_min_shift", type=float)
    parser.add_argument("--window", dest="window", type=int)
    parser.add_argument("--max-gap", dest="max_gap", type=int)
    parser.add_argument("--granularity", dest="granularity", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenamine",
        description="Extract events from text with patterns and mine scenarios, forks and triggers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, handler in (
        ("extract", cmd_extract),
        ("mine", cmd_mine),
        ("run", cmd_run),
    ):
        p = sub.add_parser(command)
        _add_common(p)
        p.set_defaults(handler=handler)
    q = sub.add_parser("query")
    _add_common(q)
    q.add_argument("function", help="query function name")
    q.add_argument("argument", nargs="?", help="thing id or name")
    q.add_argument("--role", help="role filter")
    q.add_argument("--time", help="tick or start:end filter")
    q.add_argument("--order", type=int, help="sequence index filter")
    q.add_argument("--event", help="event filter for coincidences_at")
    q.set_defaults(handler=cmd_query)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"scenamine: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
