"""Match pattern ASTs against token streams and instantiate events.

Matching is case-insensitive over token norms.  A literal consumes one
equal token; a sequence consumes its children consecutively; an
alternative set matches where any child matches, each alternative giving
its own match; a conjunctive set matches the smallest token window
covering one match of every child, in any order.  A variable consumes
the shortest non-empty span that lets the rest of the pattern match,
with every feasible span enumerated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

from . import patterns as pat
from .definitions import ThingDefinition
from .graph import Edge, GraphStore, TimeSpec
from .tokens import NUMBER, PUNCT, WORD, Token, tokenize  # noqa: F401 (re-export)

ARTICLES = {"a", "an", "the"}
CURRENCY = {"$", "€", "£"}

TypeEnv = Mapping[str, pat.TypeRef]


@dataclass(frozen=True)
class Binding:
    """A variable's reported value: surface text and its token span."""

    surface: str
    norm: str
    first: int
    last: int


@dataclass(frozen=True)
class Match:
    """One way a pattern covers tokens [first, last] with variable bindings."""

    pattern: pat.PatternNode
    first: int
    last: int
    bindings: Mapping[str, Binding] = field(default_factory=dict)


def _joined_surface(tokens: Sequence[Token], first: int, last: int) -> str:
    parts = [tokens[first].surface]
    for k in range(first + 1, last + 1):
        if tokens[k].start != tokens[k - 1].end:
            parts.append(" ")
        parts.append(tokens[k].surface)
    return "".join(parts)


def strip_articles(tokens: Sequence[Token], first: int, last: int) -> tuple[int, int]:
    """Drop leading article tokens from a span of more than one token."""
    while first < last and tokens[first].norm in ARTICLES:
        first += 1
    return first, last


_DATE_SHAPE = re.compile(r"^\d{4}-\d{2}-\d{2}$|^\d{1,2}:\d{2}$")


def check_type(tokens: Sequence[Token], type_ref: pat.TypeRef, env: TypeEnv | None = None) -> bool:
    """Decide whether a token slice is admissible for a type."""
    if not tokens:
        return False
    kind = type_ref.kind
    if kind == "untyped":
        return True
    if kind == "word":
        return len(tokens) == 1 and tokens[0].cls == WORD
    if kind == "number":
        return len(tokens) == 1 and tokens[0].cls == NUMBER
    if kind == "money":
        return (
            len(tokens) == 2
            and tokens[0].cls == PUNCT
            and tokens[0].surface in CURRENCY
            and tokens[1].cls == NUMBER
        )
    if kind == "time":
        if len(tokens) == 1 and tokens[0].cls == NUMBER:
            return True
        # date and clock shapes arrive split into several adjacent tokens
        contiguous = all(
            tokens[k].start == tokens[k - 1].end for k in range(1, len(tokens))
        )
        joined = "".join(t.surface for t in tokens)
        return contiguous and bool(_DATE_SHAPE.match(joined))
    if kind == "composite":
        sub = list(tokens)
        return any(
            m.first == 0 and m.last == len(sub) - 1
            for m in match_pattern(type_ref.pattern, sub, env)
        )
    raise ValueError(f"unknown type kind {kind!r}")


class _Engine:
    def __init__(self, tokens: Sequence[Token], env: TypeEnv):
        self.tokens = tokens
        self.env = env
        self.n = len(tokens)
        self._memo: dict[tuple[int, int], list] = {}
        self._and_memo: dict[int, dict[int, list]] = {}

    # Results are lists of (end_exclusive, bindings-dict); bindings map
    # variable name -> Binding and must agree on norm for repeated names.

    def matches_at(self, node: pat.PatternNode, i: int) -> list:
        key = (id(node), i)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._compute(node, i)
            self._memo[key] = hit
        return hit

    def _compute(self, node: pat.PatternNode, i: int) -> list:
        if isinstance(node, pat.Literal):
            if i < self.n and self.tokens[i].norm == node.token.lower():
                return [(i + 1, {})]
            return []
        if isinstance(node, pat.Variable):
            type_ref = self.env.get(node.name.lower(), node.type_ref)
            out = []
            for end in range(i + 1, self.n + 1):
                first, last = strip_articles(self.tokens, i, end - 1)
                if not check_type(self.tokens[first : last + 1], type_ref, self.env):
                    continue
                binding = Binding(
                    _joined_surface(self.tokens, first, last),
                    " ".join(t.norm for t in self.tokens[first : last + 1]),
                    first,
                    last,
                )
                out.append((end, {node.name: binding}))
            return out
        if isinstance(node, pat.SeqSet):
            states = [(i, {})]
            for child in node.children:
                nxt = []
                for at, bound in states:
                    for end, more in self.matches_at(child, at):
                        merged = _merge(bound, more)
                        if merged is not None:
                            nxt.append((end, merged))
                states = nxt
                if not states:
                    return []
            return [(end, bound) for end, bound in states]
        if isinstance(node, pat.AnySet):
            out = []
            for child in node.children:
                out.extend(self.matches_at(child, i))
            return out
        if isinstance(node, pat.AndSet):
            return self._and_matches(node).get(i, [])
        raise TypeError(f"not a pattern node: {node!r}")

    def _and_matches(self, node: pat.AndSet) -> dict[int, list]:
        cached = self._and_memo.get(id(node))
        if cached is not None:
            return cached
        per_child = []
        for child in node.children:
            found = []
            for start in range(self.n):
                for end, bound in self.matches_at(child, start):
                    found.append((start, end, bound))
            per_child.append(found)
        by_start: dict[int, list] = {}
        for combo in product(*per_child):
            bound: dict | None = {}
            for _s, _e, more in combo:
                bound = _merge(bound, more)
                if bound is None:
                    break
            if bound is None:
                continue
            start = min(s for s, _e, _b in combo)
            end = max(e for _s, e, _b in combo)
            by_start.setdefault(start, []).append((end, bound))
        self._and_memo[id(node)] = by_start
        return by_start


def _merge(base: dict, extra: dict) -> dict | None:
    if not extra:
        return base
    merged = dict(base)
    for name, binding in extra.items():
        held = merged.get(name)
        if held is not None and held.norm != binding.norm:
            return None
        merged[name] = binding
    return merged


def _match_key(first: int, last: int, bindings: Mapping[str, Binding]):
    return (
        first,
        last,
        tuple(
            (name, b.norm, b.first, b.last) for name, b in sorted(bindings.items())
        ),
    )


def match_pattern(
    pattern: pat.PatternNode,
    tokens: Sequence[Token],
    env: TypeEnv | None = None,
) -> list[Match]:
    """All matches of a pattern over the tokens, at every start position,
    ordered by (start, end, bindings) with duplicates removed."""
    engine = _Engine(tokens, dict(env or {}))
    found: dict = {}
    for start in range(len(tokens)):
        for end, bound in engine.matches_at(pattern, start):
            key = _match_key(start, end - 1, bound)
            if key not in found:
                found[key] = Match(pattern, start, end - 1, dict(bound))
    return [found[key] for key in sorted(found)]


# -- event extraction ---------------------------------------------------


@dataclass(frozen=True)
class Document:
    """One corpus entry: text, its source URI and a time tick."""

    text: str
    source: str
    time: int


def ensure_definition_things(store: GraphStore, definition: ThingDefinition) -> int:
    """Find or create the appearance and role nodes for a definition."""
    app_id, _ = store.find_or_create("appearance", definition.name)
    for role in definition.roles:
        role_id, _ = store.find_or_create("role", role)
        store.add_edge(Edge("has", app_id, role_id, role=role))
    return app_id


def definition_patterns(definition: ThingDefinition) -> list[pat.PatternNode]:
    """Explicit patterns, or the pattern implicit in the name."""
    if definition.patterns:
        return definition.patterns
    return [pat.parse_pattern(definition.name)]


def extract_events(
    store: GraphStore,
    definitions: Sequence[ThingDefinition],
    doc: Document,
) -> list[int]:
    """Create an event node for every accepted match of every definition.

    Each event inherits from the definition's appearance, carries the
    document time, source and the filled-in pattern text, and one role
    edge per variable binding to an actor reused or created under the
    binding's normalized value.
    """
    created: list[int] = []
    tokens = tokenize(doc.text)
    for definition in definitions:
        app_id = ensure_definition_things(store, definition)
        env = {role.lower(): t for role, t in definition.role_types.items()}
        seen_keys = set()
        for pattern in definition_patterns(definition):
            for match in match_pattern(pattern, tokens, env):
                key = _match_key(match.first, match.last, match.bindings)
                if key in seen_keys:
                    continue
                seen_keys.add(key)
                text = pat.render_filled(
                    pattern, {n: b.surface for n, b in match.bindings.items()}
                )
                event_id = store.add_thing(
                    "event",
                    properties={"sources": doc.source, "text": text},
                    times=TimeSpec.point(doc.time),
                )
                store.add_edge(Edge("is", event_id, app_id))
                for name in sorted(match.bindings):
                    binding = match.bindings[name]
                    role = name.lower()
                    role_id, _ = store.find_or_create("role", role)
                    actor_id, _ = store.find_or_create("actor", binding.norm)
                    store.add_edge(Edge("has", event_id, actor_id, role=role))
                    store.add_edge(Edge("is", actor_id, role_id))
                created.append(event_id)
    return created


# -- corpus ---------------------------------------------------------------


class CorpusError(ValueError):
    """Malformed corpus line; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def time_to_tick(value, granularity: int = 1):
    """Convert a corpus time value to a tick: integers pass through,
    ISO-8601 strings map to epoch seconds divided by the granularity."""
    from datetime import datetime, timezone

    if isinstance(value, bool):
        raise ValueError("time must be an integer tick or ISO-8601 string")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.replace("Z", "+00:00")
        stamp = datetime.fromisoformat(text)
        if stamp.tzinfo is None:
            stamp = stamp.replace(tzinfo=timezone.utc)
        return int(stamp.timestamp()) // granularity
    raise ValueError("time must be an integer tick or ISO-8601 string")


def parse_corpus_line(line: str, line_no: int, granularity: int = 1) -> Document:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"invalid JSON: {exc}", line_no) from exc
    if not isinstance(raw, dict):
        raise CorpusError("document must be a JSON object", line_no)
    missing = {"time", "source", "text"} - set(raw)
    if missing:
        raise CorpusError(f"missing fields {sorted(missing)}", line_no)
    try:
        tick = time_to_tick(raw["time"], granularity)
    except ValueError as exc:
        raise CorpusError(str(exc), line_no) from exc
    if not isinstance(raw["text"], str) or not isinstance(raw["source"], str):
        raise CorpusError("text and source must be strings", line_no)
    return Document(raw["text"], raw["source"], tick)


def read_corpus(fp, granularity: int = 1) -> list[Document]:
    """Read JSON-lines documents; blank lines are skipped."""
    docs = []
    for line_no, line in enumerate(fp, start=1):
        if line.strip():
            docs.append(parse_corpus_line(line, line_no, granularity))
    return docs
