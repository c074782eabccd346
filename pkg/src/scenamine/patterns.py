"""Pattern expression language: AST, parser and canonical renderer.

A pattern is built from plain tokens, quoted phrases and three kinds of
nested collections: alternatives framed with braces ``{red green}``,
unordered conjunctions framed with parentheses ``(a b)`` and ordered
sequences framed with brackets ``[a b]``.  ``$name`` marks a variable
slot to be bound when the pattern is matched against text.  Top-level
whitespace-separated elements form an implicit sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

from .tokens import take_token, tokenize

ATOMIC_TYPES = ("word", "time", "number", "money")

# Typographic quotes are folded to their ASCII forms before lexing.
_QUOTE_FOLD = str.maketrans({"‘": "'", "’": "'", "“": '"', "”": '"'})

_OPEN = {"{": "any", "(": "and", "[": "seq"}
_CLOSE = {"}": "{", ")": "(", "]": "["}
_STRUCTURAL = set("{}()[]$'\"")
_VAR_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


class PatternSyntaxError(ValueError):
    """Malformed pattern text; carries the byte offset of the fault."""

    def __init__(self, message: str, source: str, position: int):
        self.offset = len(source[:position].encode("utf-8"))
        super().__init__(f"{message} (byte offset {self.offset})")


class PatternNode:
    """Base class for pattern AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class TypeRef:
    """Domain restriction for a variable: an atomic type name, a composite
    pattern, or no restriction at all."""

    kind: str  # one of ATOMIC_TYPES, "composite" or "untyped"
    pattern: PatternNode | None = None

    def __post_init__(self):
        if self.kind not in ATOMIC_TYPES + ("composite", "untyped"):
            raise ValueError(f"unknown type kind {self.kind!r}")
        if (self.kind == "composite") != (self.pattern is not None):
            raise ValueError("composite types carry a pattern, atomic types do not")


UNTYPED = TypeRef("untyped")


@dataclass(frozen=True)
class Literal(PatternNode):
    token: str

    def __post_init__(self):
        if not self.token or any(c.isspace() for c in self.token):
            raise ValueError(f"bad literal token {self.token!r}")


@dataclass(frozen=True)
class Variable(PatternNode):
    name: str
    type_ref: TypeRef = UNTYPED

    def __post_init__(self):
        if not self.name or self.name.startswith("$") or any(c.isspace() for c in self.name):
            raise ValueError(f"bad variable name {self.name!r}")


def _coerce_children(node: PatternNode, children) -> None:
    children = tuple(children)
    if not children:
        raise ValueError(f"{type(node).__name__} requires at least one child")
    object.__setattr__(node, "children", children)


@dataclass(frozen=True)
class AnySet(PatternNode):
    children: tuple[PatternNode, ...]

    def __post_init__(self):
        _coerce_children(self, self.children)


@dataclass(frozen=True)
class AndSet(PatternNode):
    children: tuple[PatternNode, ...]

    def __post_init__(self):
        _coerce_children(self, self.children)


@dataclass(frozen=True)
class SeqSet(PatternNode):
    children: tuple[PatternNode, ...]

    def __post_init__(self):
        _coerce_children(self, self.children)


_SET_TYPES = {"any": AnySet, "and": AndSet, "seq": SeqSet}


def _lex_phrase(source: str, start: int, quote: str) -> tuple[PatternNode, int]:
    end = source.find(quote, start + 1)
    if end < 0:
        raise PatternSyntaxError("unterminated quote", source, start)
    parts = tokenize(source[start + 1 : end])
    if not parts:
        raise PatternSyntaxError("empty quoted phrase", source, start)
    literals = [Literal(t.surface) for t in parts]
    if len(literals) == 1:
        return literals[0], end + 1
    return SeqSet(tuple(literals)), end + 1


def parse_pattern(source: str) -> PatternNode:
    """Parse pattern text into an AST.

    A single top-level element is returned directly; several top-level
    elements become a sequence.  Raises PatternSyntaxError on unbalanced
    delimiters, empty collections and bare ``$``.
    """
    text = source.translate(_QUOTE_FOLD)
    if not text.strip():
        raise PatternSyntaxError("empty pattern", source, 0)
    # stack of (set kind, children, open position); "" marks top level
    stack: list[tuple[str, list[PatternNode], int]] = [("", [], 0)]
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in _OPEN:
            stack.append((_OPEN[ch], [], i))
            i += 1
        elif ch in _CLOSE:
            kind, children, opened = stack.pop()
            if not kind or _OPEN[_CLOSE[ch]] != kind:
                raise PatternSyntaxError(f"unbalanced {ch!r}", source, i)
            if not children:
                raise PatternSyntaxError("empty set", source, opened)
            stack[-1][1].append(_SET_TYPES[kind](tuple(children)))
            i += 1
        elif ch in ("'", '"'):
            node, i = _lex_phrase(text, i, ch)
            stack[-1][1].append(node)
        elif ch == "$":
            j = i + 1
            while j < n and text[j] in _VAR_CHARS:
                j += 1
            if j == i + 1:
                raise PatternSyntaxError("bare '$' without variable name", source, i)
            stack[-1][1].append(Variable(text[i + 1 : j]))
            i = j
        else:
            surface, _cls, i = take_token(text, i)
            stack[-1][1].append(Literal(surface))
    if len(stack) > 1:
        raise PatternSyntaxError("unclosed delimiter", source, stack[-1][2])
    elements = stack[0][1]
    if len(elements) == 1:
        return elements[0]
    return SeqSet(tuple(elements))


def _is_single_token(token: str) -> bool:
    surface, _cls, j = take_token(token, 0)
    return j == len(token) and surface == token


def _render(node: PatternNode) -> str:
    if isinstance(node, Literal):
        if not (set(node.token) & _STRUCTURAL) and _is_single_token(node.token):
            return node.token
        return f"'{node.token}'"
    if isinstance(node, Variable):
        return f"${node.name}"
    if isinstance(node, AnySet):
        return "{" + " ".join(_render(c) for c in node.children) + "}"
    if isinstance(node, AndSet):
        return "(" + " ".join(_render(c) for c in node.children) + ")"
    if isinstance(node, SeqSet):
        if len(node.children) > 1 and all(
            isinstance(c, Literal) and "'" not in c.token and _is_single_token(c.token)
            for c in node.children
        ):
            return "'" + " ".join(c.token for c in node.children) + "'"
        return "[" + " ".join(_render(c) for c in node.children) + "]"
    raise TypeError(f"not a pattern node: {node!r}")


def render_pattern(ast: PatternNode) -> str:
    """Render an AST back to canonical text, such that parsing the result
    reproduces a structurally equal AST."""
    if isinstance(ast, SeqSet) and len(ast.children) > 1:
        return " ".join(_render(c) for c in ast.children)
    return _render(ast)


def render_filled(ast: PatternNode, values: dict[str, str]) -> str:
    """Render like render_pattern but substitute each variable with its
    bound text."""

    def rec(node: PatternNode) -> str:
        if isinstance(node, Variable):
            return values.get(node.name, f"${node.name}")
        if isinstance(node, (AnySet, AndSet, SeqSet)):
            parts = [rec(c) for c in node.children]
            if isinstance(node, AnySet):
                return "{" + " ".join(parts) + "}"
            if isinstance(node, AndSet):
                return "(" + " ".join(parts) + ")"
            return " ".join(parts)
        return _render(node)

    if isinstance(ast, SeqSet):
        return " ".join(rec(c) for c in ast.children)
    return rec(ast)


def list_variables(ast: PatternNode) -> list[str]:
    """Variable names in left-to-right first-occurrence order; the length
    of the result is the pattern's arity."""
    seen: list[str] = []

    def walk(node: PatternNode) -> None:
        if isinstance(node, Variable):
            if node.name not in seen:
                seen.append(node.name)
        elif isinstance(node, (AnySet, AndSet, SeqSet)):
            for c in node.children:
                walk(c)

    walk(ast)
    return seen
