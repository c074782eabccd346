"""Text tokenization shared by the matcher and the pattern language.

Maximal runs of letters become ``word`` tokens, maximal runs of digits
(with at most one interior dot flanked by digits) become ``number``
tokens, and every other non-space character is a single ``punct`` token.
So ``12.5`` is one token while ``example.com`` is three.
"""

from __future__ import annotations

from dataclasses import dataclass

WORD = "word"
NUMBER = "number"
PUNCT = "punct"


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str
    cls: str
    start: int
    end: int  # character span, end exclusive


def take_token(text: str, i: int) -> tuple[str, str, int]:
    """Read the single token starting at non-space position ``i``.

    Returns (surface, class, next index).
    """
    ch = text[i]
    if ch.isalpha():
        j = i + 1
        while j < len(text) and text[j].isalpha():
            j += 1
        return text[i:j], WORD, j
    if ch.isdecimal():
        j = i + 1
        dotted = False
        while j < len(text):
            c = text[j]
            if c.isdecimal():
                j += 1
            elif (
                c == "."
                and not dotted
                and j + 1 < len(text)
                and text[j + 1].isdecimal()
            ):
                dotted = True
                j += 2
            else:
                break
        return text[i:j], NUMBER, j
    return ch, PUNCT, i + 1


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into word, number and punctuation tokens."""
    out: list[Token] = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        surface, cls, j = take_token(text, i)
        out.append(Token(surface, surface.lower(), cls, i, j))
        i = j
    return out
