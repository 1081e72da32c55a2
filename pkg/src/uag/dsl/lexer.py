"""Tokenizer for the workspace language."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, DslError

KEYWORDS = frozenset({
    "signature", "sorts", "ops", "rels", "identities", "forall", "algebra", "carrier", "op",
    "model", "multimodel", "with", "instances", "context", "system", "over", "in", "formula",
    "exists", "all", "pointset",
})

SYMBOLS = ("->", "/\\", "\\/", "{", "}", "(", ")", ";", ":", ",", ".", "=", "~")

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
NUMBER = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str       # ident, number, string, kw, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    out: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def fail(msg: str, hint: str | None = None):
        raise DslError([Diagnostic("error", file, line, col, msg, "lexical", hint)])

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                fail("unterminated string", "close the quoted name with '\"'")
            out.append(Token("string", text[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        m = IDENT.match(text, i)
        if m:
            word = m.group()
            out.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
            col += len(word)
            i = m.end()
            continue
        m = NUMBER.match(text, i)
        if m:
            out.append(Token("number", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                out.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            fail(f"unexpected character {c!r}")
    out.append(Token("eof", "", line, col))
    return out


def needs_quotes(name: str) -> bool:
    if name in KEYWORDS:
        return True
    return not (IDENT.fullmatch(name) or NUMBER.fullmatch(name))


def quote(name: str) -> str:
    return f'"{name}"' if needs_quotes(name) else name
