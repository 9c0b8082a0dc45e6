"""Tokenizer for the Mini language.

Line comments start with `//`. String literals support the escapes
\\" \\\\ \\n \\t. Token kinds: IDENT, INT, STRING, KEYWORD, PUNCT, EOF.
"""

from __future__ import annotations

from dataclasses import dataclass


KEYWORDS = frozenset(
    {
        "class",
        "static",
        "void",
        "int",
        "bool",
        "string",
        "list",
        "if",
        "else",
        "while",
        "return",
        "throw",
        "new",
        "true",
        "false",
    }
)

# Longest first so that two-char punctuation wins over its one-char prefix.
PUNCTUATION = (
    "==",
    "!=",
    "<=",
    ">=",
    "&&",
    "||",
    "{",
    "}",
    "(",
    ")",
    "[",
    "]",
    "<",
    ">",
    ",",
    ";",
    ".",
    "=",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
    "@",
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | STRING | KEYWORD | PUNCT | EOF
    value: str
    line: int
    col: int


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col


_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance()
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("INT", text[i:j], start_line, start_col))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, start_line, start_col))
            advance(j - i)
            continue
        if ch == '"':
            advance()
            parts: list[str] = []
            while True:
                if i >= n:
                    raise LexError("unterminated string literal", start_line, start_col)
                c = text[i]
                if c == "\n":
                    raise LexError("unterminated string literal", start_line, start_col)
                if c == '"':
                    advance()
                    break
                if c == "\\":
                    advance()
                    if i >= n or text[i] not in _ESCAPES:
                        raise LexError("bad escape sequence", line, col)
                    parts.append(_ESCAPES[text[i]])
                    advance()
                    continue
                parts.append(c)
                advance()
            tokens.append(Token("STRING", "".join(parts), start_line, start_col))
            continue
        for punct in PUNCTUATION:
            if text.startswith(punct, i):
                tokens.append(Token("PUNCT", punct, start_line, start_col))
                advance(len(punct))
                break
        else:
            raise LexError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens
