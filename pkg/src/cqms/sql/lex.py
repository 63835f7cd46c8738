"""Tokenizer for the supported SELECT dialect."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SqlSyntaxError

KEYWORDS = frozenset(
    """
    SELECT DISTINCT FROM WHERE GROUP BY HAVING ORDER LIMIT AS ON
    JOIN INNER LEFT RIGHT FULL OUTER CROSS NATURAL USING
    AND OR NOT LIKE IN BETWEEN EXISTS IS NULL ASC DESC
    UNION INTERSECT EXCEPT OVER
    INSERT UPDATE DELETE CREATE DROP ALTER WITH VALUES SET INTO
    """.split()
)

AGGREGATE_FUNCS = frozenset({"count", "sum", "avg", "min", "max"})

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    | (?P<string>'(?:[^']|'')*')
    | (?P<qident>"(?:[^"]|"")*")
    | (?P<ident>[A-Za-z_][A-Za-z_0-9$]*)
    | (?P<op><>|!=|<=|>=|<|>|=|\(|\)|,|\.|\*|\?|;|\+|-|/)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    type: str  # "kw" | "ident" | "number" | "string" | "op" | "eof"
    value: str  # keywords uppercased, != normalized to <>, strings unquoted
    start: int
    end: int
    quoted: bool = False


def tokenize(text: str) -> list[Token]:
    """Split text into tokens; raises SqlSyntaxError on stray characters."""
    out: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SqlSyntaxError(pos, ["a valid token (got %r)" % text[pos]])
        kind = m.lastgroup
        lexeme = m.group()
        start, pos = m.start(), m.end()
        if kind == "ws":
            continue
        if kind == "ident":
            upper = lexeme.upper()
            if upper in KEYWORDS:
                out.append(Token("kw", upper, start, pos))
            else:
                out.append(Token("ident", lexeme, start, pos))
        elif kind == "qident":
            inner = lexeme[1:-1].replace('""', '"')
            if not inner:
                raise SqlSyntaxError(start, ["a non-empty quoted identifier"])
            out.append(Token("ident", inner, start, pos, quoted=True))
        elif kind == "string":
            out.append(Token("string", lexeme[1:-1].replace("''", "'"), start, pos))
        elif kind == "number":
            out.append(Token("number", lexeme, start, pos))
        else:
            value = "<>" if lexeme == "!=" else lexeme
            out.append(Token("op", value, start, pos))
    out.append(Token("eof", "", n, n))
    return out
