"""Byte-level tokenizer for PDF syntax.

The lexer is total: malformed input produces diagnostics and the scanner
resynchronizes at the next delimiter instead of raising.
"""

from __future__ import annotations

import enum
import re
from typing import Any, Iterator, NamedTuple

from .model import Diagnostic

WHITESPACE = b"\x00\t\n\x0c\r "
DELIMITERS = b"()<>[]{}/%"

_REGULAR = re.compile(rb"[^\x00\t\n\x0c\r ()<>\[\]{}/%]+")
_WHITESPACE_RUN = re.compile(rb"[\x00\t\n\x0c\r ]+")
_NUMBER = re.compile(rb"[+-]?(?:\d+\.?\d*|\.\d+)")
_HEX_DIGITS = frozenset(b"0123456789abcdefABCDEF")

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_ESCAPES = {
    ord("n"): b"\n",
    ord("r"): b"\r",
    ord("t"): b"\t",
    ord("b"): b"\b",
    ord("f"): b"\f",
    ord("("): b"(",
    ord(")"): b")",
    ord("\\"): b"\\",
}


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    NUMBER = "number"
    LITERAL_STRING = "literal_string"
    HEX_STRING = "hex_string"
    NAME = "name"
    ARRAY_OPEN = "["
    ARRAY_CLOSE = "]"
    DICT_OPEN = "<<"
    DICT_CLOSE = ">>"
    EOF_MARKER = "%%EOF"


class Token(NamedTuple):
    kind: TokenKind
    value: Any
    start: int
    end: int


def normalize_name(raw: bytes, diagnostics: list[Diagnostic] | None = None,
                   offset: int | None = None) -> str:
    """Decode ``#xx`` escapes in a name body (the bytes after ``/``).

    A ``#`` not followed by two hex digits is kept literally and reported
    as a malformed escape.
    """
    if b"#" not in raw:
        return raw.decode("latin-1")
    out = bytearray()
    malformed = False
    i = 0
    n = len(raw)
    while i < n:
        b = raw[i]
        if b == 0x23:
            if i + 2 < n and raw[i + 1] in _HEX_DIGITS and raw[i + 2] in _HEX_DIGITS:
                out.append(int(raw[i + 1:i + 3], 16))
                i += 3
                continue
            malformed = True
        out.append(b)
        i += 1
    if malformed and diagnostics is not None:
        diagnostics.append(Diagnostic("malformed-escape",
                                      f"dangling '#' in name {raw!r}", offset))
    return out.decode("latin-1")


class Lexer:
    """Pull tokenizer over an immutable byte buffer.

    ``pos`` may be reassigned by the caller to reposition the scanner (the
    object parser does this around stream data).
    """

    def __init__(self, data: bytes, pos: int = 0,
                 diagnostics: list[Diagnostic] | None = None):
        self.data = data
        self.pos = pos
        self.diagnostics = diagnostics if diagnostics is not None else []
        self._peeked: list[Token] = []

    def _warn(self, code: str, message: str, offset: int) -> None:
        self.diagnostics.append(Diagnostic(code, message, offset))

    def seek(self, pos: int) -> None:
        self.pos = pos
        self._peeked.clear()

    def tell(self) -> int:
        """Offset of the next unread token (or raw position if none peeked)."""
        return self._peeked[0].start if self._peeked else self.pos

    def peek(self, k: int = 0) -> Token | None:
        while len(self._peeked) <= k:
            token = self._scan()
            if token is None:
                return None
            self._peeked.append(token)
        return self._peeked[k]

    def next(self) -> Token | None:
        if self._peeked:
            return self._peeked.pop(0)
        return self._scan()

    def skip_whitespace(self) -> None:
        """Skip whitespace and comments at the raw position."""
        data = self.data
        n = len(data)
        while self.pos < n:
            m = _WHITESPACE_RUN.match(data, self.pos)
            if m:
                self.pos = m.end()
                continue
            if data[self.pos] == 0x25 and not data.startswith(b"%%EOF", self.pos):
                self._skip_comment()
                continue
            break

    def _skip_comment(self) -> None:
        data = self.data
        end = len(data)
        for terminator in (b"\r", b"\n"):
            idx = data.find(terminator, self.pos)
            if idx != -1 and idx < end:
                end = idx
        self.pos = end

    def _scan(self) -> Token | None:
        data = self.data
        n = len(data)
        while True:
            self.skip_whitespace()
            if self.pos >= n:
                return None
            start = self.pos
            c = data[start]
            if c == 0x25:  # only %%EOF survives skip_whitespace
                self._skip_comment()
                return Token(TokenKind.EOF_MARKER, "%%EOF", start, start + 5)
            if c == 0x2F:  # /
                m = _REGULAR.match(data, start + 1)
                end = m.end() if m else start + 1
                self.pos = end
                name = normalize_name(data[start + 1:end], self.diagnostics, start)
                return Token(TokenKind.NAME, name, start, end)
            if c == 0x28:  # (
                return self._literal_string(start)
            if c == 0x3C:  # <
                if data.startswith(b"<<", start):
                    self.pos = start + 2
                    return Token(TokenKind.DICT_OPEN, "<<", start, start + 2)
                return self._hex_string(start)
            if c == 0x3E:  # >
                if data.startswith(b">>", start):
                    self.pos = start + 2
                    return Token(TokenKind.DICT_CLOSE, ">>", start, start + 2)
                self._warn("stray-delimiter", "unmatched '>'", start)
                self.pos = start + 1
                continue
            if c == 0x5B:
                self.pos = start + 1
                return Token(TokenKind.ARRAY_OPEN, "[", start, start + 1)
            if c == 0x5D:
                self.pos = start + 1
                return Token(TokenKind.ARRAY_CLOSE, "]", start, start + 1)
            if c in (0x7B, 0x7D):
                self.pos = start + 1
                return Token(TokenKind.KEYWORD, chr(c), start, start + 1)
            if c == 0x29:
                self._warn("stray-delimiter", "unmatched ')'", start)
                self.pos = start + 1
                continue
            m = _REGULAR.match(data, start)
            if m is None:  # unreachable given the delimiter cases above
                self.pos = start + 1
                continue
            self.pos = m.end()
            return self._regular(m.group(), start, m.end())

    def _regular(self, raw: bytes, start: int, end: int) -> Token:
        if _NUMBER.fullmatch(raw):
            if b"." in raw:
                value = float(raw)
                if value in (float("inf"), float("-inf")):
                    self._warn("bad-number", f"numeric overflow {raw[:32]!r}", start)
                    return Token(TokenKind.KEYWORD, raw.decode("latin-1"), start, end)
                return Token(TokenKind.NUMBER, value, start, end)
            value = int(raw)
            if not INT64_MIN <= value <= INT64_MAX:
                self._warn("int-overflow", f"integer {raw[:32]!r} exceeds 64 bits", start)
                return Token(TokenKind.NUMBER, float(value), start, end)
            return Token(TokenKind.NUMBER, value, start, end)
        return Token(TokenKind.KEYWORD, raw.decode("latin-1"), start, end)

    def _literal_string(self, start: int) -> Token:
        data = self.data
        n = len(data)
        out = bytearray()
        depth = 1
        i = start + 1
        while i < n:
            c = data[i]
            if c == 0x5C:  # backslash
                i += 1
                if i >= n:
                    break
                e = data[i]
                if e in _ESCAPES:
                    out += _ESCAPES[e]
                    i += 1
                elif 0x30 <= e <= 0x37:
                    j = i
                    while j < n and j < i + 3 and 0x30 <= data[j] <= 0x37:
                        j += 1
                    out.append(int(data[i:j], 8) & 0xFF)
                    i = j
                elif e == 0x0D:
                    i += 2 if data.startswith(b"\r\n", i) else 1
                elif e == 0x0A:
                    i += 1
                else:
                    out.append(e)
                    i += 1
            elif c == 0x28:
                depth += 1
                out.append(c)
                i += 1
            elif c == 0x29:
                depth -= 1
                i += 1
                if depth == 0:
                    self.pos = i
                    return Token(TokenKind.LITERAL_STRING, bytes(out), start, i)
                out.append(c)
            elif c == 0x0D:
                out.append(0x0A)
                i += 2 if data.startswith(b"\r\n", i) else 1
            else:
                out.append(c)
                i += 1
        self._warn("unterminated-string", "literal string runs to end of input", start)
        self.pos = n
        return Token(TokenKind.LITERAL_STRING, bytes(out), start, n)

    def _hex_string(self, start: int) -> Token:
        data = self.data
        n = len(data)
        digits = bytearray()
        i = start + 1
        while i < n:
            c = data[i]
            if c == 0x3E:
                i += 1
                break
            if c in _HEX_DIGITS:
                digits.append(c)
            elif c not in WHITESPACE:
                self._warn("bad-hex-string", f"invalid byte 0x{c:02x} in hex string", i)
                break
            i += 1
        else:
            self._warn("unterminated-string", "hex string runs to end of input", start)
        if len(digits) % 2:
            digits.append(0x30)
        self.pos = i
        return Token(TokenKind.HEX_STRING, bytes.fromhex(digits.decode("ascii")), start, i)


def tokenize(data: bytes, diagnostics: list[Diagnostic] | None = None) -> Iterator[Token]:
    """Yield every token in ``data``; never raises on malformed input."""
    lexer = Lexer(data, diagnostics=diagnostics)
    while True:
        token = lexer.next()
        if token is None:
            return
        yield token
