"""PDF parsing under two disciplines.

``ParseMode.STRICT`` behaves like a conforming reader: it starts at the last
``startxref``, walks the /Prev chain and parses exactly the objects the
cross-reference tables list.  ``ParseMode.SCAVENGE`` ignores the tables and
collects every ``N G obj`` header found by a linear scan, the way naive
custom parsers do.  Objects that only the second discipline sees are the
signature of content injected after the x-ref table.
"""

from __future__ import annotations

import dataclasses
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import (FileTooLarge, FilterError, NoTrailer, NotAPdf, ParseError,
                     TruncatedFile)
from .filters import decode_stream
from .lexer import Lexer, TokenKind
from .model import (Diagnostic, Document, IndirectObject, Name, ParseMode,
                    PdfString, Reference, Revision, Stream, Trailer, XrefEntry,
                    _compute_effective)

log = logging.getLogger(__name__)

MAX_FILE_SIZE = 64 * 1024 * 1024
MAX_OBJECTS = 1_000_000
MAX_NESTING = 256
HEADER_WINDOW = 1024
STARTXREF_WINDOW = 2048

_HEADER = re.compile(rb"%PDF-(\d+\.\d+)")
_OBJ_HEADER = re.compile(
    rb"(?<![0-9])(\d{1,10})[\x00\t\n\x0c\r ]+(\d{1,5})[\x00\t\n\x0c\r ]+obj(?![^\x00\t\n\x0c\r ()<>\[\]{}/%])")
_SUBSECTION = re.compile(rb"(\d{1,10})[ \t]+(\d{1,10})[ \t]*(?=[\r\n])")
_ENTRY = re.compile(rb"(\d{1,10})[ \t]+(\d{1,5})[ \t]+([nf])")
_XREF_KEYWORD = re.compile(rb"(?<![A-Za-z])xref(?=[\x00\t\n\x0c\r ])")
_TRAILER_KEYWORD = re.compile(rb"(?<![A-Za-z])trailer(?![A-Za-z])")

_STRUCTURAL = frozenset({"obj", "endobj", "stream", "endstream", "xref",
                         "trailer", "startxref"})


class _Unexpected(Exception):
    """Raised inside value parsing when a token cannot start a value."""


def parse_header(data: bytes) -> str:
    """Return the ``X.Y`` version from the first ``%PDF-X.Y`` marker."""
    m = _HEADER.search(data[:HEADER_WINDOW + 8], 0)
    if m is None or m.start() >= HEADER_WINDOW:
        raise NotAPdf("no %PDF- header in the first 1024 bytes")
    return m.group(1).decode("ascii")


class ObjectReader:
    """Parses direct values and indirect objects out of a byte buffer."""

    def __init__(self, data: bytes, diagnostics: list[Diagnostic],
                 length_resolver: Callable[[Reference], Any] | None = None):
        self.data = data
        self.diagnostics = diagnostics
        self.length_resolver = length_resolver
        self._cache: dict[int, tuple[IndirectObject, int] | None] = {}

    def _warn(self, code: str, message: str, offset: int | None,
              severity: str = "warning") -> None:
        self.diagnostics.append(Diagnostic(code, message, offset, severity))

    # -- direct values ------------------------------------------------------

    def parse_value(self, lexer: Lexer, depth: int = 0) -> Any:
        if depth > MAX_NESTING:
            raise _Unexpected("nesting too deep")
        token = lexer.peek()
        if token is None:
            raise _Unexpected("end of input")
        kind = token.kind
        if kind in (TokenKind.ARRAY_CLOSE, TokenKind.DICT_CLOSE, TokenKind.EOF_MARKER):
            raise _Unexpected(f"unexpected {token.value!r}")
        if kind is TokenKind.KEYWORD and token.value in _STRUCTURAL:
            raise _Unexpected(f"unexpected keyword {token.value!r}")
        lexer.next()
        if kind is TokenKind.NUMBER:
            return self._number_or_reference(lexer, token)
        if kind is TokenKind.NAME:
            return Name(token.value)
        if kind is TokenKind.LITERAL_STRING:
            return PdfString(token.value)
        if kind is TokenKind.HEX_STRING:
            return PdfString(token.value, hex=True)
        if kind is TokenKind.ARRAY_OPEN:
            return self._array(lexer, depth, token.start)
        if kind is TokenKind.DICT_OPEN:
            return self._dictionary(lexer, depth, token.start)
        if token.value == "true":
            return True
        if token.value == "false":
            return False
        if token.value != "null":
            self._warn("unknown-keyword", f"bare keyword {token.value[:32]!r} read as null",
                       token.start)
        return None

    def _number_or_reference(self, lexer: Lexer, token) -> Any:
        value = token.value
        if isinstance(value, int) and value >= 0:
            gen = lexer.peek(0)
            r = lexer.peek(1)
            if (gen is not None and r is not None and gen.kind is TokenKind.NUMBER
                    and isinstance(gen.value, int) and gen.value >= 0
                    and r.kind is TokenKind.KEYWORD and r.value == "R"):
                lexer.next()
                lexer.next()
                if value == 0:
                    self._warn("bad-reference", "reference to object 0 read as null",
                               token.start)
                    return None
                return Reference(value, gen.value)
        return value

    def _array(self, lexer: Lexer, depth: int, start: int) -> list:
        items: list = []
        while True:
            token = lexer.peek()
            if token is not None and token.kind is TokenKind.ARRAY_CLOSE:
                lexer.next()
                return items
            try:
                items.append(self.parse_value(lexer, depth + 1))
            except _Unexpected as exc:
                self._warn("unterminated-array", f"array closed early: {exc}", start)
                return items

    def _dictionary(self, lexer: Lexer, depth: int, start: int) -> dict:
        result: dict[str, Any] = {}
        while True:
            token = lexer.peek()
            if token is None:
                self._warn("unterminated-dict", "dictionary runs to end of input", start)
                return result
            if token.kind is TokenKind.DICT_CLOSE:
                lexer.next()
                return result
            if token.kind is not TokenKind.NAME:
                try:
                    junk = self.parse_value(lexer, depth + 1)
                except _Unexpected as exc:
                    self._warn("unterminated-dict", f"dictionary closed early: {exc}", start)
                    return result
                self._warn("bad-dict-key", f"non-name key {junk!r} skipped", token.start)
                continue
            lexer.next()
            key = token.value
            try:
                value = self.parse_value(lexer, depth + 1)
            except _Unexpected:
                self._warn("missing-value", f"key /{key} has no value", token.start)
                value = None
            if key in result:
                self._warn("duplicate-key", f"duplicate key /{key}; last one wins", token.start)
            result[key] = value

    # -- indirect objects ---------------------------------------------------

    def parse_indirect_at(self, offset: int) -> tuple[IndirectObject, int] | None:
        """Parse ``N G obj ... endobj`` at ``offset``; returns (object, end)."""
        if offset in self._cache:
            return self._cache[offset]
        self._cache[offset] = None  # recursion guard for /Length chains
        result = self._parse_indirect(offset)
        self._cache[offset] = result
        return result

    def _parse_indirect(self, offset: int) -> tuple[IndirectObject, int] | None:
        if not 0 <= offset < len(self.data):
            return None
        lexer = Lexer(self.data, offset, self.diagnostics)
        num, gen, kw = lexer.next(), lexer.next(), lexer.next()
        if (num is None or gen is None or kw is None
                or num.kind is not TokenKind.NUMBER or not isinstance(num.value, int)
                or gen.kind is not TokenKind.NUMBER or not isinstance(gen.value, int)
                or kw.kind is not TokenKind.KEYWORD or kw.value != "obj"
                or num.value < 1 or gen.value < 0):
            return None
        try:
            value = self.parse_value(lexer)
        except _Unexpected as exc:
            self._warn("empty-object", f"object {num.value} has no value: {exc}", offset)
            value = None
        token = lexer.peek()
        if token is not None and token.kind is TokenKind.KEYWORD and token.value == "stream":
            if isinstance(value, dict):
                lexer.next()
                value = self._stream_body(lexer, value, token.end, num.value)
                token = lexer.peek()
            else:
                self._warn("stray-stream", f"object {num.value}: stream without dictionary",
                           token.start)
        if token is not None and token.kind is TokenKind.KEYWORD and token.value == "endobj":
            lexer.next()
            end = token.end
        else:
            self._warn("missing-endobj", f"object {num.value} lacks endobj", offset)
            end = lexer.tell()
        obj = IndirectObject(num.value, gen.value, value, offset)
        return obj, max(end, offset + 1)

    def _resolved_length(self, raw_length: Any) -> int | None:
        length = raw_length
        if isinstance(length, Reference) and self.length_resolver is not None:
            length = self.length_resolver(length)
        if isinstance(length, int) and not isinstance(length, bool) and length >= 0:
            return length
        return None

    def _stream_body(self, lexer: Lexer, dictionary: dict, keyword_end: int,
                     number: int) -> Stream:
        data = self.data
        n = len(data)
        start = keyword_end
        if data.startswith(b"\r\n", start):
            start += 2
        elif start < n and data[start] in b"\r\n":
            start += 1
        length = self._resolved_length(dictionary.get("Length"))
        if length is not None and start + length <= n:
            after = start + length
            probe = after
            while probe < n and data[probe] in b"\x00\t\n\x0c\r ":
                probe += 1
            if data.startswith(b"endstream", probe):
                lexer.seek(probe + 9)
                return Stream(dictionary, data[start:after])
        idx = data.find(b"endstream", start)
        if idx == -1:
            self._warn("truncated-stream", f"object {number}: stream has no endstream",
                       start, "error")
            lexer.seek(n)
            return Stream(dictionary, data[start:])
        raw_end = idx
        if data.startswith(b"\r\n", raw_end - 2) and raw_end - 2 >= start:
            raw_end -= 2
        elif raw_end - 1 >= start and data[raw_end - 1] in b"\r\n":
            raw_end -= 1
        if "Length" in dictionary:
            self._warn("length-mismatch",
                       f"object {number}: /Length disagrees with endstream position "
                       f"({raw_end - start} bytes)", start)
        lexer.seek(idx + 9)
        return Stream(dictionary, data[start:raw_end])

    def parse_dict_at(self, offset: int) -> tuple[dict, int] | None:
        lexer = Lexer(self.data, offset, self.diagnostics)
        try:
            value = self.parse_value(lexer)
        except _Unexpected:
            return None
        if not isinstance(value, dict):
            return None
        return value, lexer.tell()


# -- Strict discipline --------------------------------------------------------


@dataclass
class _XrefSection:
    xref_offset: int
    entries: list[XrefEntry]
    trailer: dict
    trailer_offset: int
    end: int
    ignored_bytes: int = 0


class _StrictParser:
    def __init__(self, data: bytes, diagnostics: list[Diagnostic]):
        self.data = data
        self.diagnostics = diagnostics
        self.offsets: dict[int, int] = {}
        self.reader = ObjectReader(data, diagnostics, self._resolve_length)
        self.object_count = 0

    def _warn(self, code: str, message: str, offset: int | None,
              severity: str = "warning") -> None:
        self.diagnostics.append(Diagnostic(code, message, offset, severity))

    def _resolve_length(self, ref: Reference) -> Any:
        offset = self.offsets.get(ref.object_number)
        if offset is None:
            return None
        parsed = self.reader.parse_indirect_at(offset)
        return None if parsed is None else parsed[0].value

    def _find_startxref(self) -> tuple[int, int]:
        data = self.data
        window_start = max(0, len(data) - STARTXREF_WINDOW)
        idx = data.rfind(b"startxref", window_start)
        if idx == -1:
            if b"%%EOF" not in data[window_start:]:
                raise TruncatedFile("no startxref and no %%EOF near end of file")
            raise NoTrailer("no startxref in the final 2048 bytes")
        lexer = Lexer(data, idx + 9, self.diagnostics)
        token = lexer.next()
        if token is None or token.kind is not TokenKind.NUMBER or not isinstance(token.value, int):
            raise NoTrailer("startxref is not followed by an offset")
        return idx, token.value

    def _read_section(self, offset: int) -> _XrefSection | None:
        data = self.data
        lexer = Lexer(data, offset, self.diagnostics)
        lexer.skip_whitespace()
        pos = lexer.pos
        if not data.startswith(b"xref", pos):
            return None
        pos += 4
        entries: list[XrefEntry] = []
        ignored = 0
        while True:
            lexer.seek(pos)
            lexer.skip_whitespace()
            pos = lexer.pos
            if pos >= len(data):
                self._warn("missing-trailer", "x-ref table runs to end of file", offset, "error")
                return None
            if data.startswith(b"trailer", pos):
                break
            m = _SUBSECTION.match(data, pos)
            if m is not None:
                first, count = int(m.group(1)), int(m.group(2))
                pos = m.end()
                for k in range(count):
                    lexer.seek(pos)
                    lexer.skip_whitespace()
                    e = _ENTRY.match(data, lexer.pos)
                    if e is None:
                        self._warn("bad-xref-entry",
                                   f"subsection {first}+{count} ends after {k} entries",
                                   lexer.pos)
                        break
                    pos = e.end()
                    number = first + k
                    if number == 0:
                        continue
                    entries.append(XrefEntry(number, int(e.group(1)), int(e.group(2)),
                                             e.group(3) == b"n"))
                continue
            m = _OBJ_HEADER.match(data, pos)
            if m is not None:
                parsed = self.reader.parse_indirect_at(pos)
                if parsed is not None:
                    self._warn("unreferenced-object",
                               f"object {parsed[0].object_number} sits between x-ref and "
                               f"trailer; ignored", pos)
                    lexer.seek(parsed[1])
                    lexer.skip_whitespace()
                    ignored += lexer.pos - pos
                    pos = lexer.pos
                    continue
            t = _TRAILER_KEYWORD.search(data, pos)
            if t is None:
                self._warn("missing-trailer", "no trailer after x-ref table", pos, "error")
                return None
            self._warn("xref-junk", f"skipped {t.start() - pos} bytes before trailer", pos)
            pos = t.start()
        trailer_offset = pos
        parsed_dict = self.reader.parse_dict_at(pos + 7)
        if parsed_dict is None:
            self._warn("bad-trailer", "trailer is not a dictionary", pos, "error")
            return None
        trailer, end = parsed_dict
        eof = data.find(b"%%EOF", end)
        if eof != -1:
            end = eof + 5
            if data.startswith(b"\r\n", end):
                end += 2
            elif end < len(data) and data[end] in b"\r\n":
                end += 1
        return _XrefSection(offset, entries, trailer, trailer_offset, end, ignored)

    def _recover_xref_offset(self, startxref_pos: int) -> int | None:
        candidates = [m.start() for m in _XREF_KEYWORD.finditer(self.data, 0, startxref_pos)
                      if not self.data[max(0, m.start() - 5):m.start()].endswith(b"start")]
        return candidates[-1] if candidates else None

    def parse(self) -> list[Revision]:
        startxref_pos, offset = self._find_startxref()
        sections: list[_XrefSection] = []
        visited: set[int] = set()
        current: int | None = offset
        while current is not None:
            if current in visited:
                self._warn("prev-loop", f"/Prev chain revisits offset {current}", current)
                break
            visited.add(current)
            section = self._read_section(current)
            if section is None and not sections:
                recovered = self._recover_xref_offset(startxref_pos)
                if recovered is not None and recovered not in visited:
                    self._warn("bad-startxref",
                               f"startxref {current} is not an x-ref table; using {recovered}",
                               startxref_pos)
                    visited.add(recovered)
                    section = self._read_section(recovered)
            if section is None:
                if not sections:
                    raise NoTrailer("no readable x-ref table and trailer")
                self._warn("broken-prev", f"/Prev {current} does not lead to an x-ref table",
                           current, "error")
                break
            sections.append(section)
            prev = section.trailer.get("Prev")
            current = prev if isinstance(prev, int) and not isinstance(prev, bool) else None
        sections.reverse()

        for section in sections:
            for entry in section.entries:
                if entry.in_use:
                    self.offsets[entry.object_number] = entry.byte_offset

        revisions: list[Revision] = []
        range_start = 0
        for section in sections:
            objects: list[IndirectObject] = []
            for entry in section.entries:
                if not entry.in_use:
                    continue
                obj = self._object_for(entry)
                if obj is not None:
                    objects.append(obj)
            revisions.append(Revision(
                objects=tuple(objects),
                xref=tuple(section.entries),
                trailer=Trailer(section.trailer),
                byte_range=(range_start, section.end),
                xref_offset=section.xref_offset,
                trailer_offset=section.trailer_offset,
                ignored_bytes=section.ignored_bytes,
            ))
            range_start = section.end
        return revisions

    def _object_for(self, entry: XrefEntry) -> IndirectObject | None:
        if self.object_count >= MAX_OBJECTS:
            self._warn("object-limit", f"more than {MAX_OBJECTS} objects; rest ignored",
                       entry.byte_offset, "error")
            return None
        if not 0 < entry.byte_offset < len(self.data):
            self._warn("dangling-xref",
                       f"object {entry.object_number}: offset {entry.byte_offset} out of bounds",
                       entry.byte_offset, "error")
            return None
        parsed = self.reader.parse_indirect_at(entry.byte_offset)
        if parsed is None:
            self._warn("dangling-xref",
                       f"object {entry.object_number}: no object header at {entry.byte_offset}",
                       entry.byte_offset, "error")
            return None
        obj = parsed[0]
        if obj.object_number != entry.object_number:
            self._warn("dangling-xref",
                       f"x-ref entry {entry.object_number} points at object {obj.object_number}",
                       entry.byte_offset, "error")
            return None
        if obj.generation != entry.generation:
            self._warn("generation-mismatch",
                       f"object {obj.object_number}: generation {obj.generation} vs x-ref "
                       f"{entry.generation}", entry.byte_offset)
        self.object_count += 1
        return obj


# -- Scavenge discipline ------------------------------------------------------


class _ScavengeParser:
    def __init__(self, data: bytes, diagnostics: list[Diagnostic]):
        self.data = data
        self.diagnostics = diagnostics
        self.headers: dict[int, list[int]] = {}
        self.reader = ObjectReader(data, diagnostics, self._resolve_length)

    def _resolve_length(self, ref: Reference) -> Any:
        for offset in reversed(self.headers.get(ref.object_number, [])):
            parsed = self.reader.parse_indirect_at(offset)
            if parsed is not None and isinstance(parsed[0].value, int):
                return parsed[0].value
        return None

    def parse(self) -> list[Revision]:
        data = self.data
        matches = list(_OBJ_HEADER.finditer(data))
        for m in matches:
            self.headers.setdefault(int(m.group(1)), []).append(m.start())

        objects: list[IndirectObject] = []
        spans: list[tuple[int, int]] = []
        pos = 0
        for m in matches:
            if m.start() < pos:
                continue
            if len(objects) >= MAX_OBJECTS:
                self.diagnostics.append(Diagnostic(
                    "object-limit", f"more than {MAX_OBJECTS} objects; rest ignored",
                    m.start(), "error"))
                break
            parsed = self.reader.parse_indirect_at(m.start())
            if parsed is None:
                continue
            obj, end = parsed
            objects.append(obj)
            spans.append((m.start(), end))
            pos = end

        seen: dict[int, int] = {}
        for obj in objects:
            if obj.object_number in seen:
                self.diagnostics.append(Diagnostic(
                    "duplicate-object",
                    f"object {obj.object_number} defined at {seen[obj.object_number]} "
                    f"and {obj.byte_offset}", obj.byte_offset))
            seen[obj.object_number] = obj.byte_offset

        trailer: dict = {}
        trailer_offset = None
        span_index = 0
        for t in _TRAILER_KEYWORD.finditer(data):
            while span_index < len(spans) and spans[span_index][1] <= t.start():
                span_index += 1
            if span_index < len(spans) and spans[span_index][0] <= t.start():
                continue
            parsed = self.reader.parse_dict_at(t.end())
            if parsed is None:
                continue
            if "Root" in parsed[0] or "Root" not in trailer:
                trailer, trailer_offset = parsed[0], t.start()

        if not objects and trailer_offset is None:
            raise TruncatedFile("no objects and no trailer found")
        return [Revision(tuple(objects), (), Trailer(trailer), (0, len(data)),
                         None, trailer_offset)]


# -- public entry points --------------------------------------------------------


def _decode_streams(document: Document, diagnostics: list[Diagnostic]) -> Document:
    effective = _compute_effective(document)

    def resolver(ref: Reference) -> Any:
        obj = effective.get(ref.object_number)
        return None if obj is None else obj.value

    revisions = []
    for revision in document.revisions:
        objects = []
        for obj in revision.objects:
            if isinstance(obj.value, Stream):
                local: list[Diagnostic] = []
                try:
                    decoded = decode_stream(obj.value, resolver, local)
                except FilterError as exc:
                    diagnostics.append(Diagnostic(
                        "undecodable-stream", f"object {obj.object_number}: {exc}",
                        obj.byte_offset))
                    decoded = None
                for diag in local:
                    diagnostics.append(dataclasses.replace(
                        diag, message=f"object {obj.object_number}: {diag.message}",
                        offset=obj.byte_offset))
                obj = dataclasses.replace(
                    obj, value=dataclasses.replace(obj.value, decoded_data=decoded))
            objects.append(obj)
        revisions.append(dataclasses.replace(revision, objects=tuple(objects)))
    return dataclasses.replace(document, revisions=tuple(revisions),
                               diagnostics=tuple(diagnostics))


def parse_document(data: bytes, mode: ParseMode | str = ParseMode.STRICT,
                   fallback: bool = False) -> Document:
    """Parse raw bytes into a :class:`Document`.

    With ``fallback=True`` a Strict parse that finds no usable trailer is
    retried in Scavenge mode (recorded as a diagnostic).
    """
    mode = ParseMode(mode)
    if len(data) > MAX_FILE_SIZE:
        raise FileTooLarge(f"{len(data)} bytes exceeds the {MAX_FILE_SIZE} byte limit")
    if not data:
        raise NotAPdf("empty input")
    version = parse_header(data)
    diagnostics: list[Diagnostic] = []
    if mode is ParseMode.STRICT:
        try:
            revisions = _StrictParser(data, diagnostics).parse()
        except (NoTrailer, TruncatedFile) as exc:
            if not fallback:
                raise
            diagnostics.append(Diagnostic("scavenge-fallback",
                                          f"strict parse failed ({exc}); scavenging", None,
                                          "error"))
            mode = ParseMode.SCAVENGE
    if mode is ParseMode.SCAVENGE:
        revisions = _ScavengeParser(data, diagnostics).parse()
    if revisions[-1].trailer.root is None:
        diagnostics.append(Diagnostic("no-root", "newest trailer has no /Root", None))
    document = Document(version, tuple(revisions), data, mode, ())
    return _decode_streams(document, diagnostics)


def parse_file(path: str | Path, mode: ParseMode | str = ParseMode.STRICT,
               fallback: bool = False) -> Document:
    path = Path(path)
    size = path.stat().st_size
    if size > MAX_FILE_SIZE:
        raise FileTooLarge(f"{path}: {size} bytes exceeds the {MAX_FILE_SIZE} byte limit")
    return parse_document(path.read_bytes(), mode, fallback)


__all__ = ["ObjectReader", "ParseError", "parse_document", "parse_file", "parse_header"]
