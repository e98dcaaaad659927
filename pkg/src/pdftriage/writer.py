"""Serialization of values, objects and whole documents in classic x-ref form."""

from __future__ import annotations

from decimal import Decimal
from typing import Any, Iterable, Mapping

from .model import (Document, IndirectObject, Name, ParseMode, PdfString, Reference,
                    Revision, Stream, Trailer, XrefEntry)

_NAME_PLAIN = frozenset(
    c for c in range(0x21, 0x7F) if c not in b"()<>[]{}/%#"
)
_STRING_ESCAPES = {
    0x5C: b"\\\\",
    0x28: b"\\(",
    0x29: b"\\)",
    0x0D: b"\\r",
    0x0A: b"\\n",
}
BINARY_MARKER = b"%\xe2\xe3\xcf\xd3\n"


def format_real(value: float) -> bytes:
    """Shortest round-trip positional notation (PDF has no exponent syntax)."""
    text = format(Decimal(repr(value)), "f")
    if "." not in text:
        text += ".0"
    return text.encode("ascii")


def format_name(name: str, escape_all: bool = False) -> bytes:
    raw = name.encode("latin-1")
    out = bytearray(b"/")
    for c in raw:
        if c in _NAME_PLAIN and not escape_all:
            out.append(c)
        else:
            out += b"#%02X" % c
    return bytes(out)


def format_string(value: PdfString) -> bytes:
    if value.hex:
        return b"<" + value.value.hex().upper().encode("ascii") + b">"
    out = bytearray(b"(")
    for c in value.value:
        escaped = _STRING_ESCAPES.get(c)
        if escaped is None:
            out.append(c)
        else:
            out += escaped
    out += b")"
    return bytes(out)


def serialize_value(value: Any, escape_names: bool = False) -> bytes:
    """``escape_names`` writes every name byte as ``#xx`` (an obfuscated but equivalent form)."""
    if value is None:
        return b"null"
    if value is True:
        return b"true"
    if value is False:
        return b"false"
    if isinstance(value, int):
        return str(value).encode("ascii")
    if isinstance(value, float):
        return format_real(value)
    if isinstance(value, Name):
        return format_name(value.value, escape_names)
    if isinstance(value, PdfString):
        return format_string(value)
    if isinstance(value, Reference):
        return b"%d %d R" % (value.object_number, value.generation)
    if isinstance(value, list):
        return b"[" + b" ".join(serialize_value(v, escape_names) for v in value) + b"]"
    if isinstance(value, dict):
        parts = [b"<<"]
        for key, item in value.items():
            parts.append(format_name(key, escape_names) + b" "
                         + serialize_value(item, escape_names))
        parts.append(b">>")
        return b"\n".join(parts) if len(value) > 3 else b" ".join(parts)
    if isinstance(value, Stream):
        return (serialize_value(value.dictionary, escape_names) + b"\nstream\r\n" + value.raw_data
                + b"\r\nendstream")
    raise TypeError(f"cannot serialize {type(value).__name__}")


def serialize_object(number: int, generation: int, value: Any,
                     escape_names: bool = False) -> bytes:
    return (b"%d %d obj\n" % (number, generation) + serialize_value(value, escape_names)
            + b"\nendobj\n")


def xref_table(in_use: Mapping[int, tuple[int, int]],
               free: Mapping[int, int] | None = None,
               include_head: bool = True) -> bytes:
    """Classic x-ref table from ``{number: (offset, generation)}`` plus free entries.

    Free entries are chained in ascending order through their offset field,
    starting at the entry for object 0 when ``include_head`` is set.
    """
    free = dict(free or {})
    rows: dict[int, bytes] = {}
    free_numbers = sorted(free)
    chain = free_numbers + [0]
    if include_head:
        rows[0] = b"%010d %05d f\r\n" % (chain[0], 65535)
    for i, number in enumerate(free_numbers):
        rows[number] = b"%010d %05d f\r\n" % (chain[i + 1], free[number])
    for number, (offset, generation) in in_use.items():
        rows[number] = b"%010d %05d n\r\n" % (offset, generation)
    out = [b"xref\n"]
    numbers = sorted(rows)
    i = 0
    while i < len(numbers):
        j = i
        while j + 1 < len(numbers) and numbers[j + 1] == numbers[j] + 1:
            j += 1
        out.append(b"%d %d\n" % (numbers[i], j - i + 1))
        out.extend(rows[numbers[k]] for k in range(i, j + 1))
        i = j + 1
    return b"".join(out)


def trailer_block(trailer: Mapping[str, Any], xref_offset: int,
                  escape_names: bool = False) -> bytes:
    return (b"trailer\n" + serialize_value(dict(trailer), escape_names)
            + b"\nstartxref\n%d\n%%%%EOF\n" % xref_offset)


def _revision_objects(document: Document, revision: Revision) -> list[IndirectObject]:
    if document.parse_mode is ParseMode.SCAVENGE:
        latest: dict[int, IndirectObject] = {}
        for obj in revision.objects:
            if obj.object_number not in latest or obj.byte_offset >= latest[obj.object_number].byte_offset:
                latest[obj.object_number] = obj
        return [latest[n] for n in sorted(latest)]
    return list(revision.objects)


def serialize(document: Document, escape_names: bool = False) -> bytes:
    """Write every revision with fresh offsets and rebuilt x-ref tables."""
    out = bytearray(b"%PDF-" + document.header_version.encode("ascii") + b"\n" + BINARY_MARKER)
    prev_xref: int | None = None
    max_number = 0
    for index, revision in enumerate(document.revisions):
        in_use: dict[int, tuple[int, int]] = {}
        for obj in _revision_objects(document, revision):
            in_use[obj.object_number] = (len(out), obj.generation)
            out += serialize_object(obj.object_number, obj.generation, obj.value, escape_names)
        free = {e.object_number: e.generation for e in revision.xref
                if not e.in_use and e.object_number not in in_use}
        max_number = max([max_number, *in_use, *free])
        xref_offset = len(out)
        out += xref_table(in_use, free, include_head=index == 0)
        trailer = dict(revision.trailer.dictionary)
        trailer["Size"] = max_number + 1
        if prev_xref is None:
            trailer.pop("Prev", None)
        else:
            trailer["Prev"] = prev_xref
        out += trailer_block(trailer, xref_offset, escape_names)
        prev_xref = xref_offset
    return bytes(out)


def build_document(objects: Mapping[int, Any] | Iterable[IndirectObject],
                   trailer: Mapping[str, Any], version: str = "1.7") -> Document:
    """Single-revision in-memory document, ready for :func:`serialize`."""
    if isinstance(objects, Mapping):
        items = [IndirectObject(n, 0, v) for n, v in sorted(objects.items())]
    else:
        items = sorted(objects, key=lambda o: o.object_number)
    xref = tuple(XrefEntry(o.object_number, 0, o.generation, True) for o in items)
    revision = Revision(tuple(items), xref, Trailer(dict(trailer)))
    return Document(version, (revision,), b"", ParseMode.STRICT, ())
