"""Stream filter decoding (/FlateDecode, /ASCIIHexDecode) and their encoders."""

from __future__ import annotations

import zlib
from typing import Any, Callable

from .errors import CorruptStream, UnsupportedFilter
from .lexer import WHITESPACE
from .model import Diagnostic, Name, Reference, Stream

MAX_DECODED_SIZE = 16 * 1024 * 1024

FLATE_NAMES = frozenset({"FlateDecode", "Fl"})
ASCIIHEX_NAMES = frozenset({"ASCIIHexDecode", "AHx"})

Resolver = Callable[[Reference], Any]


def _deref(value: Any, resolver: Resolver | None, depth: int = 32) -> Any:
    while isinstance(value, Reference) and resolver is not None and depth > 0:
        value = resolver(value)
        depth -= 1
    return value


def stream_filters(stream: Stream, resolver: Resolver | None = None) -> list[str]:
    """Filter names declared by a stream, in application order."""
    declared = _deref(stream.dictionary.get("Filter"), resolver)
    if declared is None:
        return []
    if isinstance(declared, Name):
        return [declared.value]
    if isinstance(declared, list):
        names = []
        for item in declared:
            item = _deref(item, resolver)
            if not isinstance(item, Name):
                raise UnsupportedFilter(f"non-name filter entry {item!r}")
            names.append(item.value)
        return names
    raise UnsupportedFilter(f"unusable /Filter value {declared!r}")


def flate_decode(data: bytes, limit: int = MAX_DECODED_SIZE) -> bytes:
    inflater = zlib.decompressobj()
    try:
        out = inflater.decompress(data, limit)
    except zlib.error as exc:
        raise CorruptStream(f"inflate failed: {exc}") from None
    if inflater.unconsumed_tail:
        raise CorruptStream(f"inflated output exceeds {limit} bytes")
    return out


def asciihex_decode(data: bytes) -> bytes:
    digits = bytearray()
    for c in data:
        if c == 0x3E:
            break
        if c in WHITESPACE:
            continue
        if not (0x30 <= c <= 0x39 or 0x41 <= c <= 0x46 or 0x61 <= c <= 0x66):
            raise CorruptStream(f"invalid byte 0x{c:02x} in ASCIIHex data")
        digits.append(c)
    if len(digits) % 2:
        digits.append(0x30)
    return bytes.fromhex(digits.decode("ascii"))


def flate_encode(data: bytes, level: int = 6) -> bytes:
    return zlib.compress(data, level)


def asciihex_encode(data: bytes) -> bytes:
    return data.hex().upper().encode("ascii") + b">"


def decode_stream(stream: Stream, resolver: Resolver | None = None,
                  diagnostics: list[Diagnostic] | None = None) -> bytes:
    """Apply the stream's declared filters to its raw data.

    Unfiltered streams are cut to /Length when it is shorter than the data;
    a longer /Length is reported but never padded.
    """
    filters = stream_filters(stream, resolver)
    data = stream.raw_data
    if not filters:
        length = _deref(stream.dictionary.get("Length"), resolver)
        if isinstance(length, int) and not isinstance(length, bool) and length != len(data):
            if diagnostics is not None:
                diagnostics.append(Diagnostic(
                    "length-mismatch",
                    f"/Length {length} but stream holds {len(data)} bytes"))
            if 0 <= length < len(data):
                data = data[:length]
        return data
    for name in filters:
        if name in FLATE_NAMES:
            data = flate_decode(data)
        elif name in ASCIIHEX_NAMES:
            data = asciihex_decode(data)
        else:
            raise UnsupportedFilter(name)
    return data
