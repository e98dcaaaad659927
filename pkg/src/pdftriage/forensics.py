"""Analyst-facing analyses: keyword census, object tree, JavaScript scanning.

All three work on a parsed :class:`~pdftriage.model.Document` in either
parse mode.  A Strict document shows what a reader would act on; a
Scavenge document shows everything present in the bytes, which is what a
naive keyword counter reports.
"""

from __future__ import annotations

import enum
import hashlib
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .errors import NoRoot, ParseError
from .lexer import TokenKind, normalize_name, tokenize
from .model import (Diagnostic, Document, IndirectObject, Name, ParseMode, PdfString,
                    Stream, effective_objects, iter_references,
                    resolve_deep)

__all__ = [
    "CensusScope", "JsIndicatorHit", "KeywordCensus", "ObjectTree",
    "JS_IDENTIFIERS", "JS_INDICATORS", "SUSPICIOUS_KEYWORDS", "REPORT_SCHEMA",
    "build_tree", "embedded_files", "extract_javascript", "iter_names",
    "keyword_scan", "name_counts", "normalize_name", "risk_report",
    "scan_js_indicators", "scanned_objects",
]

SUSPICIOUS_KEYWORDS = frozenset({
    "JavaScript", "JS", "OpenAction", "AA", "Launch", "EmbeddedFile",
    "RichMedia", "AcroForm", "XFA",
})

JS_IDENTIFIERS = (
    "eval", "unescape", "replace", "fromCharCode", "setTimeout", "getAnnots",
    "util.printf", "this.exportDataObject",
)
JS_INDICATORS = JS_IDENTIFIERS + ("string-concat", "long-hex-string", "unicode-nop-sled")

LONG_HEX_MIN = 64
NOP_SLED_MIN_REPEATS = 8

_IDENTIFIER_PATTERNS = {
    ident: re.compile(r"(?<![\w$])" + re.escape(ident) + r"(?![\w$])")
    for ident in JS_IDENTIFIERS
}
_ESCAPE_RUN = re.compile(
    r"(?:%u[0-9A-Fa-f]{4}|\\u[0-9A-Fa-f]{4}|\\x[0-9A-Fa-f]{2}|%[0-9A-Fa-f]{2})+")
_SLED = re.compile(r"(%%u[0-9A-Fa-f]{4})\1{%d,}" % (NOP_SLED_MIN_REPEATS - 1))
_PLAIN_HEX_RUN = re.compile(r"(?<![0-9A-Fa-f])[0-9A-Fa-f]{%d,}(?![0-9A-Fa-f])" % LONG_HEX_MIN)
_QUOTES = frozenset("'\"`")


class CensusScope(str, enum.Enum):
    DICTIONARIES_ONLY = "dictionaries"
    INCLUDE_DECODED_STREAMS = "streams"


@dataclass(frozen=True)
class KeywordCensus:
    counts: dict[str, int]
    scan_scope: CensusScope = CensusScope.DICTIONARIES_ONLY

    def __getitem__(self, name: str) -> int:
        return self.counts.get(name, 0)


@dataclass(frozen=True)
class ObjectTree:
    root: int
    edges: list[tuple[int, int, str]]
    orphans: set[int]
    suspicious_nodes: list[tuple[int, str]]
    reachable: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class JsIndicatorHit:
    object_number: int | None
    indicator: str
    span: tuple[int, int]


# -- keyword census ---------------------------------------------------------


def iter_names(value: Any) -> Iterator[str]:
    """Every name in ``value``: dictionary keys and name values, recursively."""
    stack = [value]
    while stack:
        current = stack.pop()
        if isinstance(current, Name):
            yield current.value
        elif isinstance(current, Stream):
            stack.append(current.dictionary)
        elif isinstance(current, dict):
            for key, item in current.items():
                yield key
                stack.append(item)
        elif isinstance(current, list):
            stack.extend(current)


def name_counts(value: Any) -> Counter:
    return Counter(iter_names(value))


def scanned_objects(document: Document) -> list[IndirectObject]:
    """Objects an analysis should look at under the document's parse mode.

    Strict: the effective objects.  Scavenge: every object found in the
    byte scan, hidden duplicates included.
    """
    if document.parse_mode is ParseMode.SCAVENGE:
        return sorted(document.iter_objects(), key=lambda o: o.byte_offset)
    effective = effective_objects(document)
    return [effective[n] for n in sorted(effective)]


def keyword_scan(document: Document,
                 scope: CensusScope = CensusScope.DICTIONARIES_ONLY) -> KeywordCensus:
    counts: Counter = Counter()
    for obj in scanned_objects(document):
        counts.update(iter_names(obj.value))
        if (scope is CensusScope.INCLUDE_DECODED_STREAMS and isinstance(obj.value, Stream)
                and obj.value.decoded_data):
            counts.update(t.value for t in tokenize(obj.value.decoded_data, [])
                          if t.kind is TokenKind.NAME)
    for trailer in document.trailers():
        counts.update(iter_names(trailer.dictionary))
    return KeywordCensus(dict(sorted(counts.items())), CensusScope(scope))


# -- object tree ---------------------------------------------------------------


def build_tree(document: Document,
               suspicious: Iterable[str] = SUSPICIOUS_KEYWORDS) -> ObjectTree:
    """Breadth-first reconstruction of the object graph from /Root."""
    root = document.root_ref
    if root is None:
        raise NoRoot("no trailer carries /Root")
    suspicious = frozenset(suspicious)
    effective = effective_objects(document)
    edges: list[tuple[int, int, str]] = []
    flagged: list[tuple[int, str]] = []
    seen = {root.object_number} if root.object_number in effective else set()
    queue = deque(seen)
    while queue:
        number = queue.popleft()
        value = effective[number].value
        for keyword in sorted(suspicious & set(iter_names(value))):
            flagged.append((number, f"contains /{keyword}"))
        for path, ref in iter_references(value):
            child = ref.object_number
            if child not in effective:
                continue
            edges.append((number, child, path))
            if child not in seen:
                seen.add(child)
                queue.append(child)
    orphans = set(effective) - seen
    return ObjectTree(root.object_number, edges, orphans, flagged, seen)


# -- JavaScript --------------------------------------------------------------


def _code_text(document: Document, value: Any, number: int,
               diagnostics: list[Diagnostic] | None) -> str | None:
    value = resolve_deep(document, value)
    if isinstance(value, PdfString):
        return value.value.decode("latin-1")
    if isinstance(value, Stream):
        if value.decoded_data is None:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(
                    "undecodable-js", f"object {number}: JavaScript stream not decodable"))
            return None
        return value.decoded_data.decode("latin-1")
    return None


def extract_javascript(document: Document,
                       diagnostics: list[Diagnostic] | None = None) -> list[tuple[int, str]]:
    """Code carried by /JS or /JavaScript entries, attributed to the holding object."""
    found: list[tuple[int, str]] = []
    for obj in scanned_objects(document):
        stack = [obj.value]
        while stack:
            current = stack.pop()
            if isinstance(current, Stream):
                current = current.dictionary
            if isinstance(current, dict):
                for key in ("JS", "JavaScript"):
                    if key in current:
                        code = _code_text(document, current[key], obj.object_number,
                                          diagnostics)
                        if code is not None:
                            found.append((obj.object_number, code))
                stack.extend(v for v in current.values() if isinstance(v, (dict, list)))
            elif isinstance(current, list):
                stack.extend(v for v in current if isinstance(v, (dict, list)))
    return found


def _concat_hits(code: str) -> Iterator[int]:
    n = len(code)
    for m in re.finditer(r"\+", code):
        i = m.start()
        if (i > 0 and code[i - 1] == "+") or (i + 1 < n and code[i + 1] == "+"):
            continue
        left: list[str] = []
        j = i - 1
        while j >= 0 and len(left) < 2:
            if not code[j].isspace():
                left.append(code[j])
            j -= 1
        right: list[str] = []
        j = i + 1
        while j < n and len(right) < 2:
            if not code[j].isspace():
                right.append(code[j])
            j += 1
        if _QUOTES.intersection(left) or _QUOTES.intersection(right):
            yield i


def scan_js_indicators(code: str, object_number: int | None = None,
                       lexicon: Iterable[str] = JS_INDICATORS) -> list[JsIndicatorHit]:
    """Lexical scan for the suspicious-JavaScript indicator lexicon.

    Escape runs are classified once: a run holding at least eight
    consecutive identical ``%uXXXX`` units is a NOP sled, any other run of
    64+ characters is a long hex string.
    """
    wanted = set(lexicon)
    hits: list[JsIndicatorHit] = []
    for ident, pattern in _IDENTIFIER_PATTERNS.items():
        if ident in wanted:
            hits.extend(JsIndicatorHit(object_number, ident, m.span())
                        for m in pattern.finditer(code))
    if "string-concat" in wanted:
        hits.extend(JsIndicatorHit(object_number, "string-concat", (i, i + 1))
                    for i in _concat_hits(code))
    escape_spans = []
    for m in _ESCAPE_RUN.finditer(code):
        escape_spans.append(m.span())
        if _SLED.search(m.group()):
            kind = "unicode-nop-sled"
        elif len(m.group()) >= LONG_HEX_MIN:
            kind = "long-hex-string"
        else:
            continue
        if kind in wanted:
            hits.append(JsIndicatorHit(object_number, kind, m.span()))
    if "long-hex-string" in wanted:
        for m in _PLAIN_HEX_RUN.finditer(code):
            if not any(s <= m.start() < e for s, e in escape_spans):
                hits.append(JsIndicatorHit(object_number, "long-hex-string", m.span()))
    hits.sort(key=lambda h: (h.span, h.indicator))
    return hits


# -- embedded files ---------------------------------------------------------


def embedded_files(document: Document) -> list[tuple[int, bytes]]:
    """Decoded contents of every /EmbeddedFile stream."""
    files = []
    for obj in scanned_objects(document):
        value = obj.value
        if (isinstance(value, Stream) and value.dictionary.get("Type") == Name("EmbeddedFile")
                and value.decoded_data is not None):
            files.append((obj.object_number, value.decoded_data))
    return files


# -- report -------------------------------------------------------------------


REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["file", "sha256", "parse_mode", "header_version", "keyword_counts",
                 "tree", "javascript", "differential", "diagnostics"],
    "properties": {
        "file": {"type": ["string", "null"]},
        "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "parse_mode": {"enum": ["strict", "scavenge"]},
        "header_version": {"type": "string"},
        "keyword_counts": {"type": "object",
                           "additionalProperties": {"type": "integer", "minimum": 1}},
        "tree": {
            "type": ["object", "null"],
            "required": ["root", "node_count", "orphans", "suspicious"],
            "properties": {
                "root": {"type": "integer"},
                "node_count": {"type": "integer", "minimum": 0},
                "orphans": {"type": "array", "items": {"type": "integer"}},
                "suspicious": {"type": "array", "items": {
                    "type": "object", "required": ["obj", "reason"],
                    "properties": {"obj": {"type": "integer"}, "reason": {"type": "string"}},
                }},
            },
        },
        "javascript": {"type": "array", "items": {
            "type": "object", "required": ["obj", "indicator_hits"],
            "properties": {
                "obj": {"type": "integer"},
                "indicator_hits": {"type": "array", "items": {
                    "type": "object", "required": ["indicator", "start", "end"],
                    "properties": {"indicator": {"type": "string"},
                                   "start": {"type": "integer"},
                                   "end": {"type": "integer"}},
                }},
            },
        }},
        "differential": {
            "type": "object", "required": ["strict_only", "scavenge_only"],
            "properties": {"strict_only": {"type": "array", "items": {"type": "integer"}},
                           "scavenge_only": {"type": "array", "items": {"type": "integer"}}},
        },
        "diagnostics": {"type": "array"},
    },
}


def differential(document: Document) -> tuple[list[int], list[int], list[Diagnostic]]:
    """Object numbers visible to only one parse discipline."""
    from .parser import parse_document

    other_mode = (ParseMode.SCAVENGE if document.parse_mode is ParseMode.STRICT
                  else ParseMode.STRICT)
    try:
        other = parse_document(document.source_bytes, other_mode)
    except ParseError as exc:
        return [], [], [Diagnostic("differential-unavailable",
                                   f"{other_mode.value} parse failed: {exc}")]
    mine, theirs = set(effective_objects(document)), set(effective_objects(other))
    if document.parse_mode is ParseMode.STRICT:
        strict, scavenge = mine, theirs
    else:
        strict, scavenge = theirs, mine
    return sorted(strict - scavenge), sorted(scavenge - strict), []


def risk_report(document: Document, file: str | None = None) -> dict[str, Any]:
    """Aggregate census, tree, JavaScript and differential evidence as JSON data.

    The report carries evidence only; it never renders a verdict.
    """
    diagnostics = list(document.diagnostics)
    census = keyword_scan(document)
    try:
        tree = build_tree(document)
        tree_json: dict[str, Any] | None = {
            "root": tree.root,
            "node_count": len(tree.reachable),
            "orphans": sorted(tree.orphans),
            "suspicious": [{"obj": n, "reason": r} for n, r in tree.suspicious_nodes],
        }
    except NoRoot as exc:
        tree_json = None
        diagnostics.append(Diagnostic("no-root", str(exc)))
    javascript = []
    for number, code in extract_javascript(document, diagnostics):
        hits = scan_js_indicators(code, number)
        javascript.append({
            "obj": number,
            "indicator_hits": [{"indicator": h.indicator, "start": h.span[0],
                                "end": h.span[1]} for h in hits],
        })
    if document.source_bytes:
        strict_only, scavenge_only, extra = differential(document)
        diagnostics.extend(extra)
    else:
        strict_only, scavenge_only = [], []
    return {
        "file": file,
        "sha256": hashlib.sha256(document.source_bytes).hexdigest(),
        "parse_mode": document.parse_mode.value,
        "header_version": document.header_version,
        "keyword_counts": census.counts,
        "tree": tree_json,
        "javascript": javascript,
        "differential": {"strict_only": strict_only, "scavenge_only": scavenge_only},
        "diagnostics": [d.to_dict() for d in diagnostics],
    }
