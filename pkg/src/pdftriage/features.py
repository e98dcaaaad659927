"""Fixed-size numeric representation of a parsed PDF.

Slots come in three blocks, in this order: structural name counts, JavaScript
indicator hit counts, and five document-level meta features.  The block
layout is part of the :class:`FeatureSpec` identity, so vectors produced
under different specs can never be mixed silently.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections import Counter
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import IO, Iterable

from .errors import EmptySpec, NoRoot
from .forensics import (JS_IDENTIFIERS, JS_INDICATORS, build_tree, extract_javascript,
                        keyword_scan, scan_js_indicators)
from .model import Document, ParseMode, Stream, effective_objects
from .parser import parse_document

DEFAULT_VOCABULARY = (
    "JavaScript", "JS", "OpenAction", "AA", "Launch", "EmbeddedFile", "RichMedia",
    "AcroForm", "XFA", "Action", "Catalog", "Pages", "Page", "Encrypt", "ObjStm",
    "Filter", "FlateDecode", "Length", "Names", "URI", "GoTo", "SubmitForm",
    "ImportData", "Font",
)
META_FEATURES = ("object_count", "orphan_count", "revision_count", "file_size_kb",
                 "stream_count")


@dataclass(frozen=True)
class FeatureSpec:
    structural_vocabulary: tuple[str, ...]
    js_indicators: tuple[str, ...] = ()
    include_meta: bool = True

    def __post_init__(self) -> None:
        unknown = set(self.js_indicators) - set(JS_INDICATORS)
        if unknown:
            raise ValueError(f"unknown JavaScript indicators: {sorted(unknown)}")

    @property
    def dimension(self) -> int:
        return (len(self.structural_vocabulary) + len(self.js_indicators)
                + (len(META_FEATURES) if self.include_meta else 0))

    @cached_property
    def spec_id(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]

    @property
    def slot_names(self) -> list[str]:
        names = list(self.structural_vocabulary)
        names += [f"js:{i}" for i in self.js_indicators]
        if self.include_meta:
            names += [f"meta:{m}" for m in META_FEATURES]
        return names

    def to_dict(self) -> dict:
        data = asdict(self)
        data["structural_vocabulary"] = list(self.structural_vocabulary)
        data["js_indicators"] = list(self.js_indicators)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSpec":
        return cls(tuple(data["structural_vocabulary"]), tuple(data["js_indicators"]),
                   bool(data["include_meta"]))


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    spec_id: str

    def __len__(self) -> int:
        return len(self.values)


def default_spec() -> FeatureSpec:
    """24 structural names, the 8 identifier indicators, 5 meta slots (d = 37)."""
    return FeatureSpec(DEFAULT_VOCABULARY, JS_IDENTIFIERS, True)


def structural_spec() -> FeatureSpec:
    """Names and meta only; blind to embedded code content."""
    return FeatureSpec(DEFAULT_VOCABULARY, (), True)


def content_spec() -> FeatureSpec:
    """Structural slots plus the full JavaScript indicator lexicon."""
    return FeatureSpec(DEFAULT_VOCABULARY, JS_INDICATORS, True)


def reader_visible_size(document: Document) -> int:
    """File size minus bytes a Strict reader skipped as unreferenced."""
    return len(document.source_bytes) - sum(r.ignored_bytes for r in document.revisions)


def vectorize(document: Document, spec: FeatureSpec) -> FeatureVector:
    if spec.dimension == 0:
        raise EmptySpec("feature spec has no slots")
    census = keyword_scan(document)
    values: list[float] = [float(census[name]) for name in spec.structural_vocabulary]

    if spec.js_indicators:
        hits: Counter = Counter()
        for number, code in extract_javascript(document):
            hits.update(h.indicator for h in scan_js_indicators(code, number,
                                                                spec.js_indicators))
        values += [float(hits[i]) for i in spec.js_indicators]

    if spec.include_meta:
        effective = effective_objects(document)
        try:
            orphans = len(build_tree(document).orphans)
        except NoRoot:
            orphans = len(effective)
        values += [
            float(len(effective)),
            float(orphans),
            float(len(document.revisions)),
            reader_visible_size(document) / 1024.0,
            float(sum(isinstance(o.value, Stream) for o in effective.values())),
        ]
    return FeatureVector(tuple(values), spec.spec_id)


def vectorize_bytes(data: bytes, spec: FeatureSpec,
                    mode: ParseMode | str = ParseMode.STRICT,
                    fallback: bool = True) -> FeatureVector:
    """Parse and vectorize; Strict by default so unreferenced objects do not count."""
    return vectorize(parse_document(data, mode, fallback=fallback), spec)


def write_csv(out: IO[str], spec: FeatureSpec,
              rows: Iterable[tuple[str, FeatureVector, int | None]]) -> None:
    """One row per file: name, slots, and a final label column (blank if unknown)."""
    writer = csv.writer(out)
    writer.writerow(["file", *spec.slot_names, "label"])
    for name, vector, label in rows:
        if vector.spec_id != spec.spec_id:
            raise ValueError(f"{name}: vector spec {vector.spec_id} != {spec.spec_id}")
        writer.writerow([name, *(repr(v) for v in vector.values),
                         "" if label is None else label])
