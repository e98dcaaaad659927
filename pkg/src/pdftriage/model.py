"""In-memory PDF object graph.

Values use plain Python types where the mapping is unambiguous:

=================  ==========================================
PDF type           Python representation
=================  ==========================================
boolean            ``bool``
numeric            ``int`` (64-bit range) or ``float``
string             :class:`PdfString`
name               :class:`Name`
array              ``list``
dictionary         ``dict`` keyed by normalized name text
stream             :class:`Stream`
indirect ref       :class:`Reference`
null               ``None``
=================  ==========================================

A :class:`Document` is an ordered sequence of revisions (one per incremental
update).  The effective object set follows the latest-wins rule keyed by
object number alone; generation numbers are carried but never used for
precedence.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator, Union

from .errors import FreeObject, NoRoot, UnknownReference

log = logging.getLogger(__name__)

MAX_RESOLVE_DEPTH = 32


@dataclass(frozen=True)
class Name:
    value: str

    def __str__(self) -> str:
        return "/" + self.value


@dataclass(frozen=True)
class PdfString:
    value: bytes
    hex: bool = False

    def text(self) -> str:
        return self.value.decode("latin-1")


@dataclass(frozen=True)
class Reference:
    object_number: int
    generation: int = 0

    def __post_init__(self) -> None:
        if self.object_number < 1:
            raise ValueError(f"object number must be >= 1, got {self.object_number}")
        if self.generation < 0:
            raise ValueError(f"generation must be >= 0, got {self.generation}")

    def __str__(self) -> str:
        return f"{self.object_number} {self.generation} R"


@dataclass(frozen=True)
class Stream:
    dictionary: dict
    raw_data: bytes = field(repr=False)
    # derived from raw_data, so not part of value identity
    decoded_data: bytes | None = field(default=None, repr=False, compare=False)


PdfValue = Union[None, bool, int, float, PdfString, Name, list, dict, Stream, Reference]


class ParseMode(str, enum.Enum):
    STRICT = "strict"
    SCAVENGE = "scavenge"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    offset: int | None = None
    severity: str = "warning"

    def to_dict(self) -> dict[str, Any]:
        return {
            "code": self.code,
            "message": self.message,
            "offset": self.offset,
            "severity": self.severity,
        }


@dataclass(frozen=True)
class IndirectObject:
    object_number: int
    generation: int
    value: Any
    byte_offset: int = 0


@dataclass(frozen=True)
class XrefEntry:
    object_number: int
    byte_offset: int
    generation: int
    in_use: bool


@dataclass(frozen=True)
class Trailer:
    dictionary: dict = field(default_factory=dict)

    @property
    def root(self) -> Reference | None:
        root = self.dictionary.get("Root")
        return root if isinstance(root, Reference) else None

    @property
    def prev(self) -> int | None:
        prev = self.dictionary.get("Prev")
        return prev if isinstance(prev, int) and not isinstance(prev, bool) else None


@dataclass(frozen=True)
class Revision:
    objects: tuple[IndirectObject, ...]
    xref: tuple[XrefEntry, ...]
    trailer: Trailer
    byte_range: tuple[int, int] = (0, 0)
    xref_offset: int | None = None
    trailer_offset: int | None = None
    ignored_bytes: int = 0  # unreferenced objects skipped between x-ref and trailer


@dataclass(frozen=True, eq=False)
class Document:
    header_version: str
    revisions: tuple[Revision, ...]
    source_bytes: bytes = field(repr=False)
    parse_mode: ParseMode = ParseMode.STRICT
    diagnostics: tuple[Diagnostic, ...] = ()

    @cached_property
    def _effective(self) -> dict[int, IndirectObject]:
        return _compute_effective(self)

    @cached_property
    def _freed(self) -> frozenset[int]:
        freed: dict[int, bool] = {}
        for revision in self.revisions:
            for entry in revision.xref:
                freed[entry.object_number] = not entry.in_use
        return frozenset(n for n, is_free in freed.items() if is_free)

    def iter_objects(self) -> Iterator[IndirectObject]:
        """Every parsed object, duplicates and superseded versions included."""
        for revision in self.revisions:
            yield from revision.objects

    def trailers(self) -> list[Trailer]:
        return [rev.trailer for rev in self.revisions]

    @property
    def root_ref(self) -> Reference | None:
        for revision in reversed(self.revisions):
            if revision.trailer.root is not None:
                return revision.trailer.root
        return None


def _compute_effective(document: Document) -> dict[int, IndirectObject]:
    if document.parse_mode is ParseMode.SCAVENGE:
        result: dict[int, IndirectObject] = {}
        for obj in document.iter_objects():
            current = result.get(obj.object_number)
            if current is None or obj.byte_offset >= current.byte_offset:
                result[obj.object_number] = obj
        return result

    result = {}
    for revision in document.revisions:
        parsed = {obj.object_number: obj for obj in revision.objects}
        for entry in revision.xref:
            obj = parsed.get(entry.object_number) if entry.in_use else None
            if obj is None:
                result.pop(entry.object_number, None)
            else:
                result[entry.object_number] = obj
    return result


def effective_objects(document: Document) -> dict[int, IndirectObject]:
    """Map each live object number to its newest definition."""
    return dict(document._effective)


def resolve(document: Document, ref: Reference, lenient: bool = False) -> Any:
    """Return the value of the effective object ``ref`` points at.

    References nested inside the returned value are left untouched.
    """
    obj = document._effective.get(ref.object_number)
    if obj is not None:
        return obj.value
    if ref.object_number in document._freed:
        if lenient:
            log.warning("reference %s points at a free object", ref)
            return None
        raise FreeObject(f"object {ref.object_number} is marked free")
    raise UnknownReference(f"no object numbered {ref.object_number}")


def resolve_deep(document: Document, value: Any, max_depth: int = MAX_RESOLVE_DEPTH) -> Any:
    """Chase a chain of references until a direct value appears.

    Dangling or free references and chains longer than ``max_depth``
    yield ``None``.
    """
    for _ in range(max_depth):
        if not isinstance(value, Reference):
            return value
        try:
            value = resolve(document, value, lenient=True)
        except UnknownReference:
            return None
    return None if isinstance(value, Reference) else value


def iter_references(value: Any) -> Iterator[tuple[str, Reference]]:
    """Yield ``(key_path, reference)`` for every reference inside ``value``.

    Descends through arrays, dictionaries and stream dictionaries but not
    through references themselves.
    """
    stack: list[tuple[str, Any]] = [("", value)]
    while stack:
        path, current = stack.pop()
        if isinstance(current, Reference):
            yield path, current
        elif isinstance(current, Stream):
            stack.append((path, current.dictionary))
        elif isinstance(current, dict):
            for key, item in reversed(list(current.items())):
                stack.append((f"{path}/{key}", item))
        elif isinstance(current, list):
            for index in range(len(current) - 1, -1, -1):
                stack.append((f"{path}[{index}]", current[index]))


def reachable_set(document: Document) -> set[int]:
    """Object numbers reachable from the trailer's /Root."""
    root = document.root_ref
    if root is None:
        raise NoRoot("no trailer carries /Root")
    effective = document._effective
    seen: set[int] = set()
    queue = deque([root.object_number])
    while queue:
        number = queue.popleft()
        if number in seen or number not in effective:
            continue
        seen.add(number)
        for _, ref in iter_references(effective[number].value):
            if ref.object_number not in seen:
                queue.append(ref.object_number)
    return seen


def values_equal(a: Any, b: Any) -> bool:
    """Type-strict structural equality (``True`` is not ``1``)."""
    if type(a) is not type(b):
        return False
    if isinstance(a, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(values_equal(a[k], b[k]) for k in a)
    if isinstance(a, Stream):
        return a.raw_data == b.raw_data and values_equal(a.dictionary, b.dictionary)
    return a == b


def graphs_equal(a: dict[int, IndirectObject], b: dict[int, IndirectObject]) -> bool:
    if a.keys() != b.keys():
        return False
    return all(
        a[n].generation == b[n].generation and values_equal(a[n].value, b[n].value)
        for n in a
    )


def dict_type(value: Any) -> str | None:
    """The /Type name of a dictionary or stream, if present."""
    if isinstance(value, Stream):
        value = value.dictionary
    if isinstance(value, dict):
        type_ = value.get("Type")
        if isinstance(type_, Name):
            return type_.value
    return None
