import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import (append_revision, assemble, fig1_bytes, last_startxref, random_document,
                      two_revision_bytes)
from pdftriage.errors import NoTrailer, NotAPdf, ParseError, TruncatedFile
from pdftriage.model import (Name, ParseMode, PdfString, Reference, Stream, effective_objects,
                             graphs_equal)
from pdftriage.parser import parse_document, parse_header
from pdftriage.writer import build_document, serialize, serialize_object


def test_header_plain():
    assert parse_header(b"%PDF-1.7\n...") == "1.7"


def test_header_after_junk():
    assert parse_header(b"x" * 200 + b"%PDF-1.4\n") == "1.4"


def test_header_missing():
    with pytest.raises(NotAPdf):
        parse_header(b"hello world")
    with pytest.raises(NotAPdf):
        parse_header(b"x" * 1100 + b"%PDF-1.4")


def test_empty_input():
    with pytest.raises(NotAPdf):
        parse_document(b"")


def test_fig1_strict():
    doc = parse_document(fig1_bytes())
    assert len(doc.revisions) == 1
    assert sorted(effective_objects(doc)) == [1, 2, 3, 4, 5]
    stream = effective_objects(doc)[4].value
    assert isinstance(stream, Stream)
    assert stream.decoded_data == b"BT /F1 12 Tf 72 712 Td (Hello) Tj ET"
    assert doc.diagnostics == ()


def test_two_revisions_oldest_first():
    data, _ = two_revision_bytes()
    doc = parse_document(data)
    assert len(doc.revisions) == 2
    assert doc.revisions[0].trailer.prev is None
    assert doc.revisions[1].trailer.prev == doc.revisions[0].xref_offset
    assert doc.revisions[0].byte_range[1] == doc.revisions[1].byte_range[0]


def test_prev_loop_guard():
    base = assemble([(1, b"<< /Type /Catalog >>")], b"<< /Size 2 /Root 1 0 R >>")
    # /Prev pointing at its own x-ref
    looped = append_revision(base, [(2, b"(x)")], b"<< /Size 3 /Root 1 0 R /Prev %d >>"
                             % (len(base) + len(b"2 0 obj\n(x)\nendobj\n")))
    doc = parse_document(looped)
    assert "prev-loop" in {d.code for d in doc.diagnostics}
    assert len(doc.revisions) == 1


def test_unreferenced_objects_after_xref():
    base = fig1_bytes()
    at = base.rfind(b"trailer")
    injected = base[:at] + serialize_object(9, 0, {"JS": PdfString(b"x")}) + base[at:]
    strict = parse_document(injected)
    scavenge = parse_document(injected, ParseMode.SCAVENGE)
    assert 9 not in effective_objects(strict)
    assert 9 in effective_objects(scavenge)
    assert "unreferenced-object" in {d.code for d in strict.diagnostics}
    assert not [d for d in strict.diagnostics if d.severity == "error"]


def test_no_startxref():
    with pytest.raises(TruncatedFile):
        parse_document(b"%PDF-1.4\n1 0 obj (x) endobj\n")
    with pytest.raises(NoTrailer):
        parse_document(b"%PDF-1.4\n1 0 obj (x) endobj\n%%EOF\n")


def test_fallback_to_scavenge():
    doc = parse_document(b"%PDF-1.4\n1 0 obj << /Type /Catalog >> endobj\n"
                         b"trailer << /Root 1 0 R >>\n%%EOF\n", fallback=True)
    assert doc.parse_mode is ParseMode.SCAVENGE
    assert "scavenge-fallback" in {d.code for d in doc.diagnostics}
    assert doc.root_ref == Reference(1)


def test_bad_startxref_recovered():
    data = fig1_bytes()
    real = last_startxref(data)
    broken = data.replace(b"startxref\n%d" % real, b"startxref\n%d" % (real - 3))
    doc = parse_document(broken)
    assert sorted(effective_objects(doc)) == [1, 2, 3, 4, 5]
    assert "bad-startxref" in {d.code for d in doc.diagnostics}


def test_length_lie_trusts_endstream():
    data = assemble([(1, b"<< /Type /Catalog >>"),
                     (2, b"<< /Length 3 >>\nstream\nhello world\nendstream")],
                    b"<< /Size 3 /Root 1 0 R >>")
    doc = parse_document(data)
    stream = effective_objects(doc)[2].value
    assert stream.raw_data == b"hello world"
    assert "length-mismatch" in {d.code for d in doc.diagnostics}


def test_duplicate_keys_last_wins():
    data = assemble([(1, b"<< /Type /Catalog /A 1 /A 2 >>")], b"<< /Size 2 /Root 1 0 R >>")
    doc = parse_document(data)
    assert effective_objects(doc)[1].value["A"] == 2
    assert "duplicate-key" in {d.code for d in doc.diagnostics}


def test_dangling_xref_entry_is_error():
    data = fig1_bytes()
    at = data.find(b"xref\n")
    offset5 = data.find(b"5 0 obj")
    broken = data[:at] + data[at:].replace(b"%010d 00000 n" % offset5, b"%010d 00000 n" % 3)
    doc = parse_document(broken)
    assert 5 not in effective_objects(doc)
    assert any(d.code == "dangling-xref" and d.severity == "error" for d in doc.diagnostics)


def test_scavenge_duplicates_visible():
    data = fig1_bytes()
    at = data.find(b"xref")
    dup = data[:at] + b"3 0 obj\n<< /Type /Page /Hidden true >>\nendobj\n" + data[at:]
    doc = parse_document(dup, ParseMode.SCAVENGE)
    assert sum(o.object_number == 3 for o in doc.iter_objects()) == 2
    assert effective_objects(doc)[3].value["Hidden"] is True


def test_serialize_single_object_size_two():
    single = build_document({1: {"Type": Name("Catalog")}}, {"Root": Reference(1)})
    parsed = parse_document(serialize(single))
    assert parsed.revisions[0].trailer.dictionary["Size"] == 2
    assert [(e.object_number, e.in_use) for e in parsed.revisions[0].xref] == [(1, True)]


def test_serialize_two_revisions_linked():
    data, _ = two_revision_bytes()
    doc = parse_document(data)
    again = parse_document(serialize(doc))
    assert len(again.revisions) == 2
    assert again.revisions[1].trailer.prev == again.revisions[0].xref_offset
    assert graphs_equal(effective_objects(doc), effective_objects(again))


def test_xref_entries_are_twenty_bytes():
    data = serialize(random_document(3))
    at = data.find(b"xref\n") + 5
    header_end = data.find(b"\n", at) + 1
    assert data[header_end + 18:header_end + 20] == b"\r\n"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_property(seed):
    doc = random_document(seed)
    parsed = parse_document(serialize(doc))
    assert graphs_equal(effective_objects(doc), effective_objects(parsed))
    assert len(parsed.revisions) == len(doc.revisions)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_mode_dominance(seed, data):
    raw = serialize(random_document(seed))
    cut = data.draw(st.integers(len(raw) // 2, len(raw)))
    blob = raw[:cut] + raw[len(raw) - 64:] if cut < len(raw) else raw
    try:
        strict = parse_document(blob)
        scavenge = parse_document(blob, ParseMode.SCAVENGE)
    except ParseError:
        return
    assert set(effective_objects(strict)) <= set(effective_objects(scavenge))


@settings(max_examples=150, deadline=None)
@given(st.binary(max_size=300))
def test_parser_never_crashes_on_garbage(tail):
    for mode in ParseMode:
        try:
            parse_document(b"%PDF-1.7\n" + tail, mode, fallback=True)
        except (NotAPdf, NoTrailer, TruncatedFile):
            pass
