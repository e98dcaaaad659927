import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import benign_text_bytes, fig1_bytes, launch_excerpt_bytes
from pdftriage.corpus import DUMMY_EXE, MALICIOUS_JS, benign_file, malicious_file
from pdftriage.errors import NoCatalog, TargetUnparseable, TechniqueNotAllowed
from pdftriage.features import default_spec, vectorize_bytes
from pdftriage.forensics import build_tree, embedded_files, extract_javascript, keyword_scan
from pdftriage.injection import (InjectionTechnique, Payload, PayloadKind, Trigger, donor_names,
                                 inject, inject_after_xref, inject_graph_merge, inject_incremental,
                                 make_mimicry, make_reverse_mimicry, trigger_resolves)
from pdftriage.model import (ParseMode, Reference, effective_objects, graphs_equal,
                             reachable_set)
from pdftriage.parser import parse_document
from pdftriage.writer import build_document, serialize

WIRED = (InjectionTechnique.INCREMENTAL, InjectionTechnique.GRAPH_MERGE)


def _errors(document):
    return [d for d in document.diagnostics if d.severity == "error"]


def _payloads():
    inner = malicious_file(1, 0, "js-eval-unescape")
    return [
        Payload.js(MALICIOUS_JS),
        Payload.js(MALICIOUS_JS, Trigger.NAMES_JAVASCRIPT),
        Payload.pdf(inner),
        Payload.pdf(inner, Trigger.OPEN_ACTION),
        Payload.pdf(inner, Trigger.NAMES_JAVASCRIPT),
        Payload.exe(DUMMY_EXE),
        Payload.exe(DUMMY_EXE, Trigger.OPEN_ACTION),
        Payload.names([("Font", 3), ("Page", 2)]),
    ]


def test_payload_validation():
    with pytest.raises(ValueError):
        Payload.js("")
    with pytest.raises(ValueError):
        Payload.exe(b"")
    with pytest.raises(ValueError):
        Payload.pdf(b"not a pdf")
    assert Payload.js("x").trigger is Trigger.OPEN_ACTION
    assert Payload.exe(b"MZ").trigger is Trigger.EMBEDDED_FILE_ONLY
    assert Payload.names([]).is_empty
    assert Payload("names", [("A", 0)]).kind is PayloadKind.NAMES


def test_after_xref_names_census():
    base = benign_text_bytes()
    data = inject_after_xref(base, Payload.names([("Font", 3), ("Marker", 2)]))
    assert keyword_scan(parse_document(data)) == keyword_scan(parse_document(base))
    before = keyword_scan(parse_document(base, ParseMode.SCAVENGE))
    after = keyword_scan(parse_document(data, ParseMode.SCAVENGE))
    assert after["Font"] - before["Font"] == 3
    assert after["Marker"] - before["Marker"] == 2


def test_after_xref_no_new_errors():
    base = benign_text_bytes()
    for payload in _payloads():
        data = inject_after_xref(base, payload)
        strict = parse_document(data)
        assert _errors(strict) == []
        assert len(strict.revisions) == len(parse_document(base).revisions)
        assert graphs_equal(effective_objects(strict), effective_objects(parse_document(base)))


def test_after_xref_empty_payload_identity():
    base = fig1_bytes()
    assert inject_after_xref(base, Payload.names([])) == base
    assert inject_after_xref(base, Payload.names([("Font", 0)])) == base


def test_after_xref_requires_strict_target():
    with pytest.raises(TargetUnparseable):
        inject_after_xref(b"%PDF-1.4\n1 0 obj (x) endobj\n", Payload.js("x"))


def test_incremental_js_reachable_and_suspicious():
    base = benign_text_bytes()
    data = inject_incremental(base, Payload.js(MALICIOUS_JS))
    doc = parse_document(data)
    assert len(doc.revisions) == len(parse_document(base).revisions) + 1
    assert doc.revisions[-1].trailer.prev == parse_document(base).revisions[-1].xref_offset
    js = [n for n, code in extract_javascript(doc) if code == MALICIOUS_JS]
    assert js and set(js) <= reachable_set(doc)
    tree = build_tree(doc)
    assert any(r == "contains /JS" for _, r in tree.suspicious_nodes)
    assert trigger_resolves(doc, Payload.js(MALICIOUS_JS))


def test_incremental_requires_catalog():
    no_root = launch_excerpt_bytes()
    with pytest.raises((NoCatalog, TargetUnparseable)):
        inject_incremental(no_root, Payload.js("x"))


def test_graph_merge_single_revision_and_resolvable():
    payload = Payload.js(MALICIOUS_JS)
    doc = parse_document(inject_graph_merge(benign_text_bytes(), payload))
    fresh = parse_document(benign_text_bytes())
    for d in (doc, fresh):
        assert len(d.revisions) == 1
        assert d.revisions[0].trailer.prev is None
    assert trigger_resolves(doc, payload)
    assert build_tree(doc).orphans == build_tree(fresh).orphans


def test_graph_merge_pdf_payload_is_embedded_file():
    inner = malicious_file(3, 1, "launch-exe")
    payload = Payload.pdf(inner)
    doc = parse_document(inject_graph_merge(benign_text_bytes(), payload))
    files = embedded_files(doc)
    assert [data for _, data in files] == [inner]
    assert {n for n, _ in files} <= reachable_set(doc)
    assert trigger_resolves(doc, payload)
    assert keyword_scan(doc)["EmbeddedFiles"] >= 1


def test_graph_merge_without_catalog():
    data = serialize(build_document({1: [1, 2]}, {"Root": Reference(1)}))
    with pytest.raises(NoCatalog):
        inject_graph_merge(data, Payload.js("x"))


def test_reverse_mimicry_same_code_in_twenty_hosts():
    payload = Payload.js(MALICIOUS_JS)
    for i in range(20):
        host = benign_file(11, i)
        out = make_reverse_mimicry(host, payload)
        doc = parse_document(out)
        assert trigger_resolves(doc, payload)
        assert _errors(doc) == []


def test_reverse_mimicry_js_in_single_object():
    doc = parse_document(make_reverse_mimicry(benign_text_bytes(), Payload.js(MALICIOUS_JS)))
    holders = [n for n, code in extract_javascript(doc) if MALICIOUS_JS in code]
    assert len(holders) == 1


def test_reverse_mimicry_rejects_after_xref():
    with pytest.raises(TechniqueNotAllowed):
        make_reverse_mimicry(benign_text_bytes(), Payload.js("x"), "after-xref")


def test_reverse_mimicry_exe_stored_as_attachment():
    for technique in WIRED:
        doc = parse_document(make_reverse_mimicry(benign_text_bytes(), Payload.exe(DUMMY_EXE),
                                                  technique))
        assert [b for _, b in embedded_files(doc)] == [DUMMY_EXE]
        assert keyword_scan(doc)["EmbeddedFile"] >= 1


def test_mimicry_census_shift():
    donor = donor_names(benign_file(5, 0), limit=8)
    malicious = malicious_file(5, 0, "launch-exe")
    out = make_mimicry(malicious, donor)
    assert keyword_scan(parse_document(out)) == keyword_scan(parse_document(malicious))
    before = keyword_scan(parse_document(malicious, ParseMode.SCAVENGE))
    after = keyword_scan(parse_document(out, ParseMode.SCAVENGE))
    for name, count in donor:
        assert after[name] - before[name] == count
    assert vectorize_bytes(out, default_spec()) == vectorize_bytes(malicious, default_spec())


def test_mimicry_zero_donor_identity():
    malicious = malicious_file(5, 1, "js-eval-unescape")
    assert make_mimicry(malicious, []) == malicious


def test_mimicry_on_scavenge_only_target():
    data = (b"%PDF-1.4\n1 0 obj << /Type /Catalog /OpenAction 2 0 R >> endobj\n"
            b"2 0 obj << /S /Launch /F (calc) >> endobj\ntrailer << /Root 1 0 R >>\n")
    out = make_mimicry(data, [("Font", 2)])
    assert out.startswith(data)
    assert keyword_scan(parse_document(out, ParseMode.SCAVENGE))["Font"] == 2


def test_dispatch_by_string():
    base = fig1_bytes()
    assert inject(base, Payload.js("x"), "graph-merge") == inject_graph_merge(base, Payload.js("x"))
    with pytest.raises(ValueError):
        inject(base, Payload.js("x"), "teleport")


def test_fresh_numbers_skip_hidden_objects():
    base = inject_after_xref(fig1_bytes(), Payload.names([("A", 1)]))
    hidden = set(effective_objects(parse_document(base, ParseMode.SCAVENGE))) - \
        set(effective_objects(parse_document(base)))
    assert hidden
    out = parse_document(inject_incremental(base, Payload.js("x")))
    # the catalog is re-emitted under its own number; payload objects are fresh
    new = {e.object_number for e in out.revisions[-1].xref} - {1}
    assert new and min(new) > max(hidden)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 50), st.sampled_from(range(8)), st.sampled_from(list(InjectionTechnique)))
def test_injection_invariants(index, which, technique):
    host = benign_file(17, index)
    payload = _payloads()[which]
    before = parse_document(host)
    out = inject(host, payload, technique)
    after = parse_document(out)
    assert _errors(after) == []
    assert set(effective_objects(before)) <= set(effective_objects(after))
    if technique is InjectionTechnique.AFTER_XREF:
        assert len(after.revisions) == len(before.revisions)
        assert vectorize_bytes(out, default_spec()) == vectorize_bytes(host, default_spec())
        hidden = set(effective_objects(parse_document(out, ParseMode.SCAVENGE))) - \
            set(effective_objects(after))
        assert hidden and min(hidden) > max(effective_objects(before))
    else:
        expected = len(before.revisions) + 1 if technique is InjectionTechnique.INCREMENTAL else 1
        assert len(after.revisions) == expected
        assert trigger_resolves(after, payload)
