import zlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdftriage.errors import CorruptStream, UnsupportedFilter
from pdftriage.filters import (MAX_DECODED_SIZE, asciihex_decode, asciihex_encode,
                               decode_stream, flate_decode, flate_encode, stream_filters)
from pdftriage.model import Name, Reference, Stream


def test_asciihex_hello():
    assert asciihex_decode(b"48 65 6C 6C 6F>") == b"Hello"


def test_asciihex_stops_at_terminator_and_pads():
    assert asciihex_decode(b"41 42>4344") == b"AB"
    assert asciihex_decode(b"414") == b"A@"


def test_asciihex_rejects_garbage():
    with pytest.raises(CorruptStream):
        asciihex_decode(b"4G>")


def test_flate_matches_zlib_oracle():
    data = b"stream payload " * 20
    assert flate_decode(zlib.compress(data)) == data
    assert zlib.decompress(flate_encode(data)) == data


def test_flate_corrupt_input():
    with pytest.raises(CorruptStream):
        flate_decode(b"not deflate data")


def test_flate_output_cap():
    bomb = zlib.compress(b"\x00" * (MAX_DECODED_SIZE + 10))
    with pytest.raises(CorruptStream):
        flate_decode(bomb)


def test_no_filter_identity():
    stream = Stream({"Length": 5}, b"abcde")
    assert decode_stream(stream) == b"abcde"


def test_no_filter_length_shorter_truncates_with_diagnostic():
    diags = []
    assert decode_stream(Stream({"Length": 3}, b"abcde"), diagnostics=diags) == b"abc"
    assert diags


def test_no_filter_length_longer_is_reported_not_padded():
    diags = []
    assert decode_stream(Stream({"Length": 9}, b"abcde"), diagnostics=diags) == b"abcde"
    assert diags


def test_filter_chain_applies_in_order():
    data = b"chained"
    raw = asciihex_encode(flate_encode(data))
    stream = Stream({"Length": len(raw), "Filter": [Name("AHx"), Name("Fl")]}, raw)
    assert stream_filters(stream) == ["AHx", "Fl"]
    assert decode_stream(stream) == data


def test_filter_through_reference():
    raw = flate_encode(b"x")
    stream = Stream({"Length": len(raw), "Filter": Reference(9)}, raw)
    assert decode_stream(stream, lambda ref: Name("FlateDecode")) == b"x"


def test_unsupported_filter():
    with pytest.raises(UnsupportedFilter):
        decode_stream(Stream({"Length": 1, "Filter": Name("DCTDecode")}, b"x"))


@settings(max_examples=100, deadline=None)
@given(st.binary(max_size=2000))
def test_flate_round_trip_property(data):
    assert flate_decode(flate_encode(data)) == data


@settings(max_examples=100, deadline=None)
@given(st.binary(max_size=2000))
def test_asciihex_round_trip_property(data):
    assert asciihex_decode(asciihex_encode(data)) == data
