from hypothesis import given, settings
from hypothesis import strategies as st

from pdftriage.lexer import Lexer, TokenKind, normalize_name, tokenize


def test_plain_name_is_identity():
    assert normalize_name(b"JavaScript") == "JavaScript"


def test_hex_escape_decodes():
    # 0x61 is 'a'
    assert normalize_name(b"J#61vaScript") == "JavaScript"
    assert normalize_name(b"#4A#53") == "JS"


def test_dangling_escape_kept_literally_with_diagnostic():
    diags = []
    assert normalize_name(b"A#2#", diags, 7) == "A#2#"
    assert [d.code for d in diags] == ["malformed-escape"]
    assert diags[0].offset == 7


def test_trailing_hash_is_malformed():
    diags = []
    assert normalize_name(b"AB#", diags) == "AB#"
    assert len(diags) == 1


def test_name_token_is_normalized():
    tokens = list(tokenize(b"/Open#41ction /JS"))
    assert [(t.kind, t.value) for t in tokens] == [(TokenKind.NAME, "OpenAction"),
                                                  (TokenKind.NAME, "JS")]


def test_literal_string_escapes_and_nesting():
    (token,) = tokenize(rb"(a\(b\)c\n\101(x)\
y)")
    assert token.kind is TokenKind.LITERAL_STRING
    assert token.value == b"a(b)c\nA(x)y"


def test_literal_string_eol_normalised():
    (token,) = tokenize(b"(a\r\nb\rc)")
    assert token.value == b"a\nb\nc"


def test_hex_string_whitespace_and_odd_padding():
    assert next(tokenize(b"<48 65 6C 6C 6F>")).value == b"Hello"
    assert next(tokenize(b"<414>")).value == b"A@"


def test_bad_hex_byte_stops_string_with_diagnostic():
    diags = []
    tokens = list(tokenize(b"<41zz>", diags))
    assert tokens[0].value == b"A"
    assert "bad-hex-string" in {d.code for d in diags}


def test_numbers():
    values = [t.value for t in tokenize(b"12 -3 +4 .5 -.25 6.")]
    assert values == [12, -3, 4, 0.5, -0.25, 6.0]
    assert isinstance(values[0], int) and isinstance(values[3], float)


def test_integer_overflow_becomes_float():
    diags = []
    (token,) = tokenize(b"99999999999999999999", diags)
    assert token.kind is TokenKind.NUMBER
    assert isinstance(token.value, float)
    assert [d.code for d in diags] == ["int-overflow"]


def test_comments_skipped_but_eof_marker_kept():
    kinds = [t.kind for t in tokenize(b"1 % comment\n2\n%%EOF\n")]
    assert kinds == [TokenKind.NUMBER, TokenKind.NUMBER, TokenKind.EOF_MARKER]


def test_stray_closers_are_skipped():
    diags = []
    tokens = list(tokenize(b") > /A", diags))
    assert [t.value for t in tokens] == ["A"]
    assert [d.code for d in diags] == ["stray-delimiter", "stray-delimiter"]


def test_structure_tokens():
    kinds = [t.kind for t in tokenize(b"<< /K [1 0 R] >>")]
    assert kinds == [TokenKind.DICT_OPEN, TokenKind.NAME, TokenKind.ARRAY_OPEN,
                     TokenKind.NUMBER, TokenKind.NUMBER, TokenKind.KEYWORD,
                     TokenKind.ARRAY_CLOSE, TokenKind.DICT_CLOSE]


def test_lexer_seek_and_peek():
    lexer = Lexer(b"1 2 3")
    assert lexer.peek(1).value == 2
    assert lexer.next().value == 1
    lexer.seek(4)
    assert lexer.next().value == 3
    assert lexer.next() is None


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=400))
def test_tokenize_is_total_and_spans_ordered(data):
    diags = []
    tokens = list(tokenize(data, diags))
    last_end = 0
    for token in tokens:
        assert last_end <= token.start < token.end <= len(data)
        last_end = token.end


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([b"<<", b">>", b"(", b")", b"<", b">", b"[", b"]", b"/",
                                 b"#", b"\\", b"%", b"obj", b"1", b" ", b"\n", b"\x00"]),
                max_size=60))
def test_tokenize_survives_delimiter_soup(parts):
    data = b"".join(parts)
    tokens = list(tokenize(data, []))
    assert all(t.end <= len(data) for t in tokens)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.characters(min_codepoint=0x21, max_codepoint=0xFF),
               min_size=1, max_size=12))
def test_escape_all_name_round_trip(name):
    raw = "".join(f"#{b:02X}" for b in name.encode("latin-1")).encode("ascii")
    assert normalize_name(raw) == name
