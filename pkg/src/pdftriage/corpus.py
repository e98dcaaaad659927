"""Deterministic synthetic corpus of benign-like and malicious-like PDF files.

Every file is built from its own ``random.Random`` seeded with a string
derived from the corpus seed, the class and the file index, so one file can be
regenerated without producing the others first.  All payload content is
inert: command strings are never executed and "executables" are dummy bytes.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from typing import Any

from .filters import flate_encode
from .model import Name, PdfString, Reference, Stream
from .writer import build_document, serialize

_WORDS = (
    "annual report quarter revenue growth market analysis summary figure table "
    "section results method data policy review customer service product design "
    "project budget schedule team meeting notes chapter introduction conclusion "
    "appendix reference index overview planning strategy network system user"
).split()
_FONTS = ("Helvetica", "Times-Roman", "Courier", "Helvetica-Bold", "Times-Italic")
_BENIGN_JS = (
    'app.alert("Thank you for reading this document.");',
    "this.print({bUI: true, bSilent: false});",
    'var f = this.getField("total");\nif (f) { f.value = 0; }',
    "var today = new Date();\nthis.info.ModDate = today;",
)
_DOMAINS = ("example.com", "example.org", "intranet.example.net", "docs.example.edu")

# Inert stand-ins for the attack families.  The shellcode string is a run of
# NOP-like escapes followed by harmless filler; nothing here is executable.
MALICIOUS_JS = (
    'var pad = unescape("' + "%u9090" * 16 + '");\n'
    'var body = unescape("%u4141%u4242%u4343%u4444");\n'
    "var spray = new Array();\n"
    "while (pad.length < 4096) { pad += pad; }\n"
    "for (var i = 0; i < 64; i++) { spray[i] = pad + body; }\n"
    'var cmd = String.fromCharCode(97, 108, 101, 114, 116) + "(1)";\n'
    "eval(cmd);\n"
)
LAUNCH_COMMAND = (
    '/c echo Dim BinaryStream > vbs1.vbs && echo Set BinaryStream = '
    'CreateObject("ADODB.Stream") >> vbs1.vbs && echo inert placeholder'
)
DUMMY_EXE = b"MZ\x90\x00\x03\x00\x00\x00" + b"\x00" * 56 + b"PE\x00\x00" + b"inert-sample" * 8

MALICIOUS_TEMPLATES = ("launch-exe", "js-eval-unescape", "embedded-file")


@dataclass(frozen=True)
class BenignProfile:
    page_range: tuple[int, int] = (2, 12)
    words_per_page: tuple[int, int] = (40, 200)
    js_probability: float = 0.3
    attachment_probability: float = 0.2
    link_probability: float = 0.5


@dataclass(frozen=True)
class MaliciousProfile:
    template_mix: dict[str, float] = field(default_factory=lambda: {
        "launch-exe": 1.0, "js-eval-unescape": 1.0, "embedded-file": 1.0})
    page_range: tuple[int, int] = (1, 2)
    # fraction of samples dressed as ordinary multi-page documents
    disguise_probability: float = 0.15


@dataclass(frozen=True)
class CorpusConfig:
    seed: int = 0
    n_benign: int = 250
    n_malicious: int = 250
    benign_profile: BenignProfile = BenignProfile()
    malicious_profile: MaliciousProfile = MaliciousProfile()

    def __post_init__(self) -> None:
        if self.n_benign < 1 or self.n_malicious < 1:
            raise ValueError("corpus counts must be >= 1")
        b = self.benign_profile
        for p in (b.js_probability, b.attachment_probability, b.link_probability,
                  self.malicious_profile.disguise_probability):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")
        for lo, hi in (b.page_range, b.words_per_page, self.malicious_profile.page_range):
            if not 1 <= lo <= hi:
                raise ValueError(f"bad range ({lo}, {hi})")
        mix = self.malicious_profile.template_mix
        if not mix or any(k not in MALICIOUS_TEMPLATES or w < 0 for k, w in mix.items()) \
                or sum(mix.values()) <= 0:
            raise ValueError(f"bad template mix {mix}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CorpusConfig":
        data = dict(data)
        benign = data.pop("benign_profile", None) or {}
        malicious = data.pop("malicious_profile", None) or {}
        benign = {k: tuple(v) if isinstance(v, list) else v for k, v in benign.items()}
        malicious = {k: tuple(v) if k == "page_range" else v for k, v in malicious.items()}
        return cls(benign_profile=BenignProfile(**benign),
                   malicious_profile=MaliciousProfile(**malicious), **data)


@dataclass(frozen=True)
class SampleFile:
    name: str
    data: bytes
    label: int  # +1 malicious, -1 benign
    template: str


class _DocBuilder:
    def __init__(self) -> None:
        self.objects: dict[int, Any] = {}

    def add(self, value: Any) -> Reference:
        number = len(self.objects) + 1
        self.objects[number] = value
        return Reference(number)

    def reserve(self) -> Reference:
        return self.add(None)

    def set(self, ref: Reference, value: Any) -> None:
        self.objects[ref.object_number] = value


def _flate_stream(data: bytes, extra: dict | None = None) -> Stream:
    raw = flate_encode(data)
    return Stream({**(extra or {}), "Length": len(raw), "Filter": Name("FlateDecode")}, raw)


def _page_text(rng: random.Random, words: int) -> bytes:
    lines = [b"BT", b"/F1 11 Tf", b"72 720 Td", b"14 TL"]
    for _ in range(max(1, words // 10)):
        text = " ".join(rng.choice(_WORDS) for _ in range(10))
        lines.append(b"(" + text.encode("ascii") + b") Tj T*")
    lines.append(b"ET")
    return b"\n".join(lines)


def _pages(b: _DocBuilder, rng: random.Random, n_pages: int, n_fonts: int,
           words: tuple[int, int], links: bool) -> Reference:
    pages_ref = b.reserve()
    fonts = {f"F{i + 1}": b.add({"Type": Name("Font"), "Subtype": Name("Type1"),
                                 "BaseFont": Name(rng.choice(_FONTS))})
             for i in range(n_fonts)}
    kids = []
    for _ in range(n_pages):
        content = b.add(_flate_stream(_page_text(rng, rng.randint(*words))))
        page = {"Type": Name("Page"), "Parent": pages_ref, "MediaBox": [0, 0, 612, 792],
                "Contents": content}
        if fonts:
            page["Resources"] = {"Font": dict(fonts)}
        if links and rng.random() < 0.5:
            uri = f"https://{rng.choice(_DOMAINS)}/{rng.choice(_WORDS)}"
            page["Annots"] = [b.add({"Type": Name("Annot"), "Subtype": Name("Link"),
                                     "Rect": [72, 72, 200, 90],
                                     "A": {"S": Name("URI"), "URI": PdfString(uri.encode())}})]
        kids.append(b.add(page))
    b.set(pages_ref, {"Type": Name("Pages"), "Kids": kids, "Count": len(kids)})
    return pages_ref


def _info(b: _DocBuilder, rng: random.Random) -> Reference:
    title = " ".join(rng.choice(_WORDS) for _ in range(3)).title()
    return b.add({"Title": PdfString(title.encode()),
                  "Producer": PdfString(b"synthetic writer 1.0"),
                  "CreationDate": PdfString(b"D:20200101000000Z")})


def _js_action(b: _DocBuilder, code: str) -> Reference:
    return b.add({"Type": Name("Action"), "S": Name("JavaScript"),
                  "JS": b.add(_flate_stream(code.encode("latin-1")))})


def _embed(b: _DocBuilder, filename: str, data: bytes) -> Reference:
    stream = b.add(_flate_stream(data, {"Type": Name("EmbeddedFile"),
                                        "Params": {"Size": len(data)}}))
    fname = PdfString(filename.encode("latin-1"))
    return b.add({"Type": Name("Filespec"), "F": fname, "UF": fname, "EF": {"F": stream}})


def benign_file(seed: int, index: int, profile: BenignProfile = BenignProfile()) -> bytes:
    rng = random.Random(f"{seed}:benign:{index}")
    b = _DocBuilder()
    catalog = b.reserve()
    pages = _pages(b, rng, rng.randint(*profile.page_range), rng.randint(1, 3),
                   profile.words_per_page, rng.random() < profile.link_probability)
    cat: dict[str, Any] = {"Type": Name("Catalog"), "Pages": pages}
    names: dict[str, Any] = {}
    if rng.random() < profile.js_probability:
        action = _js_action(b, rng.choice(_BENIGN_JS))
        if rng.random() < 0.5:
            cat["OpenAction"] = action
        else:
            names["JavaScript"] = {"Names": [PdfString(b"init"), action]}
    if rng.random() < profile.attachment_probability:
        text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(20, 120)))
        names["EmbeddedFiles"] = {"Names": [PdfString(b"notes.txt"),
                                            _embed(b, "notes.txt", text.encode())]}
    if names:
        cat["Names"] = names
    b.set(catalog, cat)
    info = _info(b, rng)
    return serialize(build_document(b.objects, {"Root": catalog, "Info": info},
                                    rng.choice(("1.4", "1.5", "1.6", "1.7"))))


def malicious_file(seed: int, index: int, template: str,
                   profile: MaliciousProfile = MaliciousProfile()) -> bytes:
    if template not in MALICIOUS_TEMPLATES:
        raise ValueError(f"unknown template {template!r}")
    rng = random.Random(f"{seed}:malicious:{index}")
    b = _DocBuilder()
    catalog = b.reserve()
    if rng.random() < profile.disguise_probability:
        pages = _pages(b, rng, rng.randint(2, 8), rng.randint(1, 2), (40, 120),
                       rng.random() < 0.3)
    else:
        pages = _pages(b, rng, rng.randint(*profile.page_range), rng.randint(0, 1),
                       (5, 30), False)
    cat: dict[str, Any] = {"Type": Name("Catalog"), "Pages": pages}
    if template == "launch-exe":
        cat["OpenAction"] = b.add({
            "Type": Name("Action"), "S": Name("Launch"),
            "Win": {"F": PdfString(b"cmd.exe"), "P": PdfString(LAUNCH_COMMAND.encode())},
        })
    elif template == "js-eval-unescape":
        action = _js_action(b, MALICIOUS_JS)
        if rng.random() < 0.7:
            cat["OpenAction"] = action
        else:
            cat["Names"] = {"JavaScript": {"Names": [PdfString(b"main"), action]}}
    else:
        spec = _embed(b, "update.exe", DUMMY_EXE + bytes([index % 256]))
        cat["Names"] = {"EmbeddedFiles": {"Names": [PdfString(b"update.exe"), spec]}}
        cat["OpenAction"] = _js_action(
            b, 'this.exportDataObject({cName: "update.exe", nLaunch: 2});')
    b.set(catalog, cat)
    trailer: dict[str, Any] = {"Root": catalog}
    if rng.random() < 0.3:
        trailer["Info"] = _info(b, rng)
    return serialize(build_document(b.objects, trailer, "1.3"))


def _templates(config: CorpusConfig) -> list[str]:
    rng = random.Random(f"{config.seed}:templates")
    mix = config.malicious_profile.template_mix
    names = sorted(k for k, w in mix.items() if w > 0)
    return rng.choices(names, weights=[mix[k] for k in names], k=config.n_malicious)


def generate_corpus(config: CorpusConfig) -> tuple[list[SampleFile], list[SampleFile]]:
    """Return ``(benign, malicious)`` sample lists; identical config gives identical bytes."""
    benign = [SampleFile(f"benign-{i:04d}.pdf", benign_file(config.seed, i, config.benign_profile),
                         -1, "benign")
              for i in range(config.n_benign)]
    malicious = [SampleFile(f"malicious-{i:04d}-{t}.pdf",
                            malicious_file(config.seed, i, t, config.malicious_profile), 1, t)
                 for i, t in enumerate(_templates(config))]
    return benign, malicious
