"""Train, attack and evaluate: the reverse-mimicry experiment pipeline.

The corpus is split deterministically into training and held-out parts.
Each detector is trained on the training part only.  Attack files are built
exclusively from held-out benign files, one attack family per payload kind,
and every detector is scored on held-out benign, held-out native malicious
and each attack family.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .corpus import DUMMY_EXE, MALICIOUS_JS, CorpusConfig, SampleFile, generate_corpus
from .errors import ParseError
from .features import FeatureSpec, content_spec, default_spec, structural_spec, vectorize
from .forensics import embedded_files
from .injection import InjectionTechnique, Payload, make_reverse_mimicry
from .learning import Dataset, Model, train_adaboost, train_naive_bayes
from .model import Document
from .parser import parse_document

FAMILIES = ("js-embedding", "pdf-embedding", "exe-embedding", "native-malicious", "benign")
ATTACK_FAMILIES = FAMILIES[:3]
SPECS = {"structural": structural_spec, "default": default_spec, "content": content_spec}
MAX_EMBED_DEPTH = 3


@dataclass(frozen=True)
class DetectorConfig:
    id: str
    family: str = "adaboost"  # or "naive_bayes"
    spec: str = "structural"
    recursive_embedded: bool = False

    def __post_init__(self) -> None:
        if self.family not in ("adaboost", "naive_bayes"):
            raise ValueError(f"unknown model family {self.family!r}")
        if self.spec not in SPECS:
            raise ValueError(f"unknown feature spec {self.spec!r}")


DEFAULT_DETECTORS = (
    DetectorConfig("structural-adaboost", "adaboost", "structural"),
    DetectorConfig("naive-bayes", "naive_bayes", "default"),
    DetectorConfig("content-adaboost", "adaboost", "content"),
    DetectorConfig("embedded-aware", "adaboost", "content", recursive_embedded=True),
)


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: CorpusConfig = CorpusConfig()
    train_fraction: float = 0.8
    detectors: tuple[DetectorConfig, ...] = DEFAULT_DETECTORS
    attacks: tuple[str, ...] = ATTACK_FAMILIES
    attacks_per_family: int = 50
    technique: str = InjectionTechnique.GRAPH_MERGE.value
    rounds: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        unknown = set(self.attacks) - set(ATTACK_FAMILIES)
        if unknown:
            raise ValueError(f"unknown attack families {sorted(unknown)}")
        if InjectionTechnique(self.technique) is InjectionTechnique.AFTER_XREF:
            raise ValueError("reverse mimicry needs incremental or graph-merge")
        if self.attacks_per_family < 1 or self.rounds < 1:
            raise ValueError("attacks_per_family and rounds must be >= 1")
        ids = [d.id for d in self.detectors]
        if not ids or len(set(ids)) != len(ids):
            raise ValueError("detector ids must be non-empty and unique")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["detectors"] = [asdict(d) for d in self.detectors]
        data["attacks"] = list(self.attacks)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        corpus = CorpusConfig.from_dict(data.pop("corpus", {}))
        detectors = tuple(DetectorConfig(**d) for d in data.pop("detectors", [])) \
            or DEFAULT_DETECTORS
        attacks = tuple(data.pop("attacks", ATTACK_FAMILIES))
        return cls(corpus=corpus, detectors=detectors, attacks=attacks, **data)


@dataclass
class FamilyResult:
    n: int
    flagged: int

    @property
    def rate(self) -> float:
        return self.flagged / self.n if self.n else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "flagged": self.flagged, "rate": self.rate}


@dataclass
class ExperimentReport:
    results: dict[str, dict[str, FamilyResult]]
    sizes: dict[str, int]
    config: dict[str, Any]
    runtime_seconds: float = 0.0
    training: dict[str, Any] = field(default_factory=dict)

    def rate(self, detector: str, family: str) -> float:
        return self.results[detector][family].rate

    def to_dict(self) -> dict[str, Any]:
        return {
            "results": {d: {f: r.to_dict() for f, r in fams.items()}
                        for d, fams in self.results.items()},
            "sizes": dict(self.sizes),
            "seeds": {"corpus": self.config["corpus"]["seed"], "split": self.config["seed"]},
            "config": self.config,
            "training": self.training,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def table(self) -> str:
        """Rows are sample families, columns are detectors; cells are flag rates."""
        detectors = list(self.results)
        width = max(len(f) for f in FAMILIES) + 2
        cols = [max(len(d), 6) + 2 for d in detectors]
        lines = ["family".ljust(width) + "".join(d.rjust(c) for d, c in zip(detectors, cols))]
        for family in FAMILIES:
            if not all(family in self.results[d] for d in detectors):
                continue
            cells = "".join(f"{self.rate(d, family):.3f}".rjust(c)
                            for d, c in zip(detectors, cols))
            lines.append(family.ljust(width) + cells)
        return "\n".join(lines)


def _parse(data: bytes) -> Document | None:
    try:
        return parse_document(data, fallback=True)
    except ParseError:
        return None


class Detector:
    """A trained model, optionally applied recursively to embedded PDF files."""

    def __init__(self, config: DetectorConfig, model: Model, spec: FeatureSpec):
        self.config = config
        self.model = model
        self.spec = spec

    def flags(self, document: Document, depth: int = 0) -> bool:
        if self.model.predict(vectorize(document, self.spec)) == 1:
            return True
        if not self.config.recursive_embedded or depth >= MAX_EMBED_DEPTH:
            return False
        for _, data in embedded_files(document):
            if b"%PDF-" not in data[:1024]:
                continue
            inner = _parse(data)
            if inner is not None and self.flags(inner, depth + 1):
                return True
        return False


def split(samples: Sequence[SampleFile], fraction: float,
          rng: random.Random) -> tuple[list[SampleFile], list[SampleFile]]:
    order = list(range(len(samples)))
    rng.shuffle(order)
    cut = min(max(1, round(len(samples) * fraction)), len(samples) - 1) \
        if len(samples) > 1 else len(samples)
    return [samples[i] for i in sorted(order[:cut])], [samples[i] for i in sorted(order[cut:])]


def build_attacks(config: ExperimentConfig, held_benign: Sequence[SampleFile],
                  held_malicious: Sequence[SampleFile]) -> dict[str, list[bytes]]:
    """Reverse-mimicry files built from held-out benign hosts only."""
    rng = random.Random(f"{config.seed}:attacks")
    technique = InjectionTechnique(config.technique)
    attacks: dict[str, list[bytes]] = {}
    for family in config.attacks:
        files = []
        for i in range(config.attacks_per_family):
            host = held_benign[i % len(held_benign)].data
            if family == "js-embedding":
                payload = Payload.js(MALICIOUS_JS)
            elif family == "pdf-embedding":
                payload = Payload.pdf(rng.choice(held_malicious).data, filename="invoice.pdf")
            else:
                payload = Payload.exe(DUMMY_EXE, filename="setup.exe")
            files.append(make_reverse_mimicry(host, payload, technique))
        attacks[family] = files
    return attacks


def run_experiment(config: ExperimentConfig = ExperimentConfig()) -> ExperimentReport:
    started = time.perf_counter()
    benign, malicious = generate_corpus(config.corpus)
    rng = random.Random(f"{config.seed}:split")
    train_b, held_b = split(benign, config.train_fraction, rng)
    train_m, held_m = split(malicious, config.train_fraction, rng)
    attacks = build_attacks(config, held_b, held_m)

    train_docs = [_parse(s.data) for s in train_b + train_m]
    train_labels = [s.label for s in train_b + train_m]
    keep = [i for i, d in enumerate(train_docs) if d is not None]
    eval_sets: dict[str, list[Document | None]] = {
        "benign": [_parse(s.data) for s in held_b],
        "native-malicious": [_parse(s.data) for s in held_m],
    }
    for family, files in attacks.items():
        eval_sets[family] = [_parse(f) for f in files]

    trained: dict[tuple[str, str], Model] = {}
    training: dict[str, Any] = {}
    results: dict[str, dict[str, FamilyResult]] = {}
    for det in config.detectors:
        spec = SPECS[det.spec]()
        key = (det.family, det.spec)
        if key not in trained:
            data = Dataset([vectorize(train_docs[i], spec) for i in keep],
                           [train_labels[i] for i in keep], spec)
            if det.family == "adaboost":
                model = train_adaboost(data, config.rounds, config.seed)
            else:
                model = train_naive_bayes(data)
            train_err = float(np.mean(model.predict_many(data.matrix()) != data.targets()))
            trained[key] = model
            training[f"{det.family}/{det.spec}"] = {"n": len(data), "training_error": train_err}
        detector = Detector(det, trained[key], spec)
        row: dict[str, FamilyResult] = {}
        for family in FAMILIES:
            if family not in eval_sets:
                continue
            docs = eval_sets[family]
            # an unparseable file counts as flagged: a triage tool would escalate it
            flagged = sum(1 for d in docs if d is None or detector.flags(d))
            row[family] = FamilyResult(len(docs), flagged)
        results[det.id] = row

    sizes = {
        "benign": len(benign), "malicious": len(malicious),
        "train_benign": len(train_b), "train_malicious": len(train_m),
        "heldout_benign": len(held_b), "heldout_malicious": len(held_m),
        **{f"attack_{f}": len(v) for f, v in attacks.items()},
    }
    return ExperimentReport(results, sizes, config.to_dict(),
                            round(time.perf_counter() - started, 3), training)
