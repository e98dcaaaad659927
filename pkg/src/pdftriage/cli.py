"""Command-line entry point.

Exit codes: 0 success, 1 analysis error (unparseable input, bad model file,
failed injection), 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .corpus import CorpusConfig, generate_corpus
from .errors import PdfTriageError
from .experiment import SPECS, ExperimentConfig, run_experiment
from .features import vectorize, write_csv
from .forensics import build_tree, extract_javascript, risk_report, scan_js_indicators
from .injection import InjectionTechnique, Payload, PayloadKind, Trigger, inject
from .learning import Dataset, load_model, save_model, train_adaboost, train_naive_bayes
from .parser import parse_file

EXIT_OK, EXIT_ANALYSIS, EXIT_USAGE = 0, 1, 2


def _emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _load(args: argparse.Namespace, path: str):
    return parse_file(path, args.mode, fallback=args.fallback)


def _pdf_paths(items: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for item in items:
        p = Path(item)
        paths.extend(sorted(p.glob("*.pdf")) if p.is_dir() else [p])
    return paths


def cmd_scan(args: argparse.Namespace) -> int:
    report = risk_report(_load(args, args.file), args.file)
    if args.json:
        _emit(args, json.dumps(report, indent=2))
        return EXIT_OK
    lines = [f"file: {args.file}", f"mode: {report['parse_mode']}",
             f"version: {report['header_version']}", "keywords:"]
    lines += [f"  /{k}: {v}" for k, v in sorted(report["keyword_counts"].items())]
    if report["tree"]:
        lines.append(f"suspicious: {len(report['tree']['suspicious'])}  "
                     f"orphans: {len(report['tree']['orphans'])}")
    lines.append(f"javascript objects: {len(report['javascript'])}")
    lines.append(f"diagnostics: {len(report['diagnostics'])}")
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_tree(args: argparse.Namespace) -> int:
    tree = build_tree(_load(args, args.file))
    data = {"root": tree.root,
            "edges": [{"parent": p, "child": c, "via": k} for p, c, k in tree.edges],
            "orphans": sorted(tree.orphans),
            "suspicious": [{"obj": n, "reason": r} for n, r in tree.suspicious_nodes]}
    if args.json:
        _emit(args, json.dumps(data, indent=2))
        return EXIT_OK
    lines = [f"root {tree.root}"]
    lines += [f"  {p} -{k}-> {c}" for p, c, k in tree.edges]
    lines += [f"orphan {n}" for n in data["orphans"]]
    lines += [f"suspicious {n}: {r}" for n, r in tree.suspicious_nodes]
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_extract_js(args: argparse.Namespace) -> int:
    entries = []
    for number, code in extract_javascript(_load(args, args.file)):
        hits = scan_js_indicators(code, number)
        entries.append({"obj": number, "code": code,
                        "indicators": sorted({h.indicator for h in hits})})
    if args.json:
        _emit(args, json.dumps(entries, indent=2))
    else:
        _emit(args, "\n".join(f"--- object {e['obj']} [{', '.join(e['indicators'])}]\n"
                              f"{e['code']}" for e in entries))
    return EXIT_OK


def cmd_features(args: argparse.Namespace) -> int:
    spec = SPECS[args.spec]()
    rows = [(str(p), vectorize(_load(args, str(p)), spec), args.label)
            for p in _pdf_paths(args.files)]
    buf = io.StringIO()
    write_csv(buf, spec, rows)
    _emit(args, buf.getvalue().rstrip("\n"))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    spec = SPECS[args.spec]()
    vectors, labels = [], []
    for label, items in ((-1, args.benign), (1, args.malicious)):
        for p in _pdf_paths(items):
            vectors.append(vectorize(_load(args, str(p)), spec))
            labels.append(label)
    data = Dataset(vectors, labels, spec)
    if args.family == "adaboost":
        model = train_adaboost(data, args.rounds, args.seed)
    else:
        model = train_naive_bayes(data, args.smoothing)
    save_model(model, args.out)
    print(f"trained {args.family} on {len(data)} files -> {args.out}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if model.feature_spec is None:
        raise PdfTriageError("model file carries no feature spec")
    lines = []
    for path in args.files:
        score = model.score(vectorize(_load(args, path), model.feature_spec))
        label = "malicious" if score >= 0 else "benign"
        lines.append(f"{path}\t{label}\t{score:.6f}")
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_inject(args: argparse.Namespace) -> int:
    kind = PayloadKind(args.payload_kind)
    raw = Path(args.payload).read_bytes()
    if kind is PayloadKind.JS:
        payload = Payload.js(raw.decode("latin-1"), args.trigger)
    elif kind is PayloadKind.NAMES:
        payload = Payload.names(list(json.loads(raw).items()))
    else:
        payload = Payload(kind, raw, args.trigger, Path(args.payload).name)
    out = inject(Path(args.input).read_bytes(), payload, args.technique)
    Path(args.output).write_bytes(out)
    print(f"wrote {len(out)} bytes to {args.output}")
    return EXIT_OK


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    config = CorpusConfig(seed=args.seed, n_benign=args.n_benign, n_malicious=args.n_malicious)
    out = Path(args.out)
    for sub, samples in zip(("benign", "malicious"), generate_corpus(config)):
        (out / sub).mkdir(parents=True, exist_ok=True)
        for s in samples:
            (out / sub / s.name).write_bytes(s.data)
    print(f"wrote {args.n_benign} benign and {args.n_malicious} malicious files to {out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    data: dict[str, Any] = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    report = run_experiment(ExperimentConfig.from_dict(data))
    _emit(args, report.to_json() if args.json else report.table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdftriage", description="Static PDF triage toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def doc_command(name: str, help_text: str, multiple: bool = False) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if multiple:
            p.add_argument("files", nargs="+")
        else:
            p.add_argument("file")
        p.add_argument("--mode", choices=["strict", "scavenge"], default="strict")
        p.add_argument("--fallback", action="store_true",
                       help="retry in scavenge mode when strict parsing fails")
        p.add_argument("--out", help="write output to this path instead of stdout")
        return p

    p = doc_command("scan", "keyword census and risk report")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_scan)
    p = doc_command("tree", "object tree, orphans and suspicious nodes")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_tree)
    p = doc_command("extract-js", "extract JavaScript and its indicators")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract_js)

    p = doc_command("features", "feature vectors as CSV", multiple=True)
    p.add_argument("--spec", choices=sorted(SPECS), default="default")
    p.add_argument("--label", type=int, choices=[-1, 1])
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a classifier from labelled files or directories")
    p.add_argument("--benign", nargs="+", required=True)
    p.add_argument("--malicious", nargs="+", required=True)
    p.add_argument("--family", choices=["adaboost", "naive_bayes"], default="adaboost")
    p.add_argument("--spec", choices=sorted(SPECS), default="default")
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["strict", "scavenge"], default="strict")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train, fallback=True)

    p = doc_command("classify", "label files with a saved model", multiple=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("inject", help="inject a payload into a PDF")
    p.add_argument("--technique", choices=[t.value for t in InjectionTechnique], required=True)
    p.add_argument("--payload-kind", choices=[k.value for k in PayloadKind], required=True)
    p.add_argument("--payload", required=True,
                   help="payload file; for 'names' a JSON object {name: count}")
    p.add_argument("--trigger", choices=[t.value for t in Trigger])
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("gen-corpus", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-benign", type=int, default=250)
    p.add_argument("--n-malicious", type=int, default=250)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("evaluate", help="run the reverse-mimicry experiment")
    p.add_argument("--config", help="experiment config JSON (defaults if omitted)")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PdfTriageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (ValueError, TypeError, KeyError) as exc:
        # bad option values that argparse cannot check (config contents, payload shape)
        parser.print_usage(sys.stderr)
        print(f"pdftriage: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
