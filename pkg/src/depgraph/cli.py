"""Command-line interface: train, parse, evaluate, gradcheck, export-scores."""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys
import tempfile
from dataclasses import asdict, fields

import numpy as np

from . import checkpoint as ckpt
from .conllu import ConlluError, read_conllu_file, write_conllu_file
from .encoder import read_vector_file
from .evaluate import AlignmentError, evaluate
from .gradcheck import run_gradcheck, worst_by_param
from .lexicalize import LexRuleConfig
from .pipeline import parse_sentences
from .trainer import TrainConfig, train

SCORE_MAGIC = b"DGSCORES"
SCORE_VERSION = 1


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_train_config(path: str | None, overrides: list[str]) -> TrainConfig:
    data: dict = {}
    if path:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    valid = {f.name for f in fields(TrainConfig)}
    for item in overrides:
        key, _, value = item.partition("=")
        if key not in valid:
            raise ValueError(f"unknown config key {key!r}")
        data[key] = json.loads(value)
    unknown = set(data) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return TrainConfig.from_dict(data)


def cmd_train(args) -> int:
    config = _load_train_config(args.config, args.set or [])
    train_sents = read_conllu_file(args.train)
    dev_sents = read_conllu_file(args.dev)
    train_vectors = dev_vectors = None
    if args.vectors:
        train_vectors, _ = read_vector_file(args.vectors)
    if args.dev_vectors:
        dev_vectors, _ = read_vector_file(args.dev_vectors)
    lex = LexRuleConfig.load(args.lex_rules) if args.lex_rules else LexRuleConfig()

    os.makedirs(args.output, exist_ok=True)
    log_path = os.path.join(args.output, "train_log.jsonl")
    log_lines = []

    def log(record):
        line = record.to_json()
        log_lines.append(line)
        _log(line)

    result = train(train_sents, dev_sents, config,
                   train_vectors=train_vectors, dev_vectors=dev_vectors,
                   lex_config=lex, log=log)
    ckpt_path = os.path.join(args.output, "model.ckpt")
    ckpt.save_checkpoint(ckpt_path, result.model, extra={
        "train_config": asdict(result.model.config) | asdict(config),
        "best_epoch": result.best_epoch,
        "best_metric": result.best_metric,
        "selection_metric": result.selection_metric,
    })
    with open(log_path, "w", encoding="utf-8") as f:
        f.write("\n".join(log_lines) + ("\n" if log_lines else ""))
    _log(f"best {result.selection_metric}={result.best_metric:.4f} "
         f"at epoch {result.best_epoch}; checkpoint: {ckpt_path}")
    return 0


def _resolve_checkpoint(path: str) -> str:
    if os.path.isdir(path):
        return os.path.join(path, "model.ckpt")
    if not os.path.exists(path) and not os.path.isabs(path):
        model_dir = os.environ.get("DEPGRAPH_MODEL_DIR")
        if model_dir:
            candidate = os.path.join(model_dir, path)
            if os.path.exists(candidate):
                return candidate
    return path


def cmd_parse(args) -> int:
    model, extra = ckpt.load_checkpoint(_resolve_checkpoint(args.checkpoint))
    expected = "tree" if args.mode == "basic" else "graph"
    if model.config.structure != expected:
        _log(f"error: checkpoint is a {model.config.structure} model "
             f"but --mode {args.mode} requires {expected}")
        return 2
    sents = read_conllu_file(args.input)
    vectors = None
    if args.vectors:
        vectors, _ = read_vector_file(args.vectors)
    lex = LexRuleConfig.load(args.lex_rules) if args.lex_rules else LexRuleConfig()
    parsed = parse_sentences(model, sents, vectors=vectors, lex_config=lex,
                             single_root=not args.multi_root,
                             tag=args.tags)
    write_conllu_file(parsed, args.output)
    _log(f"parsed {len(parsed)} sentences -> {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    gold = read_conllu_file(args.gold)
    system = read_conllu_file(args.system)
    try:
        report = evaluate(gold, system, mode=args.mode)
    except AlignmentError as exc:
        _log(f"alignment error: {exc}")
        return 2
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.table())
    return 0


def cmd_gradcheck(args) -> int:
    ok, entries = run_gradcheck(seed=args.seed,
                                instances_per_cell=args.instances,
                                tolerance=args.tolerance)
    for key, err in sorted(worst_by_param(entries).items()):
        print(f"{key:<48} max_rel_err={err:.3e}")
    print(f"gradcheck: {'PASS' if ok else 'FAIL'} (tolerance {args.tolerance:g})")
    return 0 if ok else 1


def cmd_export_scores(args) -> int:
    model, _ = ckpt.load_checkpoint(_resolve_checkpoint(args.checkpoint))
    sents = read_conllu_file(args.input)
    vectors = None
    if args.vectors:
        vectors, _ = read_vector_file(args.vectors)
    d = os.path.dirname(os.path.abspath(args.output))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(SCORE_MAGIC)
            f.write(struct.pack("<I", SCORE_VERSION))
            for i, sent in enumerate(sents):
                vec = vectors[i] if vectors is not None else None
                arc, label = model.score_sentence(sent, vec)
                n = len(sent)
                f.write(struct.pack("<II", n, arc.k if arc is not None else 0))
                if arc is not None:
                    f.write(arc.scores.astype("<f4").tobytes(order="C"))
                f.write(struct.pack("<I", label.k))
                f.write(label.scores.astype("<f4").tobytes(order="C"))
        os.replace(tmp, args.output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    _log(f"wrote score tensors for {len(sents)} sentences -> {args.output}")
    return 0


def read_score_file(path: str) -> list[tuple[np.ndarray | None, np.ndarray]]:
    """Read a score dump; returns (arc, label) arrays per sentence."""
    out = []
    with open(path, "rb") as f:
        if f.read(8) != SCORE_MAGIC:
            raise ValueError(f"{path}: not a score dump")
        (version,) = struct.unpack("<I", f.read(4))
        if version != SCORE_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        while True:
            raw = f.read(8)
            if not raw:
                break
            n, arc_k = struct.unpack("<II", raw)
            arc = None
            if arc_k:
                arc = np.frombuffer(f.read(4 * (n + 1) * n * arc_k),
                                    dtype="<f4").reshape(n + 1, n, arc_k)
            (label_k,) = struct.unpack("<I", f.read(4))
            label = np.frombuffer(f.read(4 * (n + 1) * n * label_k),
                                  dtype="<f4").reshape(n + 1, n, label_k)
            out.append((arc, label))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depgraph",
        description="Graph-based dependency parser for basic and enhanced "
                    "Universal Dependencies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a parser")
    p.add_argument("--config", help="JSON training configuration file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (JSON-encoded value)")
    p.add_argument("--train", required=True, help="training CoNLL-U file")
    p.add_argument("--dev", required=True, help="development CoNLL-U file")
    p.add_argument("--vectors", help="contextual vectors for the training file")
    p.add_argument("--dev-vectors", help="contextual vectors for the dev file")
    p.add_argument("--lex-rules", help="lexicalization rule config (JSON)")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse a CoNLL-U file with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("basic", "enhanced"), default="basic")
    p.add_argument("--vectors", help="contextual vectors for the input file")
    p.add_argument("--lex-rules", help="lexicalization rule config (JSON)")
    p.add_argument("--tags", action="store_true",
                   help="also write predicted UPOS/FEATS (multitask models)")
    p.add_argument("--multi-root", action="store_true",
                   help="allow multiple root attachments in tree decoding")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("evaluate", help="score system output against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--system", required=True)
    p.add_argument("--mode", choices=("basic", "enhanced", "all"), default="basic")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient validation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20,
                   help="random instances per architecture cell")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("export-scores", help="dump raw score tensors")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--vectors")
    p.set_defaults(func=cmd_export_scores)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConlluError, FileNotFoundError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
