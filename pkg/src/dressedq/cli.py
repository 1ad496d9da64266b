"""Command-line entry point: ``dressedq train`` and ``dressedq eval``.

Exit codes: 0 success, 1 data or runtime error, 2 usage error, 3 divergence.

``train`` writes into ``--out``:

* ``metrics.csv``      ``epoch,phase,accuracy,loss,mae``, one train and one
                       validation row per epoch
* ``confusion.json``   ``{"class_names": [...], "train": CxC, "validation": CxC}``
                       indexed ``[true][predicted]``
* ``checkpoint.json``  the trained model (see :mod:`dressedq.model`)
* ``train.csv`` / ``validation.csv``  the exact rows used, as embedding-csv
* ``manifest.json``    resolved configuration, input digest and timings;
                       ``train --manifest manifest.json`` replays the run
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .dataio import FORMATS, BatchPlan, SplitSpec, hash_featurize, load_dataset, split_dataset
from .errors import DivergenceError
from .model import DressedModel, load_checkpoint, save_checkpoint
from .qlayer import QuantumLayerConfig
from .smote import LabeledDataset
from .trainer import TrainConfig, confusion_document, confusion_matrix, evaluate, fit, metrics_csv

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

# manifest "config" keys that may be replayed
REPLAY_KEYS = (
    "data", "format", "hash_dim", "n_qubits", "depth", "epochs", "lr", "optimizer", "batch_size",
    "seed", "smote", "smote_k", "lora", "lora_r", "lora_alpha", "lora_dropout", "train_fraction",
)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative integer, got {value}")
    return value


def _non_negative_float(text):
    value = float(text)
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a finite non-negative number, got {text}")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {text}")
    return value


def _dropout(text):
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1), got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dressedq", description="Hybrid quantum-classical text classifier.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train a dressed quantum network")
    tr.add_argument("--manifest", help="replay the configuration recorded in a previous run's manifest.json")
    tr.add_argument("--data", help="dataset file")
    tr.add_argument("--format", choices=FORMATS, default="embedding-csv")
    tr.add_argument("--hash-dim", type=_positive_int, default=768, help="feature width for raw-text-csv")
    tr.add_argument("--n-qubits", type=_positive_int, default=4)
    tr.add_argument("--depth", type=_non_negative_int, default=4)
    tr.add_argument("--epochs", type=_positive_int, default=10)
    tr.add_argument("--lr", type=_non_negative_float, default=None, help="default 0.05 (sgd) / 0.001 (adam)")
    tr.add_argument("--optimizer", choices=("sgd", "adam"), default="sgd")
    tr.add_argument("--batch-size", type=_positive_int, default=1)
    tr.add_argument("--seed", type=_non_negative_int, default=0)
    tr.add_argument("--smote", action=argparse.BooleanOptionalAction, default=False)
    tr.add_argument("--smote-k", type=_positive_int, default=5)
    tr.add_argument("--lora", action=argparse.BooleanOptionalAction, default=False)
    tr.add_argument("--lora-r", type=_positive_int, default=8)
    tr.add_argument("--lora-alpha", type=float, default=16.0)
    tr.add_argument("--lora-dropout", type=_dropout, default=0.6)
    tr.add_argument("--train-fraction", type=_fraction, default=0.8)
    tr.add_argument("--out", default="runs/latest", help="output directory")

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--format", choices=FORMATS, default="embedding-csv")
    ev.add_argument("--hash-dim", type=_positive_int, default=768)
    ev.add_argument("--out", help="directory for eval_metrics.json and eval_confusion.json")
    return parser


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_labeled(path, fmt, hash_dim, class_names=None) -> LabeledDataset:
    loaded = load_dataset(path, fmt, class_names)
    if fmt == "raw-text-csv":
        return hash_featurize(loaded, hash_dim, class_names)
    return loaded


def write_embedding_csv(ds: LabeledDataset, path) -> None:
    names = ds.class_names or [str(c) for c in range(ds.n_classes)]
    lines = ["label," + ",".join(f"f{j}" for j in range(ds.n_features))]
    for row, label in zip(ds.features, ds.labels):
        lines.append(names[label] + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _resolved_config(args) -> dict:
    return {
        "data": str(Path(args.data).resolve()),
        "format": args.format,
        "hash_dim": args.hash_dim,
        "n_qubits": args.n_qubits,
        "depth": args.depth,
        "epochs": args.epochs,
        "lr": TrainConfig(optimizer=args.optimizer, learning_rate=args.lr).lr,
        "optimizer": args.optimizer,
        "batch_size": args.batch_size,
        "seed": args.seed,
        "smote": args.smote,
        "smote_k": args.smote_k,
        "lora": args.lora,
        "lora_r": args.lora_r,
        "lora_alpha": args.lora_alpha,
        "lora_dropout": args.lora_dropout,
        "train_fraction": args.train_fraction,
        "stratified": True,
    }


def _apply_manifest(args, parser) -> Optional[str]:
    """Overwrite ``args`` from a manifest; returns the recorded data digest."""
    doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    config = doc.get("config")
    if not isinstance(config, dict):
        parser.error(f"{args.manifest} has no 'config' section")
    for key in REPLAY_KEYS:
        if key in config:
            setattr(args, key, config[key])
    if args.out == parser.get_default("out") and "artifacts" in doc:
        args.out = doc["artifacts"].get("out", args.out)
    return doc.get("inputs", {}).get("data", {}).get("sha256")


def cmd_train(args, parser) -> int:
    started = time.perf_counter()
    expected_digest = None
    if args.manifest:
        try:
            expected_digest = _apply_manifest(args, parser)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_DATA
    if not args.data:
        parser.error("train needs --data (or --manifest)")
    try:
        cfg = TrainConfig(
            epochs=args.epochs,
            learning_rate=args.lr,
            optimizer=args.optimizer,
            seed=args.seed,
            use_lora=args.lora,
            use_smote=args.smote,
            lora_rank=args.lora_r,
            lora_alpha=args.lora_alpha,
            lora_dropout=args.lora_dropout,
            smote_k=args.smote_k,
        )
        qconfig = QuantumLayerConfig(args.n_qubits, args.depth)
        split = SplitSpec(args.train_fraction, True, args.seed)
    except ValueError as exc:
        parser.error(str(exc))

    out = Path(args.out)
    try:
        digest = file_sha256(args.data)
        if expected_digest is not None and digest != expected_digest:
            print(f"error: {args.data} does not match the manifest digest", file=sys.stderr)
            return EXIT_DATA
        t0 = time.perf_counter()
        ds = read_labeled(args.data, args.format, args.hash_dim)
        train_ds, val_ds = split_dataset(ds, split)
        load_seconds = time.perf_counter() - t0
        model = DressedModel.init(ds.n_features, ds.n_classes, qconfig, seed=args.seed, class_names=ds.class_names)

        def log(tr, va):
            print(
                f"epoch {tr.epoch}/{cfg.epochs}  train acc={tr.accuracy:.4f} loss={tr.loss:.4f} mae={tr.mae:.4f}"
                f"  |  val acc={va.accuracy:.4f} loss={va.loss:.4f} mae={va.mae:.4f}",
                flush=True,
            )

        t0 = time.perf_counter()
        result = fit(model, BatchPlan(train_ds, args.batch_size, args.seed), val_ds, cfg, log=log)
        fit_seconds = time.perf_counter() - t0
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    out.mkdir(parents=True, exist_ok=True)
    artifacts = {
        "out": str(out.resolve()),
        "metrics": "metrics.csv",
        "confusion": "confusion.json",
        "checkpoint": "checkpoint.json",
        "train_split": "train.csv",
        "validation_split": "validation.csv",
    }
    (out / "metrics.csv").write_text(metrics_csv(result.history), encoding="utf-8")
    (out / "confusion.json").write_text(
        json.dumps(confusion_document(result.confusion, ds.class_names), indent=1) + "\n", encoding="utf-8"
    )
    save_checkpoint(result.model, out / "checkpoint.json")
    write_embedding_csv(result.train_data, out / "train.csv")
    write_embedding_csv(val_ds, out / "validation.csv")
    manifest = {
        "tool": "dressedq",
        "version": __version__,
        "command": "train",
        "config": _resolved_config(args),
        "inputs": {"data": {"path": str(Path(args.data).resolve()), "sha256": digest}},
        "seed": args.seed,
        "artifacts": artifacts,
        "sizes": {"train": len(result.train_data), "validation": len(val_ds), "features": ds.n_features},
        "class_names": ds.class_names,
        "timings": {
            "load_seconds": load_seconds,
            "fit_seconds": fit_seconds,
            "total_seconds": time.perf_counter() - started,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(args, parser) -> int:
    try:
        model = load_checkpoint(args.checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load checkpoint {args.checkpoint}: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        ds = read_labeled(args.data, args.format, args.hash_dim, model.class_names or None)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if ds.n_features != model.in_dim or ds.n_classes > model.n_classes:
        print(
            f"error: incompatible dimensions: data is {ds.n_features} features -> {ds.n_classes} classes, "
            f"model is {model.dimension_chain()}",
            file=sys.stderr,
        )
        return EXIT_DATA
    if len(ds) == 0:
        print(f"error: {args.data} has no rows", file=sys.stderr)
        return EXIT_DATA
    record, preds = evaluate(model, ds, epoch=0, phase="eval")
    cm = confusion_matrix(preds, ds.labels, model.n_classes)
    print(f"accuracy={record.accuracy!r} loss={record.loss!r} mae={record.mae!r} n={len(ds)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        metrics = {"accuracy": record.accuracy, "loss": record.loss, "mae": record.mae, "n": len(ds)}
        (out / "eval_metrics.json").write_text(json.dumps(metrics, indent=1) + "\n", encoding="utf-8")
        doc = confusion_document({"eval": cm}, model.class_names or [str(c) for c in range(model.n_classes)])
        (out / "eval_confusion.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    else:
        print(json.dumps(np.asarray(cm).tolist()))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        if args.command == "train":
            return cmd_train(args, sub)
        return cmd_eval(args, sub)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
