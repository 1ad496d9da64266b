"""Dataset files, hashed bag-of-words features, label encoding, splits and batches.

Supported file formats
----------------------
``embedding-csv``
    UTF-8 CSV with header ``label,f0,f1,...,f{d-1}``; one sample per row.
``jsonl``
    One JSON object per line: ``{"label": "<name>", "features": [d numbers]}``.
``raw-text-csv``
    CSV with columns ``tweet_id,content,sentiment``. ``tweet_id`` (and any
    other extra column) is ignored; rows become :class:`RawRecord` values to
    be featurized with :func:`hash_featurize`.
"""
from __future__ import annotations

import csv
import json
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DataError
from .smote import LabeledDataset

FORMATS = ("embedding-csv", "jsonl", "raw-text-csv")

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1
_TOKEN_RE = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class RawRecord:
    content: str
    sentiment: str

    def __post_init__(self):
        if not self.content.strip():
            raise ValueError("content is empty")
        if not self.sentiment.strip():
            raise ValueError("sentiment is empty")


def encode_labels(names: Sequence[str]) -> Tuple[np.ndarray, List[str]]:
    """Map class names to ``0..C-1`` by their sorted order."""
    class_names = sorted(set(names))
    index = {name: i for i, name in enumerate(class_names)}
    return np.array([index[n] for n in names], dtype=np.int64), class_names


def _apply_labels(names, lines, class_names):
    if class_names is None:
        return encode_labels(names)
    index = {name: i for i, name in enumerate(class_names)}
    labels = []
    for name, line in zip(names, lines):
        if name not in index:
            raise DataError(f"unknown class {name!r} (known: {', '.join(class_names)})", line)
        labels.append(index[name])
    return np.array(labels, dtype=np.int64), list(class_names)


def _parse_float(text, line):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"feature value {text!r} is not a number", line) from None
    if not math.isfinite(value):
        raise DataError(f"feature value {text!r} is not finite", line)
    return value


def _read_embedding_csv(path):
    names, rows, lines = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "label" or len(header) < 2:
            raise DataError("header must be 'label,f0,...,f{d-1}'", 1)
        d = len(header) - 1
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != d + 1:
                raise DataError(f"expected {d} features, got {len(row) - 1}", line)
            label = row[0].strip()
            if not label:
                raise DataError("missing label", line)
            names.append(label)
            rows.append([_parse_float(cell, line) for cell in row[1:]])
            lines.append(line)
    return names, np.array(rows, dtype=float).reshape(len(rows), d), lines


def _read_jsonl(path):
    names, rows, lines = [], [], []
    d = None
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", line) from None
            if not isinstance(obj, dict):
                raise DataError("expected a JSON object", line)
            label = obj.get("label")
            if not isinstance(label, str) or not label.strip():
                raise DataError("missing or non-string 'label'", line)
            feats = obj.get("features")
            if not isinstance(feats, list) or not feats:
                raise DataError("missing or empty 'features' array", line)
            if d is None:
                d = len(feats)
            elif len(feats) != d:
                raise DataError(f"expected {d} features, got {len(feats)}", line)
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in feats):
                raise DataError("'features' must contain only numbers", line)
            row = [float(v) for v in feats]
            if not all(math.isfinite(v) for v in row):
                raise DataError("feature values must be finite", line)
            names.append(label.strip())
            rows.append(row)
            lines.append(line)
    return names, np.array(rows, dtype=float).reshape(len(rows), d or 0), lines


def _read_raw_text_csv(path):
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"content", "sentiment"} - set(reader.fieldnames or [])
        if missing:
            raise DataError(f"missing column(s): {', '.join(sorted(missing))}", 1)
        for row in reader:
            line = reader.line_num
            content = (row.get("content") or "").strip()
            sentiment = (row.get("sentiment") or "").strip()
            if not sentiment:
                raise DataError("missing sentiment label", line)
            if not content:
                raise DataError("empty content", line)
            records.append(RawRecord(content, sentiment))
    return records


def load_dataset(
    path, format: str = "embedding-csv", class_names: Optional[Sequence[str]] = None
) -> Union[LabeledDataset, List[RawRecord]]:
    """Read a dataset file.

    Embedding formats return a :class:`LabeledDataset`; ``raw-text-csv``
    returns a list of :class:`RawRecord`. Pass ``class_names`` to encode
    labels against a fixed class list (e.g. one stored in a checkpoint)
    instead of the names found in the file.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {', '.join(FORMATS)}")
    path = Path(path)
    try:
        if format == "raw-text-csv":
            return _read_raw_text_csv(path)
        reader = _read_embedding_csv if format == "embedding-csv" else _read_jsonl
        names, features, lines = reader(path)
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    labels, names_out = _apply_labels(names, lines, class_names)
    return LabeledDataset(features, labels, names_out)


def fnv1a64(data: bytes, basis: int = FNV64_OFFSET) -> int:
    h = basis
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def tokenize(text: str) -> List[str]:
    return [tok for tok in _TOKEN_RE.split(text.lower()) if tok]


def hash_vector(text: str, dim: int = 768) -> np.ndarray:
    """Signed hashed bag of words, scaled to unit norm.

    Bucket = FNV-1a-64(token) mod ``dim``; sign = +1 if FNV-1a-64 of the token
    prefixed by a 0x01 byte is even, otherwise -1.
    """
    vec = np.zeros(dim)
    for tok in tokenize(text):
        raw = tok.encode("utf-8")
        bucket = fnv1a64(raw) % dim
        sign = 1.0 if fnv1a64(b"\x01" + raw) % 2 == 0 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def hash_featurize(
    records: Sequence[RawRecord], dim: int = 768, class_names: Optional[Sequence[str]] = None
) -> LabeledDataset:
    if dim < 8:
        raise ValueError(f"dim must be at least 8, got {dim}")
    if not records:
        raise ValueError("no records to featurize")
    features = np.stack([hash_vector(r.content, dim) for r in records])
    labels, names = _apply_labels([r.sentiment for r in records], [None] * len(records), class_names)
    return LabeledDataset(features, labels, names)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def _stratified_quota(counts, n_train):
    # largest-remainder allocation: every class gets floor or ceil of its share
    exact = counts * (n_train / counts.sum())
    quota = np.floor(exact).astype(np.int64)
    remainder = exact - quota
    order = np.lexsort((np.arange(len(counts)), -remainder))
    quota[order[: n_train - quota.sum()]] += 1
    return quota


def split_dataset(ds: LabeledDataset, spec: SplitSpec = SplitSpec()) -> Tuple[LabeledDataset, LabeledDataset]:
    """Seeded train/validation partition. Row order inside each split is shuffled."""
    n = len(ds)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    n_train = int(round(spec.train_fraction * n))
    if n >= 2:
        n_train = min(max(n_train, 1), n - 1)
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        perm = rng.permutation(n)
        return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))
    counts = np.bincount(ds.labels, minlength=ds.n_classes)
    quota = _stratified_quota(counts, n_train)
    train_rows, val_rows = [], []
    for c in range(len(counts)):
        members = np.flatnonzero(ds.labels == c)
        if len(members) == 0:
            continue
        members = members[rng.permutation(len(members))]
        train_rows.append(members[: quota[c]])
        val_rows.append(members[quota[c] :])
        if quota[c] == 0 or quota[c] == len(members):
            name = ds.class_names[c] if ds.class_names else str(c)
            side = "train" if quota[c] == 0 else "validation"
            warnings.warn(f"class {name!r} has no samples in the {side} split", stacklevel=2)
    train = np.sort(np.concatenate(train_rows))
    val = np.sort(np.concatenate(val_rows))
    return ds.subset(train), ds.subset(val)


class BatchPlan:
    """Mini-batches over a training set, reshuffled each epoch from ``(seed, epoch)``.

    Iterating the plan directly yields the epoch-0 batches.
    """

    def __init__(self, dataset: LabeledDataset, batch_size: int = 1, seed: int = 0, shuffle: bool = True):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if len(dataset) == 0:
            raise ValueError("cannot batch an empty dataset")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.shuffle = shuffle

    def __len__(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def order(self, epoch: int = 0) -> np.ndarray:
        n = len(self.dataset)
        if not self.shuffle:
            return np.arange(n)
        return np.random.default_rng([self.seed, epoch]).permutation(n)

    def batches(self, epoch: int = 0) -> List[np.ndarray]:
        """Row indices into ``self.dataset`` for each batch of ``epoch``."""
        order = self.order(epoch)
        return [order[i : i + self.batch_size] for i in range(0, len(order), self.batch_size)]

    def __iter__(self) -> Iterator[LabeledDataset]:
        return (self.dataset.subset(rows) for rows in self.batches(0))


def split_and_batch(
    ds: LabeledDataset, spec: SplitSpec = SplitSpec(), batch_size: int = 1, shuffle_seed: Optional[int] = None
) -> Tuple[BatchPlan, LabeledDataset]:
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    train, val = split_dataset(ds, spec)
    seed = spec.seed if shuffle_seed is None else shuffle_seed
    return BatchPlan(train, batch_size, seed), val
