"""SMOTE oversampling up to the majority-class count."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .errors import InsufficientDataError, ShapeError


@dataclass
class LabeledDataset:
    """Feature matrix ``(N, d)`` with integer labels in ``[0, C)``."""

    features: np.ndarray
    labels: np.ndarray
    class_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError(f"{self.labels.shape[0]} labels for {self.features.shape[0]} rows")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.class_names:
            return len(self.class_names)
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(self.features[rows], self.labels[rows], list(self.class_names))


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


def class_counts(ds: LabeledDataset) -> np.ndarray:
    return np.bincount(ds.labels, minlength=ds.n_classes)


def knn_indices(features: np.ndarray, query_row: int, candidate_rows: Sequence[int], k: int) -> np.ndarray:
    """The ``k`` candidates closest to ``query_row`` (Euclidean); ties go to the lower row index."""
    candidates = np.asarray(candidate_rows, dtype=np.int64)
    if query_row in set(candidates.tolist()):
        raise ValueError("candidate rows must not contain the query row")
    if k < 1 or len(candidates) < k:
        raise InsufficientDataError(f"need {k} neighbour candidates, have {len(candidates)}")
    diff = features[candidates] - features[query_row]
    dist = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((candidates, dist))
    return candidates[order[:k]]


def smote_balance(ds: LabeledDataset, cfg: SmoteConfig = SmoteConfig()) -> LabeledDataset:
    """Append synthetic rows to every minority class until all classes match the majority.

    Original rows come first, unchanged and in order. Synthetic rows follow,
    grouped by class index. Each one is ``x + lam * (nn - x)`` for a random
    class member ``x``, one of its ``k`` nearest same-class neighbours ``nn``
    and ``lam ~ U[0, 1)``. Each class draws from its own generator seeded by
    ``(cfg.seed, class)`` so the output does not depend on processing order.
    """
    counts = class_counts(ds)
    target = int(counts.max()) if len(counts) else 0
    new_x, new_y = [ds.features], [ds.labels]
    for c, count in enumerate(counts):
        need = target - int(count)
        if need == 0:
            continue
        members = np.flatnonzero(ds.labels == c)
        if len(members) < 2:
            name = ds.class_names[c] if ds.class_names else str(c)
            raise InsufficientDataError(f"class {name!r} has {len(members)} samples; SMOTE needs at least 2")
        k = min(cfg.k_neighbors, len(members) - 1)
        neighbours = np.stack(
            [knn_indices(ds.features, int(i), members[members != i], k) for i in members]
        )
        rng = np.random.default_rng([cfg.seed, c])
        src = rng.integers(len(members), size=need)
        pick = rng.integers(k, size=need)
        lam = rng.random(need)[:, None]
        base = ds.features[members[src]]
        nn = ds.features[neighbours[src, pick]]
        new_x.append(base + lam * (nn - base))
        new_y.append(np.full(need, c, dtype=np.int64))
    return LabeledDataset(np.concatenate(new_x), np.concatenate(new_y), list(ds.class_names))
