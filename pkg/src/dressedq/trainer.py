"""Metrics, optimizers and the train/validate epoch loop."""
from __future__ import annotations

import copy
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classical import log_softmax
from .dataio import BatchPlan
from .errors import DivergenceError, ShapeError
from .model import DressedModel, batch_loss_and_grad, draw_masks, predict
from .smote import LabeledDataset, SmoteConfig, smote_balance

METRICS_HEADER = ("epoch", "phase", "accuracy", "loss", "mae")
DEFAULT_LR = {"sgd": 0.05, "adam": 0.001}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: Optional[float] = None
    optimizer: str = "sgd"
    seed: int = 0
    use_lora: bool = False
    use_smote: bool = False
    lora_rank: int = 8
    lora_alpha: float = 16.0
    lora_dropout: float = 0.6
    smote_k: int = 5

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.optimizer not in DEFAULT_LR:
            raise ValueError(f"optimizer must be one of {sorted(DEFAULT_LR)}, got {self.optimizer!r}")
        if self.learning_rate is not None and not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be a finite non-negative number, got {self.learning_rate}")

    @property
    def lr(self) -> float:
        return DEFAULT_LR[self.optimizer] if self.learning_rate is None else self.learning_rate


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    phase: str
    accuracy: float
    loss: float
    mae: float


@dataclass
class FitResult:
    model: DressedModel
    history: List[MetricsRecord]
    confusion: Dict[str, np.ndarray]
    validation_checksums: List[Tuple[str, str]] = field(default_factory=list)
    train_data: Optional[LabeledDataset] = None


def _check_pair(preds, labels):
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(f"prediction/label shapes differ: {preds.shape} vs {labels.shape}")
    if preds.size == 0:
        raise ValueError("no predictions to score")
    return preds, labels


def accuracy(preds, labels) -> float:
    preds, labels = _check_pair(preds, labels)
    return float(np.mean(preds == labels))


def mae(preds, labels) -> float:
    preds, labels = _check_pair(preds, labels)
    return float(np.mean(np.abs(preds - labels)))


def confusion_matrix(preds, labels, n_classes: int) -> np.ndarray:
    """Counts indexed ``[true, predicted]``."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise ValueError(f"prediction/label shapes differ: {preds.shape} vs {labels.shape}")
    for name, arr in (("prediction", preds), ("label", labels)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"{name} values must lie in [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def evaluate(model: DressedModel, ds: LabeledDataset, epoch: int = 0, phase: str = "validation"):
    """Score ``model`` on ``ds`` in evaluation mode. Returns ``(record, predictions)``."""
    if ds.n_features != model.in_dim:
        raise ShapeError(f"dataset has {ds.n_features} features but model is {model.dimension_chain()}")
    logits = predict(model, ds.features)
    logp = log_softmax(logits)
    loss = float(-np.mean(logp[np.arange(len(ds)), ds.labels]))
    preds = np.argmax(logits, axis=1)
    record = MetricsRecord(epoch, phase, accuracy(preds, ds.labels), max(loss, 0.0), mae(preds, ds.labels))
    return record, preds


class SGD:
    def __init__(self, lr: float = 0.05):
        self.lr = lr

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        for key, p in params.items():
            p -= self.lr * grads[key]


class Adam:
    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        for key, p in params.items():
            g = grads[key]
            m = self.m.get(key, np.zeros_like(p))
            v = self.v.get(key, np.zeros_like(p))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self.m[key], self.v[key] = m, v
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig):
    return SGD(cfg.lr) if cfg.optimizer == "sgd" else Adam(cfg.lr)


def fit(
    model: DressedModel,
    train: BatchPlan,
    validation: LabeledDataset,
    cfg: TrainConfig = TrainConfig(),
    log=None,
) -> FitResult:
    """Train for ``cfg.epochs`` epochs, each a training pass then a validation pass.

    The input model is not modified; the trained copy is returned. With
    ``cfg.use_lora`` both linear layers are wrapped in adapters (unless they
    already are) and only the adapters plus the circuit angles are updated.
    With ``cfg.use_smote`` the training set is balanced before the first epoch.

    Per-epoch train metrics are measured on the full training set in
    evaluation mode after that epoch's updates, so they can be reproduced from
    the returned model alone. ``log`` is called with each ``(train, val)``
    record pair.
    """
    if len(validation) == 0:
        raise ValueError("validation set is empty")
    for name, ds in (("train", train.dataset), ("validation", validation)):
        if ds.n_features != model.in_dim:
            raise ShapeError(f"{name} data has {ds.n_features} features but model is {model.dimension_chain()}")
        if len(ds) and ds.labels.max() >= model.n_classes:
            raise ShapeError(f"{name} labels exceed the model's {model.n_classes} classes")

    model = copy.deepcopy(model)
    if cfg.use_lora and not model.uses_lora:
        model = model.with_lora(cfg.lora_rank, cfg.lora_alpha, cfg.lora_dropout, seed=cfg.seed)
    if cfg.use_smote:
        balanced = smote_balance(train.dataset, SmoteConfig(cfg.smote_k, cfg.seed))
        train = BatchPlan(balanced, train.batch_size, train.seed, train.shuffle)
    data = train.dataset
    optimizer = make_optimizer(cfg)
    params = model.parameters()
    history: List[MetricsRecord] = []
    checksums = []
    confusion: Dict[str, np.ndarray] = {}

    for epoch in range(1, cfg.epochs + 1):
        model.set_training(True)
        for b, rows in enumerate(train.batches(epoch - 1)):
            masks = [draw_masks(model, np.random.default_rng([cfg.seed, epoch, int(r)])) for r in rows]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = batch_loss_and_grad(model, data.features[rows], data.labels[rows], masks)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, b, loss)
            optimizer.step(params, grads)
            if not all(np.all(np.isfinite(p)) for p in params.values()):
                raise DivergenceError(epoch, b, float("nan"))
        model.set_training(False)

        train_rec, train_preds = evaluate(model, data, epoch, "train")
        before = model.checksum()
        val_rec, val_preds = evaluate(model, validation, epoch, "validation")
        checksums.append((before, model.checksum()))
        history += [train_rec, val_rec]
        if log is not None:
            log(train_rec, val_rec)
        if epoch == cfg.epochs:
            confusion["train"] = confusion_matrix(train_preds, data.labels, model.n_classes)
            confusion["validation"] = confusion_matrix(val_preds, validation.labels, model.n_classes)

    return FitResult(model, history, confusion, checksums, data)


def format_float(x: float) -> str:
    return repr(float(x))


def metrics_csv(history: Sequence[MetricsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for r in history:
        writer.writerow([r.epoch, r.phase, format_float(r.accuracy), format_float(r.loss), format_float(r.mae)])
    return buf.getvalue()


def read_metrics_csv(text: str) -> List[MetricsRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != METRICS_HEADER:
        raise ValueError(f"metrics header must be {','.join(METRICS_HEADER)}")
    return [
        MetricsRecord(int(row["epoch"]), row["phase"], float(row["accuracy"]), float(row["loss"]), float(row["mae"]))
        for row in reader
    ]


def confusion_document(confusion: Dict[str, np.ndarray], class_names: Sequence[str]) -> dict:
    doc = {"class_names": list(class_names)}
    for phase, cm in confusion.items():
        doc[phase] = np.asarray(cm).tolist()
    return doc
