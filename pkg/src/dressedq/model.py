"""The dressed quantum network: pre-net -> angle embedding -> circuit -> post-net.

Either linear layer may be a plain :class:`LinearLayer` or a
:class:`LoraAdapter` wrapping one. Gradients are keyed by dotted parameter
names (``"pre_net.weights"``, ``"post_net.A"``, ``"qparams"``...) and mirror
the shapes returned by :meth:`DressedModel.parameters`.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from . import qlayer
from .classical import LinearLayer, linear_backward, linear_forward, softmax_cross_entropy
from .errors import ShapeError
from .lora import LoraAdapter, dropout_mask, lora_backward, lora_forward, lora_input_grad
from .qlayer import CircuitParams, QuantumLayerConfig

Layer = Union[LinearLayer, LoraAdapter]
Masks = Dict[str, Optional[np.ndarray]]

CHECKPOINT_FORMAT = "dressedq-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class DressedModel:
    pre_net: Layer
    qconfig: QuantumLayerConfig
    qparams: CircuitParams
    post_net: Layer
    seed: Optional[int] = None
    class_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.qparams.check(self.qconfig)
        n = self.qconfig.n_qubits
        if self.pre_net.out_dim != n or self.post_net.in_dim != n:
            raise ShapeError(
                f"dimension chain {self.pre_net.in_dim} -> {self.pre_net.out_dim} | "
                f"{n} qubits | {self.post_net.in_dim} -> {self.post_net.out_dim} is inconsistent"
            )
        if self.class_names and len(self.class_names) != self.n_classes:
            raise ShapeError(f"{len(self.class_names)} class names for {self.n_classes} outputs")

    @classmethod
    def init(
        cls,
        in_dim: int,
        n_classes: int,
        qconfig: Optional[QuantumLayerConfig] = None,
        seed: int = 0,
        class_names: Optional[List[str]] = None,
    ) -> "DressedModel":
        qconfig = qconfig or QuantumLayerConfig()
        rng = np.random.default_rng(seed)
        pre = LinearLayer.init(in_dim, qconfig.n_qubits, rng)
        qparams = qlayer.init_params(qconfig, rng)
        post = LinearLayer.init(qconfig.n_qubits, n_classes, rng)
        return cls(pre, qconfig, qparams, post, seed, list(class_names or []))

    @property
    def in_dim(self) -> int:
        return self.pre_net.in_dim

    @property
    def n_classes(self) -> int:
        return self.post_net.out_dim

    @property
    def uses_lora(self) -> bool:
        return isinstance(self.pre_net, LoraAdapter) or isinstance(self.post_net, LoraAdapter)

    def dimension_chain(self) -> str:
        return f"{self.in_dim} -> {self.qconfig.n_qubits} qubits (depth {self.qconfig.depth}) -> {self.n_classes}"

    def with_lora(self, rank: int = 8, alpha: float = 16.0, dropout_p: float = 0.6, seed: int = 0) -> "DressedModel":
        """Copy of the model with both linear layers wrapped in fresh adapters."""
        rng = np.random.default_rng([seed, 1])
        out = copy.deepcopy(self)
        out.pre_net = LoraAdapter.wrap(_base(out.pre_net), rng, rank, alpha, dropout_p)
        out.post_net = LoraAdapter.wrap(_base(out.post_net), rng, rank, alpha, dropout_p)
        return out

    def set_training(self, training: bool) -> None:
        for layer in (self.pre_net, self.post_net):
            if isinstance(layer, LoraAdapter):
                layer.training = training

    def parameters(self) -> Dict[str, np.ndarray]:
        """Trainable arrays by name. Frozen base weights of adapters are excluded."""
        params = {}
        for name in ("pre_net", "post_net"):
            layer = getattr(self, name)
            if isinstance(layer, LoraAdapter):
                params[f"{name}.A"] = layer.A
                params[f"{name}.B"] = layer.B
            else:
                params[f"{name}.weights"] = layer.weights
                if layer.bias is not None:
                    params[f"{name}.bias"] = layer.bias
            if name == "pre_net":
                params["qparams"] = self.qparams.angles
        return params

    def all_arrays(self) -> Dict[str, np.ndarray]:
        """Every array in the model, trainable or frozen."""
        arrays = dict(self.parameters())
        for name in ("pre_net", "post_net"):
            layer = getattr(self, name)
            base = _base(layer)
            arrays[f"{name}.weights"] = base.weights
            if base.bias is not None:
                arrays[f"{name}.bias"] = base.bias
        return arrays

    def checksum(self) -> str:
        h = hashlib.sha256()
        for name, arr in sorted(self.all_arrays().items()):
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()


def _base(layer: Layer) -> LinearLayer:
    return layer.base if isinstance(layer, LoraAdapter) else layer


def draw_masks(model: DressedModel, rng: np.random.Generator) -> Masks:
    masks = {}
    for name in ("pre_net", "post_net"):
        layer = getattr(model, name)
        masks[name] = dropout_mask(layer, rng) if isinstance(layer, LoraAdapter) else None
    return masks


def _layer_forward(layer, x, mask):
    if isinstance(layer, LoraAdapter):
        if not layer.uses_dropout:
            mask = None
        return lora_forward(layer, x, mask=mask)
    return linear_forward(layer, x)


def _check_features(model, features):
    x = np.asarray(features, dtype=float)
    if x.shape != (model.in_dim,):
        raise ShapeError(f"model expects {model.in_dim} features ({model.dimension_chain()}), got shape {x.shape}")
    return x


def model_forward(model: DressedModel, features, masks: Optional[Masks] = None) -> np.ndarray:
    """Raw logits; softmax is applied inside the loss.

    Adapters in training mode need ``masks`` (see :func:`draw_masks`).
    """
    masks = masks or {}
    x = _check_features(model, features)
    z = _layer_forward(model.pre_net, x, masks.get("pre_net"))
    h = qlayer.quantum_forward(model.qconfig, model.qparams, qlayer.embed_angles(z))
    return _layer_forward(model.post_net, h, masks.get("post_net"))


def predict(model: DressedModel, features: np.ndarray) -> np.ndarray:
    """Evaluation-mode logits for a batch of rows, shape (N, C)."""
    training = [getattr(layer, "training", False) for layer in (model.pre_net, model.post_net)]
    model.set_training(False)
    try:
        return np.array([model_forward(model, row) for row in np.asarray(features, dtype=float)]).reshape(
            -1, model.n_classes
        )
    finally:
        for layer, flag in zip((model.pre_net, model.post_net), training):
            if isinstance(layer, LoraAdapter):
                layer.training = flag


def _layer_backward(name, layer, x, grad_out, mask, grads):
    if isinstance(layer, LoraAdapter):
        if not layer.uses_dropout:
            mask = None
        grads[f"{name}.A"], grads[f"{name}.B"] = lora_backward(layer, x, grad_out, mask)
        return lora_input_grad(layer, grad_out, mask)
    gw, gb, gx = linear_backward(layer, x, grad_out)
    grads[f"{name}.weights"] = gw
    if gb is not None:
        grads[f"{name}.bias"] = gb
    return gx


def backward(model: DressedModel, features, true_class: int, masks: Optional[Masks] = None):
    """Loss and gradients for one sample.

    Returns ``(loss, grads)`` with ``grads`` keyed like :meth:`DressedModel.parameters`.
    The circuit is differentiated by parameter shift for both its trainable angles
    and its input angles.
    """
    masks = masks or {}
    x = _check_features(model, features)
    z = _layer_forward(model.pre_net, x, masks.get("pre_net"))
    if not np.all(np.isfinite(z)):
        return float("nan"), {k: np.full(p.shape, np.nan) for k, p in model.parameters().items()}
    t = np.tanh(z)
    angles = t * (math.pi / 2)
    h, jac_params, jac_inputs = qlayer.forward_and_grad(model.qconfig, model.qparams, angles)
    logits = _layer_forward(model.post_net, h, masks.get("post_net"))
    loss, grad_logits = softmax_cross_entropy(logits, true_class)

    grads: Dict[str, np.ndarray] = {}
    grad_h = _layer_backward("post_net", model.post_net, h, grad_logits, masks.get("post_net"), grads)
    grads["qparams"] = np.einsum("k,klq->lq", grad_h, jac_params)
    grad_angles = grad_h @ jac_inputs
    grad_z = grad_angles * (math.pi / 2) * (1.0 - t**2)
    _layer_backward("pre_net", model.pre_net, x, grad_z, masks.get("pre_net"), grads)
    return loss, grads


def batch_loss_and_grad(model: DressedModel, features, labels, masks_list: Optional[List[Masks]] = None):
    """Mean loss and mean gradients over a batch of rows."""
    features = np.asarray(features, dtype=float)
    total = 0.0
    acc: Dict[str, np.ndarray] = {}
    for i, (row, label) in enumerate(zip(features, labels)):
        masks = masks_list[i] if masks_list is not None else None
        loss, grads = backward(model, row, int(label), masks)
        total += loss
        for key, g in grads.items():
            acc[key] = acc[key] + g if key in acc else g
    n = len(features)
    return total / n, {key: g / n for key, g in acc.items()}


# -- checkpoint --------------------------------------------------------------


def _layer_to_dict(layer: Layer) -> dict:
    base = _base(layer)
    doc = {
        "in_dim": base.in_dim,
        "out_dim": base.out_dim,
        "weights": base.weights.tolist(),
        "bias": None if base.bias is None else base.bias.tolist(),
        "lora": None,
    }
    if isinstance(layer, LoraAdapter):
        doc["lora"] = {
            "rank": layer.rank,
            "alpha": layer.alpha,
            "dropout_p": layer.dropout_p,
            "A": layer.A.tolist(),
            "B": layer.B.tolist(),
        }
    return doc


def _layer_from_dict(doc: dict) -> Layer:
    weights = np.array(doc["weights"], dtype=float).reshape(doc["out_dim"], doc["in_dim"])
    bias = None if doc["bias"] is None else np.array(doc["bias"], dtype=float)
    base = LinearLayer(weights, bias)
    lo = doc.get("lora")
    if lo is None:
        return base
    A = np.array(lo["A"], dtype=float).reshape(base.out_dim, lo["rank"])
    B = np.array(lo["B"], dtype=float).reshape(lo["rank"], base.in_dim)
    return LoraAdapter(base, A, B, lo["rank"], lo["alpha"], lo["dropout_p"], training=False)


def to_checkpoint(model: DressedModel) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "seed": model.seed,
        "dims": {
            "in_dim": model.in_dim,
            "n_qubits": model.qconfig.n_qubits,
            "depth": model.qconfig.depth,
            "n_classes": model.n_classes,
        },
        "class_names": list(model.class_names),
        "pre_net": _layer_to_dict(model.pre_net),
        "qparams": model.qparams.angles.tolist(),
        "post_net": _layer_to_dict(model.post_net),
    }


def from_checkpoint(doc: dict) -> DressedModel:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} document")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    dims = doc["dims"]
    qconfig = QuantumLayerConfig(dims["n_qubits"], dims["depth"])
    angles = np.array(doc["qparams"], dtype=float).reshape(dims["depth"], dims["n_qubits"])
    return DressedModel(
        _layer_from_dict(doc["pre_net"]),
        qconfig,
        CircuitParams(angles),
        _layer_from_dict(doc["post_net"]),
        doc.get("seed"),
        list(doc.get("class_names", [])),
    )


def save_checkpoint(model: DressedModel, path) -> None:
    Path(path).write_text(json.dumps(to_checkpoint(model), indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path) -> DressedModel:
    return from_checkpoint(json.loads(Path(path).read_text(encoding="utf-8")))
