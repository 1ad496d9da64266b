"""Affine layers, softmax and cross-entropy with hand-written gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ShapeError


@dataclass
class LinearLayer:
    """``y = W x + b``; ``weights`` has shape (out_dim, in_dim)."""

    weights: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=float)
            if self.bias.shape != (self.out_dim,):
                raise ShapeError(f"bias shape {self.bias.shape} != ({self.out_dim},)")
        if not np.all(np.isfinite(self.weights)) or (
            self.bias is not None and not np.all(np.isfinite(self.bias))
        ):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True) -> "LinearLayer":
        """Fan-in uniform init in ``[-1/sqrt(in_dim), 1/sqrt(in_dim)]``."""
        bound = 1.0 / math.sqrt(in_dim)
        w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        b = rng.uniform(-bound, bound, size=out_dim) if bias else None
        return cls(w, b)


def linear_forward(layer: LinearLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (layer.in_dim,):
        raise ShapeError(f"layer expects {layer.in_dim} inputs, got shape {x.shape}")
    y = x @ layer.weights.T
    if layer.bias is not None:
        y = y + layer.bias
    return y


def linear_backward(layer: LinearLayer, x, grad_out) -> Tuple[np.ndarray, Optional[np.ndarray], np.ndarray]:
    """Gradients w.r.t. weights, bias (None if absent) and the input."""
    x = np.asarray(x, dtype=float)
    grad_out = np.asarray(grad_out, dtype=float)
    grad_w = np.outer(grad_out, x)
    grad_b = grad_out.copy() if layer.bias is not None else None
    return grad_w, grad_b, layer.weights.T @ grad_out


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits, true_class: int) -> Tuple[float, np.ndarray]:
    """Return ``(-log softmax(logits)[true_class], softmax(logits) - onehot)``.

    Non-finite logits give a NaN loss and NaN gradient rather than an error,
    so callers can treat them as divergence.
    """
    z = np.asarray(logits, dtype=float)
    if not 0 <= true_class < z.shape[-1]:
        raise ValueError(f"class {true_class} out of range for {z.shape[-1]} logits")
    if not np.all(np.isfinite(z)):
        return float("nan"), np.full(z.shape, np.nan)
    loss = -float(log_softmax(z)[true_class])
    grad = softmax(z)
    grad[true_class] -= 1.0
    return max(loss, 0.0), grad
