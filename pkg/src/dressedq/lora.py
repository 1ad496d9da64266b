"""Low-rank adapters around a frozen :class:`~dressedq.classical.LinearLayer`.

The adapted map is ``W x + b + (alpha / rank) * A @ (B @ dropout(x))`` where
``A`` has shape (out_dim, rank) and ``B`` has shape (rank, in_dim). Dropout
only touches the adapter path and uses inverted scaling ``x / (1 - p)``, so the
base path is exactly the frozen layer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .classical import LinearLayer, linear_forward
from .errors import ShapeError, UsageError


@dataclass
class LoraAdapter:
    base: LinearLayer
    A: np.ndarray
    B: np.ndarray
    rank: int
    alpha: float
    dropout_p: float = 0.0
    training: bool = True

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.rank < 1:
            raise ValueError(f"rank must be positive, got {self.rank}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.A.shape != (self.base.out_dim, self.rank) or self.B.shape != (self.rank, self.base.in_dim):
            raise ShapeError(
                f"A {self.A.shape} / B {self.B.shape} do not fit a rank-{self.rank} "
                f"adapter on a {self.base.out_dim}x{self.base.in_dim} layer"
            )

    @classmethod
    def wrap(
        cls,
        base: LinearLayer,
        rng: np.random.Generator,
        rank: int = 8,
        alpha: float = 16.0,
        dropout_p: float = 0.6,
        init_std: float = 0.02,
    ) -> "LoraAdapter":
        """Attach a fresh adapter: Gaussian ``A``, zero ``B`` (so the delta starts at 0)."""
        A = rng.normal(0.0, init_std, size=(base.out_dim, rank))
        B = np.zeros((rank, base.in_dim))
        return cls(base, A, B, rank, float(alpha), float(dropout_p))

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank

    @property
    def in_dim(self) -> int:
        return self.base.in_dim

    @property
    def out_dim(self) -> int:
        return self.base.out_dim

    @property
    def uses_dropout(self) -> bool:
        return self.training and self.dropout_p > 0.0

    def delta_weight(self) -> np.ndarray:
        return self.scaling * (self.A @ self.B)


def dropout_mask(adapter: LoraAdapter, rng: np.random.Generator) -> Optional[np.ndarray]:
    """Inverted-dropout multipliers for one input vector, or None when dropout is off."""
    if not adapter.uses_dropout:
        return None
    keep = rng.random(adapter.in_dim) >= adapter.dropout_p
    return keep / (1.0 - adapter.dropout_p)


def _check_mask(adapter, mask):
    if adapter.uses_dropout:
        if mask is None:
            raise UsageError("adapter is in training mode with dropout; pass the forward-pass mask")
        if np.shape(mask) != (adapter.in_dim,):
            raise UsageError(f"mask shape {np.shape(mask)} does not match in_dim {adapter.in_dim}")
    elif mask is not None:
        raise UsageError("a dropout mask was given but the adapter applies no dropout")


def lora_forward(
    adapter: LoraAdapter,
    x,
    rng: Optional[np.random.Generator] = None,
    *,
    mask: Optional[np.ndarray] = None,
    return_mask: bool = False,
):
    """Adapted forward pass.

    In training mode with ``dropout_p > 0`` a mask is drawn from ``rng`` unless
    one is supplied. With ``return_mask=True`` the result is ``(y, mask)`` so
    the same mask can be handed to :func:`lora_backward`.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (adapter.in_dim,):
        raise ShapeError(f"adapter expects {adapter.in_dim} inputs, got shape {x.shape}")
    if mask is None and adapter.uses_dropout:
        if rng is None:
            raise UsageError("training-mode dropout needs a random generator or an explicit mask")
        mask = dropout_mask(adapter, rng)
    _check_mask(adapter, mask)
    xd = x if mask is None else x * mask
    y = linear_forward(adapter.base, x) + adapter.scaling * (adapter.A @ (adapter.B @ xd))
    return (y, mask) if return_mask else y


def lora_backward(
    adapter: LoraAdapter, x, upstream_grad, mask: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients for ``A`` and ``B`` only; the base layer is frozen."""
    _check_mask(adapter, mask)
    x = np.asarray(x, dtype=float)
    g = np.asarray(upstream_grad, dtype=float)
    if g.shape != (adapter.out_dim,):
        raise ShapeError(f"upstream grad shape {g.shape} != ({adapter.out_dim},)")
    xd = x if mask is None else x * mask
    s = adapter.scaling
    grad_A = s * np.outer(g, adapter.B @ xd)
    grad_B = s * np.outer(adapter.A.T @ g, xd)
    return grad_A, grad_B


def lora_input_grad(adapter: LoraAdapter, upstream_grad, mask: Optional[np.ndarray] = None) -> np.ndarray:
    _check_mask(adapter, mask)
    g = np.asarray(upstream_grad, dtype=float)
    through_adapter = adapter.scaling * (adapter.B.T @ (adapter.A.T @ g))
    if mask is not None:
        through_adapter = through_adapter * mask
    return adapter.base.weights.T @ g + through_adapter


def merge(adapter: LoraAdapter) -> LinearLayer:
    """Fold the adapter into a plain layer ``W + (alpha/rank) A B`` with the base bias."""
    bias = None if adapter.base.bias is None else adapter.base.bias.copy()
    return LinearLayer(adapter.base.weights + adapter.delta_weight(), bias)
