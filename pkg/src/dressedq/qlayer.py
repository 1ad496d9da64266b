"""Variational quantum layer of the dressed network.

Circuit layout for ``n`` qubits and ``depth`` blocks::

    H on every wire
    RY(input_angles[q]) on every wire
    repeat depth times:
        CNOT(q, q+1) for even q, then CNOT(q, q+1) for odd q
        RY(params[layer, q]) on every wire
    read out <Z_q> on every wire

Every parameterised gate is an RY rotation, so the parameter-shift rule with a
shift of pi/2 gives exact derivatives for both the trainable angles and the
input angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import statevec as sv
from .errors import ShapeError, SizeError
from .statevec import GateOp

SHIFT = math.pi / 2
MAX_DEPTH = 64


@dataclass(frozen=True)
class QuantumLayerConfig:
    n_qubits: int = 4
    depth: int = 4
    shift: float = field(default=SHIFT)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= sv.MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {sv.MAX_QUBITS}], got {self.n_qubits}")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise SizeError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        if self.shift != SHIFT:
            raise ValueError("parameter-shift constant is fixed at pi/2")


@dataclass
class CircuitParams:
    """Trainable rotation angles, shape ``(depth, n_qubits)``."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.ndim != 2:
            raise ShapeError(f"angles must be 2-D, got shape {self.angles.shape}")
        if not np.all(np.isfinite(self.angles)):
            raise ValueError("circuit angles must be finite")

    def check(self, config: QuantumLayerConfig) -> None:
        expected = (config.depth, config.n_qubits)
        if self.angles.shape != expected:
            raise ShapeError(f"params shape {self.angles.shape} does not match config {expected}")


def init_params(config: QuantumLayerConfig, rng: np.random.Generator, scale: float = 0.01) -> CircuitParams:
    return CircuitParams(rng.uniform(-scale, scale, size=(config.depth, config.n_qubits)))


def embed_angles(features, n_qubits: Optional[int] = None) -> np.ndarray:
    """Squash features into rotation angles: ``tanh(x) * pi/2``."""
    x = np.asarray(features, dtype=float)
    if n_qubits is not None and x.shape[-1:] != (n_qubits,):
        raise ShapeError(f"expected {n_qubits} features, got shape {x.shape}")
    return np.tanh(x) * (math.pi / 2)


def entangling_pairs(n_qubits: int) -> List[Tuple[int, int]]:
    """(control, target) pairs of one brick-pattern entangling block."""
    even = [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    odd = [(q, q + 1) for q in range(1, n_qubits - 1, 2)]
    return even + odd


def circuit_ops(config: QuantumLayerConfig, params: CircuitParams, input_angles) -> List[GateOp]:
    """The full gate list, for use with :func:`dressedq.statevec.apply_circuit`."""
    n = config.n_qubits
    ops = [sv.H(q) for q in range(n)]
    ops += [sv.RY(q, input_angles[q]) for q in range(n)]
    pairs = entangling_pairs(n)
    for layer in range(config.depth):
        ops += [sv.CNOT(c, t) for c, t in pairs]
        ops += [sv.RY(q, params.angles[layer, q]) for q in range(n)]
    return ops


def _simulate(n_qubits, depth, inputs, angles):
    """Batched forward pass.

    ``inputs`` has shape (B, n) and ``angles`` (B, depth, n); returns (B, n).
    """
    batch = inputs.shape[0]
    dim = 1 << n_qubits
    # H on every wire of |0..0> is the uniform superposition
    amps = np.full((batch, dim), 1.0 / math.sqrt(dim), dtype=np.complex128)
    for q in range(n_qubits):
        amps = sv._ry(amps, n_qubits, q, inputs[:, q])
    perms = [sv._cnot_permutation(n_qubits, c, t) for c, t in entangling_pairs(n_qubits)]
    for layer in range(depth):
        for perm in perms:
            amps = amps[:, perm]
        for q in range(n_qubits):
            amps = sv._ry(amps, n_qubits, q, angles[:, layer, q])
    return np.clip(sv._expect_z_all(amps, n_qubits), -1.0, 1.0)


def _validate(config, params, input_angles):
    params.check(config)
    a = np.asarray(input_angles, dtype=float)
    if a.shape != (config.n_qubits,):
        raise ShapeError(f"expected {config.n_qubits} input angles, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("input angles must be finite")
    return a


def quantum_forward(config: QuantumLayerConfig, params: CircuitParams, input_angles) -> np.ndarray:
    """Run the circuit once and return ``<Z_q>`` for each wire."""
    a = _validate(config, params, input_angles)
    return _simulate(config.n_qubits, config.depth, a[None, :], params.angles[None])[0]


def param_shift_grad(
    config: QuantumLayerConfig, params: CircuitParams, input_angles
) -> Tuple[np.ndarray, np.ndarray]:
    """Jacobians of the expectations by the parameter-shift rule.

    Returns
    -------
    grad_params : ndarray, shape (n_qubits, depth, n_qubits)
        ``grad_params[k, l, q]`` is d<Z_k>/d params[l, q].
    grad_inputs : ndarray, shape (n_qubits, n_qubits)
        ``grad_inputs[k, q]`` is d<Z_k>/d input_angles[q].
    """
    _, grad_params, grad_inputs = forward_and_grad(config, params, input_angles)
    return grad_params, grad_inputs


def forward_and_grad(config, params, input_angles):
    """Expectations plus both Jacobians from a single batched simulation."""
    a = _validate(config, params, input_angles)
    n, depth = config.n_qubits, config.depth
    n_angles = n + depth * n
    flat = np.concatenate([a, params.angles.ravel()])
    rows = np.tile(flat, (2 * n_angles + 1, 1))
    idx = np.arange(n_angles)
    rows[idx, idx] += config.shift
    rows[n_angles + idx, idx] -= config.shift
    out = _simulate(n, depth, rows[:, :n], rows[:, n:].reshape(len(rows), depth, n))
    jac = (out[:n_angles] - out[n_angles : 2 * n_angles]).T / (2.0 * math.sin(config.shift))
    return out[-1], jac[:, n:].reshape(n, depth, n), jac[:, :n]
