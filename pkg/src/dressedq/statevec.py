"""Dense state-vector simulator for the {H, RY, CNOT} gate set.

Qubit ``k`` is bit ``k`` of the basis-state index (little-endian), so for two
qubits the amplitude order is ``|q1 q0> = 00, 01, 10, 11`` and index 2 means
qubit 1 is set.

The public functions take and return :class:`StateVector` values and never
mutate their input. The underscore-prefixed kernels work on raw complex arrays
of shape ``(..., 2**n)`` so callers can push a whole batch of circuits through
one gate call (see :mod:`dressedq.qlayer`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Optional

import numpy as np

from .errors import SizeError

MAX_QUBITS = 24
_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise SizeError(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class GateOp:
    """One gate in a circuit. ``control`` is used by CNOT only, ``angle`` by RY only."""

    kind: Literal["H", "RY", "CNOT"]
    target: int
    control: Optional[int] = None
    angle: float = 0.0

    def validate(self, n_qubits: int) -> None:
        _check_wire(self.target, n_qubits)
        if self.kind == "CNOT":
            if self.control is None:
                raise ValueError("CNOT needs a control qubit")
            _check_wire(self.control, n_qubits)
            if self.control == self.target:
                raise ValueError(f"control and target are both qubit {self.target}")
        elif self.kind == "RY":
            if not math.isfinite(self.angle):
                raise ValueError(f"RY angle must be finite, got {self.angle!r}")
        elif self.kind != "H":
            raise ValueError(f"unknown gate kind {self.kind!r}")


def H(target: int) -> GateOp:
    return GateOp("H", target)


def RY(target: int, theta: float) -> GateOp:
    return GateOp("RY", target, angle=float(theta))


def CNOT(control: int, target: int) -> GateOp:
    return GateOp("CNOT", target, control=control)


def _check_wire(q, n_qubits):
    if not isinstance(q, (int, np.integer)) or not 0 <= q < n_qubits:
        raise IndexError(f"qubit index {q!r} out of range for {n_qubits} qubits")


def _split(amps, n_qubits, q):
    # view (..., 2**n) as (..., high, 2, low) where the middle axis is bit q
    lead = amps.shape[:-1]
    return amps.reshape(*lead, 1 << (n_qubits - q - 1), 2, 1 << q)


def _hadamard(amps, n_qubits, q):
    v = _split(amps, n_qubits, q)
    a0 = v[..., 0, :]
    a1 = v[..., 1, :]
    out = np.empty_like(v)
    out[..., 0, :] = (a0 + a1) * _SQRT1_2
    out[..., 1, :] = (a0 - a1) * _SQRT1_2
    return out.reshape(amps.shape)


def _ry(amps, n_qubits, q, theta):
    """RY on wire ``q``. ``theta`` is a scalar or an array matching the batch dims."""
    v = _split(amps, n_qubits, q)
    half = np.asarray(theta, dtype=float) / 2.0
    c = np.cos(half)[..., None, None]
    s = np.sin(half)[..., None, None]
    a0 = v[..., 0, :]
    a1 = v[..., 1, :]
    out = np.empty_like(v)
    out[..., 0, :] = c * a0 - s * a1
    out[..., 1, :] = s * a0 + c * a1
    return out.reshape(amps.shape)


def _cnot_permutation(n_qubits, control, target):
    idx = np.arange(1 << n_qubits)
    flip = (idx >> control) & 1
    return idx ^ (flip << target)


def _cnot(amps, n_qubits, control, target):
    return amps[..., _cnot_permutation(n_qubits, control, target)]


def _z_signs(n_qubits, wire):
    return 1.0 - 2.0 * ((np.arange(1 << n_qubits) >> wire) & 1)


def _expect_z_all(amps, n_qubits):
    """<Z_q> for every wire; returns shape (..., n_qubits)."""
    probs = amps.real**2 + amps.imag**2
    out = np.empty(probs.shape[:-1] + (n_qubits,))
    for q in range(n_qubits):
        v = _split(probs, n_qubits, q)
        out[..., q] = v[..., 0, :].sum(axis=(-2, -1)) - v[..., 1, :].sum(axis=(-2, -1))
    return out


def new_zero_state(n_qubits: int) -> StateVector:
    """Return the all-zeros register ``|0...0>``."""
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits!r}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(int(n_qubits), amps)


def from_amplitudes(amplitudes) -> StateVector:
    amps = np.array(amplitudes, dtype=np.complex128)
    n = int(round(math.log2(amps.size))) if amps.size else 0
    if amps.ndim != 1 or amps.size != 1 << n or not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"amplitude count {amps.size} is not 2**n for 1 <= n <= {MAX_QUBITS}")
    return StateVector(n, amps)


def apply_hadamard(state: StateVector, target: int) -> StateVector:
    _check_wire(target, state.n_qubits)
    return StateVector(state.n_qubits, _hadamard(state.amplitudes, state.n_qubits, target))


def apply_ry(state: StateVector, target: int, theta: float) -> StateVector:
    _check_wire(target, state.n_qubits)
    if not math.isfinite(theta):
        raise ValueError(f"RY angle must be finite, got {theta!r}")
    return StateVector(state.n_qubits, _ry(state.amplitudes, state.n_qubits, target, theta))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_wire(control, state.n_qubits)
    _check_wire(target, state.n_qubits)
    if control == target:
        raise ValueError(f"control and target are both qubit {target}")
    return StateVector(state.n_qubits, _cnot(state.amplitudes, state.n_qubits, control, target))


def expect_z(state: StateVector, wire: int) -> float:
    """Expectation of Pauli-Z on ``wire``: P(bit=0) - P(bit=1)."""
    _check_wire(wire, state.n_qubits)
    val = float(np.dot(state.probabilities(), _z_signs(state.n_qubits, wire)))
    return min(1.0, max(-1.0, val))


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    op.validate(state.n_qubits)
    if op.kind == "H":
        return apply_hadamard(state, op.target)
    if op.kind == "RY":
        return apply_ry(state, op.target, op.angle)
    return apply_cnot(state, op.control, op.target)


def apply_circuit(state: StateVector, ops: Iterable[GateOp]) -> StateVector:
    """Apply ``ops`` left to right. The first invalid op raises and nothing is returned."""
    for op in ops:
        state = apply_gate(state, op)
    return state
