"""Walk through the state-vector simulator on a few small circuits."""
import math

import numpy as np

from dressedq import statevec as sv

# a Bell pair: H on wire 0, then CNOT 0 -> 1
bell = sv.apply_circuit(sv.new_zero_state(2), [sv.H(0), sv.CNOT(0, 1)])
print("bell amplitudes", np.round(bell.amplitudes, 4))
print("bell probabilities", bell.probabilities())

# qubit k is bit k of the basis index, so X-like flips on wire 1 land on index 2
flipped = sv.apply_ry(sv.new_zero_state(2), 1, math.pi)
print("RY(pi) on wire 1 ->", np.flatnonzero(np.abs(flipped.amplitudes) > 0.5))

## <Z> after H then RY(theta) traces out -sin(theta)
for theta in np.linspace(-math.pi, math.pi, 5):
    state = sv.apply_circuit(sv.new_zero_state(1), [sv.H(0), sv.RY(0, theta)])
    print(f"theta={theta:+.3f}  <Z>={sv.expect_z(state, 0):+.6f}  -sin={-math.sin(theta):+.6f}")
