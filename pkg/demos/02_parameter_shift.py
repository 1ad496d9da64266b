"""Compare parameter-shift gradients of the quantum layer to finite differences."""
import numpy as np

from dressedq import qlayer as ql

rng = np.random.default_rng(3)
cfg = ql.QuantumLayerConfig(n_qubits=3, depth=2)
params = ql.init_params(cfg, rng, scale=1.0)
angles = ql.embed_angles(rng.normal(size=3))

print("entangling pairs:", ql.entangling_pairs(cfg.n_qubits))
print("<Z> per wire:", ql.quantum_forward(cfg, params, angles))

g_params, g_inputs = ql.param_shift_grad(cfg, params, angles)

h = 1e-5
fd = np.zeros_like(g_params)
for idx in np.ndindex(params.angles.shape):
    up, down = params.angles.copy(), params.angles.copy()
    up[idx] += h
    down[idx] -= h
    fd[(slice(None),) + idx] = (
        ql.quantum_forward(cfg, ql.CircuitParams(up), angles)
        - ql.quantum_forward(cfg, ql.CircuitParams(down), angles)
    ) / (2 * h)

print("max |shift - fd| over params:", np.abs(g_params - fd).max())
print("input jacobian shape:", g_inputs.shape)
