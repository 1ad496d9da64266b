import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dressedq import qlayer as ql
from dressedq import statevec as sv
from dressedq.errors import ShapeError, SizeError
from oracles import central_diff, circuit_unitary, z_observable


def make(n, depth, rng, scale=math.pi):
    cfg = ql.QuantumLayerConfig(n, depth)
    params = ql.CircuitParams(rng.uniform(-scale, scale, size=(depth, n)))
    angles = rng.uniform(-math.pi / 2, math.pi / 2, size=n)
    return cfg, params, angles


def dense_expectations(cfg, params, angles):
    """Forward pass through explicit Kronecker-product unitaries."""
    n = cfg.n_qubits
    psi = circuit_unitary(ql.circuit_ops(cfg, params, angles), n)[:, 0]
    return np.array([np.vdot(psi, z_observable(q, n) @ psi).real for q in range(n)])


def test_config_bounds():
    with pytest.raises(SizeError):
        ql.QuantumLayerConfig(0, 1)
    with pytest.raises(SizeError):
        ql.QuantumLayerConfig(2, 65)
    with pytest.raises(ValueError):
        ql.QuantumLayerConfig(2, 1, shift=0.1)
    assert ql.QuantumLayerConfig().n_qubits == 4
    assert ql.QuantumLayerConfig().depth == 4


def test_params_shape_checked():
    cfg = ql.QuantumLayerConfig(2, 1)
    with pytest.raises(ShapeError):
        ql.quantum_forward(cfg, ql.CircuitParams(np.zeros((2, 2))), [0, 0])
    with pytest.raises(ShapeError):
        ql.quantum_forward(cfg, ql.CircuitParams(np.zeros((1, 2))), [0, 0, 0])
    with pytest.raises(ValueError):
        ql.CircuitParams([[np.nan, 0.0]])


def test_init_params_range():
    p = ql.init_params(ql.QuantumLayerConfig(4, 3), np.random.default_rng(0))
    assert p.angles.shape == (3, 4)
    assert np.all(np.abs(p.angles) <= 0.01)


def test_embed_angles():
    assert ql.embed_angles([0.0])[0] == 0.0
    assert ql.embed_angles([10.0])[0] == pytest.approx(math.pi / 2, abs=1e-6)
    assert ql.embed_angles([1.0])[0] == pytest.approx(1.196309302683775, abs=1e-12)
    with pytest.raises(ShapeError):
        ql.embed_angles([1.0, 2.0], n_qubits=3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8))
def test_embed_angles_range(xs):
    out = ql.embed_angles(xs)
    assert np.all(np.abs(out) <= math.pi / 2)


def test_entangling_pairs():
    assert ql.entangling_pairs(1) == []
    assert ql.entangling_pairs(2) == [(0, 1)]
    assert ql.entangling_pairs(4) == [(0, 1), (2, 3), (1, 2)]
    assert ql.entangling_pairs(5) == [(0, 1), (2, 3), (1, 2), (3, 4)]


def test_forward_single_qubit_closed_form():
    cfg = ql.QuantumLayerConfig(1, 0)
    params = ql.CircuitParams(np.zeros((0, 1)))
    assert ql.quantum_forward(cfg, params, [0.0])[0] == pytest.approx(0.0, abs=1e-15)
    for theta in np.linspace(-math.pi, math.pi, 25):
        assert ql.quantum_forward(cfg, params, [theta])[0] == pytest.approx(-math.sin(theta), abs=1e-12)


def test_forward_two_qubits_zero_angles():
    cfg = ql.QuantumLayerConfig(2, 1)
    out = ql.quantum_forward(cfg, ql.CircuitParams(np.zeros((1, 2))), [0.0, 0.0])
    np.testing.assert_allclose(out, [0.0, 0.0], atol=1e-12)
    # the dense oracle agrees
    np.testing.assert_allclose(dense_expectations(cfg, ql.CircuitParams(np.zeros((1, 2))), [0, 0]), [0, 0], atol=1e-12)


@pytest.mark.parametrize("n,depth", [(1, 0), (1, 2), (2, 1), (3, 2), (4, 3)])
def test_forward_matches_dense_oracle(n, depth, rng):
    for _ in range(5):
        cfg, params, angles = make(n, depth, rng)
        np.testing.assert_allclose(
            ql.quantum_forward(cfg, params, angles), dense_expectations(cfg, params, angles), atol=1e-12
        )


def test_forward_matches_gate_list_path(rng):
    cfg, params, angles = make(3, 2, rng)
    state = sv.apply_circuit(sv.new_zero_state(3), ql.circuit_ops(cfg, params, angles))
    expected = [sv.expect_z(state, q) for q in range(3)]
    np.testing.assert_allclose(ql.quantum_forward(cfg, params, angles), expected, atol=1e-12)


def test_forward_deterministic(rng):
    cfg, params, angles = make(4, 3, rng)
    a = ql.quantum_forward(cfg, params, angles)
    b = ql.quantum_forward(cfg, params, angles)
    assert a.tobytes() == b.tobytes()


def test_param_shift_single_qubit():
    cfg = ql.QuantumLayerConfig(1, 0)
    params = ql.CircuitParams(np.zeros((0, 1)))
    g_params, g_inputs = ql.param_shift_grad(cfg, params, [0.0])
    assert g_params.shape == (1, 0, 1)
    assert g_inputs[0, 0] == pytest.approx(-1.0, abs=1e-12)
    _, g_inputs = ql.param_shift_grad(cfg, params, [math.pi / 2])
    assert abs(g_inputs[0, 0]) <= 1e-12


def test_depth_zero_has_no_param_gradient(rng):
    cfg, params, angles = make(3, 0, rng)
    g_params, g_inputs = ql.param_shift_grad(cfg, params, angles)
    assert g_params.size == 0
    assert g_inputs.shape == (3, 3)


@pytest.mark.parametrize("seed", range(10))
def test_param_shift_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    depth = int(rng.integers(0, 4))
    cfg, params, angles = make(n, depth, rng)
    g_params, g_inputs = ql.param_shift_grad(cfg, params, angles)
    fd_inputs = central_diff(lambda a: ql.quantum_forward(cfg, params, a), angles)
    fd_params = central_diff(lambda p: ql.quantum_forward(cfg, ql.CircuitParams(p), angles), params.angles)
    np.testing.assert_allclose(g_inputs, fd_inputs, atol=1e-5, rtol=0)
    np.testing.assert_allclose(g_params, fd_params, atol=1e-5, rtol=0)


def test_forward_and_grad_consistent(rng):
    cfg, params, angles = make(3, 2, rng)
    out, g_params, g_inputs = ql.forward_and_grad(cfg, params, angles)
    np.testing.assert_allclose(out, ql.quantum_forward(cfg, params, angles), atol=1e-14)
    gp, gi = ql.param_shift_grad(cfg, params, angles)
    np.testing.assert_array_equal(g_params, gp)
    np.testing.assert_array_equal(g_inputs, gi)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), depth=st.integers(0, 3))
def test_outputs_bounded(seed, n, depth):
    rng = np.random.default_rng(seed)
    cfg, params, angles = make(n, depth, rng, scale=20.0)
    out = ql.quantum_forward(cfg, params, angles)
    assert np.all(out >= -1.0) and np.all(out <= 1.0)
