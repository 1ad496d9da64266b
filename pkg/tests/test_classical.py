import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dressedq.classical import LinearLayer, linear_backward, linear_forward, softmax, softmax_cross_entropy
from dressedq.errors import ShapeError
from oracles import central_diff


def test_linear_forward_examples():
    layer = LinearLayer(np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([1.0, 0.0]))
    np.testing.assert_array_equal(linear_forward(layer, [1.0, 1.0]), [4.0, 1.0])
    np.testing.assert_array_equal(linear_forward(layer, [0.0, 0.0]), layer.bias)
    ident = LinearLayer(np.eye(2))
    np.testing.assert_array_equal(linear_forward(ident, [3.0, 4.0]), [3.0, 4.0])


def test_linear_shape_errors():
    with pytest.raises(ShapeError):
        linear_forward(LinearLayer(np.eye(2)), [1.0, 2.0, 3.0])
    with pytest.raises(ShapeError):
        LinearLayer(np.eye(2), np.zeros(3))
    with pytest.raises(ValueError):
        LinearLayer(np.array([[np.inf]]))


def test_linear_init_bounds():
    layer = LinearLayer.init(16, 3, np.random.default_rng(0))
    assert layer.weights.shape == (3, 16)
    assert np.all(np.abs(layer.weights) <= 0.25)
    assert np.all(np.abs(layer.bias) <= 0.25)
    assert LinearLayer.init(4, 2, np.random.default_rng(0), bias=False).bias is None


def test_linear_backward_matches_finite_differences(rng):
    layer = LinearLayer(rng.normal(size=(3, 4)), rng.normal(size=3))
    x = rng.normal(size=4)
    g = rng.normal(size=3)
    gw, gb, gx = linear_backward(layer, x, g)
    np.testing.assert_allclose(gw, np.outer(g, x))
    np.testing.assert_allclose(gb, g)
    fd = central_diff(lambda v: g @ linear_forward(layer, v), x)
    np.testing.assert_allclose(gx, fd, atol=1e-8)


def test_cross_entropy_examples():
    loss, _ = softmax_cross_entropy(np.array([40.0, 0.0, 5.0]), 0)
    assert loss <= 1e-12
    loss, grad = softmax_cross_entropy(np.zeros(7), 3)
    assert loss == pytest.approx(math.log(7), abs=1e-12)
    assert loss == pytest.approx(1.945910, abs=1e-6)
    assert abs(grad.sum()) <= 1e-12
    with pytest.raises(ValueError):
        softmax_cross_entropy(np.zeros(3), 3)


def test_cross_entropy_gradient_matches_finite_differences(rng):
    z = rng.normal(size=5)
    _, grad = softmax_cross_entropy(z, 2)
    fd = central_diff(lambda v: softmax_cross_entropy(v, 2)[0], z)
    np.testing.assert_allclose(grad, fd, atol=1e-8)


finite_logits = st.lists(st.floats(-50, 50), min_size=1, max_size=10)


@settings(max_examples=100, deadline=None)
@given(finite_logits)
def test_softmax_is_probability_vector(z):
    p = softmax(np.array(z))
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(finite_logits, st.floats(-100, 100), st.data())
def test_loss_shift_invariant(z, shift, data):
    z = np.array(z)
    c = data.draw(st.integers(0, len(z) - 1))
    a, ga = softmax_cross_entropy(z, c)
    b, gb = softmax_cross_entropy(z + shift, c)
    assert abs(a - b) <= 1e-10
    assert abs(ga.sum()) <= 1e-12
    assert a >= 0
