import numpy as np
import pytest

from bugloc.errors import CorruptModel, NonFiniteLoss, ShapeMismatch
from bugloc.mlcore import (Activation, FeedForwardNet, Loss, net_forward, net_gradient_check,
                           net_train)

S, T, R, I = Activation.SIGMOID, Activation.TANH, Activation.RELU, Activation.IDENTITY


def test_zero_net_outputs_half():
    net = FeedForwardNet([np.zeros((3, 4)), np.zeros((1, 3))], [np.zeros(3), np.zeros(1)], [R, S])
    assert net_forward(net, np.array([5.0, -2.0, 1.0, 9.0])).tolist() == [0.5]


def test_identity_layer_is_passthrough():
    net = FeedForwardNet([np.eye(3)], [np.zeros(3)], [I])
    x = np.array([0.25, -7.0, 3.5])
    assert net_forward(net, x).tolist() == x.tolist()


def test_matches_hand_matrix_product():
    w1 = np.array([[0.1, -0.2], [0.3, 0.05], [-0.4, 0.25]])
    b1 = np.array([0.01, -0.02, 0.03])
    w2 = np.array([[0.5, -0.6, 0.7]])
    b2 = np.array([0.1])
    net = FeedForwardNet([w1, w2], [b1, b2], [T, S])
    x = np.array([0.7, -1.3])
    h = [np.tanh(sum(w1[i, j] * x[j] for j in range(2)) + b1[i]) for i in range(3)]
    z = sum(w2[0, i] * h[i] for i in range(3)) + b2[0]
    assert net_forward(net, x)[0] == pytest.approx(1 / (1 + np.exp(-z)), abs=1e-12)


def test_shape_errors():
    net = FeedForwardNet.init([3, 2, 1], [R, S], seed=0)
    with pytest.raises(ShapeMismatch):
        net.forward(np.zeros(4))
    with pytest.raises(ShapeMismatch):
        FeedForwardNet([np.zeros((2, 3)), np.zeros((1, 3))], [np.zeros(2), np.zeros(1)], [R, S])


class TestTraining:
    def test_xor(self):
        x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
        y = np.array([0, 1, 1, 0], dtype=float)
        net = FeedForwardNet.init([2, 8, 1], [S, S], seed=0)
        trained, trace = net_train(net, x, y, Loss.MSE, epochs=2000, batch_size=4,
                                   learning_rate=2.0, seed=0)
        out = trained.forward(x)[:, 0]
        assert np.mean((out - y) ** 2) < 0.05
        assert len(trace) == 2000
        assert ((out > 0.5) == (y > 0.5)).all()

    def test_zero_epochs(self):
        net = FeedForwardNet.init([2, 3, 1], [R, S], seed=1)
        trained, trace = net_train(net, np.ones((5, 2)), np.ones(5), Loss.BCE, epochs=0)
        assert trace == []
        assert all(np.array_equal(a, b) for a, b in zip(net.parameters(), trained.parameters()))

    def test_bce_converges_to_base_rate(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(64, 3))
        net = FeedForwardNet.init([3, 4, 1], [T, S], seed=2)
        trained, _ = net_train(net, x, np.full(64, 0.3), Loss.BCE, epochs=300, batch_size=16,
                               learning_rate=0.5, seed=0)
        probe = rng.normal(size=(10, 3))
        assert np.abs(trained.forward(probe)[:, 0] - 0.3).max() < 0.05

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=(40, 4)), rng.integers(0, 2, 40)
        net = FeedForwardNet.init([4, 6, 1], [R, S], seed=3)
        a = net_train(net, x, y, Loss.BCE, epochs=5, batch_size=7, learning_rate=0.1, seed=9)
        b = net_train(net, x, y, Loss.BCE, epochs=5, batch_size=7, learning_rate=0.1, seed=9)
        assert a[1] == b[1]
        assert a[0].to_dict() == b[0].to_dict()

    def test_divergence_is_reported(self):
        x = np.array([[1e3, -1e3]])
        net = FeedForwardNet.init([2, 1], [I], seed=0)
        with pytest.raises(NonFiniteLoss):
            net_train(net, x, np.array([1.0]), Loss.MSE, epochs=50, learning_rate=1e3)


class TestGradientCheck:
    @pytest.mark.parametrize("sizes,acts,loss", [
        ([6, 10, 1], [R, S], Loss.BCE),
        ([6, 10, 1], [T, S], Loss.MSE),
        ([20, 15, 1], [T, S], Loss.BCE),
        ([12, 9, 12], [S, S], Loss.MSE),
        ([5, 7, 4, 1], [T, R, S], Loss.BCE),
    ])
    def test_random_nets(self, sizes, acts, loss):
        for seed in range(3):
            rng = np.random.default_rng(100 + seed)
            net = FeedForwardNet.init(sizes, acts, seed=seed)
            x = rng.normal(size=(8, sizes[0]))
            y = rng.random((8, sizes[-1])) if loss is Loss.MSE else rng.integers(0, 2, (8, 1))
            assert net_gradient_check(net, x, y, loss, epsilon=1e-5) < 1e-4

    def test_linear_closed_form(self):
        w = np.array([[0.4, -0.3, 1.2]])
        net = FeedForwardNet([w], [np.array([0.1])], [I])
        x, y = np.array([[1.5, -2.0, 0.5]]), np.array([[0.7]])
        y_hat = x @ w.T + 0.1
        gw, gb = net.gradients(x, y, Loss.MSE)
        np.testing.assert_allclose(gw, 2 * (y_hat - y) * x, rtol=1e-15, atol=1e-15)
        np.testing.assert_allclose(gb, 2 * (y_hat - y)[0], rtol=1e-15, atol=1e-15)

    def test_relu_zero_input(self):
        net = FeedForwardNet.init([4, 3, 1], [R, S], seed=0)
        grads = net.gradients(np.zeros((1, 4)), np.array([[1.0]]), Loss.BCE)
        assert all(np.isfinite(g).all() for g in grads)
        assert np.isfinite(net_gradient_check(net, np.zeros((1, 4)), [[1.0]], Loss.BCE))

    def test_epsilon_range(self):
        net = FeedForwardNet.init([2, 1], [S])
        with pytest.raises(ValueError):
            net_gradient_check(net, np.ones((1, 2)), [[1.0]], Loss.MSE, epsilon=0.1)


def test_serialization_round_trip():
    net = FeedForwardNet.init([3, 5, 2], [T, S], seed=4)
    again = FeedForwardNet.from_dict(net.to_dict())
    x = np.random.default_rng(0).normal(size=(6, 3))
    assert np.array_equal(net.forward(x), again.forward(x))
    with pytest.raises(CorruptModel):
        FeedForwardNet.from_dict({"weights": []})
