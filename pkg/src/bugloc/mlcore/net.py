"""Dense feed-forward networks trained by mini-batch gradient descent."""

import copy
import enum
import math

import numpy as np

from ..errors import CorruptModel, NonFiniteLoss, ShapeMismatch

_BCE_EPS = 1e-12


class Activation(str, enum.Enum):
    SIGMOID = "Sigmoid"
    TANH = "Tanh"
    RELU = "ReLU"
    IDENTITY = "Identity"

    @classmethod
    def parse(cls, value):
        if isinstance(value, Activation):
            return value
        key = str(value).lower()
        for act in cls:
            if act.value.lower() == key:
                return act
        raise ValueError(f"unknown activation {value!r}")


class Loss(str, enum.Enum):
    MSE = "MSE"
    BCE = "BCE"


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activate(act, z):
    if act is Activation.SIGMOID:
        return sigmoid(z)
    if act is Activation.TANH:
        return np.tanh(z)
    if act is Activation.RELU:
        return np.maximum(0.0, z)
    return z.copy()


def activation_grad(act, z, a):
    """d a / d z, given pre-activation ``z`` and activation ``a``."""
    if act is Activation.SIGMOID:
        return a * (1.0 - a)
    if act is Activation.TANH:
        return 1.0 - a * a
    if act is Activation.RELU:
        return (z > 0).astype(float)
    return np.ones_like(z)


class FeedForwardNet:
    """Layered dense network.

    Parameters
    ----------
    weights : list of (out, in) arrays
    biases : list of (out,) arrays
    activations : list of Activation, one per layer
    seed : int
        Seed the parameters were initialized from (recorded, not reused).
    """

    def __init__(self, weights, biases, activations, seed=0):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.activations = [Activation.parse(a) for a in activations]
        self.seed = seed
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ShapeMismatch("weights, biases and activations must have one entry per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeMismatch(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeMismatch(f"layer {i} expects {w.shape[1]} inputs, previous layer emits "
                                    f"{self.weights[i - 1].shape[0]}")

    @classmethod
    def init(cls, sizes, activations, seed=0):
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
        if len(activations) != len(sizes) - 1:
            raise ShapeMismatch("need one activation per layer transition")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases, activations, seed)

    @property
    def sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self):
        return copy.deepcopy(self)

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def _check_input(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ShapeMismatch(f"input width {x.shape[-1]} != {self.sizes[0]}")
        return x, single

    def _forward_cache(self, x):
        zs, acts = [], [x]
        a = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            z = a @ w.T + b
            a = activate(act, z)
            zs.append(z)
            acts.append(a)
        return zs, acts

    def forward(self, x):
        x, single = self._check_input(x)
        a = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            a = activate(act, a @ w.T + b)
        return a[0] if single else a

    def forward_to(self, x, layers):
        """Output after the first ``layers`` layers (an encoder view)."""
        x, single = self._check_input(x)
        a = x
        for w, b, act in list(zip(self.weights, self.biases, self.activations))[:layers]:
            a = activate(act, a @ w.T + b)
        return a[0] if single else a

    def loss(self, x, y, loss):
        x, _ = self._check_input(x)
        return _loss_value(self.forward(x), _as_targets(y, x.shape[0]), Loss(loss))

    def gradients(self, x, y, loss):
        """Backprop gradients of the mean loss, as a list matching ``parameters()``."""
        x, _ = self._check_input(x)
        y = _as_targets(y, x.shape[0])
        loss = Loss(loss)
        zs, acts = self._forward_cache(x)
        out = acts[-1]
        n = x.shape[0]
        if y.shape != out.shape:
            raise ShapeMismatch(f"target shape {y.shape} != output shape {out.shape}")
        last = self.activations[-1]
        if loss is Loss.BCE and last is Activation.SIGMOID:
            delta = (out - y) / n
        else:
            if loss is Loss.MSE:
                dout = 2.0 * (out - y) / n
            else:
                p = np.clip(out, _BCE_EPS, 1 - _BCE_EPS)
                dout = (p - y) / (p * (1 - p)) / n
            delta = dout * activation_grad(last, zs[-1], out)
        grads = [None] * (2 * len(self.weights))
        for i in reversed(range(len(self.weights))):
            grads[2 * i] = delta.T @ acts[i]
            grads[2 * i + 1] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i]) * activation_grad(
                    self.activations[i - 1], zs[i - 1], acts[i])
        return grads

    def to_dict(self):
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activations": [a.value for a in self.activations],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["weights"], data["biases"], data["activations"], data.get("seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptModel(f"bad network payload: {exc}") from exc


def _as_targets(y, n):
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = np.full((n, 1), float(y))
    elif y.ndim == 1:
        y = y[:, None] if y.shape[0] == n and n != 1 else y[None, :]
    return y


def _loss_value(out, y, loss):
    """Per-sample loss summed over output units, averaged over samples."""
    n = out.shape[0]
    if loss is Loss.MSE:
        return float(np.sum((out - y) ** 2) / n)
    p = np.clip(out, _BCE_EPS, 1 - _BCE_EPS)
    return float(-np.sum(y * np.log(p) + (1 - y) * np.log(1 - p)) / n)


def net_forward(net, x):
    return net.forward(x)


def net_train(net, x, y, loss=Loss.MSE, epochs=50, batch_size=32, learning_rate=0.01, seed=0):
    """Mini-batch gradient descent.

    Returns a trained copy of ``net`` and the per-epoch mean training loss.
    The seed drives the per-epoch shuffle; the input net is not modified.
    """
    x, _ = net._check_input(x)
    y = _as_targets(y, x.shape[0])
    loss = Loss(loss)
    trained = net.copy()
    trace = []
    if epochs <= 0 or x.shape[0] == 0:
        return trained, trace
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    params = trained.parameters()
    for epoch in range(epochs):
        order = rng.permutation(n)
        # divergence is detected below; silence numpy's overflow chatter meanwhile
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                grads = trained.gradients(x[idx], y[idx], loss)
                for p, g in zip(params, grads):
                    p -= learning_rate * g
            value = _loss_value(trained.forward(x), y, loss)
        if not math.isfinite(value) or not all(np.isfinite(p).all() for p in params):
            raise NonFiniteLoss(f"training diverged at epoch {epoch + 1}; lower the learning rate")
        trace.append(value)
    return trained, trace


def net_gradient_check(net, x, y, loss=Loss.MSE, epsilon=1e-5, floor=1e-6):
    """Largest relative gap between backprop and central-difference gradients.

    Relative error of a parameter is ``|a - n| / max(|a| + |n|, floor)``; the
    floor keeps exactly-zero gradients from producing 0/0.
    """
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    probe = net.copy()
    analytic = probe.gradients(x, y, loss)
    worst = 0.0
    for p, g in zip(probe.parameters(), analytic):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            up = probe.loss(x, y, loss)
            flat[j] = orig - epsilon
            down = probe.loss(x, y, loss)
            flat[j] = orig
            numeric = (up - down) / (2 * epsilon)
            err = abs(gflat[j] - numeric) / max(abs(gflat[j]) + abs(numeric), floor)
            worst = max(worst, err)
    return worst
