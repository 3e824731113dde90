"""Layer objects with cached forward state and explicit backward passes.

A layer's `forward` stores what its `backward` needs; calling `backward`
before `forward` raises GraphNotEvaluated. Parameter gradients are
accumulated into `LayerParams.grad_*` and reset by `zero_grad`.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphNotEvaluated, InvalidRate, NonFiniteValue, ShapeMismatch
from . import functional as F


def _finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"non-finite values in {name}")
    return arr


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class LayerParams:
    """Weights and bias of one layer together with their gradients."""

    def __init__(self, weights, bias):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)

    def zero_grad(self):
        self.grad_weights.fill(0.0)
        self.grad_bias.fill(0.0)

    def arrays(self):
        return [(self.weights, self.grad_weights), (self.bias, self.grad_bias)]


class Layer:
    params = None

    def __init__(self):
        self._cache = None

    def _cached(self):
        if self._cache is None:
            raise GraphNotEvaluated(f"{type(self).__name__}.backward called before forward")
        return self._cache

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def parameters(self):
        return [] if self.params is None else [self.params]


class Conv2d(Layer):
    """2-D convolution. With `input_grad=False` backward skips dL/dx and returns None."""

    def __init__(self, in_channels, out_channels, kernel, stride=1, pad=0, rng=None,
                 input_grad=True):
        super().__init__()
        self.kernel, self.stride, self.pad = kernel, stride, pad
        self.input_grad = input_grad
        shape = (out_channels, in_channels, kernel, kernel)
        rng = rng if rng is not None else np.random.default_rng(0)
        w = glorot_uniform(rng, shape, in_channels * kernel ** 2, out_channels * kernel ** 2)
        self.params = LayerParams(w, np.zeros(out_channels))

    def forward(self, x, train=False, rng=None):
        out = F.conv2d_forward(x, self.params.weights, self.params.bias, self.stride, self.pad)
        self._cache = x
        return _finite("conv2d output", out)

    def backward(self, dout):
        x = self._cached()
        p = self.params
        p.grad_weights += F.conv2d_weight_grad(x, dout, self.kernel, self.stride, self.pad)
        p.grad_bias += dout.sum(axis=(0, 2, 3))
        if not self.input_grad:
            return None
        dx = F.conv2d_input_grad(dout, p.weights, x.shape, self.stride, self.pad)
        return _finite("conv2d input gradient", dx)


class ConvTranspose2d(Layer):
    def __init__(self, in_channels, out_channels, kernel, stride=1, pad=0, rng=None):
        super().__init__()
        self.kernel, self.stride, self.pad = kernel, stride, pad
        shape = (in_channels, out_channels, kernel, kernel)
        rng = rng if rng is not None else np.random.default_rng(0)
        w = glorot_uniform(rng, shape, in_channels * kernel ** 2, out_channels * kernel ** 2)
        self.params = LayerParams(w, np.zeros(out_channels))

    def forward(self, x, train=False, rng=None):
        out = F.conv2d_transposed_forward(
            x, self.params.weights, self.params.bias, self.stride, self.pad)
        self._cache = x
        return _finite("transposed conv output", out)

    def backward(self, dout):
        x = self._cached()
        p = self.params
        # the transposed conv is the input-adjoint of a conv, so its input
        # gradient is that conv's forward and roles swap for the weights
        p.grad_weights += F.conv2d_weight_grad(dout, x, self.kernel, self.stride, self.pad)
        p.grad_bias += dout.sum(axis=(0, 2, 3))
        dx = F.conv2d_forward(dout, p.weights, None, self.stride, self.pad)
        return _finite("transposed conv input gradient", dx)


class Dense(Layer):
    def __init__(self, in_features, out_features, rng=None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        w = glorot_uniform(rng, (out_features, in_features), in_features, out_features)
        self.params = LayerParams(w, np.zeros(out_features))

    def forward(self, x, train=False, rng=None):
        out = F.dense_forward(x, self.params.weights, self.params.bias)
        self._cache = x
        return _finite("dense output", out)

    def backward(self, dout):
        x = self._cached()
        self.params.grad_weights += dout.T @ x
        self.params.grad_bias += dout.sum(axis=0)
        return dout @ self.params.weights


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._cache = x > 0
        return F.relu(x)

    def backward(self, dout):
        return dout * self._cached()


class GlobalAvgPool(Layer):
    def forward(self, x, train=False, rng=None):
        self._cache = x.shape
        return F.global_avg_pool(x)

    def backward(self, dout):
        b, c, h, w = self._cached()
        return np.broadcast_to(dout[:, :, None, None] / (h * w), (b, c, h, w)).copy()


class Reshape(Layer):
    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x, train=False, rng=None):
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dout):
        return dout.reshape(self._cached())


class Dropout(Layer):
    """Inverted dropout: active only when `train` is true."""

    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise InvalidRate(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train=False, rng=None):
        if train and self.rate > 0.0:
            if rng is None:
                raise ValueError("dropout in train mode needs an rng")
            mask = F.dropout_mask(x.shape, self.rate, rng)
        else:
            mask = None
        self._cache = (mask,)
        return x if mask is None else x * mask

    def backward(self, dout):
        (mask,) = self._cached()
        return dout if mask is None else dout * mask


class Sequential(Layer):
    def __init__(self, *layers):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        self._cache = True
        return x

    def backward(self, dout):
        self._cached()
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]


def check_input_shape(x, expected, what="input"):
    if tuple(x.shape[1:]) != tuple(expected):
        raise ShapeMismatch(f"{what} shape {tuple(x.shape[1:])} != expected {tuple(expected)}")
