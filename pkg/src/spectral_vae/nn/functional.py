"""Array-level forward/backward kernels.

Layouts: images are (batch, channels, height, width). Convolution weights
are (out_channels, in_channels, k, k); transposed-convolution weights are
(in_channels, out_channels, k, k), i.e. the weight of the convolution it is
the adjoint of.
"""

import numpy as np

from ..errors import InvalidRate, ShapeMismatch


def conv_output_size(size, kernel, stride, pad):
    return (size + 2 * pad - kernel) // stride + 1


def conv_transposed_output_size(size, kernel, stride, pad):
    return (size - 1) * stride - 2 * pad + kernel


def _windows(x, kernel, stride, pad):
    """Strided (B, C, Ho, Wo, k, k) view of the zero-padded input."""
    _, _, h, w = x.shape
    ho = conv_output_size(h, kernel, stride, pad)
    wo = conv_output_size(w, kernel, stride, pad)
    if ho <= 0 or wo <= 0:
        raise ShapeMismatch(
            f"kernel {kernel} does not fit input {h}x{w} with pad {pad}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = np.lib.stride_tricks.sliding_window_view(xp, (kernel, kernel), axis=(2, 3))
    return win[:, :, ::stride, ::stride][:, :, :ho, :wo]


def _col2im(cols, in_shape, stride, pad):
    """Adjoint of `_windows`: scatter-add (k, k, B, C, Ho, Wo) patches into an image."""
    b, c, h, w = in_shape
    k, _, _, _, ho, wo = cols.shape
    out = np.zeros((b, c, h + 2 * pad, w + 2 * pad))
    for u in range(k):
        for v in range(k):
            out[:, :, u:u + stride * (ho - 1) + 1:stride,
                v:v + stride * (wo - 1) + 1:stride] += cols[u, v]
    if pad:
        out = out[:, :, pad:pad + h, pad:pad + w]
    return out


def _check_conv(x, weight, in_axis):
    if x.ndim != 4:
        raise ShapeMismatch(f"expected a 4-D input, got shape {x.shape}")
    if weight.shape[in_axis] != x.shape[1]:
        raise ShapeMismatch(
            f"input has {x.shape[1]} channels, weight expects {weight.shape[in_axis]}")


def conv2d_forward(x, weight, bias, stride=1, pad=0):
    _check_conv(x, weight, 1)
    cols = _windows(x, weight.shape[2], stride, pad)
    out = np.tensordot(cols, weight, axes=([1, 4, 5], [1, 2, 3]))  # B, Ho, Wo, O
    out = out.transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias[None, :, None, None]
    return np.ascontiguousarray(out)


def conv2d_input_grad(dout, weight, in_shape, stride=1, pad=0):
    """d(conv)/d(input) applied to `dout`; also the forward of the transposed conv."""
    dcols = np.tensordot(weight, dout, axes=([0], [1]))  # C, k, k, B, Ho, Wo
    dcols = np.ascontiguousarray(dcols.transpose(1, 2, 3, 0, 4, 5))
    return _col2im(dcols, in_shape, stride, pad)


def conv2d_weight_grad(x, dout, kernel, stride=1, pad=0):
    cols = _windows(x, kernel, stride, pad)
    return np.tensordot(dout, cols, axes=([0, 2, 3], [0, 2, 3]))


def conv2d_transposed_forward(x, weight, bias, stride=1, pad=0):
    _check_conv(x, weight, 0)
    k = weight.shape[2]
    b, _, h, w = x.shape
    ho = conv_transposed_output_size(h, k, stride, pad)
    wo = conv_transposed_output_size(w, k, stride, pad)
    if ho <= 0 or wo <= 0:
        raise ShapeMismatch(f"transposed conv output would be {ho}x{wo}")
    out = conv2d_input_grad(x, weight, (b, weight.shape[1], ho, wo), stride, pad)
    if bias is not None:
        out = out + bias[None, :, None, None]
    return out


def dense_forward(x, weight, bias):
    if x.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatch(f"dense expects (batch, {weight.shape[1]}), got {x.shape}")
    return x @ weight.T + bias


def relu(x):
    return np.maximum(x, 0.0)


def global_avg_pool(x):
    if x.ndim != 4:
        raise ShapeMismatch(f"global average pooling needs 4-D input, got {x.shape}")
    return x.mean(axis=(2, 3))


def dropout_mask(shape, rate, rng):
    if not 0.0 <= rate < 1.0:
        raise InvalidRate(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def softmax_xent(logits, labels):
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeMismatch(f"logits {logits.shape} vs labels {labels.shape}")
    logp = log_softmax(logits)
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n
