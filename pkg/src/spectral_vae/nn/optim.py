import numpy as np


class Adam:
    """Adam with bias correction; moment buffers live as long as the optimizer."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self._m = [np.zeros_like(p) for lp in self.params for p, _ in lp.arrays()]
        self._v = [np.zeros_like(p) for p in self._m]

    def zero_grad(self):
        for lp in self.params:
            lp.zero_grad()

    def step(self):
        self.t += 1
        adam_step(self.params, self._m, self._v, self.lr, self.beta1, self.beta2,
                  self.eps, self.t)


def adam_step(params, m, v, lr, beta1, beta2, eps, t):
    """One in-place Adam update of every array in `params` at step `t` (>= 1)."""
    if t < 1:
        raise ValueError(f"Adam step count starts at 1, got {t}")
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    pairs = [pair for lp in params for pair in lp.arrays()]
    for (value, grad), m_i, v_i in zip(pairs, m, v):
        m_i *= beta1
        m_i += (1.0 - beta1) * grad
        v_i *= beta2
        v_i += (1.0 - beta2) * grad * grad
        value -= lr * (m_i / c1) / (np.sqrt(v_i / c2) + eps)
