"""Central finite-difference gradient checks used across the test suite."""

import numpy as np

STEP = 1e-4


def rel_error(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def _probe(f, array, index, step):
    old = array[index]
    array[index] = old + step
    plus = f()
    array[index] = old - step
    minus = f()
    array[index] = old
    return plus, minus


def numeric_grad(f, array, index, step=STEP):
    plus, minus = _probe(f, array, index, step)
    return (plus - minus) / (2 * step)


def sample_indices(shape, n, rng):
    size = int(np.prod(shape))
    flat = rng.choice(size, size=min(n, size), replace=False)
    return [np.unravel_index(i, shape) for i in flat]


def check_array(f, array, analytic, rng, n=20, tol=1e-3, step=STEP, min_scale=1e-6):
    """Compare `analytic` with central differences of f on up to n entries of `array`.

    Entries whose gradients are both below `min_scale` in magnitude are
    skipped for the relative test (they are compared absolutely instead).
    A disagreeing entry is re-probed with steps 100x and 10^4x smaller before
    failing: in a wide ReLU net a bias nudge of 1e-4 can flip many units at
    once, which spoils the coarse difference. Returns the worst relative error.
    """
    worst = 0.0
    for idx in sample_indices(array.shape, n, rng):
        num = numeric_grad(f, array, idx, step)
        ana = analytic[idx]
        for finer in (step / 100, step / 10_000):
            if rel_error(num, ana) < tol:
                break
            num = numeric_grad(f, array, idx, finer)
        if max(abs(num), abs(ana)) < min_scale:
            assert abs(num - ana) < 1e-8, (idx, num, ana)
            continue
        err = rel_error(num, ana)
        worst = max(worst, err)
        assert err < tol, f"index {idx}: numeric {num!r} vs analytic {ana!r} (rel {err:.2e})"
    return worst


def check_direction(f, arrays, analytics, rng, step=1e-5, tol=1e-3):
    """Directional-derivative check over all entries of all arrays at once.

    Refines the step like `check_array`, since a joint move crosses kinks too.
    """
    dirs = [rng.standard_normal(a.shape) for a in arrays]
    olds = [a.copy() for a in arrays]
    ana = sum(float(np.sum(g * d)) for g, d in zip(analytics, dirs))

    def along(h):
        values = []
        for sign in (1, -1):
            for a, d, o in zip(arrays, dirs, olds):
                a[...] = o + sign * h * d
            values.append(f())
        for a, o in zip(arrays, olds):
            a[...] = o
        return (values[0] - values[1]) / (2 * h)

    for h in (step, step / 100, step / 10_000):
        num = along(h)
        err = rel_error(num, ana)
        if err < tol:
            break
    assert err < tol, f"directional derivative {num!r} vs {ana!r} (rel {err:.2e})"
    return err


def layer_gradcheck(layer, x, rng, n=15):
    """Check param and input gradients of `layer` under L = sum(out * g)."""
    out = layer.forward(x)
    g = rng.standard_normal(out.shape)

    def loss():
        return float(np.sum(layer.forward(x) * g))

    for p in layer.parameters():
        p.zero_grad()
    layer.forward(x)
    dx = layer.backward(g)
    for p in layer.parameters():
        check_array(loss, p.weights, p.grad_weights.copy(), rng, n=n)
        check_array(loss, p.bias, p.grad_bias.copy(), rng, n=n)
    if dx is not None:
        check_array(loss, x, dx.copy(), rng, n=n)


def params_gradcheck(loss, params, rng, n=10):
    """Per-tensor sampled checks plus one directional check over every parameter.

    `params` are LayerParams whose grad fields already hold the analytic
    gradient of `loss` at the current point.
    """
    values, grads = [], []
    for p in params:
        for value, grad in p.arrays():
            check_array(loss, value, grad.copy(), rng, n=n)
            values.append(value)
            grads.append(grad.copy())
    return check_direction(loss, values, grads, rng)
