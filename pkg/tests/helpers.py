"""Shared test utilities: independent oracles and finite-difference checking.

The oracles here are deliberately written as plain nested loops / direct
formulas so they stay independent of the vectorized implementations they
verify.
"""

import numpy as np

from huruf import data, network, training

DATA_DIR = __file__.rsplit("/", 1)[0] + "/data"


def conv_oracle(x, kernels, bias):
    """Direct nested-loop same-padding 3x3 cross-correlation."""
    n, h, w, c = x.shape
    o = kernels.shape[0]
    out = np.zeros((n, h, w, o), dtype=np.float64)
    for s in range(n):
        for i in range(h):
            for j in range(w):
                for oc in range(o):
                    acc = float(bias[oc])
                    for di in range(3):
                        for dj in range(3):
                            ii, jj = i + di - 1, j + dj - 1
                            if 0 <= ii < h and 0 <= jj < w:
                                for ci in range(c):
                                    acc += float(x[s, ii, jj, ci]) * float(
                                        kernels[oc, di, dj, ci]
                                    )
                    out[s, i, j, oc] = acc
    return out


def maxpool_oracle(x):
    """Direct window enumeration for 2x2 stride-2 max pooling."""
    n, h, w, c = x.shape
    out = np.zeros((n, h // 2, w // 2, c), dtype=x.dtype)
    for s in range(n):
        for i in range(h // 2):
            for j in range(w // 2):
                for ci in range(c):
                    out[s, i, j, ci] = max(
                        x[s, 2 * i, 2 * j, ci],
                        x[s, 2 * i, 2 * j + 1, ci],
                        x[s, 2 * i + 1, 2 * j, ci],
                        x[s, 2 * i + 1, 2 * j + 1, ci],
                    )
    return out


def rel_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(b), floor)
    return float(np.max(np.abs(a - b) / denom))


def numerical_gradient(f, x, h=1e-5):
    """Central finite differences of a scalar function w.r.t. array x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def tiny_spec(classes=3, side=8, filters=(2, 3), dropout=0.2):
    return network.ModelSpec(
        num_classes=classes, side=side, conv_filters=filters, dropout_rate=dropout
    )


def tiny_model(seed=0, dtype=np.float64, **kwargs):
    spec = tiny_spec(**kwargs)
    return training.init_params(spec, "uniform", seed, dtype=dtype)


def check_model_gradients(seed, dropout=0.2, steps=(1e-5, 1e-6)):
    """FD-check every parameter of the 2-block tiny network for one seed.

    Returns the worst relative error across all parameters. Each element is
    differenced at two step sizes and the better agreement is kept: with
    small init weights some relu/maxpool kinks sit within one step of a
    parameter, which corrupts FD at that step but not at the other, while a
    genuinely wrong analytic gradient fails at every step.
    """
    model = tiny_model(seed=seed, dropout=dropout)
    rng = np.random.default_rng([seed, 1])
    x = rng.random((2, 8, 8, 1))
    y = data.one_hot(rng.integers(0, 3, size=2), 3)
    mask_seed = 10_000 + seed

    def loss():
        p = model.forward(
            x, mode="train", rng=np.random.default_rng(mask_seed), update_running=False
        )
        model._caches = None
        model._probs = None
        return training.cross_entropy_loss(p, y)

    model.forward(
        x, mode="train", rng=np.random.default_rng(mask_seed), update_running=False
    )
    grads = model.backward(y)
    worst = 0.0
    for prm in model.parameters():
        flat = prm.value.reshape(-1)
        ana = grads[prm.name].reshape(-1)
        for i in range(flat.size):
            errs = []
            for h in steps:
                orig = flat[i]
                flat[i] = orig + h
                lp = loss()
                flat[i] = orig - h
                lm = loss()
                flat[i] = orig
                num = (lp - lm) / (2 * h)
                errs.append(rel_error(num, ana[i]))
            worst = max(worst, min(errs))
    return worst
