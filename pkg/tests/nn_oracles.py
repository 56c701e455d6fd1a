"""Independent oracles for the network kernel."""
import numpy as np

from mcalab import nn


def dense_forward(params, x):
    """Per-sample, per-unit loops; a different evaluation order from the library."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = []
    n_layers = len(params) // 2
    for row in x:
        h = list(row)
        for k in range(n_layers):
            W, b = params[2 * k], params[2 * k + 1]
            z = [sum(h[i] * W[i, j] for i in range(W.shape[0])) + b[j] for j in range(W.shape[1])]
            h = [max(v, 0.0) for v in z] if k < n_layers - 1 else z
        out.append(h)
    return np.array(out)


def fd_relative_errors(rng, h=1e-5, batch=4):
    """Analytic vs central-difference gradients for one random small MLP.

    The scalar loss is ``sum(output * G)`` for a fixed random ``G``.  Relative
    error per entry is ``|a - n| / max(|a|, |n|, 1e-7)``.  Returns the max
    over all parameters.
    """
    n_in, n_out = rng.integers(3, 11, size=2)
    hidden = rng.integers(3, 11, size=2)
    sizes = (int(n_in), int(hidden[0]), int(hidden[1]), int(n_out))
    mlp = nn.Mlp.init(sizes, rng)
    for p in mlp.params[1::2]:
        p += rng.normal(0, 0.1, p.shape)
    x = rng.normal(size=(batch, sizes[0]))
    G = rng.normal(size=(batch, sizes[-1]))
    out, cache = nn.forward(mlp.params, x, return_cache=True)
    grads, _ = nn.backward(mlp.params, cache, G)

    def loss():
        return float(np.sum(nn.forward(mlp.params, x) * G))

    worst = 0.0
    for p, g in zip(mlp.params, grads):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            lp = loss()
            p[idx] = old - h
            lm = loss()
            p[idx] = old
            num = (lp - lm) / (2 * h)
            a = g[idx]
            worst = max(worst, abs(a - num) / max(abs(a), abs(num), 1e-7))
    return worst, sizes
