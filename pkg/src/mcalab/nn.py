"""Dense MLP kernel in float64 numpy: forward/backward, diagonal Gaussian
policy head, Adam, and a small binary weight container.

Parameters are kept as a flat ``list`` of arrays ``[W0, b0, W1, b1, ...]``
with ``W`` of shape ``(fan_in, fan_out)``, so inputs are row batches.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

LOG_2PI = np.log(2.0 * np.pi)
MAGIC = b"MCALABW1"


class ShapeError(ValueError):
    pass


class WeightFileError(ValueError):
    pass


@dataclass
class Mlp:
    sizes: tuple
    params: list
    activation: str = "relu"

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        expected = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            expected += [(fan_in, fan_out), (fan_out,)]
        if [p.shape for p in self.params] != expected:
            raise ShapeError(f"parameter shapes {[p.shape for p in self.params]} do not match {self.sizes}")

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, out_gain: float = 1.0, hidden_gain: float = np.sqrt(2.0)):
        """Orthogonal initialisation with zero biases; ``out_gain`` scales the last layer."""
        params = []
        n_layers = len(sizes) - 1
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = out_gain if k == n_layers - 1 else hidden_gain
            params += [gain * _orthogonal(fan_in, fan_out, rng), np.zeros(fan_out)]
        return cls(tuple(sizes), params)

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [p.copy() for p in self.params], self.activation)

    def forward(self, x):
        return forward(self.params, x)

    def __call__(self, x):
        return forward(self.params, x)


def _orthogonal(n_in: int, n_out: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if n_in >= n_out else q.T


def forward(params, x, return_cache: bool = False):
    """ReLU hidden layers, linear output. ``x`` is ``(in,)`` or ``(batch, in)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params[0].shape[0]:
        raise ShapeError(f"input width {x.shape[-1]} != {params[0].shape[0]}")
    cache = [x]
    h = x
    n_layers = len(params) // 2
    for k in range(n_layers):
        z = h @ params[2 * k] + params[2 * k + 1]
        h = np.maximum(z, 0.0) if k < n_layers - 1 else z
        cache.append(h)
    return (h, cache) if return_cache else h


def backward(params, cache, output_grad):
    """Gradients of ``sum(output * output_grad)`` w.r.t. every parameter (batch-summed).

    Also returns the gradient w.r.t. the input as a second value.
    """
    g = np.asarray(output_grad, dtype=float)
    n_layers = len(params) // 2
    grads = [None] * len(params)
    for k in reversed(range(n_layers)):
        h_in = cache[k]
        if g.ndim == 1:
            grads[2 * k] = np.outer(h_in, g)
            grads[2 * k + 1] = g.copy()
        else:
            grads[2 * k] = h_in.T @ g
            grads[2 * k + 1] = g.sum(axis=0)
        g = g @ params[2 * k].T
        if k > 0:
            g = g * (cache[k] > 0.0)
    return grads, g


# -- Gaussian policy head -----------------------------------------------------

def gaussian_log_prob(action, mean, log_std) -> np.ndarray:
    z = (action - mean) * np.exp(-log_std)
    return np.sum(-0.5 * z**2 - log_std - 0.5 * LOG_2PI, axis=-1)


def gaussian_logprob_and_sample(mean, log_std, rng: np.random.Generator):
    mean = np.asarray(mean, dtype=float)
    eps = rng.standard_normal(mean.shape)
    action = mean + np.exp(log_std) * eps
    return action, gaussian_log_prob(action, mean, log_std)


def gaussian_entropy(log_std) -> float:
    log_std = np.asarray(log_std, dtype=float)
    return float(np.sum(log_std + 0.5 * (LOG_2PI + 1.0)))


def gaussian_log_prob_grads(action, mean, log_std):
    """d log_prob / d mean (per sample) and d log_prob / d log_std (per sample)."""
    inv_var = np.exp(-2.0 * log_std)
    diff = action - mean
    return diff * inv_var, diff**2 * inv_var - 1.0


# -- Adam ---------------------------------------------------------------------

@dataclass
class Adam:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default=None)
    v: list = field(default=None)

    def step(self, params, grads):
        """In-place bias-corrected Adam update of ``params``."""
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if [p.shape for p in params] != [g.shape for g in grads]:
            raise ShapeError("gradient shapes do not match parameter shapes")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params


def adam_step(params, grads, state: Adam):
    return state.step(params, grads), state


def clip_grad_norm(grads, max_norm: float):
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        grads = [g * scale for g in grads]
    return grads, norm


# -- weight files -------------------------------------------------------------

def save_weights(path, tensors: dict, meta: dict | None = None) -> None:
    """Write named float64 tensors; see ``docs/weight_format.md`` for the layout."""
    names = list(tensors)
    header = {
        "meta": meta or {},
        "tensors": [{"name": n, "shape": list(np.shape(tensors[n]))} for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes(order="C"))


def load_weights(path) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise WeightFileError(f"{path}: bad magic {data[:8]!r}")
    if len(data) < 12:
        raise WeightFileError(f"{path}: truncated header")
    (hlen,) = struct.unpack("<I", data[8:12])
    try:
        header = json.loads(data[12:12 + hlen].decode("utf-8"))
        entries = [(e["name"], tuple(e["shape"])) for e in header["tensors"]]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise WeightFileError(f"{path}: unreadable header ({exc})") from None
    offset = 12 + hlen
    tensors = {}
    for name, shape in entries:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise WeightFileError(f"{path}: truncated tensor {name}")
        tensors[name] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).astype(float)
        offset = end
    if offset != len(data):
        raise WeightFileError(f"{path}: {len(data) - offset} trailing bytes")
    return tensors, header.get("meta", {})


def mlp_tensors(prefix: str, mlp: Mlp) -> dict:
    out = {}
    for k in range(len(mlp.params) // 2):
        out[f"{prefix}.{k}.weight"] = mlp.params[2 * k]
        out[f"{prefix}.{k}.bias"] = mlp.params[2 * k + 1]
    return out


def mlp_from_tensors(prefix: str, tensors: dict, sizes) -> Mlp:
    params = []
    for k in range(len(sizes) - 1):
        try:
            params += [tensors[f"{prefix}.{k}.weight"], tensors[f"{prefix}.{k}.bias"]]
        except KeyError as exc:
            raise WeightFileError(f"missing tensor {exc}") from None
    return Mlp(tuple(sizes), params)
