"""One-hidden-layer ReLU network, squared-error backprop and Adam, in numpy.

Checkpoint format (plain text, UTF-8, ``\\n`` line endings)::

    uavnoma-mlp 1
    networks <N>
    layers <n_in> <n_hidden> <n_out>     # repeated per network, followed by
    <value>                               # W1 (row-major, hidden x n_in), b1,
    ...                                   # W2 (row-major, out x hidden), b2

Values are written with 17 significant digits so a load reproduces the
parameters bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = "uavnoma-mlp 1"
PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass
class MlpParams:
    """Weights and biases; all four arrays are views into one flat vector."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    flat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        parts = [np.asarray(a, dtype=float) for a in (self.W1, self.b1, self.W2, self.b2)]
        self.flat = np.concatenate([a.ravel() for a in parts])
        views, start = [], 0
        for a in parts:
            views.append(self.flat[start:start + a.size].reshape(a.shape))
            start += a.size
        self.W1, self.b1, self.W2, self.b2 = views

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (self.W1.shape[1], self.W1.shape[0], self.W2.shape[0])

    @classmethod
    def zeros_like(cls, other: "MlpParams") -> "MlpParams":
        return cls(*(np.zeros_like(a) for a in other.arrays()))

    def arrays(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_mlp(n_in: int, n_hidden: int, n_out: int, rng) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    def glorot(fan_out, fan_in):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))
    return MlpParams(glorot(n_hidden, n_in), np.zeros(n_hidden),
                     glorot(n_out, n_hidden), np.zeros(n_out))


def forward(params: MlpParams, state) -> np.ndarray:
    """Q-values for one state vector or a batch of shape ``(N, n_in)``."""
    s = np.asarray(state, dtype=float)
    if s.shape[-1] != params.W1.shape[1]:
        raise ValueError(f"state has {s.shape[-1]} entries, network expects {params.W1.shape[1]}")
    hidden = np.maximum(s @ params.W1.T + params.b1, 0.0)
    return hidden @ params.W2.T + params.b2


def loss_and_grads(params: MlpParams, states, actions, targets):
    """Mean over the batch of ``(y - Q(s, a))**2`` and its exact gradients.

    Only the output of the taken action enters the loss.
    """
    s = np.atleast_2d(np.asarray(states, dtype=float))
    a = np.atleast_1d(np.asarray(actions, dtype=int))
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    n = s.shape[0]
    pre = s @ params.W1.T
    pre += params.b1
    hidden = np.maximum(pre, 0.0)
    q_taken = np.einsum("ij,ij->i", hidden, params.W2[a]) + params.b2[a]
    err = q_taken - y
    coef = (2.0 / n) * err
    grads = MlpParams.zeros_like(params)
    dq = np.zeros((n, params.W2.shape[0]))
    dq[np.arange(n), a] = coef
    np.matmul(dq.T, hidden, out=grads.W2)
    np.add.at(grads.b2, a, coef)
    dh = params.W2[a] * coef[:, None]
    dh *= pre > 0
    np.matmul(dh.T, s, out=grads.W1)
    dh.sum(axis=0, out=grads.b1)
    return float(np.dot(err, err) / n), grads


def backward(params: MlpParams, state, action_index: int, target: float) -> MlpParams:
    return loss_and_grads(params, state, [action_index], [target])[1]


@dataclass
class AdamState:
    """Moment accumulators are flat, aligned with :attr:`MlpParams.flat`."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def zeros_like(cls, params: MlpParams, **kw) -> "AdamState":
        return cls(np.zeros_like(params.flat), np.zeros_like(params.flat), **kw)


def adam_step(params: MlpParams, adam: AdamState, grads: MlpParams):
    """Bias-corrected Adam update, applied in place; returns ``(params, adam)``."""
    adam.step += 1
    c1 = 1.0 - adam.beta1**adam.step
    c2 = 1.0 - adam.beta2**adam.step
    g, m, v = grads.flat, adam.m, adam.v
    m *= adam.beta1
    m += (1.0 - adam.beta1) * g
    v *= adam.beta2
    v += (1.0 - adam.beta2) * (g * g)
    denom = np.sqrt(v)
    denom *= 1.0 / np.sqrt(c2)
    denom += adam.eps_hat
    params.flat -= (adam.lr / c1) * m / denom
    return params, adam


def copy_weights(src: MlpParams) -> MlpParams:
    return MlpParams(*(a.copy() for a in src.arrays()))


def save_checkpoint(path, nets) -> None:
    if isinstance(nets, MlpParams):
        nets = [nets]
    lines = [CHECKPOINT_MAGIC, f"networks {len(nets)}"]
    for net in nets:
        lines.append("layers " + " ".join(str(n) for n in net.sizes))
        for arr in net.arrays():
            lines.extend(f"{x:.17g}" for x in np.ravel(arr))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path) -> list[MlpParams]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    tokens = path.read_text(encoding="utf-8").split("\n")
    if not tokens or tokens[0].strip() != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    try:
        return _parse_checkpoint(tokens, path)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: corrupt checkpoint ({exc})") from None


def _parse_checkpoint(tokens, path) -> list[MlpParams]:
    pos = 1
    head, count = tokens[pos].split()
    if head != "networks":
        raise ValueError(f"{path}: malformed header")
    pos += 1
    nets = []
    for _ in range(int(count)):
        tag, *sizes = tokens[pos].split()
        if tag != "layers" or len(sizes) != 3:
            raise ValueError(f"{path}: malformed layer line {pos + 1}")
        n_in, n_hidden, n_out = map(int, sizes)
        pos += 1
        shapes = [(n_hidden, n_in), (n_hidden,), (n_out, n_hidden), (n_out,)]
        arrays = []
        for shape in shapes:
            size = int(np.prod(shape))
            if pos + size > len(tokens):
                raise ValueError("truncated")
            arrays.append(np.array([float(x) for x in tokens[pos:pos + size]]).reshape(shape))
            pos += size
        nets.append(MlpParams(*arrays))
    return nets
