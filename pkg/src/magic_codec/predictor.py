"""Pattern prediction model: a small ReLU regression network.

Weights are stored as float32 and all arithmetic is done in float64, so a
saved and reloaded model gives identical outputs.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_HIDDEN = (128, 64)


class TrainingDivergedError(RuntimeError):
    """Training loss became non-finite; retry with a smaller learning rate."""


@dataclass(eq=False)
class PredictorModel:
    """Dense network ``sizes[0] -> ... -> sizes[-1]``, ReLU on hidden layers."""

    weights: list            # weights[i] has shape (sizes[i+1], sizes[i])
    biases: list
    losses: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.float32) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float32).reshape(-1) for b in self.biases]
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != b.shape[0]:
                raise ValueError("bias length does not match layer width")
        for w0, w1 in zip(self.weights, self.weights[1:]):
            if w1.shape[1] != w0.shape[0]:
                raise ValueError("layer shapes do not chain")

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def params(self) -> list[np.ndarray]:
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` as float64 copies."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w.astype(np.float64), b.astype(np.float64)]
        return out

    def __eq__(self, other):
        if not isinstance(other, PredictorModel):
            return NotImplemented
        return (self.sizes == other.sizes
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases)))

    def to_bytes(self) -> bytes:
        sizes = self.sizes
        head = struct.pack("<B", len(sizes) - 1) + struct.pack(f"<{len(sizes)}I", *sizes)
        body = b"".join(w.astype("<f4").tobytes() + b.astype("<f4").tobytes()
                        for w, b in zip(self.weights, self.biases))
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["PredictorModel", int]:
        """Parse a model at ``offset``; returns the model and the end offset."""
        (nl,) = struct.unpack_from("<B", data, offset)
        offset += 1
        sizes = struct.unpack_from(f"<{nl + 1}I", data, offset)
        offset += 4 * (nl + 1)
        ws, bs = [], []
        for i in range(nl):
            n_in, n_out = sizes[i], sizes[i + 1]
            nw = n_in * n_out
            if offset + 4 * (nw + n_out) > len(data):
                raise ValueError("truncated model weights")
            ws.append(np.frombuffer(data, "<f4", nw, offset).reshape(n_out, n_in))
            offset += 4 * nw
            bs.append(np.frombuffer(data, "<f4", n_out, offset))
            offset += 4 * n_out
        return cls(weights=ws, biases=bs), offset


def init_model(sizes=(4096,) + DEFAULT_HIDDEN + (1,), seed: int = 0) -> PredictorModel:
    """He-initialised hidden layers; the output layer and all biases start at zero.

    Targets are tiny after scaling by the dictionary size, so a random
    output layer would start orders of magnitude off.
    """
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for n_in, n_out in zip(sizes[:-2], sizes[1:-1]):
        ws.append(rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in)))
        bs.append(np.zeros(n_out))
    ws.append(np.zeros((sizes[-1], sizes[-2])))
    bs.append(np.zeros(sizes[-1]))
    return PredictorModel(weights=ws, biases=bs)


def _forward(params, x):
    acts = [x]
    h = x
    nl = len(params) // 2
    for i in range(nl):
        z = h @ params[2 * i].T + params[2 * i + 1]
        h = np.maximum(z, 0.0) if i < nl - 1 else z
        acts.append(h)
    return acts


def forward(m: PredictorModel, x) -> np.ndarray | float:
    """Network output for one feature vector (returns float) or a batch (returns 1-D array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None] if single else x
    if xb.shape[1] != m.sizes[0]:
        raise ValueError(f"expected {m.sizes[0]} features, got {xb.shape[1]}")
    out = _forward(m.params(), xb)[-1][:, 0]
    return float(out[0]) if single else out


def loss_and_grads(params, x, y):
    """Mean squared error and its gradient w.r.t. each entry of ``params``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    acts = _forward(params, x)
    n = len(x)
    err = acts[-1][:, 0] - y
    loss = float(np.mean(err ** 2))
    grads = [None] * len(params)
    delta = (2.0 / n) * err[:, None]
    nl = len(params) // 2
    for i in range(nl - 1, -1, -1):
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ params[2 * i]) * (acts[i] > 0)
    return loss, grads


def train(m: PredictorModel, x, y, epochs: int = 100, lr: float = 0.01, seed: int = 0,
          dict_size: int = 4096, batch_size: int = 32) -> PredictorModel:
    """Mini-batch gradient descent on MSE against ``y / (dict_size - 1)``.

    Returns a new model; its ``losses`` holds the mean batch loss per epoch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(x) == 0:
        raise ValueError("empty training set")
    if len(x) != len(y):
        raise ValueError("inputs and targets differ in length")
    target = y / max(dict_size - 1, 1)
    params = m.params()
    rng = np.random.default_rng(seed)
    losses = []
    for epoch in range(epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for s in range(0, len(x), batch_size):
            idx = order[s:s + batch_size]
            # overflow shows up as a non-finite loss, handled just below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_grads(params, x[idx], target[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss is {loss} at epoch {epoch} (lr={lr})")
            for p, g in zip(params, grads):
                p -= lr * g
            total += loss * len(idx)
        losses.append(total / len(x))
        if not np.isfinite(losses[-1]):
            raise TrainingDivergedError(f"loss is {losses[-1]} at epoch {epoch} (lr={lr})")
    if losses:
        log.debug("trained %d epochs, final loss %.6g", epochs, losses[-1])
    out = PredictorModel(weights=params[0::2], biases=params[1::2])
    out.losses = losses
    return out


def predict_labels(m: PredictorModel, x, d, dict_size: int) -> np.ndarray:
    """Vectorised :func:`predict_label`; ``d`` may be a per-row array."""
    d = np.asarray(d, dtype=np.int64)
    if (d < 1).any():
        raise ValueError("divisor d must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    raw = np.atleast_1d(forward(m, x)) * (dict_size - 1)
    raw = np.nan_to_num(raw, nan=0.0, posinf=dict_size - 1, neginf=0.0)
    raw = np.floor(np.clip(raw, 0, dict_size - 1) + 0.5).astype(np.int64)
    return raw // d


def predict_label(m: PredictorModel, x, d: int, dict_size: int) -> int:
    """Pattern label for one block: round the rescaled output, clamp, floor-divide by d."""
    return int(predict_labels(m, np.asarray(x)[None], d, dict_size)[0])
