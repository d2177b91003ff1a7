"""Minimal dense-network core: forward, backprop, losses, Adam.

Double precision numpy throughout, no GPU path: training runs are
bit-reproducible given (seed, data order). The finite-difference
gradient check is the independent oracle for every loss/head
combination used by the event and Q-function models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import PitchlabError

RELU = "relu"
IDENTITY = "identity"


class DimensionError(PitchlabError, ValueError):
    """Input/parameter shapes do not chain."""


class TrainingDivergedError(PitchlabError, RuntimeError):
    """A loss became non-finite during training."""


@dataclass
class Layer:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]


@dataclass
class Mlp:
    layers: List[Layer]
    seed: int

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def copy(self) -> "Mlp":
        return Mlp(
            layers=[Layer(l.w.copy(), l.b.copy(), l.activation) for l in self.layers],
            seed=self.seed,
        )

    def param_count(self) -> int:
        return sum(l.w.size + l.b.size for l in self.layers)


def mlp_init(layer_sizes: Sequence[int], seed: int) -> Mlp:
    """Glorot-uniform weights and zero biases from a seeded generator.

    Hidden layers use ReLU; the last layer is linear (heads apply their
    own link).
    """
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if any(s <= 0 for s in layer_sizes):
        raise ValueError(f"layer sizes must be positive, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    layers: List[Layer] = []
    n_layers = len(layer_sizes) - 1
    for i in range(n_layers):
        fan_in, fan_out = layer_sizes[i], layer_sizes[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        activation = IDENTITY if i == n_layers - 1 else RELU
        layers.append(Layer(w, b, activation))
    return Mlp(layers=layers, seed=seed)


def forward(m: Mlp, x: np.ndarray) -> np.ndarray:
    out, _ = forward_cached(m, x)
    return out


def forward_cached(m: Mlp, x: np.ndarray) -> Tuple[np.ndarray, list]:
    """Forward pass keeping per-layer inputs and pre-activations."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != m.in_dim:
        raise DimensionError(f"input dim {x.shape[1]} != model dim {m.in_dim}")
    caches = []
    a = x
    for layer in m.layers:
        z = a @ layer.w.T + layer.b
        caches.append((a, z))
        if layer.activation == RELU:
            a = np.maximum(z, 0.0)
        else:
            a = z
    return a, caches


def backward(m: Mlp, caches: list, dout: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Backpropagate an output gradient; returns (dw, db) per layer."""
    grads: List[Optional[Tuple[np.ndarray, np.ndarray]]] = [None] * len(m.layers)
    grad = dout
    for i in reversed(range(len(m.layers))):
        layer = m.layers[i]
        layer_input, z = caches[i]
        if layer.activation == RELU:
            grad = grad * (z > 0.0)
        dw = grad.T @ layer_input
        db = grad.sum(axis=0)
        grads[i] = (dw, db)
        if i > 0:
            grad = grad @ layer.w
    return grads  # type: ignore[return-value]


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; strictly positive, rows sum to 1."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, class_index) -> float:
    """Mean negative log softmax probability of the target class."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 1:
        logits = logits[None, :]
    idx = np.atleast_1d(np.asarray(class_index, dtype=np.int64))
    if idx.min() < 0 or idx.max() >= logits.shape[1]:
        raise IndexError(f"class index outside [0, {logits.shape[1]})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_z - shifted[np.arange(len(idx)), idx]))


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


class GroupedCrossEntropy:
    """Sum of per-group cross-entropies over a partitioned output vector.

    The output splits into contiguous logit groups (e.g. one 9-way
    action head, or 41/106/69 time-x-y heads on a single network); the
    loss is the batch mean of the summed group CEs.
    """

    def __init__(self, group_sizes: Sequence[int], targets: np.ndarray):
        self.group_sizes = tuple(group_sizes)
        self.targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
        self.offsets = np.concatenate([[0], np.cumsum(self.group_sizes)])

    def value_and_output_grad(self, outputs: np.ndarray) -> Tuple[float, np.ndarray]:
        n = outputs.shape[0]
        if self.targets.shape != (n, len(self.group_sizes)):
            raise DimensionError(
                f"targets shape {self.targets.shape} != ({n}, {len(self.group_sizes)})"
            )
        if self.offsets[-1] != outputs.shape[1]:
            raise DimensionError(
                f"group sizes sum to {self.offsets[-1]} but output dim is {outputs.shape[1]}"
            )
        total = 0.0
        dout = np.zeros_like(outputs)
        rows = np.arange(n)
        for g, size in enumerate(self.group_sizes):
            lo, hi = self.offsets[g], self.offsets[g + 1]
            logits = outputs[:, lo:hi]
            idx = self.targets[:, g]
            if idx.min() < 0 or idx.max() >= size:
                raise IndexError(f"group {g} class index outside [0, {size})")
            total += cross_entropy(logits, idx)
            probs = softmax(logits)
            probs[rows, idx] -= 1.0
            dout[:, lo:hi] = probs / n
        return total, dout

    def value(self, outputs: np.ndarray) -> float:
        return self.value_and_output_grad(outputs)[0]


class MeanSquaredError:
    def __init__(self, targets: np.ndarray):
        self.targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))

    def value_and_output_grad(self, outputs: np.ndarray) -> Tuple[float, np.ndarray]:
        if outputs.shape != self.targets.shape:
            raise DimensionError(
                f"shape mismatch {outputs.shape} vs {self.targets.shape}"
            )
        diff = outputs - self.targets
        return float(np.mean(diff**2)), 2.0 * diff / diff.size

    def value(self, outputs: np.ndarray) -> float:
        return self.value_and_output_grad(outputs)[0]


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    v: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


def adam_init(model: Mlp, learning_rate: float) -> AdamState:
    state = AdamState(learning_rate=learning_rate)
    for layer in model.layers:
        state.m.append((np.zeros_like(layer.w), np.zeros_like(layer.b)))
        state.v.append((np.zeros_like(layer.w), np.zeros_like(layer.b)))
    return state


def adam_apply(
    model: Mlp,
    state: AdamState,
    grads: Sequence[Tuple[np.ndarray, np.ndarray]],
) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    lr, b1, b2, eps = state.learning_rate, state.beta1, state.beta2, state.epsilon
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t
    for i, layer in enumerate(model.layers):
        for param, grad, m_arr, v_arr in (
            (layer.w, grads[i][0], state.m[i][0], state.v[i][0]),
            (layer.b, grads[i][1], state.m[i][1], state.v[i][1]),
        ):
            m_arr *= b1
            m_arr += (1.0 - b1) * grad
            v_arr *= b2
            v_arr += (1.0 - b2) * grad**2
            m_hat = m_arr / correction1
            v_hat = v_arr / correction2
            param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def loss_and_grads(
    model: Mlp, x: np.ndarray, loss_spec
) -> Tuple[float, List[Tuple[np.ndarray, np.ndarray]]]:
    outputs, caches = forward_cached(model, x)
    value, dout = loss_spec.value_and_output_grad(outputs)
    return value, backward(model, caches, dout)


def train_step(model: Mlp, state: AdamState, x: np.ndarray, loss_spec) -> float:
    """Full backprop + one Adam update; returns the pre-update loss."""
    value, grads = loss_and_grads(model, x, loss_spec)
    if not np.isfinite(value):
        raise TrainingDivergedError(f"non-finite loss {value!r} at step {state.step + 1}")
    adam_apply(model, state, grads)
    return value


_SMALL_GRAD = 1e-6
_ABS_SCALE = 1e-3  # maps the absolute 1e-7 tolerance onto the 1e-4 threshold


def grad_check(model: Mlp, x: np.ndarray, loss_spec, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference grads.

    Where both gradients are below 1e-6 in magnitude the comparison
    falls back to absolute error scaled so the documented pass
    threshold (1e-4) corresponds to an absolute error of 1e-7.
    """
    if model.param_count() >= 10_000:
        raise ValueError("grad_check is meant for small networks (<10k parameters)")
    _, analytic = loss_and_grads(model, x, loss_spec)

    worst = 0.0
    for i, layer in enumerate(model.layers):
        for param, grad in ((layer.w, analytic[i][0]), (layer.b, analytic[i][1])):
            flat = param.reshape(-1)
            gflat = grad.reshape(-1)
            for j in range(flat.size):
                original = flat[j]
                flat[j] = original + h
                up = loss_spec.value(forward(model, x))
                flat[j] = original - h
                down = loss_spec.value(forward(model, x))
                flat[j] = original
                numeric = (up - down) / (2.0 * h)
                err = abs(gflat[j] - numeric)
                scale = max(abs(gflat[j]), abs(numeric))
                score = err / scale if scale >= _SMALL_GRAD else err / _ABS_SCALE
                worst = max(worst, score)
    return worst
