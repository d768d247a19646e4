"""Minimal dense neural-network engine.

Plain numpy, explicitly seeded, no global state: enough to train the
threat-detector MLPs, the defense autoencoder and the poisoning GAN at
bench scale. Weight matrices are stored (out_units x in_units), inputs are
row-major batches, so a layer computes ``a @ W.T + b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError

ACTIVATIONS = ("relu", "tanh", "none")
OUTPUT_KINDS = ("softmax-2class", "linear")
OPTIMIZERS = ("sgd-momentum", "adam")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def derive_seed(*parts: int) -> int:
    """Stable 64-bit child seed from a tuple of integers.

    Used everywhere a component needs its own RNG stream so that whole
    experiments replay bitwise-identically from a single root seed.
    """
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ModelSpec:
    """Architecture of a dense network: layer widths plus per-layer activation."""

    layer_dims: tuple[int, ...]
    activations: tuple[str, ...]
    output_kind: str = "softmax-2class"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        acts = tuple(self.activations)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "activations", acts)
        if len(dims) < 3:
            raise ValidationError(
                f"need at least 3 layer dims (got {len(dims)}) so a penultimate layer exists"
            )
        if any(d < 1 for d in dims):
            raise ValidationError(f"layer dims must be positive: {dims}")
        if len(acts) != self.n_layers:
            raise ValidationError(
                f"expected {self.n_layers} activation tags, got {len(acts)}"
            )
        for tag in acts:
            if tag not in ACTIVATIONS:
                raise ValidationError(f"unknown activation {tag!r}")
        if self.output_kind not in OUTPUT_KINDS:
            raise ValidationError(f"unknown output kind {self.output_kind!r}")
        if self.output_kind == "softmax-2class" and dims[-1] != 2:
            raise ValidationError(
                f"softmax-2class output requires final dim 2, got {dims[-1]}"
            )

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]


def mlp_spec(input_dim: int, hidden: Sequence[int], output_dim: int = 2) -> ModelSpec:
    """ReLU hidden stack with a linear 2-class head (the detector shape)."""
    dims = (int(input_dim), *(int(h) for h in hidden), int(output_dim))
    acts = ("relu",) * (len(dims) - 2) + ("none",)
    kind = "softmax-2class" if output_dim == 2 else "linear"
    return ModelSpec(dims, acts, kind)


@dataclass
class ModelParams:
    """Per-layer (weight, bias) arrays. Weight i has shape (dims[i+1], dims[i])."""

    layers: list[tuple[np.ndarray, np.ndarray]]

    def copy(self) -> "ModelParams":
        return ModelParams([(w.copy(), b.copy()) for w, b in self.layers])

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in self.layers)

    def flat(self) -> np.ndarray:
        """All parameters concatenated into one vector (weights then bias, per layer)."""
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    batch_size: int = 2048
    learning_rate: float = 0.001
    momentum: float = 0.9
    optimizer: str = "sgd-momentum"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValidationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValidationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


def init_params(spec: ModelSpec, seed: int) -> ModelParams:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for weights and biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out in zip(spec.layer_dims[:-1], spec.layer_dims[1:]):
        bound = 1.0 / np.sqrt(d_in)
        w = rng.uniform(-bound, bound, size=(d_out, d_in))
        b = rng.uniform(-bound, bound, size=d_out)
        layers.append((w, b))
    return ModelParams(layers)


def _activate(z: np.ndarray, tag: str) -> np.ndarray:
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(a: np.ndarray, tag: str) -> np.ndarray:
    # derivative expressed through the activation output, which is all we cache
    if tag == "relu":
        return (a > 0).astype(a.dtype)
    if tag == "tanh":
        return 1.0 - a * a
    return np.ones_like(a)


def forward(
    params: ModelParams, spec: ModelSpec, x: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Run a batch through the network.

    Returns the final-layer output (pre-softmax logits for classifiers) and
    the list of layer activations [x, a1, ..., aL] cached for backward.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"input must be 2-D, got shape {a.shape}")
    activations = [a]
    for i, (w, b) in enumerate(params.layers):
        if a.shape[1] != w.shape[1]:
            raise DimensionError(
                f"layer {i + 1}: expected input width {w.shape[1]}, got {a.shape[1]}"
            )
        z = a @ w.T + b
        a = _activate(z, spec.activations[i])
        activations.append(a)
    return activations[-1], activations


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of 2-class logits against labels in {0, 1}."""
    ls = log_softmax(logits)
    return float(-ls[np.arange(len(labels)), labels].mean())


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


def _check_labels(labels: np.ndarray) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValidationError(f"labels must be 1-D, got shape {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    return y.astype(np.int64)


def _backward_from_output_grad(
    params: ModelParams,
    spec: ModelSpec,
    activations: list[np.ndarray],
    d_out: np.ndarray,
    need_input_grad: bool = False,
) -> tuple[ModelParams, np.ndarray | None]:
    """Backpropagate d(loss)/d(final activation) to parameter (and input) grads."""
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * params.n_layers  # type: ignore
    delta = d_out
    for i in reversed(range(params.n_layers)):
        w, _ = params.layers[i]
        delta = delta * _activation_grad(activations[i + 1], spec.activations[i])
        grads[i] = (delta.T @ activations[i], delta.sum(axis=0))
        if i > 0 or need_input_grad:
            delta = delta @ w
    return ModelParams(grads), (delta if need_input_grad else None)


def backward(
    params: ModelParams, spec: ModelSpec, x: np.ndarray, labels: np.ndarray
) -> ModelParams:
    """Gradients of mean cross-entropy w.r.t. every weight and bias."""
    y = _check_labels(labels)
    logits, activations = forward(params, spec, x)
    delta = softmax(logits)
    delta[np.arange(len(y)), y] -= 1.0
    delta /= len(y)
    grads, _ = _backward_from_output_grad(params, spec, activations, delta)
    return grads


def mse_backward(
    params: ModelParams, spec: ModelSpec, x: np.ndarray, target: np.ndarray
) -> ModelParams:
    """Gradients of mean squared reconstruction error."""
    out, activations = forward(params, spec, x)
    if out.shape != target.shape:
        raise DimensionError(f"target shape {target.shape} != output {out.shape}")
    d_out = 2.0 * (out - target) / out.size
    grads, _ = _backward_from_output_grad(params, spec, activations, d_out)
    return grads


class _SgdMomentum:
    def __init__(self, params: ModelParams, lr: float, momentum: float):
        self.lr = lr
        self.momentum = momentum
        self.velocity = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers]

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        for i, (w, b) in enumerate(params.layers):
            gw, gb = grads.layers[i]
            vw, vb = self.velocity[i]
            vw *= self.momentum
            vw += gw
            vb *= self.momentum
            vb += gb
            params.layers[i] = (w - self.lr * vw, b - self.lr * vb)


class _Adam:
    def __init__(self, params: ModelParams, lr: float):
        self.lr = lr
        self.t = 0
        self.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers]
        self.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers]

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        self.t += 1
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        for i, (w, b) in enumerate(params.layers):
            gw, gb = grads.layers[i]
            mw, mb = self.m[i]
            vw, vb = self.v[i]
            mw *= ADAM_BETA1
            mw += (1 - ADAM_BETA1) * gw
            mb *= ADAM_BETA1
            mb += (1 - ADAM_BETA1) * gb
            vw *= ADAM_BETA2
            vw += (1 - ADAM_BETA2) * gw * gw
            vb *= ADAM_BETA2
            vb += (1 - ADAM_BETA2) * gb * gb
            step_w = self.lr * (mw / c1) / (np.sqrt(vw / c2) + ADAM_EPS)
            step_b = self.lr * (mb / c1) / (np.sqrt(vb / c2) + ADAM_EPS)
            params.layers[i] = (w - step_w, b - step_b)


def _make_optimizer(params: ModelParams, cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return _Adam(params, cfg.learning_rate)
    return _SgdMomentum(params, cfg.learning_rate, cfg.momentum)


def _minibatch_fit(
    params: ModelParams,
    spec: ModelSpec,
    x: np.ndarray,
    grad_fn,
    cfg: TrainConfig,
) -> ModelParams:
    n = x.shape[0]
    out = params.copy()
    opt = _make_optimizer(out, cfg)
    rng = np.random.default_rng(cfg.seed)
    batch = min(cfg.batch_size, n)  # shard may be smaller than the configured batch
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            opt.step(out, grad_fn(out, idx))
    return out


def train(params: ModelParams, spec: ModelSpec, data, cfg: TrainConfig) -> ModelParams:
    """Mini-batch training of a 2-class detector on a Dataset; returns new params.

    Shuffling is driven by cfg.seed only, so identical inputs reproduce the
    returned parameters bitwise. The final partial batch is trained on.
    """
    x = np.asarray(data.features, dtype=np.float64)
    y = _check_labels(data.labels)
    if x.shape[0] == 0:
        raise ValidationError("cannot train on an empty dataset")
    if x.shape[1] != spec.input_dim:
        raise DimensionError(
            f"layer 1: expected input width {spec.input_dim}, got {x.shape[1]}"
        )

    def grad_fn(p: ModelParams, idx: np.ndarray) -> ModelParams:
        return backward(p, spec, x[idx], y[idx])

    return _minibatch_fit(params, spec, x, grad_fn, cfg)


def train_autoencoder(
    ae_params: ModelParams, ae_spec: ModelSpec, rows: np.ndarray, cfg: TrainConfig
) -> ModelParams:
    """Minimize mean squared reconstruction error of `rows` (targets = inputs)."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError(f"rows must be a non-empty 2-D array, got shape {x.shape}")
    if x.shape[1] != ae_spec.input_dim or ae_spec.output_dim != ae_spec.input_dim:
        raise DimensionError(
            f"autoencoder maps width {ae_spec.input_dim} -> {ae_spec.output_dim}, "
            f"rows have width {x.shape[1]}"
        )

    def grad_fn(p: ModelParams, idx: np.ndarray) -> ModelParams:
        return mse_backward(p, ae_spec, x[idx], x[idx])

    return _minibatch_fit(ae_params, ae_spec, x, grad_fn, cfg)
