"""Adversarial client behaviors.

Four ways a compromised client can poison the federation: flipping its
labels, training on GAN-crafted evasive samples, scaling up its uploaded
parameters, and the coordinated median-style crafted update used for the
defense comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import ATTACK, BENIGN, Dataset
from .errors import ValidationError
from .nn import (
    ModelParams,
    ModelSpec,
    _Adam,
    _backward_from_output_grad,
    derive_seed,
    forward,
    init_params,
    softmax,
)

ATTACK_KINDS = ("none", "label_flip", "gan_poison", "weight_scale", "median_attack")


@dataclass(frozen=True)
class GanConfig:
    """Generator/discriminator training knobs for the poisoning GAN."""

    epochs: int = 20
    batch_size: int = 512
    learning_rate: float = 0.0001
    noise_dim: int | None = None  # defaults to feature_dim // 4

    def __post_init__(self):
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.noise_dim is not None and self.noise_dim < 1:
            raise ValidationError(f"noise_dim must be >= 1, got {self.noise_dim}")


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "none"
    scale_factor: float = 10.0
    median_b: float = 2.0
    gan: GanConfig = field(default_factory=GanConfig)

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValidationError(f"unknown attack kind {self.kind!r}")
        if self.kind == "weight_scale" and not self.scale_factor > 1:
            raise ValidationError(
                f"weight_scale needs scale_factor > 1, got {self.scale_factor}"
            )
        if self.kind == "median_attack" and not 1.0 <= self.median_b <= 2.0:
            raise ValidationError(f"median_b must be in [1, 2], got {self.median_b}")


def flip_labels(ds: Dataset) -> Dataset:
    """Replace every label y with 1 - y; features untouched."""
    return Dataset(ds.features.copy(), 1 - ds.labels, list(ds.feature_names))


def scale_params(params: ModelParams, alpha: float) -> ModelParams:
    """Multiply every weight and bias by alpha."""
    if not np.isfinite(alpha):
        raise ValidationError(f"alpha must be finite, got {alpha}")
    return ModelParams([(alpha * w, alpha * b) for w, b in params.layers])


def _generator_spec(feature_dim: int, noise_dim: int) -> ModelSpec:
    gin = feature_dim + noise_dim
    h = max(gin // 2, 2)
    return ModelSpec(
        (gin, h, h, h, h, feature_dim),
        ("relu", "relu", "relu", "relu", "none"),
        output_kind="linear",
    )


def _discriminator_spec(feature_dim: int) -> ModelSpec:
    return ModelSpec(
        (feature_dim, 2 * feature_dim, 2 * feature_dim, 2 * feature_dim,
         max(feature_dim // 2, 2), 2),
        ("relu", "relu", "relu", "relu", "none"),
        output_kind="softmax-2class",
    )


def _ce_delta(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    delta = softmax(logits)
    delta[np.arange(len(targets)), targets] -= 1.0
    return delta / len(targets)


def gan_poison(
    local: Dataset,
    global_model: tuple[ModelParams, ModelSpec],
    cfg: GanConfig,
    seed: int,
) -> Dataset:
    """Craft a poisoned shard from adversarial variants of the attack samples.

    The discriminator is trained to imitate the current global detector
    (targets are the frozen global model's predicted labels on local traffic);
    the generator perturbs attack records, from their features plus seeded
    noise, until the imitation classifies them as benign. The poisoned shard
    keeps the original benign rows and adds the generated rows labeled benign,
    clipped to [0, 1].
    """
    g_params, g_spec = global_model
    attack_rows = local.features[local.labels == ATTACK]
    benign_rows = local.features[local.labels == BENIGN]
    if len(attack_rows) == 0:
        raise ValidationError("gan_poison needs at least one attack sample")

    d = local.n_features
    noise_dim = cfg.noise_dim if cfg.noise_dim is not None else max(d // 4, 1)
    gen_spec = _generator_spec(d, noise_dim)
    disc_spec = _discriminator_spec(d)
    gen = init_params(gen_spec, derive_seed(seed, 11))
    disc = init_params(disc_spec, derive_seed(seed, 13))
    rng = np.random.default_rng(derive_seed(seed, 17))

    pseudo_labels = np.argmax(forward(g_params, g_spec, local.features)[0], axis=1)
    benign_target = np.full(len(attack_rows), BENIGN, dtype=np.int64)

    gen_opt = _Adam(gen, cfg.learning_rate)
    disc_opt = _Adam(disc, cfg.learning_rate)
    n_local = local.n_samples
    n_attack = len(attack_rows)
    disc_batch = min(cfg.batch_size, n_local)
    gen_batch = min(cfg.batch_size, n_attack)

    for _ in range(cfg.epochs):
        # imitation step: distil the global detector's decisions
        order = rng.permutation(n_local)
        for start in range(0, n_local, disc_batch):
            idx = order[start : start + disc_batch]
            logits, acts = forward(disc, disc_spec, local.features[idx])
            delta = _ce_delta(logits, pseudo_labels[idx])
            grads, _ = _backward_from_output_grad(disc, disc_spec, acts, delta)
            disc_opt.step(disc, grads)
        # evasion step: push generated records across the imitated boundary
        order = rng.permutation(n_attack)
        for start in range(0, n_attack, gen_batch):
            idx = order[start : start + gen_batch]
            noise = rng.standard_normal((len(idx), noise_dim))
            gen_in = np.hstack([attack_rows[idx], noise])
            fake, gen_acts = forward(gen, gen_spec, gen_in)
            logits, disc_acts = forward(disc, disc_spec, fake)
            delta = _ce_delta(logits, benign_target[: len(idx)])
            _, d_fake = _backward_from_output_grad(
                disc, disc_spec, disc_acts, delta, need_input_grad=True
            )
            gen_grads, _ = _backward_from_output_grad(gen, gen_spec, gen_acts, d_fake)
            gen_opt.step(gen, gen_grads)

    noise = rng.standard_normal((n_attack, noise_dim))
    generated = forward(gen, gen_spec, np.hstack([attack_rows, noise]))[0]
    generated = np.clip(generated, 0.0, 1.0)

    features = np.vstack([benign_rows, generated])
    labels = np.full(len(features), BENIGN, dtype=np.int64)
    return Dataset(features, labels, list(local.feature_names))


def median_attack(
    own_update: ModelParams,
    global_params: ModelParams,
    colluders: Sequence[ModelParams],
    b: float,
    seed: int,
) -> ModelParams:
    """Directed-deviation crafted update built from the attacker coalition.

    Per coordinate, the coalition estimates the benign change direction as
    sign(mean(colluders) - global) and emits a value just beyond the
    colluders' observed range on the opposite side: below min (down to
    min/b or min*b, whichever is lower) when the coordinate was rising,
    symmetrically above max when it was falling. Coordinates the coalition
    did not move are left at the attacker's own honest value.
    """
    if not colluders:
        raise ValidationError("median_attack needs at least one colluding update")
    if not 1.0 <= b <= 2.0:
        raise ValidationError(f"b must be in [1, 2], got {b}")
    rng = np.random.default_rng(seed)
    crafted = []
    for i, (own_w, own_b) in enumerate(own_update.layers):
        crafted.append(
            (
                _craft_block(own_w, global_params.layers[i][0],
                             [c.layers[i][0] for c in colluders], b, rng),
                _craft_block(own_b, global_params.layers[i][1],
                             [c.layers[i][1] for c in colluders], b, rng),
            )
        )
    return ModelParams(crafted)


def _craft_block(
    own: np.ndarray,
    reference: np.ndarray,
    colluder_blocks: Sequence[np.ndarray],
    b: float,
    rng: np.random.Generator,
) -> np.ndarray:
    stack = np.stack(colluder_blocks)
    direction = np.sign(stack.mean(axis=0) - reference)
    lo = stack.min(axis=0)
    hi = stack.max(axis=0)

    # rising coordinates get pushed below the coalition minimum
    down_lo = np.minimum(lo / b, lo * b)
    down = down_lo + rng.uniform(0.0, 1.0, size=own.shape) * (lo - down_lo)
    # falling coordinates get pushed above the coalition maximum
    up_hi = np.maximum(hi / b, hi * b)
    up = hi + rng.uniform(0.0, 1.0, size=own.shape) * (up_hi - hi)

    out = own.copy()
    out[direction > 0] = down[direction > 0]
    out[direction < 0] = up[direction < 0]
    return out
