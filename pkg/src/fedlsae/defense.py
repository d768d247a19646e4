"""Server-side robust aggregation.

The Fed-LSAE pipeline scores each client update by (1) extracting the
penultimate-layer weight matrix (PLR), (2) compressing each of its rows
through a benign-pretrained autoencoder's encoder, (3) comparing the latent
cloud against the global model's latent cloud with RBF-kernel CKA, then
(4) splitting the scores with exact 1-D 2-means and (5) FedAvg-ing only the
larger (benign) cluster. The FedCC-style baseline runs the same pipeline on
raw PLRs with no autoencoder.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import AggregationError, DimensionError, StructureError, ValidationError
from .nn import (
    ModelParams,
    ModelSpec,
    TrainConfig,
    _activate,
    derive_seed,
    init_params,
    train,
    train_autoencoder,
)

DEFAULT_GAP_THRESHOLD = 0.02


@dataclass(frozen=True)
class AeConfig:
    """Autoencoder shape and pre-training knobs."""

    hidden: tuple[int, ...] = (512, 128, 64)
    bottleneck: int = 16
    epochs: int = 20
    learning_rate: float = 0.001
    batch_size: int = 16

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.bottleneck < 1 or any(h < 1 for h in self.hidden):
            raise ValidationError("autoencoder layer widths must be positive")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class Autoencoder:
    """Trained symmetric autoencoder; the first n_encoder_layers form the encoder."""

    params: ModelParams
    spec: ModelSpec
    n_encoder_layers: int

    @property
    def bottleneck(self) -> int:
        return self.spec.layer_dims[self.n_encoder_layers]


def autoencoder_spec(input_dim: int, cfg: AeConfig) -> tuple[ModelSpec, int]:
    """Symmetric encoder/decoder spec: ReLU stages, linear bottleneck, tanh output."""
    dims = (input_dim, *cfg.hidden, cfg.bottleneck, *reversed(cfg.hidden), input_dim)
    n_enc = len(cfg.hidden) + 1
    acts = ("relu",) * len(cfg.hidden) + ("none",) + ("relu",) * len(cfg.hidden) + ("tanh",)
    return ModelSpec(dims, acts, output_kind="linear"), n_enc


@dataclass(frozen=True)
class ClientUpdate:
    """One client's contribution to a round: trained params and local sample count."""

    client_id: int
    params: ModelParams
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError(
                f"client {self.client_id}: n_samples must be >= 1, got {self.n_samples}"
            )


@dataclass
class DefenseVerdict:
    """Per-client similarity scores plus the benign/malicious partition chosen."""

    scores: dict[int, float]
    benign_ids: set[int]
    malicious_ids: set[int]
    aggregated: ModelParams


def extract_plr(params: ModelParams) -> np.ndarray:
    """Weight matrix of the second-to-last layer (bias excluded).

    Rows are the layer's output units; each row is treated downstream as one
    sample of that unit's incoming weights.
    """
    if params.n_layers < 2:
        raise StructureError("model needs at least 2 layers to have a penultimate layer")
    return params.layers[-2][0].copy()


def encode_latent(ae: Autoencoder, plr: np.ndarray) -> np.ndarray:
    """Pass each PLR row through the encoder; returns (rows x bottleneck)."""
    a = np.asarray(plr, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"PLR must be 2-D, got shape {a.shape}")
    if a.shape[1] != ae.spec.input_dim:
        raise DimensionError(
            f"PLR width {a.shape[1]} does not match encoder input {ae.spec.input_dim}"
        )
    for i in range(ae.n_encoder_layers):
        w, b = ae.params.layers[i]
        a = _activate(a @ w.T + b, ae.spec.activations[i])
    return a


def _check_gram(m: np.ndarray, name: str) -> np.ndarray:
    g = np.asarray(m, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {g.shape}")
    if g.shape[0] < 2:
        raise ValidationError(f"{name} needs at least 2 rows, got {g.shape[0]}")
    if not np.allclose(g, g.T, atol=1e-10):
        raise ValidationError(f"{name} must be symmetric")
    return g


def hsic(k: np.ndarray, l: np.ndarray) -> float:
    """Biased HSIC estimator trace(K H L H) / (n - 1)^2 with H = I - 1/n."""
    k = _check_gram(k, "K")
    l = _check_gram(l, "L")
    if k.shape != l.shape:
        raise ValidationError(f"Gram shapes differ: {k.shape} vs {l.shape}")
    n = k.shape[0]
    h = np.eye(n) - np.full((n, n), 1.0 / n)
    return float(np.trace(k @ h @ l @ h)) / (n - 1) ** 2


def _rbf_gram(x: np.ndarray) -> np.ndarray:
    """Gaussian Gram of the rows of x, bandwidth = median pairwise distance."""
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=2)
    iu = np.triu_indices(len(x), k=1)
    sigma = float(np.median(np.sqrt(sq[iu])))
    if sigma == 0.0:
        sigma = 1.0
    return np.exp(-sq / (2.0 * sigma**2))


def cka_rbf(x: np.ndarray, y: np.ndarray) -> float:
    """RBF-kernel centered kernel alignment between two row-sample matrices.

    1 means the two representations align perfectly; the result is clamped
    to [0, 1]. Degenerate inputs (a matrix whose rows are all identical) give
    0 unless both matrices are equal.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ValidationError("CKA inputs must be 2-D")
    if x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise ValidationError(
            f"CKA needs matching row counts >= 2, got {x.shape[0]} and {y.shape[0]}"
        )
    if x.shape == y.shape and np.array_equal(x, y):
        return 1.0
    k, l = _rbf_gram(x), _rbf_gram(y)
    hxy, hxx, hyy = hsic(k, l), hsic(k, k), hsic(l, l)
    denom = hxx * hyy
    if denom <= 0.0:
        return 0.0
    return float(min(max(hxy / np.sqrt(denom), 0.0), 1.0))


def cluster_scores(
    scores: Sequence[float], gap_threshold: float = DEFAULT_GAP_THRESHOLD
) -> tuple[list[int], list[int]]:
    """Exact 1-D 2-means over similarity scores -> (benign, malicious) positions.

    Scores are sorted and every split point is scanned for the minimum
    within-cluster sum of squares. The larger cluster is benign; a size tie
    goes to the cluster with the higher mean score. If the two cluster means
    differ by less than gap_threshold there is nothing to separate and every
    client is treated as benign (set gap_threshold=0 to always split).
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or len(s) < 2:
        raise ValidationError(f"need at least 2 scores, got {s.shape}")
    everyone = (sorted(range(len(s))), [])
    if np.all(s == s[0]):
        return everyone

    order = np.argsort(s, kind="stable")
    vals = s[order]
    n = len(vals)
    prefix = np.concatenate(([0.0], np.cumsum(vals)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(vals**2)))

    def wcss(lo: int, hi: int) -> float:  # [lo, hi)
        count = hi - lo
        total = prefix[hi] - prefix[lo]
        total_sq = prefix_sq[hi] - prefix_sq[lo]
        return total_sq - total * total / count

    best_k, best_cost = 1, np.inf
    for k in range(1, n):
        cost = wcss(0, k) + wcss(k, n)
        if cost < best_cost:
            best_cost, best_k = cost, k
    low = [int(i) for i in order[:best_k]]
    high = [int(i) for i in order[best_k:]]
    low_mean = float(s[low].mean())
    high_mean = float(s[high].mean())
    if abs(high_mean - low_mean) < gap_threshold:
        return everyone
    if len(high) >= len(low):  # a size tie goes to the higher-mean cluster
        benign, malicious = high, low
    else:
        benign, malicious = low, high
    return sorted(benign), sorted(malicious)


def fedavg(updates: Sequence[ClientUpdate]) -> ModelParams:
    """Sample-count-weighted mean of the given updates' parameters."""
    if not updates:
        raise AggregationError("cannot aggregate an empty update set")
    shapes = [(w.shape, b.shape) for w, b in updates[0].params.layers]
    for u in updates[1:]:
        if [(w.shape, b.shape) for w, b in u.params.layers] != shapes:
            raise DimensionError(f"client {u.client_id}: update shape mismatch")
    total = float(sum(u.n_samples for u in updates))
    layers = []
    for i in range(updates[0].params.n_layers):
        w = sum((u.n_samples / total) * u.params.layers[i][0] for u in updates)
        b = sum((u.n_samples / total) * u.params.layers[i][1] for u in updates)
        layers.append((w, b))
    return ModelParams(layers)


def benign_plr_corpus(
    global_model: tuple[ModelParams, ModelSpec],
    orgs: Sequence[Dataset],
    train_cfg: TrainConfig,
    seed: int,
) -> np.ndarray:
    """PLR rows pooled from one round of per-organization training."""
    if not orgs:
        raise ValidationError("need at least one server-side organization")
    global_params, model_spec = global_model
    rows = []
    for i, org in enumerate(orgs):
        if org.n_samples == 0:
            raise ValidationError(f"organization {i} has no data")
        cfg_i = replace(train_cfg, seed=derive_seed(seed, 101, i))
        trained = train(global_params, model_spec, org, cfg_i)
        rows.append(extract_plr(trained))
    return np.vstack(rows)


def pretrain_ae(
    global_model: tuple[ModelParams, ModelSpec],
    orgs: Sequence[Dataset],
    ae_cfg: AeConfig,
    train_cfg: TrainConfig,
    seed: int,
) -> Autoencoder:
    """Teach the autoencoder what benign PLRs look like.

    Each internal server-side organization trains a copy of the initial
    global model for one round on its own data; the PLR rows of every
    resulting model are pooled into the reconstruction corpus.
    """
    corpus = benign_plr_corpus(global_model, orgs, train_cfg, seed)
    spec, n_enc = autoencoder_spec(corpus.shape[1], ae_cfg)
    params = init_params(spec, derive_seed(seed, 211))
    fit_cfg = TrainConfig(
        epochs=ae_cfg.epochs,
        batch_size=ae_cfg.batch_size,
        learning_rate=ae_cfg.learning_rate,
        optimizer="adam",
        seed=derive_seed(seed, 307),
    )
    trained_params = train_autoencoder(params, spec, corpus, fit_cfg)
    return Autoencoder(trained_params, spec, n_enc)


def _verdict(
    global_repr: np.ndarray,
    updates: Sequence[ClientUpdate],
    client_repr: Sequence[np.ndarray],
    gap_threshold: float,
) -> DefenseVerdict:
    scores = [cka_rbf(global_repr, rep) for rep in client_repr]
    benign_pos, malicious_pos = cluster_scores(scores, gap_threshold)
    aggregated = fedavg([updates[i] for i in benign_pos])
    return DefenseVerdict(
        scores={u.client_id: s for u, s in zip(updates, scores)},
        benign_ids={updates[i].client_id for i in benign_pos},
        malicious_ids={updates[i].client_id for i in malicious_pos},
        aggregated=aggregated,
    )


def fed_lsae_round(
    global_params: ModelParams,
    updates: Sequence[ClientUpdate],
    ae: Autoencoder,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
) -> DefenseVerdict:
    """Latent-space defense round: score, cluster, aggregate the benign side."""
    if len(updates) < 2:
        raise ValidationError(f"need at least 2 updates, got {len(updates)}")
    global_latent = encode_latent(ae, extract_plr(global_params))
    latents = [encode_latent(ae, extract_plr(u.params)) for u in updates]
    return _verdict(global_latent, updates, latents, gap_threshold)


def fedcc_round(
    global_params: ModelParams,
    updates: Sequence[ClientUpdate],
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
) -> DefenseVerdict:
    """Baseline defense: CKA on raw PLRs, no autoencoder."""
    if len(updates) < 2:
        raise ValidationError(f"need at least 2 updates, got {len(updates)}")
    global_plr = extract_plr(global_params)
    plrs = [extract_plr(u.params) for u in updates]
    return _verdict(global_plr, updates, plrs, gap_threshold)
