"""Federated-round orchestration.

Drives client selection, local training, attack injection for compromised
clients, the configured aggregation scheme and per-round evaluation on the
server's held-out test set. Every random choice is derived from the run
seed, so a whole experiment replays bitwise-identically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .attacks import AttackConfig, flip_labels, gan_poison, median_attack, scale_params
from .data import ATTACK, Dataset, PartitionSpec, SplitResult, partition_clients
from .defense import (
    DEFAULT_GAP_THRESHOLD,
    AeConfig,
    Autoencoder,
    ClientUpdate,
    DefenseVerdict,
    fed_lsae_round,
    fedavg,
    fedcc_round,
    pretrain_ae,
)
from .errors import ValidationError
from .nn import ModelParams, ModelSpec, TrainConfig, derive_seed, forward, init_params, mlp_spec, train

DEFENSES = ("none", "fedavg_only", "fedcc", "fed_lsae")


@dataclass(frozen=True)
class FlConfig:
    rounds: int = 10
    n_clients: int = 10
    fraction: float = 1.0
    attacker_ids: frozenset[int] = frozenset()
    attack: AttackConfig = field(default_factory=AttackConfig)
    defense: str = "none"
    train: TrainConfig = field(default_factory=TrainConfig)
    model_hidden: tuple[int, ...] = (64,)
    ae: AeConfig = field(default_factory=AeConfig)
    partition: PartitionSpec | None = None
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "attacker_ids", frozenset(int(a) for a in self.attacker_ids))
        object.__setattr__(self, "model_hidden", tuple(int(h) for h in self.model_hidden))
        if self.rounds < 0:
            raise ValidationError(f"rounds must be >= 0, got {self.rounds}")
        if self.n_clients < 1:
            raise ValidationError(f"n_clients must be >= 1, got {self.n_clients}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValidationError(f"fraction must be in (0, 1], got {self.fraction}")
        if self.defense not in DEFENSES:
            raise ValidationError(f"unknown defense {self.defense!r}")
        bad = [a for a in self.attacker_ids if not 0 <= a < self.n_clients]
        if bad:
            raise ValidationError(f"attacker ids out of range: {sorted(bad)}")
        if len(self.attacker_ids) >= self.n_clients / 2:
            raise ValidationError(
                f"{len(self.attacker_ids)} attackers out of {self.n_clients} clients "
                "violates the less-than-half threat model"
            )
        if self.attacker_ids and self.attack.kind == "none":
            raise ValidationError("attacker_ids set but attack kind is 'none'")
        if self.partition is not None and self.partition.n_clients != self.n_clients:
            raise ValidationError("partition n_clients does not match the run")


@dataclass
class RoundReport:
    round_index: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    verdict: DefenseVerdict | None = None
    wallclock: float = 0.0


@dataclass
class FlState:
    """Mutable cross-round state: the global model plus fixed shards/test/AE."""

    model_spec: ModelSpec
    global_params: ModelParams
    shards: list[Dataset]
    test: Dataset
    ae: Autoencoder | None = None
    round_index: int = 0


def client_seed(seed: int, round_index: int, client_id: int) -> int:
    """Seed for one client's local training in one round."""
    return derive_seed(seed, 5, round_index, client_id)


def select_clients(n_clients: int, fraction: float, round_index: int, seed: int) -> list[int]:
    """round(fraction * n) distinct client ids, seeded by (seed, round)."""
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    k = max(1, round(fraction * n_clients))
    rng = np.random.default_rng(derive_seed(seed, 3, round_index))
    return sorted(int(c) for c in rng.choice(n_clients, size=k, replace=False))


def evaluate(
    params: ModelParams, spec: ModelSpec, test: Dataset
) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1) with attack as the positive class.

    Zero-denominator precision/recall/F1 are defined as 0; prediction ties
    resolve to benign.
    """
    if test.n_samples == 0:
        raise ValidationError("cannot evaluate on an empty test set")
    logits, _ = forward(params, spec, test.features)
    preds = np.argmax(logits, axis=1)  # ties resolve to index 0 = benign
    y = test.labels
    tp = int(np.sum((preds == ATTACK) & (y == ATTACK)))
    fp = int(np.sum((preds == ATTACK) & (y != ATTACK)))
    fn = int(np.sum((preds != ATTACK) & (y == ATTACK)))
    tn = int(np.sum((preds != ATTACK) & (y != ATTACK)))
    accuracy = (tp + tn) / len(y)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return accuracy, precision, recall, f1


def _apply_data_attacks(
    shards: list[Dataset],
    cfg: FlConfig,
    global_model: tuple[ModelParams, ModelSpec],
) -> list[Dataset]:
    """Poison the attacker shards once, before round 1; honest shards untouched."""
    if cfg.attack.kind not in ("label_flip", "gan_poison"):
        return shards
    out = list(shards)
    for aid in sorted(cfg.attacker_ids):
        if cfg.attack.kind == "label_flip":
            out[aid] = flip_labels(out[aid])
        else:
            out[aid] = gan_poison(
                out[aid], global_model, cfg.attack.gan, derive_seed(cfg.seed, 23, aid)
            )
    return out


def run_round(state: FlState, cfg: FlConfig) -> tuple[ModelParams, RoundReport]:
    """One communication round: train, attack, aggregate, evaluate."""
    t0 = time.perf_counter()
    selected = select_clients(cfg.n_clients, cfg.fraction, state.round_index, cfg.seed)

    honest: dict[int, ModelParams] = {}
    for cid in selected:
        local_cfg = replace(cfg.train, seed=client_seed(cfg.seed, state.round_index, cid))
        honest[cid] = train(state.global_params, state.model_spec, state.shards[cid], local_cfg)

    uploaded = dict(honest)
    attackers = [cid for cid in selected if cid in cfg.attacker_ids]
    if cfg.attack.kind == "weight_scale":
        for cid in attackers:
            uploaded[cid] = scale_params(honest[cid], cfg.attack.scale_factor)
    elif cfg.attack.kind == "median_attack" and attackers:
        coalition = [honest[cid] for cid in attackers]
        for cid in attackers:
            uploaded[cid] = median_attack(
                honest[cid],
                state.global_params,
                coalition,
                cfg.attack.median_b,
                derive_seed(cfg.seed, 29, state.round_index, cid),
            )

    updates = [
        ClientUpdate(cid, uploaded[cid], state.shards[cid].n_samples) for cid in selected
    ]

    verdict: DefenseVerdict | None = None
    if cfg.defense == "fed_lsae":
        if state.ae is None:
            raise ValidationError("fed_lsae defense requires a pretrained autoencoder")
        verdict = fed_lsae_round(state.global_params, updates, state.ae, cfg.gap_threshold)
        new_global = verdict.aggregated
    elif cfg.defense == "fedcc":
        verdict = fedcc_round(state.global_params, updates, cfg.gap_threshold)
        new_global = verdict.aggregated
    else:  # none / fedavg_only: plain FedAvg over every selected client
        new_global = fedavg(updates)

    accuracy, precision, recall, f1 = evaluate(new_global, state.model_spec, state.test)
    report = RoundReport(
        round_index=state.round_index,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        verdict=verdict,
        wallclock=time.perf_counter() - t0,
    )
    return new_global, report


def setup_state(cfg: FlConfig, data: SplitResult) -> FlState:
    """Initialize the global model, client shards, data attacks and the AE."""
    model_spec = mlp_spec(data.train.n_features, cfg.model_hidden)
    global_params = init_params(model_spec, derive_seed(cfg.seed, 2))

    partition = cfg.partition or PartitionSpec(n_clients=cfg.n_clients)
    shards = partition_clients(data.train, partition, derive_seed(cfg.seed, 7))
    shards = _apply_data_attacks(shards, cfg, (global_params, model_spec))

    ae = None
    if cfg.defense == "fed_lsae":
        ae = pretrain_ae(
            (global_params, model_spec),
            data.ae_pretrain_orgs,
            cfg.ae,
            cfg.train,
            derive_seed(cfg.seed, 13),
        )
    return FlState(model_spec, global_params, shards, data.server_test, ae)


def run_experiment(cfg: FlConfig, data: SplitResult) -> list[RoundReport]:
    """Run cfg.rounds federated rounds and return every round's report."""
    state = setup_state(cfg, data)
    reports = []
    for r in range(cfg.rounds):
        state.round_index = r
        state.global_params, report = run_round(state, cfg)
        reports.append(report)
    return reports
