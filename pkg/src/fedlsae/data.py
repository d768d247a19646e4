"""Dataset ingestion, preprocessing and client partitioning.

Covers CSV loading with row cleaning, min-max feature scaling, the
70/25/5 train/test/server-org split, IID and custom (count, attack-ratio)
client shards, and a two-cluster synthetic traffic generator used for
small bench experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import EmptyDataError, SchemaError, ValidationError

BENIGN, ATTACK = 0, 1


@dataclass
class Dataset:
    """Feature matrix plus binary labels (0 = benign, 1 = attack)."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValidationError(
                f"labels shape {self.labels.shape} does not match {self.features.shape[0]} rows"
            )
        if not np.isfinite(self.features).all():
            raise ValidationError("features contain NaN or Inf")
        if not np.isin(self.labels, (BENIGN, ATTACK)).all():
            raise ValidationError("labels must be 0 (benign) or 1 (attack)")
        if not self.feature_names:
            self.feature_names = [f"f{i}" for i in range(self.features.shape[1])]
        elif len(self.feature_names) != self.features.shape[1]:
            raise ValidationError("feature_names length does not match feature count")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def copy(self) -> "Dataset":
        return Dataset(self.features.copy(), self.labels.copy(), list(self.feature_names))

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], list(self.feature_names))


@dataclass(frozen=True)
class PartitionSpec:
    """How the training pool is sharded across clients.

    iid: equal-size, class-ratio-preserving shards.
    custom: per_client gives one (sample_count, attack_ratio) pair per client.
    """

    n_clients: int = 10
    mode: str = "iid"
    per_client: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if self.n_clients < 1:
            raise ValidationError(f"n_clients must be >= 1, got {self.n_clients}")
        if self.mode not in ("iid", "custom"):
            raise ValidationError(f"unknown partition mode {self.mode!r}")
        if self.mode == "custom":
            if self.per_client is None or len(self.per_client) != self.n_clients:
                raise ValidationError(
                    "custom mode requires one (count, attack_ratio) entry per client"
                )
            norm = tuple((int(c), float(r)) for c, r in self.per_client)
            object.__setattr__(self, "per_client", norm)
            for i, (count, ratio) in enumerate(norm):
                if count < 1:
                    raise ValidationError(f"client {i}: sample count must be >= 1")
                if not 0.0 <= ratio <= 1.0:
                    raise ValidationError(f"client {i}: attack_ratio must be in [0, 1]")


@dataclass(frozen=True)
class NormStats:
    """Per-feature min/max recorded on training data, reused on held-out data."""

    mins: np.ndarray
    maxs: np.ndarray


@dataclass
class SplitResult:
    """The 70/25/5 split: client training pool, server test set, server-org shares."""

    train: Dataset
    server_test: Dataset
    ae_pretrain_orgs: list[Dataset]


def _parse_label(value) -> int | None:
    """0/1 from a raw CSV cell; None marks an unusable row."""
    try:
        num = float(value)
    except (TypeError, ValueError):
        return ATTACK if str(value).strip().lower() == "attack" else BENIGN
    if np.isnan(num) or np.isinf(num):
        return None
    return ATTACK if num != 0 else BENIGN


def load_csv(path, label_column: str, drop_columns: Sequence[str] = ()) -> Dataset:
    """Load a labelled traffic CSV, dropping listed columns and unclean rows.

    Rows with NaN/Inf in any remaining feature (or an unparseable label) are
    discarded. Labels map to 1 for non-zero numerics or the string "attack"
    (case-insensitive), 0 otherwise.
    """
    df = pd.read_csv(path)
    if label_column not in df.columns:
        raise SchemaError(f"label column {label_column!r} not found in {path}")
    missing = [c for c in drop_columns if c not in df.columns]
    if missing:
        raise SchemaError(f"columns to drop not found in {path}: {missing}")
    df = df.drop(columns=list(drop_columns))
    raw_labels = df.pop(label_column)

    features = df.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    labels = np.array([_parse_label(v) for v in raw_labels], dtype=object)
    keep = np.isfinite(features).all(axis=1) & (labels != None)  # noqa: E711
    if not keep.any():
        raise EmptyDataError(f"no usable rows left in {path} after cleaning")
    return Dataset(
        features[keep],
        labels[keep].astype(np.int64),
        feature_names=list(df.columns),
    )


def min_max_normalize(ds: Dataset) -> tuple[Dataset, NormStats]:
    """Scale every feature into [0, 1]; constant features map to 0."""
    mins = ds.features.min(axis=0)
    maxs = ds.features.max(axis=0)
    span = maxs - mins
    span = np.where(span == 0, 1.0, span)
    scaled = (ds.features - mins) / span
    return Dataset(scaled, ds.labels.copy(), list(ds.feature_names)), NormStats(mins, maxs)


def apply_normalization(ds: Dataset, stats: NormStats) -> Dataset:
    """Apply recorded train-split min/max to held-out data, clipped to [0, 1]."""
    span = stats.maxs - stats.mins
    span = np.where(span == 0, 1.0, span)
    scaled = np.clip((ds.features - stats.mins) / span, 0.0, 1.0)
    return Dataset(scaled, ds.labels.copy(), list(ds.feature_names))


def split_dataset(ds: Dataset, seed: int, n_orgs: int = 4) -> SplitResult:
    """Seeded shuffle then 70/25/5 split; the 5% share is divided over n_orgs."""
    if n_orgs < 1:
        raise ValidationError(f"n_orgs must be >= 1, got {n_orgs}")
    n = ds.n_samples
    n_train = round(0.70 * n)
    n_test = round(0.25 * n)
    n_ae = n - n_train - n_test
    if n_train < 1 or n_test < 1 or n_ae < n_orgs:
        raise ValidationError(
            f"{n} samples are too few for a 70/25/5 split over {n_orgs} organizations"
        )
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = perm[:n_train]
    test_idx = perm[n_train : n_train + n_test]
    org_chunks = np.array_split(perm[n_train + n_test :], n_orgs)
    return SplitResult(
        train=ds.take(train_idx),
        server_test=ds.take(test_idx),
        ae_pretrain_orgs=[ds.take(chunk) for chunk in org_chunks],
    )


def _iid_partition(train: Dataset, k: int, rng: np.random.Generator) -> list[Dataset]:
    shard_parts: list[list[np.ndarray]] = [[] for _ in range(k)]
    for cls in (BENIGN, ATTACK):
        idx = rng.permutation(np.flatnonzero(train.labels == cls))
        for i, part in enumerate(np.array_split(idx, k)):
            shard_parts[i].append(part)
    shards = []
    for parts in shard_parts:
        idx = np.concatenate(parts)
        rng.shuffle(idx)
        shards.append(train.take(idx))
    return shards


def _custom_partition(
    train: Dataset, spec: PartitionSpec, rng: np.random.Generator
) -> list[Dataset]:
    pools = {
        cls: list(rng.permutation(np.flatnonzero(train.labels == cls)))
        for cls in (BENIGN, ATTACK)
    }
    shards = []
    for client, (count, ratio) in enumerate(spec.per_client):
        n_attack = round(count * ratio)
        n_benign = count - n_attack
        if n_attack > len(pools[ATTACK]) or n_benign > len(pools[BENIGN]):
            raise ValidationError(
                f"client {client}: needs {n_benign} benign / {n_attack} attack samples, "
                f"only {len(pools[BENIGN])} / {len(pools[ATTACK])} remain"
            )
        take = pools[BENIGN][:n_benign] + pools[ATTACK][:n_attack]
        del pools[BENIGN][:n_benign], pools[ATTACK][:n_attack]
        idx = np.array(take, dtype=np.int64)
        rng.shuffle(idx)
        shards.append(train.take(idx))
    return shards


def partition_clients(train: Dataset, spec: PartitionSpec, seed: int) -> list[Dataset]:
    """Shard the training pool across clients per the partition spec."""
    if train.n_samples < spec.n_clients:
        raise ValidationError(
            f"{train.n_samples} samples cannot cover {spec.n_clients} clients"
        )
    rng = np.random.default_rng(seed)
    if spec.mode == "iid":
        return _iid_partition(train, spec.n_clients, rng)
    return _custom_partition(train, spec, rng)


def synth_dataset(
    n: int, d: int, class_separation: float, attack_fraction: float, seed: int
) -> Dataset:
    """Two Gaussian clusters with the given mean distance, min-max normalized.

    Produces exactly round(n * attack_fraction) attack rows; a stand-in for
    real traffic corpora in small experiments.
    """
    if n < 2 or d < 2:
        raise ValidationError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    if not 0.0 <= attack_fraction <= 1.0:
        raise ValidationError(f"attack_fraction must be in [0, 1], got {attack_fraction}")
    rng = np.random.default_rng(seed)
    n_attack = round(n * attack_fraction)
    labels = np.zeros(n, dtype=np.int64)
    labels[n - n_attack :] = ATTACK
    features = rng.standard_normal((n, d))
    # benign traffic sits at the high end of every feature, attacks near the origin
    features[labels == BENIGN] += class_separation / np.sqrt(d)
    perm = rng.permutation(n)
    ds = Dataset(features[perm], labels[perm], [f"f{i:02d}" for i in range(d)])
    normalized, _ = min_max_normalize(ds)
    return normalized
