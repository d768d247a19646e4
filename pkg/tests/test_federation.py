"""Orchestration tests: selection, metrics, rounds, honest-shard isolation."""

import hashlib
from dataclasses import replace

import numpy as np
import pytest

from fedlsae.attacks import AttackConfig
from fedlsae.data import PartitionSpec, split_dataset, synth_dataset
from fedlsae.defense import ClientUpdate, fedavg
from fedlsae.errors import ValidationError
from fedlsae.federation import (
    FlConfig,
    client_seed,
    evaluate,
    run_experiment,
    run_round,
    select_clients,
    setup_state,
)
from fedlsae.nn import ModelParams, ModelSpec, TrainConfig, forward, init_params, train

DESK_TRAIN = TrainConfig(epochs=2, batch_size=32, learning_rate=0.01, optimizer="adam", seed=0)


def small_split(seed=3, n=1500):
    return split_dataset(synth_dataset(n, 10, 8.0, 0.4, seed), seed + 1, n_orgs=4)


def confusion_oracle(preds, labels):
    tp = fp = fn = tn = 0
    for p, y in zip(preds, labels):
        if p == 1 and y == 1:
            tp += 1
        elif p == 1 and y == 0:
            fp += 1
        elif p == 0 and y == 1:
            fn += 1
        else:
            tn += 1
    acc = (tp + tn) / len(labels)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return acc, prec, rec, f1


class TestSelectClients:
    def test_full_fraction_selects_everyone(self):
        assert select_clients(10, 1.0, 0, seed=1) == list(range(10))

    def test_half_fraction(self):
        chosen = select_clients(10, 0.5, 2, seed=1)
        assert len(chosen) == 5 and len(set(chosen)) == 5

    def test_repeatable(self):
        assert select_clients(8, 0.75, 4, seed=9) == select_clients(8, 0.75, 4, seed=9)

    def test_varies_by_round(self):
        picks = {tuple(select_clients(10, 0.3, r, seed=2)) for r in range(10)}
        assert len(picks) > 1

    def test_invalid_fraction(self):
        with pytest.raises(ValidationError):
            select_clients(10, 0.0, 0, seed=0)


class TestEvaluate:
    def _constant_model(self, logit_benign, logit_attack, d=3):
        spec = ModelSpec((d, 2, 2), ("none", "none"))
        params = ModelParams(
            [
                (np.zeros((2, d)), np.array([0.0, 0.0])),
                (np.eye(2), np.array([logit_benign, logit_attack])),
            ]
        )
        return params, spec

    def test_perfect_predictions(self):
        ds = synth_dataset(600, 8, 10.0, 0.5, seed=5)
        spec = ModelSpec((8, 16, 2), ("relu", "none"))
        params = train(
            init_params(spec, 0), spec, ds,
            TrainConfig(epochs=5, batch_size=32, learning_rate=0.05, seed=0),
        )
        metrics = evaluate(params, spec, ds)
        assert metrics == (1.0, 1.0, 1.0, 1.0)
        preds = np.argmax(forward(params, spec, ds.features)[0], axis=1)
        np.testing.assert_allclose(metrics, confusion_oracle(preds, ds.labels))

    def test_fixed_confusion_counts(self):
        # TP=2, FP=1, FN=1, TN=6 -> acc 0.8, precision 2/3, recall 2/3, f1 2/3
        preds = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
        labels = np.array([1, 1, 0, 1, 0, 0, 0, 0, 0, 0])
        assert confusion_oracle(preds, labels) == (0.8, 2 / 3, 2 / 3, 2 / 3)
        from fedlsae.data import Dataset

        spec = ModelSpec((1, 2, 2), ("none", "none"))
        # identity pass-through of the single feature into the attack logit
        params = ModelParams(
            [
                (np.array([[1.0], [1.0]]), np.zeros(2)),
                (np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.0])),
            ]
        )
        ds = Dataset(preds[:, None].astype(float), labels)
        assert evaluate(params, spec, ds) == (0.8, 2 / 3, 2 / 3, 2 / 3)

    def test_all_benign_predictor(self):
        params, spec = self._constant_model(10.0, -10.0)
        ds = synth_dataset(200, 3, 1.0, 0.4, seed=6)
        accuracy, precision, recall, f1 = evaluate(params, spec, ds)
        assert recall == 0.0 and precision == 0.0 and f1 == 0.0
        assert accuracy == pytest.approx(0.6)

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            preds = rng.integers(0, 2, size=n)
            labels = rng.integers(0, 2, size=n)
            acc, prec, rec, f1 = confusion_oracle(preds, labels)
            assert 0.0 <= min(acc, prec, rec, f1) and max(acc, prec, rec, f1) <= 1.0

    def test_tie_votes_benign(self):
        params, spec = self._constant_model(0.0, 0.0)
        ds = synth_dataset(50, 3, 1.0, 0.5, seed=8)
        _, precision, recall, _ = evaluate(params, spec, ds)
        assert recall == 0.0 and precision == 0.0


class TestFlConfig:
    def test_half_attackers_rejected(self):
        with pytest.raises(ValidationError):
            FlConfig(n_clients=10, attacker_ids=frozenset(range(5)),
                     attack=AttackConfig(kind="label_flip"))

    def test_zero_fraction_rejected(self):
        with pytest.raises(ValidationError):
            FlConfig(fraction=0.0)

    def test_attackers_need_an_attack(self):
        with pytest.raises(ValidationError):
            FlConfig(attacker_ids=frozenset({1}))

    def test_out_of_range_attacker(self):
        with pytest.raises(ValidationError):
            FlConfig(n_clients=4, attacker_ids=frozenset({7}),
                     attack=AttackConfig(kind="label_flip"))


def shard_digest(ds):
    h = hashlib.sha256()
    h.update(ds.features.tobytes())
    h.update(ds.labels.tobytes())
    return h.hexdigest()


class TestRunRound:
    def test_no_attackers_equals_manual_fedavg(self):
        cfg = FlConfig(rounds=1, n_clients=6, train=DESK_TRAIN, seed=4)
        data = small_split()
        state = setup_state(cfg, data)
        new_global, report = run_round(state, cfg)

        updates = []
        for cid in range(6):
            local_cfg = replace(cfg.train, seed=client_seed(cfg.seed, 0, cid))
            params = train(state.global_params, state.model_spec, state.shards[cid], local_cfg)
            updates.append(ClientUpdate(cid, params, state.shards[cid].n_samples))
        expected = fedavg(updates)
        for (we, be), (wg, bg) in zip(expected.layers, new_global.layers):
            np.testing.assert_array_equal(we, wg)
            np.testing.assert_array_equal(be, bg)
        assert report.verdict is None

    def test_honest_shards_never_mutated(self):
        cfg = FlConfig(
            rounds=3, n_clients=6, train=DESK_TRAIN, seed=5,
            attacker_ids=frozenset({1, 2}),
            attack=AttackConfig(kind="label_flip"),
        )
        data = small_split(seed=9)
        state = setup_state(cfg, data)
        honest_ids = [0, 3, 4, 5]
        before = {cid: shard_digest(state.shards[cid]) for cid in honest_ids}
        for r in range(cfg.rounds):
            state.round_index = r
            state.global_params, _ = run_round(state, cfg)
        after = {cid: shard_digest(state.shards[cid]) for cid in honest_ids}
        assert before == after

    def test_metrics_bounded(self):
        cfg = FlConfig(rounds=1, n_clients=5, train=DESK_TRAIN, seed=6)
        state = setup_state(cfg, small_split(seed=11))
        _, report = run_round(state, cfg)
        for value in (report.accuracy, report.precision, report.recall, report.f1):
            assert 0.0 <= value <= 1.0
        assert report.wallclock > 0.0


class TestRunExperiment:
    def test_round_count(self):
        cfg = FlConfig(rounds=4, n_clients=5, train=DESK_TRAIN, seed=7)
        reports = run_experiment(cfg, small_split(seed=12))
        assert [r.round_index for r in reports] == [0, 1, 2, 3]

    def test_zero_rounds(self):
        cfg = FlConfig(rounds=0, n_clients=5, train=DESK_TRAIN, seed=7)
        assert run_experiment(cfg, small_split(seed=12)) == []

    def test_bitwise_repeatable(self):
        cfg = FlConfig(
            rounds=3, n_clients=6, train=DESK_TRAIN, seed=8,
            attacker_ids=frozenset({1, 2}),
            attack=AttackConfig(kind="weight_scale", scale_factor=10.0),
            defense="fed_lsae",
        )
        data = small_split(seed=13)
        a = run_experiment(cfg, data)
        b = run_experiment(cfg, data)
        for ra, rb in zip(a, b):
            assert (ra.accuracy, ra.precision, ra.recall, ra.f1) == (
                rb.accuracy, rb.precision, rb.recall, rb.f1,
            )
            assert ra.verdict.scores == rb.verdict.scores
            assert ra.verdict.benign_ids == rb.verdict.benign_ids

    def test_fedcc_defense_produces_verdicts(self):
        cfg = FlConfig(
            rounds=2, n_clients=6, train=DESK_TRAIN, seed=9,
            attacker_ids=frozenset({1, 2}),
            attack=AttackConfig(kind="median_attack", median_b=2.0),
            defense="fedcc",
        )
        reports = run_experiment(cfg, small_split(seed=14))
        for rep in reports:
            assert rep.verdict is not None
            assert set(rep.verdict.scores) == set(range(6))

    def test_custom_partition_respected(self):
        partition = PartitionSpec(
            n_clients=4, mode="custom",
            per_client=((120, 0.0), (120, 1.0), (120, 0.5), (120, 0.5)),
        )
        cfg = FlConfig(rounds=1, n_clients=4, train=DESK_TRAIN, seed=10, partition=partition)
        data = small_split(seed=15)
        state = setup_state(cfg, data)
        assert [s.n_samples for s in state.shards] == [120, 120, 120, 120]
        assert int(state.shards[0].labels.sum()) == 0
        assert int(state.shards[1].labels.sum()) == 120

    def test_fed_lsae_requires_pretrained_ae(self):
        cfg = FlConfig(rounds=1, n_clients=4, train=DESK_TRAIN, seed=11, defense="fed_lsae")
        state = setup_state(cfg, small_split(seed=16))
        state.ae = None
        with pytest.raises(ValidationError):
            run_round(state, cfg)
