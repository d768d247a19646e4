"""Acceptance criteria, one test per criterion, printed as PASS/FAIL lines.

Criteria 1-5 run the shipped scenario presets at full size (10 clients,
4000-sample synthetic corpus, R=10, 5 trials); 6-7 are oracle and
determinism batteries. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time

import numpy as np
import pytest

from fedlsae.defense import ClientUpdate, cka_rbf, cluster_scores, fedavg, hsic
from fedlsae.experiments import config_from_dict, run_config, run_scenario
from fedlsae.federation import evaluate
from fedlsae.nn import (
    ModelParams,
    ModelSpec,
    TrainConfig,
    backward,
    cross_entropy,
    forward,
    init_params,
)

METRICS = ("accuracy", "precision", "recall", "f1")


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def baseline():
    t0 = time.perf_counter()
    rf = run_scenario("baseline")
    return rf, time.perf_counter() - t0


@pytest.fixture(scope="module")
def defense_eval():
    return run_scenario("defense_eval")


@pytest.fixture(scope="module")
def comparison():
    return run_scenario("comparison")


def summary_row(rf, name):
    for row in rf.summary:
        if row["scheme"] == name:
            return row
    raise KeyError(name)


def report(criterion, ok, detail):
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


# ---------------------------------------------------------------- criteria 1-5

def test_criterion_1_baseline(baseline):
    rf, elapsed = baseline
    row = summary_row(rf, "none/none:final")
    values = {m: row[m] for m in METRICS}
    ok = all(v >= 0.98 for v in values.values()) and elapsed < 120.0
    detail = ", ".join(f"{m}={v:.4f}" for m, v in values.items()) + f", {elapsed:.1f}s"
    assert report(1, ok, detail)


def test_criterion_2_weight_scale(defense_eval):
    rf = defense_eval
    undefended = summary_row(rf, "weight_scale/none:round_avg")
    collapse = {m: undefended[m] for m in ("precision", "recall", "f1")}
    collapse_ok = all(v <= 0.05 for v in collapse.values())

    defended = [r for r in rf.round_avg
                if r["scheme"] == "weight_scale/fed_lsae" and r["round"] >= 2]
    recover_ok = all(r[m] >= 0.95 for r in defended for m in METRICS)

    detail = (
        "undefended " + ", ".join(f"{m}={v:.4f}" for m, v in collapse.items())
        + "; defended min from 3rd round = "
        + f"{min(r[m] for r in defended for m in METRICS):.4f}"
    )
    assert report(2, collapse_ok and recover_ok, detail)


def test_criterion_3_data_attacks(defense_eval):
    rf = defense_eval
    flip = summary_row(rf, "label_flip/none:round_avg")["accuracy"]
    gan = summary_row(rf, "gan_poison/none:round_avg")["accuracy"]
    flip_final = summary_row(rf, "label_flip/fed_lsae:final")["accuracy"]
    gan_final = summary_row(rf, "gan_poison/fed_lsae:final")["accuracy"]
    band_ok = 0.35 <= flip <= 0.65 and 0.35 <= gan <= 0.65
    defended_ok = flip_final >= 0.95 and gan_final >= 0.95
    detail = (
        f"label_flip avg={flip:.4f}, gan avg={gan:.4f}; "
        f"defended finals {flip_final:.4f}/{gan_final:.4f}"
    )
    assert report(3, band_ok and defended_ok, detail)


def test_criterion_4_detection_exactness(defense_eval):
    rf = defense_eval
    rounds = [r for r in rf.records
              if r["scheme"] == "weight_scale/fed_lsae" and r["trial"] == 0]
    assert len(rounds) == 10
    exact = sum(r["malicious"] == [1, 2, 3, 4] for r in rounds)
    assert report(4, exact >= 9, f"exact verdicts in {exact}/10 rounds")


def test_criterion_5_comparison_direction(comparison):
    rf = comparison
    lsae = summary_row(rf, "median_attack/fed_lsae/noniid:round_avg")
    fedcc = summary_row(rf, "median_attack/fedcc/noniid:round_avg")

    def mean_gap(scheme):
        gaps = []
        for rec in rf.records:
            if rec["scheme"] != scheme:
                continue
            scores = {int(c): s for c, s in rec["scores"].items()}
            benign = min(s for c, s in scores.items() if c not in (1, 2, 3, 4))
            malicious = max(scores[c] for c in (1, 2, 3, 4))
            gaps.append(benign - malicious)
        return float(np.mean(gaps))

    gap_lsae = mean_gap("median_attack/fed_lsae/noniid")
    gap_fedcc = mean_gap("median_attack/fedcc/noniid")
    ok = (
        lsae["accuracy"] > fedcc["accuracy"]
        and lsae["f1"] > fedcc["f1"]
        and gap_lsae > gap_fedcc
    )
    detail = (
        f"acc {lsae['accuracy']:.4f}>{fedcc['accuracy']:.4f}, "
        f"f1 {lsae['f1']:.4f}>{fedcc['f1']:.4f}, "
        f"gap {gap_lsae:+.4f}>{gap_fedcc:+.4f}"
    )
    assert report(5, ok, detail)


# ---------------------------------------------------------------- criterion 6

def fd_gradient_check(trials=20):
    rng = np.random.default_rng(60)
    worst = 0.0
    for trial in range(trials):
        n_layers = int(rng.integers(2, 4))
        dims = tuple(int(d) for d in rng.integers(2, 9, size=n_layers)) + (2,)
        acts = tuple(rng.choice(["relu", "tanh", "none"], size=len(dims) - 2)) + ("none",)
        spec = ModelSpec(dims, acts)
        params = init_params(spec, 600 + trial)
        x = rng.standard_normal((4, dims[0]))
        y = rng.integers(0, 2, size=4)
        analytic = backward(params, spec, x, y)
        eps = 1e-5
        for li, (w, b) in enumerate(params.layers):
            for arr, grad in ((w, analytic.layers[li][0]), (b, analytic.layers[li][1])):
                flat, gflat = arr.ravel(), grad.ravel()
                for k in range(flat.size):
                    orig = flat[k]
                    flat[k] = orig + eps
                    up = cross_entropy(forward(params, spec, x)[0], y)
                    flat[k] = orig - eps
                    down = cross_entropy(forward(params, spec, x)[0], y)
                    flat[k] = orig
                    numeric = (up - down) / (2 * eps)
                    rel = abs(gflat[k] - numeric) / max(1.0, abs(gflat[k]) + abs(numeric))
                    worst = max(worst, rel)
    return worst


def hsic_oracle(k, l):
    n = len(k)
    t1 = sum(k[i][j] * l[i][j] for i in range(n) for j in range(n))
    t2 = sum(k[i][j] * l[j][m] for i in range(n) for j in range(n) for m in range(n))
    t3 = k.sum() * l.sum() / n**2
    return (t1 - 2.0 * t2 / n + t3) / (n - 1) ** 2


def rbf_oracle(x):
    n = len(x)
    d = [np.sqrt(((x[i] - x[j]) ** 2).sum()) for i in range(n) for j in range(i + 1, n)]
    sigma = float(np.median(d)) or 1.0
    return np.array(
        [[np.exp(-((x[i] - x[j]) ** 2).sum() / (2 * sigma**2)) for j in range(n)]
         for i in range(n)]
    )


def test_criterion_6_numerical_oracles():
    # (a) analytic gradients against central differences
    worst = fd_gradient_check()
    grad_ok = worst < 1e-4

    rng = np.random.default_rng(61)

    # (b) hsic and cka against double-sum oracles
    kernel_ok = True
    for n in (5, 7, 10):
        a = rng.standard_normal((n, n))
        k, l = (a + a.T) / 2, None
        b = rng.standard_normal((n, n))
        l = (b + b.T) / 2
        kernel_ok &= abs(hsic(k, l) - hsic_oracle(k, l)) < 1e-10
        x = rng.standard_normal((n, 4))
        y = rng.standard_normal((n, 3))
        kx, ky = rbf_oracle(x), rbf_oracle(y)
        expected = hsic_oracle(kx, ky) / np.sqrt(hsic_oracle(kx, kx) * hsic_oracle(ky, ky))
        kernel_ok &= abs(cka_rbf(x, y) - expected) < 1e-10

    # (c) self-similarity, symmetry, range
    props_ok = True
    for _ in range(25):
        x = rng.standard_normal((8, 4))
        y = rng.standard_normal((8, 5))
        props_ok &= cka_rbf(x, x) == 1.0
        props_ok &= abs(cka_rbf(x, y) - cka_rbf(y, x)) < 1e-12
        props_ok &= 0.0 <= cka_rbf(x, y) <= 1.0

    # (d) fedavg weighted mean and permutation invariance
    fedavg_ok = True
    for _ in range(20):
        updates = [
            ClientUpdate(
                i,
                ModelParams([(rng.standard_normal((3, 2)), rng.standard_normal(3))]),
                int(rng.integers(1, 30)),
            )
            for i in range(5)
        ]
        total = sum(u.n_samples for u in updates)
        manual = sum(u.n_samples / total * u.params.layers[0][0] for u in updates)
        agg = fedavg(updates)
        flipped = fedavg(updates[::-1])
        fedavg_ok &= np.abs(agg.layers[0][0] - manual).max() < 1e-12
        fedavg_ok &= np.abs(agg.layers[0][0] - flipped.layers[0][0]).max() < 1e-12

    # (e) clustering against exhaustive split search
    cluster_ok = True
    for _ in range(1000):
        scores = rng.uniform(size=int(rng.integers(2, 12)))
        order = np.argsort(scores, kind="stable")
        vals = scores[order]
        best = None
        for k in range(1, len(vals)):
            lo, hi = vals[:k], vals[k:]
            cost = ((lo - lo.mean()) ** 2).sum() + ((hi - hi.mean()) ** 2).sum()
            if best is None or cost < best[0]:
                best = (cost, k)
        low = sorted(int(i) for i in order[: best[1]])
        high = sorted(int(i) for i in order[best[1] :])
        expected = (high, low) if len(high) >= len(low) else (low, high)
        cluster_ok &= cluster_scores(scores, gap_threshold=0.0) == expected

    # (f) metrics against a brute-force confusion matrix
    from fedlsae.data import Dataset

    spec = ModelSpec((1, 2, 2), ("none", "none"))
    passthrough = ModelParams(
        [
            (np.array([[1.0], [1.0]]), np.zeros(2)),
            (np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.0])),
        ]
    )
    metrics_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        preds = rng.integers(0, 2, size=n)
        labels = rng.integers(0, 2, size=n)
        tp = int(((preds == 1) & (labels == 1)).sum())
        fp = int(((preds == 1) & (labels == 0)).sum())
        fn = int(((preds == 0) & (labels == 1)).sum())
        tn = int(((preds == 0) & (labels == 0)).sum())
        expected = (
            (tp + tn) / n,
            tp / (tp + fp) if tp + fp else 0.0,
            tp / (tp + fn) if tp + fn else 0.0,
        )
        expected += (
            2 * expected[1] * expected[2] / (expected[1] + expected[2])
            if expected[1] + expected[2] else 0.0,
        )
        got = evaluate(passthrough, spec, Dataset(preds[:, None].astype(float), labels))
        metrics_ok &= max(abs(g - e) for g, e in zip(got, expected)) < 1e-12

    parts = {
        "gradients": grad_ok, "kernels": kernel_ok, "cka-props": props_ok,
        "fedavg": fedavg_ok, "clustering": cluster_ok, "metrics": metrics_ok,
    }
    detail = ", ".join(f"{name}={'ok' if ok else 'FAIL'}" for name, ok in parts.items())
    assert report(6, all(parts.values()), detail)


# ---------------------------------------------------------------- criterion 7

def test_criterion_7_determinism(tmp_path):
    cfg = config_from_dict(
        {
            "dataset": {"kind": "synth", "n": 1200, "d": 12,
                        "class_separation": 12.0, "attack_fraction": 0.4},
            "rounds": 3,
            "n_clients": 6,
            "attacker_ids": [1, 2],
            "attack": {"kind": "weight_scale", "scale_factor": 10.0,
                       "gan": {"epochs": 3}},
            "defense": "fed_lsae",
            "train": {"epochs": 2, "batch_size": 32, "learning_rate": 0.01,
                      "optimizer": "adam"},
            "ae": {"hidden": [64, 32], "bottleneck": 8, "epochs": 10},
            "trials": 2,
            "seed": 70,
        }
    )
    first = run_config(cfg)
    second = run_config(cfg)
    records_ok = first.records == second.records and first == second

    from fedlsae.experiments import write_results

    write_results(first, tmp_path / "a")
    write_results(second, tmp_path / "b")
    bytes_ok = (
        (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        and (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    )
    assert report(7, records_ok and bytes_ok,
                  f"records identical={records_ok}, files identical={bytes_ok}")
