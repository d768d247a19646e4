"""Experiment front end: JSON configs, scenario presets, results persistence, CLI.

An experiment is a (dataset, federation, attack, defense) description run for
several independent trials; trial t reruns everything with seed + t. Results
are written as newline-delimited JSON records plus a comma-separated summary
table, and both are read back exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .attacks import AttackConfig, GanConfig
from .data import (
    Dataset,
    PartitionSpec,
    SplitResult,
    apply_normalization,
    load_csv,
    min_max_normalize,
    partition_clients,
    split_dataset,
    synth_dataset,
)
from .defense import DEFAULT_GAP_THRESHOLD, AeConfig
from .errors import ConfigError, ValidationError
from .federation import FlConfig, RoundReport, run_experiment
from .nn import TrainConfig, derive_seed

OUTPUT_DIR_ENV = "FEDLSAE_OUTPUT_DIR"
SCENARIOS = ("baseline", "defense_eval", "comparison")
METRICS = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class SynthConfig:
    n: int = 4000
    d: int = 20
    class_separation: float = 6.0
    attack_fraction: float = 0.4


@dataclass(frozen=True)
class CsvConfig:
    path: str
    label_column: str = "Label"
    drop_columns: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "drop_columns", tuple(self.drop_columns))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: SynthConfig | CsvConfig = field(default_factory=SynthConfig)
    rounds: int = 10
    n_clients: int = 10
    fraction: float = 1.0
    attacker_ids: tuple[int, ...] = ()
    attack: AttackConfig = field(default_factory=AttackConfig)
    defense: str = "none"
    train: TrainConfig = field(default_factory=TrainConfig)
    model_hidden: tuple[int, ...] = (64,)
    ae: AeConfig = field(default_factory=AeConfig)
    partition: PartitionSpec | None = None
    org_partition: tuple[tuple[int, float], ...] | None = None
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    n_orgs: int = 4
    trials: int = 5
    seed: int = 7
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "attacker_ids", tuple(sorted(int(a) for a in self.attacker_ids)))
        object.__setattr__(self, "model_hidden", tuple(int(h) for h in self.model_hidden))
        if self.org_partition is not None:
            norm = tuple((int(c), float(r)) for c, r in self.org_partition)
            object.__setattr__(self, "org_partition", norm)
            if len(norm) != self.n_orgs:
                raise ValidationError(
                    f"org_partition has {len(norm)} entries but n_orgs={self.n_orgs}"
                )
        if self.trials < 0:
            raise ValidationError(f"trials must be >= 0, got {self.trials}")

    def to_fl_config(self, run_seed: int) -> FlConfig:
        return FlConfig(
            rounds=self.rounds,
            n_clients=self.n_clients,
            fraction=self.fraction,
            attacker_ids=frozenset(self.attacker_ids),
            attack=self.attack,
            defense=self.defense,
            train=self.train,
            model_hidden=self.model_hidden,
            ae=self.ae,
            partition=self.partition,
            gap_threshold=self.gap_threshold,
            seed=run_seed,
        )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    ds: dict = {"kind": "synth", **asdict(cfg.dataset)} if isinstance(cfg.dataset, SynthConfig) else {
        "kind": "csv",
        "path": cfg.dataset.path,
        "label_column": cfg.dataset.label_column,
        "drop_columns": list(cfg.dataset.drop_columns),
    }
    partition = None
    if cfg.partition is not None and cfg.partition.mode == "custom":
        partition = {"mode": "custom", "per_client": [list(pc) for pc in cfg.partition.per_client]}
    return {
        "dataset": ds,
        "rounds": cfg.rounds,
        "n_clients": cfg.n_clients,
        "fraction": cfg.fraction,
        "attacker_ids": list(cfg.attacker_ids),
        "attack": {
            "kind": cfg.attack.kind,
            "scale_factor": cfg.attack.scale_factor,
            "median_b": cfg.attack.median_b,
            "gan": asdict(cfg.attack.gan),
        },
        "defense": cfg.defense,
        "train": {
            "epochs": cfg.train.epochs,
            "batch_size": cfg.train.batch_size,
            "learning_rate": cfg.train.learning_rate,
            "momentum": cfg.train.momentum,
            "optimizer": cfg.train.optimizer,
        },
        "model_hidden": list(cfg.model_hidden),
        "ae": {
            "hidden": list(cfg.ae.hidden),
            "bottleneck": cfg.ae.bottleneck,
            "epochs": cfg.ae.epochs,
            "learning_rate": cfg.ae.learning_rate,
            "batch_size": cfg.ae.batch_size,
        },
        "partition": partition,
        "org_partition": None
        if cfg.org_partition is None
        else [list(pc) for pc in cfg.org_partition],
        "gap_threshold": cfg.gap_threshold,
        "n_orgs": cfg.n_orgs,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "output": cfg.output,
    }


def _check_keys(d: dict, allowed: tuple[str, ...], path: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"unknown config key: {where}")


def _sub(d: dict, key: str) -> dict:
    value = d.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config key {key!r} must be an object")
    return value


def config_from_dict(raw: dict) -> ExperimentConfig:
    _check_keys(
        raw,
        ("dataset", "rounds", "n_clients", "fraction", "attacker_ids", "attack",
         "defense", "train", "model_hidden", "ae", "partition", "org_partition",
         "gap_threshold", "n_orgs", "trials", "seed", "output"),
        "",
    )
    defaults = ExperimentConfig()

    ds_raw = _sub(raw, "dataset")
    _check_keys(
        ds_raw,
        ("kind", "n", "d", "class_separation", "attack_fraction",
         "path", "label_column", "drop_columns"),
        "dataset",
    )
    kind = ds_raw.get("kind", "synth")
    if kind == "synth":
        base = SynthConfig()
        dataset: SynthConfig | CsvConfig = SynthConfig(
            n=int(ds_raw.get("n", base.n)),
            d=int(ds_raw.get("d", base.d)),
            class_separation=float(ds_raw.get("class_separation", base.class_separation)),
            attack_fraction=float(ds_raw.get("attack_fraction", base.attack_fraction)),
        )
    elif kind == "csv":
        if "path" not in ds_raw:
            raise ConfigError("dataset.path is required for csv datasets")
        dataset = CsvConfig(
            path=str(ds_raw["path"]),
            label_column=str(ds_raw.get("label_column", "Label")),
            drop_columns=tuple(ds_raw.get("drop_columns", ())),
        )
    else:
        raise ConfigError(f"dataset.kind must be 'synth' or 'csv', got {kind!r}")

    atk_raw = _sub(raw, "attack")
    _check_keys(atk_raw, ("kind", "scale_factor", "median_b", "gan"), "attack")
    gan_raw = _sub(atk_raw, "gan")
    _check_keys(gan_raw, ("epochs", "batch_size", "learning_rate", "noise_dim"), "attack.gan")
    gan_base = GanConfig()
    noise_dim = gan_raw.get("noise_dim", gan_base.noise_dim)
    attack = AttackConfig(
        kind=str(atk_raw.get("kind", "none")),
        scale_factor=float(atk_raw.get("scale_factor", 10.0)),
        median_b=float(atk_raw.get("median_b", 2.0)),
        gan=GanConfig(
            epochs=int(gan_raw.get("epochs", gan_base.epochs)),
            batch_size=int(gan_raw.get("batch_size", gan_base.batch_size)),
            learning_rate=float(gan_raw.get("learning_rate", gan_base.learning_rate)),
            noise_dim=None if noise_dim is None else int(noise_dim),
        ),
    )

    tr_raw = _sub(raw, "train")
    _check_keys(
        tr_raw, ("epochs", "batch_size", "learning_rate", "momentum", "optimizer"), "train"
    )
    tr_base = TrainConfig()
    train_cfg = TrainConfig(
        epochs=int(tr_raw.get("epochs", tr_base.epochs)),
        batch_size=int(tr_raw.get("batch_size", tr_base.batch_size)),
        learning_rate=float(tr_raw.get("learning_rate", tr_base.learning_rate)),
        momentum=float(tr_raw.get("momentum", tr_base.momentum)),
        optimizer=str(tr_raw.get("optimizer", tr_base.optimizer)),
    )

    ae_raw = _sub(raw, "ae")
    _check_keys(ae_raw, ("hidden", "bottleneck", "epochs", "learning_rate", "batch_size"), "ae")
    ae_base = AeConfig()
    ae_cfg = AeConfig(
        hidden=tuple(ae_raw.get("hidden", ae_base.hidden)),
        bottleneck=int(ae_raw.get("bottleneck", ae_base.bottleneck)),
        epochs=int(ae_raw.get("epochs", ae_base.epochs)),
        learning_rate=float(ae_raw.get("learning_rate", ae_base.learning_rate)),
        batch_size=int(ae_raw.get("batch_size", ae_base.batch_size)),
    )

    n_clients = int(raw.get("n_clients", defaults.n_clients))
    partition = None
    part_raw = raw.get("partition")
    if part_raw is not None:
        _check_keys(part_raw, ("mode", "per_client"), "partition")
        mode = part_raw.get("mode", "iid")
        if mode == "custom":
            per_client = tuple(tuple(pc) for pc in part_raw.get("per_client", ()))
            partition = PartitionSpec(n_clients=n_clients, mode="custom", per_client=per_client)
        elif mode != "iid":
            raise ConfigError(f"partition.mode must be 'iid' or 'custom', got {mode!r}")

    org_raw = raw.get("org_partition")
    org_partition = None if org_raw is None else tuple(tuple(pc) for pc in org_raw)

    try:
        cfg = ExperimentConfig(
            dataset=dataset,
            rounds=int(raw.get("rounds", defaults.rounds)),
            n_clients=n_clients,
            fraction=float(raw.get("fraction", defaults.fraction)),
            attacker_ids=tuple(raw.get("attacker_ids", ())),
            attack=attack,
            defense=str(raw.get("defense", defaults.defense)),
            train=train_cfg,
            model_hidden=tuple(raw.get("model_hidden", defaults.model_hidden)),
            ae=ae_cfg,
            partition=partition,
            org_partition=org_partition,
            gap_threshold=float(raw.get("gap_threshold", defaults.gap_threshold)),
            n_orgs=int(raw.get("n_orgs", defaults.n_orgs)),
            trials=int(raw.get("trials", defaults.trials)),
            seed=int(raw.get("seed", defaults.seed)),
            output=raw.get("output"),
        )
        cfg.to_fl_config(cfg.seed)  # trigger federation invariant checks
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Load and validate a JSON experiment config, applying defaults."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return config_from_dict(raw)


def write_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")


@dataclass
class ResultsFile:
    """Everything one experiment produced: config echo, raw records, averages."""

    config: dict
    records: list[dict]
    round_avg: list[dict]
    summary: list[dict]


def prepare_data(cfg: ExperimentConfig, run_seed: int) -> SplitResult:
    """Materialize and split the dataset for one trial."""
    if isinstance(cfg.dataset, SynthConfig):
        ds = synth_dataset(
            cfg.dataset.n,
            cfg.dataset.d,
            cfg.dataset.class_separation,
            cfg.dataset.attack_fraction,
            derive_seed(run_seed, 41),
        )
        split = split_dataset(ds, derive_seed(run_seed, 43), cfg.n_orgs)
    else:
        ds = load_csv(cfg.dataset.path, cfg.dataset.label_column, cfg.dataset.drop_columns)
        split = split_dataset(ds, derive_seed(run_seed, 43), cfg.n_orgs)
        train, stats = min_max_normalize(split.train)
        split = SplitResult(
            train=train,
            server_test=apply_normalization(split.server_test, stats),
            ae_pretrain_orgs=[apply_normalization(o, stats) for o in split.ae_pretrain_orgs],
        )
    if cfg.org_partition is not None:
        pool_features = np.vstack([o.features for o in split.ae_pretrain_orgs])
        pool_labels = np.concatenate([o.labels for o in split.ae_pretrain_orgs])
        pool = Dataset(pool_features, pool_labels, list(split.train.feature_names))
        org_spec = PartitionSpec(
            n_clients=len(cfg.org_partition), mode="custom", per_client=cfg.org_partition
        )
        split = SplitResult(
            train=split.train,
            server_test=split.server_test,
            ae_pretrain_orgs=partition_clients(pool, org_spec, derive_seed(run_seed, 47)),
        )
    return split


def _record(scheme: str, trial: int, report: RoundReport) -> dict:
    rec = {
        "scheme": scheme,
        "trial": trial,
        "round": report.round_index,
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "benign": None,
        "malicious": None,
        "scores": None,
    }
    if report.verdict is not None:
        rec["benign"] = sorted(report.verdict.benign_ids)
        rec["malicious"] = sorted(report.verdict.malicious_ids)
        rec["scores"] = {str(cid): s for cid, s in sorted(report.verdict.scores.items())}
    return rec


def run_trials(cfg: ExperimentConfig, scheme: str) -> list[dict]:
    """Run cfg.trials independent trials of one configuration."""
    records = []
    for trial in range(cfg.trials):
        run_seed = cfg.seed + trial
        data = prepare_data(cfg, run_seed)
        reports = run_experiment(cfg.to_fl_config(run_seed), data)
        records.extend(_record(scheme, trial, rep) for rep in reports)
    return records


def _mean_rows(records: list[dict], keys: tuple[str, ...]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for rec in records:
        groups.setdefault(tuple(rec[k] for k in keys), []).append(rec)
    rows = []
    for group_key, recs in sorted(groups.items()):
        row = dict(zip(keys, group_key))
        for metric in METRICS:
            row[metric] = sum(r[metric] for r in recs) / len(recs)
        rows.append(row)
    return rows


def build_results(config_echo: dict, records: list[dict]) -> ResultsFile:
    """Assemble per-round trial averages and the per-scheme summary table."""
    round_avg = _mean_rows(records, ("scheme", "round"))
    summary = []
    schemes = sorted({rec["scheme"] for rec in records})
    for scheme in schemes:
        mine = [r for r in records if r["scheme"] == scheme]
        last_round = max(r["round"] for r in mine)
        final = _mean_rows([r for r in mine if r["round"] == last_round], ("scheme",))[0]
        overall = _mean_rows(mine, ("scheme",))[0]
        summary.append({"scheme": f"{scheme}:final", **{m: final[m] for m in METRICS}})
        summary.append({"scheme": f"{scheme}:round_avg", **{m: overall[m] for m in METRICS}})
    return ResultsFile(config=config_echo, records=records, round_avg=round_avg, summary=summary)


def run_config(cfg: ExperimentConfig) -> ResultsFile:
    """Run a single experiment configuration for cfg.trials trials."""
    scheme = f"{cfg.attack.kind}/{cfg.defense}"
    records = run_trials(cfg, scheme)
    echo = {"scenario": None, "overrides": {}, "config": config_to_dict(cfg)}
    return build_results(echo, records)


def _set_by_path(tree: dict, dotted: str, value) -> None:
    node = tree
    parts = dotted.split(".")
    for part in parts[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            node[part] = nxt
        node = nxt
    node[parts[-1]] = value


def _with_overrides(base: dict, overrides: dict | None) -> dict:
    out = json.loads(json.dumps(base))
    for key, value in (overrides or {}).items():
        _set_by_path(out, key, value)
    return out


# Bench-scale preset: small synthetic corpus, a [d, 64, 2] detector and
# training hyperparameters that reach convergence within 10 rounds.
def _bench_base() -> dict:
    return {
        "dataset": {"kind": "synth", "n": 4000, "d": 20,
                    "class_separation": 12.0, "attack_fraction": 0.4},
        "rounds": 10,
        "n_clients": 10,
        "fraction": 1.0,
        "train": {"epochs": 3, "batch_size": 32, "learning_rate": 0.013,
                  "momentum": 0.9, "optimizer": "adam"},
        "model_hidden": [64],
        "ae": {"bottleneck": 8},
        "trials": 5,
        "seed": 7,
    }


# Skewed shards mirroring the non-IID comparison setup: six clients share the
# pool distribution (four of them compromised), two are all-benign collectors
# and two see only attack traffic.
NONIID_PER_CLIENT = [
    [200, 0.4], [200, 0.4], [200, 0.4], [200, 0.4], [200, 0.4], [200, 0.4],
    [200, 0.0], [200, 1.0], [200, 0.0], [200, 1.0],
]

# Server-side organizations with unequal class mixes so the autoencoder sees
# benign models trained on skewed data during pre-training. Sized well under
# the 5% share so every class draw stays feasible across trial reshuffles.
NONIID_ORG_PARTITION = [[36, 0.25], [36, 0.0], [36, 1.0], [36, 0.25]]

ATTACKERS_4_OF_10 = [1, 2, 3, 4]


def _scenario_runs(name: str) -> list[tuple[str, dict]]:
    """(scheme label, config-dict patch) pairs making up one scenario."""
    if name == "baseline":
        return [("none/none", {})]
    if name == "defense_eval":
        runs = []
        for attack in ("label_flip", "gan_poison", "weight_scale"):
            patch_attack = {"attacker_ids": ATTACKERS_4_OF_10,
                            "attack": {"kind": attack, "scale_factor": 10.0}}
            for defense in ("none", "fed_lsae"):
                patch = json.loads(json.dumps(patch_attack))
                patch["defense"] = defense
                runs.append((f"{attack}/{defense}", patch))
        return runs
    if name == "comparison":
        runs = []
        for tag in ("iid", "noniid"):
            for defense in ("fedcc", "fed_lsae"):
                # gentler local steps keep benign skew small relative to the
                # crafted deviations; the narrow bottleneck folds benign
                # variation onto one latent manifold
                patch: dict = {
                    "attacker_ids": ATTACKERS_4_OF_10,
                    "attack": {"kind": "median_attack", "median_b": 2.0},
                    "defense": defense,
                    "train": {"learning_rate": 0.003},
                    "ae": {"bottleneck": 4},
                }
                if tag == "noniid":
                    patch["partition"] = {"mode": "custom", "per_client": NONIID_PER_CLIENT}
                    patch["org_partition"] = NONIID_ORG_PARTITION
                runs.append((f"median_attack/{defense}/{tag}", patch))
        return runs
    raise ConfigError(f"unknown scenario {name!r} (choose from {', '.join(SCENARIOS)})")


def run_scenario(name: str, overrides: dict | None = None) -> ResultsFile:
    """Run one of the preset scenarios, with optional dotted-key overrides.

    baseline: no attackers, plain FedAvg.
    defense_eval: 4/10 attackers running each data/model attack, undefended
    vs. latent-space defense, on paired trial seeds.
    comparison: coordinated median-style crafted updates, raw-PLR baseline
    vs. latent-space defense, under IID and skewed client distributions.
    """
    records = []
    base = _with_overrides(_bench_base(), overrides)
    for scheme, patch in _scenario_runs(name):
        merged = _with_overrides(base, _flatten(patch))
        cfg = config_from_dict(merged)
        records.extend(run_trials(cfg, scheme))
    echo = {"scenario": name, "overrides": overrides or {},
            "config": config_to_dict(config_from_dict(base))}
    return build_results(echo, records)


def _flatten(patch: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in patch.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def write_results(rf: ResultsFile, path) -> None:
    """Write `{path}.jsonl` (config + per-round records) and `{path}.csv` (summary)."""
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"type": "config", "config": rf.config})]
    lines += [json.dumps({"type": "record", **rec}) for rec in rf.records]
    lines += [json.dumps({"type": "round_avg", **row}) for row in rf.round_avg]
    base.with_suffix(base.suffix + ".jsonl").write_text("\n".join(lines) + "\n")

    csv_lines = ["scheme,accuracy,precision,recall,f1"]
    for row in rf.summary:
        csv_lines.append(
            ",".join([row["scheme"]] + [repr(float(row[m])) for m in METRICS])
        )
    base.with_suffix(base.suffix + ".csv").write_text("\n".join(csv_lines) + "\n")


def read_results(path) -> ResultsFile:
    """Exact inverse of write_results."""
    base = Path(path)
    config: dict = {}
    records: list[dict] = []
    round_avg: list[dict] = []
    for line in base.with_suffix(base.suffix + ".jsonl").read_text().splitlines():
        obj = json.loads(line)
        kind = obj.pop("type")
        if kind == "config":
            config = obj["config"]
        elif kind == "record":
            records.append(obj)
        elif kind == "round_avg":
            round_avg.append(obj)
        else:
            raise ValidationError(f"unknown record type {kind!r} in {path}")
    summary = []
    csv_text = base.with_suffix(base.suffix + ".csv").read_text().splitlines()
    for line in csv_text[1:]:
        scheme, *values = line.split(",")
        summary.append({"scheme": scheme, **dict(zip(METRICS, map(float, values)))})
    return ResultsFile(config=config, records=records, round_avg=round_avg, summary=summary)


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _resolve_output(explicit: str | None, configured: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    if configured:
        return Path(configured)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fedlsae",
        description="Federated threat-detection simulator with latent-space "
        "poisoning defense.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--output", help="output base path (writes .jsonl and .csv)")

    p_scenario = sub.add_parser("scenario", help="run a preset scenario")
    p_scenario.add_argument("name", choices=SCENARIOS)
    p_scenario.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="dotted config override, e.g. train.learning_rate=0.05",
    )
    p_scenario.add_argument("--output", help="output base path (writes .jsonl and .csv)")

    p_validate = sub.add_parser("validate", help="check a config file and exit")
    p_validate.add_argument("config")

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            parse_config(args.config)
            print(f"{args.config}: ok")
            return 0
        if args.command == "run":
            cfg = parse_config(args.config)
            rf = run_config(cfg)
            out = _resolve_output(args.output, cfg.output, Path(args.config).stem)
        else:
            overrides = dict(_parse_override(o) for o in args.override)
            rf = run_scenario(args.name, overrides)
            out = _resolve_output(args.output, rf.config["config"].get("output"), args.name)
        write_results(rf, out)
        print(f"wrote {out}.jsonl and {out}.csv")
        for row in rf.summary:
            print("  " + " ".join(
                [row["scheme"]] + [f"{m}={row[m]:.4f}" for m in METRICS]
            ))
        return 0
    except (ConfigError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
