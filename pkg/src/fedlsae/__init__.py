"""Federated threat-detection simulator with a latent-space poisoning defense.

The package splits into a dense network engine (`nn`), dataset plumbing
(`data`), adversarial client behaviors (`attacks`), the server-side robust
aggregation (`defense`), round orchestration (`federation`) and the
experiment front end (`experiments`).
"""

from .attacks import AttackConfig, GanConfig, flip_labels, gan_poison, median_attack, scale_params
from .data import (
    Dataset,
    NormStats,
    PartitionSpec,
    SplitResult,
    apply_normalization,
    load_csv,
    min_max_normalize,
    partition_clients,
    split_dataset,
    synth_dataset,
)
from .defense import (
    AeConfig,
    Autoencoder,
    ClientUpdate,
    DefenseVerdict,
    cka_rbf,
    cluster_scores,
    encode_latent,
    extract_plr,
    fed_lsae_round,
    fedavg,
    fedcc_round,
    hsic,
    pretrain_ae,
)
from .errors import (
    AggregationError,
    ConfigError,
    DimensionError,
    EmptyDataError,
    SchemaError,
    StructureError,
    ValidationError,
)
from .experiments import (
    CsvConfig,
    ExperimentConfig,
    ResultsFile,
    SynthConfig,
    parse_config,
    read_results,
    run_config,
    run_scenario,
    write_config,
    write_results,
)
from .federation import (
    FlConfig,
    FlState,
    RoundReport,
    evaluate,
    run_experiment,
    run_round,
    select_clients,
    setup_state,
)
from .nn import (
    ModelParams,
    ModelSpec,
    TrainConfig,
    backward,
    forward,
    init_params,
    mlp_spec,
    train,
    train_autoencoder,
)

__version__ = "0.1.0"
