"""padex: a desk-scale lab for poisoning-attack diagnosis on swarm surrogates.

The pipeline in one breath: an evolutionary coalition-formation game is
solved on random swarm layouts to build a labeled dataset, a from-scratch
Random Forest learns to predict the emergent coalition from positions, a
graded data-poisoning attack corrupts the training set, and Shapley-value
behavior fingerprints compared with a Mann-Whitney U test expose the
compromise.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, GuardError, PadexError
from .game import (
    PayoffParams,
    Position,
    SwarmInstance,
    agent_payoff,
    coalition_members,
    coalition_of,
    coalition_size,
    coalition_welfare,
    pairwise_similarity,
    sampling_quality,
)
from .solver import (
    GameSolution,
    SolverConfig,
    brute_force_stable,
    expected_join_gain,
    is_nash_stable,
    solve,
    step,
)
from .data import Dataset, Split, generate, load_csv, row_instance, save_csv, split
from .poison import PoisonConfig, injected_count, poison, severity_grid
from .forest import (
    ForestHyperparams,
    ForestModel,
    accuracy,
    load_model,
    predict,
    predict_many,
    predict_proba,
    predict_proba_many,
    save_model,
    train,
)
from .explain import (
    Attribution,
    BackgroundSet,
    BehaviorFingerprint,
    attribute_samples,
    fingerprint,
    sample_background,
    save_attributions_csv,
    shapley_exact,
    shapley_sampled,
    value_function,
)
from .stats import UTestResult, label_distribution, mann_whitney_u, tv_distance
from .diagnose import (
    DiagnosisReport,
    SweepCell,
    compare,
    save_reports_json,
    save_sweep_csv,
    severity_sweep,
)

__all__ = [
    "__version__",
    "PadexError", "ConfigError", "DataError", "GuardError",
    "Position", "PayoffParams", "SwarmInstance",
    "coalition_of", "coalition_members", "coalition_size",
    "sampling_quality", "pairwise_similarity", "agent_payoff", "coalition_welfare",
    "SolverConfig", "GameSolution", "expected_join_gain", "step", "solve",
    "is_nash_stable", "brute_force_stable",
    "Dataset", "Split", "generate", "split", "save_csv", "load_csv", "row_instance",
    "PoisonConfig", "poison", "severity_grid", "injected_count",
    "ForestHyperparams", "ForestModel", "train", "predict", "predict_proba",
    "predict_many", "predict_proba_many", "accuracy", "save_model", "load_model",
    "Attribution", "BackgroundSet", "BehaviorFingerprint", "value_function",
    "shapley_exact", "shapley_sampled", "attribute_samples", "fingerprint",
    "sample_background", "save_attributions_csv",
    "UTestResult", "mann_whitney_u", "tv_distance", "label_distribution",
    "DiagnosisReport", "SweepCell", "compare", "severity_sweep",
    "save_sweep_csv", "save_reports_json",
]
