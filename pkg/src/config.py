# src/config.py
"""
Configuration for SurvKAN: training defaults, search space, published presets,
symbolic-fitting constants and output paths.
"""

# Serialized model format tag
MODEL_FORMAT = "survkan-model/1"

# Process exit codes used by the CLI
EXIT_CODES = {
    "ok": 0,
    "usage": 2,
    "data": 3,
    "numerical": 4,
}

# Training defaults (TrainConfig falls back to these)
TRAIN_DEFAULTS = {
    "learning_rate": 0.01,
    "steps": 300,
    "lam": 0.01,
    "lambda_ent": 2.0,
    "lambda_coef": 0.0,
    "early_stopping": False,
    "patience": 30,
    "prune_threshold": "auto",
    "G": 4,
    "k": 3,
    "base_kind": "identity",
    "xi_b": 0.1,
    "xi_s": 0.05,
    "seed": 0,
    "grid_refresh_every": 10,
    "hidden": [],
    "validation_fraction": 0.2,
}

# Used when prune_threshold is "auto" but there is no validation split to sweep on
DEFAULT_PRUNE_THRESHOLD = 0.03

# Random-search ranges, bracketing the published tuned values
SEARCH_SPACE_DEFAULTS = {
    "learning_rate": (1e-3, 1e-1),
    "G": [3, 4, 5],
    "lam": (1e-4, 2e-2),
    "lambda_ent": (0.0, 14.0),
    "lambda_coef": (0.0, 5.0),
    "xi_b": (0.001, 0.2),
    "xi_s": (0.001, 0.2),
    "hidden_layers": (0, 2),
    "hidden_width": (1, 20),
    "base_kind": ["identity", "silu"],
    "early_stopping": [True, False],
    "prune_threshold": (0.0, 0.05),
    "steps": 300,
}

# Tuned hyperparameters reported for the benchmark datasets.
# Input width always comes from the data, so only hidden widths are stored.
# With early_stopping the pruning threshold is swept on the validation split
# and the prune_threshold entry is not used.
PRESETS = {
    "gaussian": {
        "hidden": [2], "learning_rate": 0.035, "early_stopping": False, "steps": 133,
        "prune_threshold": 0.03, "G": 4, "base_kind": "identity", "xi_s": 0.03, "xi_b": 0.13,
        "lam": 0.014, "lambda_ent": 2.0, "lambda_coef": 0.0,
    },
    "shallow": {
        "hidden": [], "learning_rate": 0.01, "early_stopping": False, "steps": 107,
        "prune_threshold": 0.03, "G": 5, "base_kind": "silu", "xi_s": 0.06, "xi_b": 0.14,
        "lam": 0.0001, "lambda_ent": 7.0, "lambda_coef": 0.0,
    },
    "deep": {
        "hidden": [5, 5], "learning_rate": 0.01, "early_stopping": True, "steps": 300,
        "prune_threshold": 0.045, "G": 4, "base_kind": "identity", "xi_s": 0.003, "xi_b": 0.16,
        "lam": 0.01, "lambda_ent": 3.0, "lambda_coef": 2.0,
    },
    "difficult": {
        "hidden": [], "learning_rate": 0.1, "early_stopping": False, "steps": 107,
        "prune_threshold": 0.03, "G": 5, "base_kind": "silu", "xi_s": 0.06, "xi_b": 0.14,
        "lam": 0.0001, "lambda_ent": 7.0, "lambda_coef": 0.0,
    },
    "gbsg": {
        "hidden": [2], "learning_rate": 0.0076, "early_stopping": True, "steps": 300,
        "prune_threshold": 0.045, "G": 3, "base_kind": "silu", "xi_s": 0.09, "xi_b": 0.18,
        "lam": 0.0007, "lambda_ent": 3.0, "lambda_coef": 2.0,
    },
    "metabric": {
        "hidden": [], "learning_rate": 0.09, "early_stopping": True, "steps": 300,
        "prune_threshold": 0.035, "G": 3, "base_kind": "silu", "xi_s": 0.1, "xi_b": 0.03,
        "lam": 0.003, "lambda_ent": 0.0, "lambda_coef": 4.0,
    },
}

# Symbolic fitting
SYMBOLIC_CONFIG = {
    "linear_r2": 0.99,
    "low_fidelity_r2": 0.9,
    "grid_box": 10.0,
    "grid_points": 101,
    "grid_rounds": 3,
    "grid_shrink": 5.0,
    "max_grid_samples": 512,
    "finetune_steps": 50,
    "finetune_learning_rate": 0.01,
    "precision": 3,
    "outlier_iqr": 3.0,
}

# Cox / CoxPH / evaluation
COX_CONFIG = {
    "ridge": 1e-6,
    "newton_tol": 1e-8,
    "newton_max_iter": 100,
    "max_halvings": 30,
    "bootstrap": 1000,
    "confidence": 0.95,
}

# Synthetic data generation
GENERATOR_CONFIG = {
    "baseline": 0.01,
    "noise_features": 2,
    "n_train": 8000,
    "n_test": 2000,
    "split_bins": 10,
}

# File Paths
DATA_PATHS = {
    "synthetic": "data/synthetic",
    "runs": "runs",
    "train_csv": "train.csv",
    "test_csv": "test.csv",
    "meta_json": "meta.json",
    "model_json": "model.json",
    "trained_model_json": "model_trained.json",
    "pruned_model_json": "model_pruned.json",
    "history_csv": "history.csv",
    "leaderboard_csv": "leaderboard.csv",
    "best_config_json": "best_config.json",
    "formula_txt": "formula.txt",
    "formula_json": "formula.json",
    "report_json": "report.json",
    "plots": "plots",
    "edge_samples": "edge_samples",
}

# Plotting
PLOT_CONFIG = {
    "figsize": (6.4, 4.8),
    "dpi": 100,
    "hashsalt": "survkan",
    "max_scatter_points": 2000,
    "curve_points": 200,
}
