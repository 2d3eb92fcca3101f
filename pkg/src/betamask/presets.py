"""Named hyperparameter presets, one per benchmark dataset.

Each preset bundles the dataset generator settings with the training and
explainer defaults tuned for it. CLI flags override any field.
"""

from __future__ import annotations

from .datagen import (ExpressionDatasetConfig, MotifDatasetConfig,
                      PROTECTED_NEGATIVE)

MOTIF_PRESETS = ("sg-base", "sg-heterophilic", "sg-unfair", "sg-moreinform", "sg-lessinform")
EXPRESSION_PRESETS = ("expr-25", "expr-50")
ALL_PRESETS = MOTIF_PRESETS + EXPRESSION_PRESETS


def dataset_config(preset: str, seed: int, **overrides):
    """Generator config for a preset; overrides are keyword fields."""
    if preset == "sg-base":
        base = dict()
    elif preset == "sg-heterophilic":
        base = dict(heterophilic=True)
    elif preset == "sg-unfair":
        base = dict(flip_probability=0.75, protected_correlation=PROTECTED_NEGATIVE)
    elif preset == "sg-moreinform":
        base = dict(informative_features=8, total_features=11)
    elif preset == "sg-lessinform":
        base = dict(informative_features=4, total_features=21)
    elif preset == "expr-25":
        base = dict(sparsity=0.25)
    elif preset == "expr-50":
        base = dict(sparsity=0.5)
    else:
        raise ValueError(f"unknown preset {preset!r}")
    base.update(overrides)
    if preset in MOTIF_PRESETS:
        return MotifDatasetConfig(seed=seed, **base)
    return ExpressionDatasetConfig(seed=seed, **base)


# Training defaults: learning rate, weight decay, seed, epochs.
TRAIN_DEFAULTS = {
    "sg-base": dict(learning_rate=0.16, weight_decay=1e-4, seed=1, epochs=2000),
    "sg-heterophilic": dict(learning_rate=0.1, weight_decay=5e-5, seed=10, epochs=2000),
    "sg-unfair": dict(learning_rate=0.15, weight_decay=1e-4, seed=4, epochs=2000),
    "sg-lessinform": dict(learning_rate=0.05, weight_decay=1e-3, seed=1000, epochs=2000),
    "sg-moreinform": dict(learning_rate=0.05, weight_decay=1e-3, seed=400, epochs=2000),
    "expr-25": dict(learning_rate=1e-3, weight_decay=0.0, seed=200, epochs=50),
    "expr-50": dict(learning_rate=1e-3, weight_decay=0.0, seed=200, epochs=50),
}

# Beta explainer defaults: learning rate, prior shapes, epochs, batch.
BETA_DEFAULTS = {
    "sg-base": dict(learning_rate=0.05, prior_alpha=0.8, prior_beta=0.6, epochs=25),
    "sg-heterophilic": dict(learning_rate=0.05, prior_alpha=0.7, prior_beta=0.6, epochs=25),
    "sg-unfair": dict(learning_rate=0.05, prior_alpha=0.8, prior_beta=0.6, epochs=25),
    "sg-lessinform": dict(learning_rate=0.05, prior_alpha=0.6, prior_beta=0.6, epochs=25),
    "sg-moreinform": dict(learning_rate=0.05, prior_alpha=0.8, prior_beta=0.8, epochs=25),
    "expr-25": dict(learning_rate=0.001, prior_alpha=0.55, prior_beta=0.65, epochs=25),
    "expr-50": dict(learning_rate=0.01, prior_alpha=0.5, prior_beta=0.95, epochs=25),
}

# Sigmoid-mask baseline defaults: learning rate, epochs, batch.
GNNX_DEFAULTS = {
    "sg-base": dict(learning_rate=1e-5, epochs=200),
    "sg-heterophilic": dict(learning_rate=1e-5, epochs=200),
    "sg-unfair": dict(learning_rate=1e-5, epochs=200),
    "sg-lessinform": dict(learning_rate=1e-5, epochs=200),
    "sg-moreinform": dict(learning_rate=1e-5, epochs=200),
    "expr-25": dict(learning_rate=1e-5, epochs=300, graph_batch_size=300),
    "expr-50": dict(learning_rate=1e-4, epochs=300, graph_batch_size=859),
}
