"""Predictive clustering trees for load scenario generation."""

from ._loadpct import (
    Dataset,
    Error,
    Model,
    ParseError,
    SchemaError,
    cross_validate,
    energy_score,
    fit,
    generate,
    load_model,
    model_from_json,
    node_quantiles,
    random_baseline,
    read_dataset,
    run_cli,
    synth,
)

__all__ = [
    "Dataset",
    "Error",
    "Model",
    "ParseError",
    "SchemaError",
    "cross_validate",
    "energy_score",
    "fit",
    "generate",
    "load_model",
    "model_from_json",
    "node_quantiles",
    "random_baseline",
    "read_dataset",
    "run_cli",
    "synth",
]
