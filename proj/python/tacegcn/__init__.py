"""Treatment-response prediction: qEASL labeling, patient graph, GCN, MC-dropout triage."""

from ._core import (
    Cohort,
    PipelineError,
    ablate,
    auc,
    crossval,
    encode_cohort,
    generate_cohort,
    label_cohort,
    load_cohort,
    normalize_adjacency,
    pearson_similarity,
    qeasl_fraction,
    responder_label,
    save_cohort,
    train_and_triage,
)

__all__ = [
    "Cohort",
    "PipelineError",
    "ablate",
    "auc",
    "crossval",
    "encode_cohort",
    "generate_cohort",
    "label_cohort",
    "load_cohort",
    "normalize_adjacency",
    "pearson_similarity",
    "qeasl_fraction",
    "responder_label",
    "save_cohort",
    "train_and_triage",
]
