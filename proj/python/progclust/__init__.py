"""Clustering of ALSFRS-R progression trajectories with a weak-supervised distance."""

from ._progclust import (
    Cohort,
    ComputeError,
    Config,
    InvalidArgument,
    ParseError,
    adjusted_rand_index,
    ahc_complete,
    audit_metric,
    distance_matrix,
    embed,
    eval_sigmoid,
    fit_sigmoid,
    invert_for_score,
    kmeans,
    kmedoids,
    load_cohort,
    logrank,
    run_grid,
    silhouette,
    synth_cohort,
    workflow_names,
)

__all__ = [
    "Cohort",
    "ComputeError",
    "Config",
    "InvalidArgument",
    "ParseError",
    "adjusted_rand_index",
    "ahc_complete",
    "audit_metric",
    "distance_matrix",
    "embed",
    "eval_sigmoid",
    "fit_sigmoid",
    "invert_for_score",
    "kmeans",
    "kmedoids",
    "load_cohort",
    "logrank",
    "run_grid",
    "silhouette",
    "synth_cohort",
    "workflow_names",
]
