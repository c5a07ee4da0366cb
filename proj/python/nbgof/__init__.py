"""Goodness-of-fit tests for stochastic block models based on non-backtracking spectra."""

from ._nbgof import (
    ConvergenceError,
    Graph,
    IoError,
    ParameterError,
    count_nb,
    estimate_k,
    estimate_p,
    gof_test,
    label_correlation,
    nb_spectrum,
    read_edge_list,
    sample_er,
    sample_sbm,
    simulate_null,
    spectral_labels,
    statistic,
    tw1_cdf,
    tw1_quantile,
    write_edge_list,
)

__all__ = [
    "ConvergenceError",
    "Graph",
    "IoError",
    "ParameterError",
    "count_nb",
    "estimate_k",
    "estimate_p",
    "gof_test",
    "label_correlation",
    "nb_spectrum",
    "read_edge_list",
    "sample_er",
    "sample_sbm",
    "simulate_null",
    "spectral_labels",
    "statistic",
    "tw1_cdf",
    "tw1_quantile",
    "write_edge_list",
]
__version__ = "0.1.0"
