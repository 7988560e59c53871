"""Mimicry model of stock co-movement: exact solution, simulation, fits and crash warnings."""

__version__ = "0.1.0"

from .model import (
    ModelParams,
    StationaryDist,
    TopologySpec,
    WrightFisherParams,
    effective_params,
    eigenvalues,
    evolution_matrix,
    invert_moments,
    moments_of,
    stationary_pmf,
    transition_probability,
    wright_fisher_map,
)
from .estimation import ComovementSeries, chi2_gof, fit_free, fit_symmetric, kde, positive_fraction
from .netsim import SimConfig, build_topology, relaxation_estimate, run
from .pipeline import (
    detect_warnings,
    evaluate_events,
    ingest_returns,
    normalized_change,
    permutation_pvalue,
    rolling_indicator,
    synth_market,
)
