"""Delay analysis and cache placement for clustered D2D caching networks.

Clusters of devices pool their storage into one cache per cluster.  A
request is served from the local cluster over D2D, from another cluster
through the base station, or from the core network over the backhaul.
The package computes the mean request delay of any placement from a
queueing model, optimizes placements greedily, checks the result against
brute force and a discrete-event simulator, and runs parameter sweeps.
"""
from .errors import (
    AlreadyCachedError,
    BudgetError,
    CapacityError,
    ConfigError,
    D2DCacheError,
    DivisibilityError,
    DomainError,
    PropertyViolation,
    UnstableError,
)
from .experiments import ExperimentSpec, cooperation_gain, run_experiment
from .optimizer import (
    GreedyTrace,
    brute_force_optimal,
    check_matroid,
    check_supermodularity,
    greedy_caching,
    marginal_value,
)
from .params import MBIT, SystemParams, reference_params
from .placement import CachePlacement, cpf_placement, is_feasible, random_placement
from .popularity import PopularityModel, build_popularity
from .queueing import (
    ClusterLoad,
    DelayReport,
    RateModel,
    cluster_delay,
    cpf_closed_form_rates,
    mode_arrival_rates,
    network_delay,
    service_rates,
)
from .simulator import Mode, SimConfig, SimResult, mode_route, simulate

__all__ = [
    "AlreadyCachedError",
    "BudgetError",
    "CapacityError",
    "ConfigError",
    "D2DCacheError",
    "DivisibilityError",
    "DomainError",
    "PropertyViolation",
    "UnstableError",
    "ExperimentSpec",
    "cooperation_gain",
    "run_experiment",
    "GreedyTrace",
    "brute_force_optimal",
    "check_matroid",
    "check_supermodularity",
    "greedy_caching",
    "marginal_value",
    "MBIT",
    "SystemParams",
    "reference_params",
    "CachePlacement",
    "cpf_placement",
    "is_feasible",
    "random_placement",
    "PopularityModel",
    "build_popularity",
    "ClusterLoad",
    "DelayReport",
    "RateModel",
    "cluster_delay",
    "cpf_closed_form_rates",
    "mode_arrival_rates",
    "network_delay",
    "service_rates",
    "Mode",
    "SimConfig",
    "SimResult",
    "mode_route",
    "simulate",
]

__version__ = "0.1.0"
