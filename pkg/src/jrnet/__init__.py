"""Coupled stochastic neural mass networks: exact-noise splitting simulation
and SMC-ABC inference of continuous parameters and directed connectivity."""

from .inference import (ABCConfig, Generation, PriorSpec, RunRecord, ess,
                        f1_score, posterior_network, posterior_predictive,
                        run_nsmc_abc, sample_prior)
from .integrator import (KERNEL_IMPL, MultiSeries, OUPrecompute,
                         observe_and_subsample, ou_precompute, simulate)
from .model import (Adjacency, Explicit, HemispherePower, ModelParams,
                    PopulationParams, PowerDecay, Slot, ThetaLayout, TwoLevel,
                    Uniform, apply_theta, coupling_matrix, displacement,
                    read_theta, sigmoid)
from .problem import JRProblem, SimulationConfig, build_problem
from .summaries import (Curve, DistanceWeights, SummaryConfig, SummarySet,
                        calibrate_weights, compute_summaries, distance,
                        estimate_ccf, estimate_density, estimate_spectrum, iae)

__version__ = "0.1.0"

__all__ = [
    "ABCConfig", "Adjacency", "Curve", "DistanceWeights", "Explicit",
    "Generation", "HemispherePower", "JRProblem", "KERNEL_IMPL",
    "ModelParams", "MultiSeries", "OUPrecompute", "PopulationParams",
    "PowerDecay", "PriorSpec", "RunRecord", "SimulationConfig", "Slot",
    "SummaryConfig", "SummarySet", "ThetaLayout", "TwoLevel", "Uniform",
    "apply_theta", "build_problem", "calibrate_weights", "compute_summaries",
    "coupling_matrix", "displacement", "distance", "ess", "estimate_ccf",
    "estimate_density", "estimate_spectrum", "f1_score", "iae",
    "observe_and_subsample", "ou_precompute", "posterior_network",
    "posterior_predictive", "read_theta", "run_nsmc_abc", "sample_prior",
    "sigmoid", "simulate",
]
