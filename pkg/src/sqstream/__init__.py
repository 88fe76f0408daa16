"""Streaming quantile (VaR) and superquantile (CVaR) estimation.

A two-time-scale stochastic-approximation library: the quantile iterate
follows a Robbins-Monro step while two superquantile iterates (a tail
average and a convexified form) follow a slower step, together with an
online variance estimate that yields studentized confidence intervals.
Companion modules provide closed-form distribution oracles, the theoretical
limit constants (CLT variances, quadratic-strong-law limits,
iterated-logarithm envelopes, step-product asymptotics), a Monte-Carlo
experiment harness, and a CLI with CSV ingestion for financial loss series.
"""

__version__ = "0.1.0"

from .estimator import (AlphaLevel, StepSchedule, ConfidenceInterval,
                        TwoTimeScaleEstimator, WARM_START,
                        FAST_B, SLOW_B, UNSUPPORTED)
from .distributions import (DistributionModel, Exponential, Gamma, Pareto,
                            Normal, Empirical, RiskOracle, quantile_oracle,
                            superquantile_oracle, variance_oracles,
                            drift_functions, sample, risk_oracle, parse_model)
from .asymptotics import (TheoreticalConstants, clt_constants,
                          constants_for_model, pn_product, log_pn_product,
                          log_pn_running, pn_start_index, pn_limit, zeta,
                          euler_gamma_check, log_pn_shift_constant)
from .experiments import (ExperimentConfig, ExperimentReport, run_replicas,
                          qsl_statistic, lil_envelope, coverage_experiment,
                          resolve_threads, DEFAULT_LIL_N_MIN)

__all__ = [
    "__version__",
    "AlphaLevel", "StepSchedule", "ConfidenceInterval",
    "TwoTimeScaleEstimator", "WARM_START", "FAST_B", "SLOW_B", "UNSUPPORTED",
    "DistributionModel", "Exponential", "Gamma", "Pareto", "Normal",
    "Empirical", "RiskOracle", "quantile_oracle", "superquantile_oracle",
    "variance_oracles", "drift_functions", "sample", "risk_oracle",
    "parse_model",
    "TheoreticalConstants", "clt_constants", "constants_for_model",
    "pn_product", "log_pn_product", "log_pn_running", "pn_start_index",
    "pn_limit", "zeta", "euler_gamma_check", "log_pn_shift_constant",
    "ExperimentConfig", "ExperimentReport", "run_replicas", "qsl_statistic",
    "lil_envelope", "coverage_experiment", "resolve_threads",
    "DEFAULT_LIL_N_MIN",
]
