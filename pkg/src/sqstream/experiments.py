"""Monte-Carlo harness for the two-time-scale estimators.

``run_replicas`` drives many independent streams through the compiled
kernel and aggregates what the limit theorems talk about: rescaled terminal
errors and their sample variances/correlation (joint CLT), normalized
running sums of squared errors (quadratic strong law), running maxima of
envelope-rescaled errors (iterated-logarithm monitoring), and studentized
CI coverage.

Replica ``i`` draws from a counter-based generator seeded with
``base_seed + i``, so the replica set is embarrassingly parallel and the
aggregated report is independent of execution order and thread count
(replica results land in arrays keyed by index; reductions happen after).
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np
from scipy import stats as _stats

from . import _kernel
from .asymptotics import TheoreticalConstants, clt_constants
from .distributions import DistributionModel, RiskOracle, risk_oracle
from .estimator import AlphaLevel, StepSchedule, UNSUPPORTED

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "run_replicas",
    "qsl_statistic",
    "lil_envelope",
    "coverage_experiment",
    "resolve_threads",
    "DEFAULT_LIL_N_MIN",
]

VARIANTS = ("standard", "convex")

# The iterated-logarithm running max is tracked from this iterate onward by
# default; earlier iterates are pure transient.
DEFAULT_LIL_N_MIN = 1000

_CHK_SQ = {"standard": _kernel.CHK_SQ_STANDARD, "convex": _kernel.CHK_SQ_CONVEX}
_CHK_QSL = {"standard": _kernel.CHK_QSL_RAW_STANDARD,
            "convex": _kernel.CHK_QSL_RAW_CONVEX}
_CHK_LIL = {"standard": _kernel.CHK_LIL_MAX_STANDARD,
            "convex": _kernel.CHK_LIL_MAX_CONVEX}


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, else SQ_STREAM_THREADS, else CPU
    count."""
    if threads is None:
        env = os.environ.get("SQ_STREAM_THREADS", "").strip()
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte-Carlo setup: model, level, schedule, horizon, replica count,
    seed, which superquantile variants to report, and the iterate indices at
    which trajectory snapshots are taken."""

    model: DistributionModel
    alpha: float
    schedule: StepSchedule
    n_steps: int
    n_replicas: int
    base_seed: int
    variant_set: tuple = VARIANTS
    checkpoints: tuple = ()

    def __post_init__(self):
        if not isinstance(self.model, DistributionModel):
            raise TypeError("model must be a DistributionModel")
        if not isinstance(self.schedule, StepSchedule):
            raise TypeError("schedule must be a StepSchedule")
        object.__setattr__(self, "alpha", AlphaLevel.of(self.alpha).value)
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "n_replicas", int(self.n_replicas))
        object.__setattr__(self, "base_seed", int(self.base_seed))
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.n_replicas < 1:
            raise ValueError(f"n_replicas must be >= 1, got {self.n_replicas}")
        variants = tuple(v for v in VARIANTS if v in set(self.variant_set))
        if len(variants) != len(set(self.variant_set)):
            bad = sorted(set(self.variant_set) - set(VARIANTS))
            raise ValueError(f"unknown variants {bad}; choose from {VARIANTS}")
        if not variants:
            raise ValueError("variant_set must name at least one variant")
        object.__setattr__(self, "variant_set", variants)
        chk = tuple(int(c) for c in self.checkpoints) or (self.n_steps,)
        if any(c2 <= c1 for c1, c2 in zip(chk, chk[1:])):
            raise ValueError(f"checkpoints must be strictly increasing: {chk}")
        if chk[0] < 1 or chk[-1] > self.n_steps:
            raise ValueError(
                f"checkpoints must lie in [1, n_steps={self.n_steps}]: {chk}")
        object.__setattr__(self, "checkpoints", chk)

    def describe(self) -> dict:
        return {
            "model": self.model.descriptor(),
            "alpha": self.alpha,
            "schedule": {
                "a1": self.schedule.a1,
                "a_exp": self.schedule.a_exp,
                "b1": self.schedule.b1,
                "b_exp": self.schedule.b_exp,
                "harmonic_shifted": self.schedule.harmonic_shifted,
            },
            "n_steps": self.n_steps,
            "n_replicas": self.n_replicas,
            "base_seed": self.base_seed,
            "variant_set": list(self.variant_set),
            "checkpoints": list(self.checkpoints),
        }


@dataclass
class ExperimentReport:
    """Aggregated output of one run_replicas call.

    Per-variant quantities are dicts keyed by "standard"/"convex". Arrays
    indexed by replica have length n_replicas; checkpointed arrays have
    shape (n_replicas, n_checkpoints). ``qsl`` rows hold the normalized
    running sum of squared errors at each checkpoint; ``lil_max`` rows the
    running maximum of the envelope-rescaled absolute error.
    """

    config: ExperimentConfig
    oracle: RiskOracle
    constants: Optional[TheoreticalConstants]
    terminal_theta: np.ndarray
    terminal_sq: dict
    terminal_tau_sq: np.ndarray
    rescaled_theta: np.ndarray
    rescaled_sq: dict
    var_rescaled_theta: float
    var_rescaled_sq: dict
    corr_rescaled: dict
    skew_rescaled_sq: dict
    kurtosis_rescaled_sq: dict
    checkpoint_theta: np.ndarray
    checkpoint_sq: dict
    checkpoint_tau_sq: np.ndarray
    qsl: dict
    lil_max: dict
    coverage_level: float
    coverage_count: Optional[int]
    coverage: Optional[float]
    duration_seconds: float = 0.0
    threads: int = 1
    trajectories: Optional[list] = field(default=None, repr=False)

    def to_dict(self, include_timing: bool = True) -> dict:
        variants = list(self.config.variant_set)

        def per_variant(d, f=lambda v: v):
            return {name: f(d[name]) for name in variants}

        out = {
            "config": self.config.describe(),
            "oracle": {
                "alpha": self.oracle.alpha,
                "theta_alpha": self.oracle.theta_alpha,
                "sq_alpha": self.oracle.sq_alpha,
                "sigma_sq": self.oracle.sigma_sq,
                "tau_sq": self.oracle.tau_sq,
            },
            "constants": None if self.constants is None else {
                "gamma_theta": self.constants.gamma_theta,
                "gamma_sq": self.constants.gamma_sq,
                "nu_sq": self.constants.nu_sq,
                "qsl_const": self.constants.qsl_const,
                "lil_const": self.constants.lil_const,
                "qsl_theta": self.constants.qsl_theta,
                "lil_theta": self.constants.lil_theta,
                "regime": self.constants.regime,
            },
            "terminal": {
                "theta": self.terminal_theta.tolist(),
                "sq": per_variant(self.terminal_sq, lambda a: a.tolist()),
                "tau_sq": self.terminal_tau_sq.tolist(),
            },
            "errors": {
                "theta": (self.terminal_theta
                          - self.oracle.theta_alpha).tolist(),
                "sq": per_variant(
                    self.terminal_sq,
                    lambda a: (a - self.oracle.sq_alpha).tolist()),
            },
            "rescaled_errors": {
                "theta": self.rescaled_theta.tolist(),
                "sq": per_variant(self.rescaled_sq, lambda a: a.tolist()),
            },
            "sample_stats": {
                "var_rescaled_theta": self.var_rescaled_theta,
                "var_rescaled_sq": per_variant(self.var_rescaled_sq),
                "corr_rescaled": per_variant(self.corr_rescaled),
                "skew_rescaled_sq": per_variant(self.skew_rescaled_sq),
                "kurtosis_rescaled_sq": per_variant(self.kurtosis_rescaled_sq),
            },
            "checkpoints": {
                "indices": list(self.config.checkpoints),
                "theta": self.checkpoint_theta.tolist(),
                "sq": per_variant(self.checkpoint_sq, lambda a: a.tolist()),
                "tau_sq": self.checkpoint_tau_sq.tolist(),
                "qsl": per_variant(self.qsl, lambda a: a.tolist()),
                "lil_max": per_variant(self.lil_max, lambda a: a.tolist()),
            },
            "coverage": {
                "level": self.coverage_level,
                "count": self.coverage_count,
                "rate": self.coverage,
            },
        }
        if include_timing:
            out["runtime"] = {
                "duration_seconds": self.duration_seconds,
                "threads": self.threads,
            }
        return out

    def to_json(self, include_timing: bool = True, indent: int = 2) -> str:
        return json.dumps(self.to_dict(include_timing=include_timing),
                          indent=indent, sort_keys=True)


def _qsl_normalizer(schedule: StepSchedule, ns: np.ndarray) -> np.ndarray:
    """log n for b = 1, n^(1-b) otherwise; zero where undefined (n = 1 under
    the log normalizer), which the caller turns into NaN."""
    ns = np.asarray(ns, dtype=float)
    if schedule.harmonic_shifted or schedule.b_exp == 1.0:
        return np.log(ns)
    return ns ** (1.0 - schedule.b_exp)


def _lil_rescale(schedule: StepSchedule, ns: np.ndarray) -> np.ndarray:
    """(n / (2 log log n))^(1/2) for b = 1, (n^b / (2(1-b) log n))^(1/2)
    otherwise; NaN where the normalizer is undefined."""
    ns = np.asarray(ns, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if schedule.harmonic_shifted or schedule.b_exp == 1.0:
            return np.sqrt(ns / (2.0 * np.log(np.log(ns))))
        b = schedule.b_exp
        return np.sqrt(ns ** b / (2.0 * (1.0 - b) * np.log(ns)))


def run_replicas(config: ExperimentConfig, *, coverage_level: float = 0.95,
                 threads: Optional[int] = None,
                 lil_n_min: int = DEFAULT_LIL_N_MIN,
                 keep_trajectories: bool = False) -> ExperimentReport:
    """Run config.n_replicas independent streams and aggregate.

    Each replica warm-starts from its first draw and then performs
    config.n_steps updates, so replica i consumes n_steps + 1 draws from a
    generator seeded with base_seed + i. Deterministic given the config:
    thread count and execution order do not change the report payload.
    """
    t0 = time.perf_counter()
    model, schedule = config.model, config.schedule
    alpha = config.alpha
    oracle = risk_oracle(model, alpha)
    supported = schedule.theory_regime != UNSUPPORTED
    constants = None
    if supported and model.has_density:
        constants = clt_constants(oracle, schedule,
                                  model.pdf(oracle.theta_alpha))

    m_rep = config.n_replicas
    n_steps = config.n_steps
    chk = np.asarray(config.checkpoints, dtype=np.int64)
    n_chk = chk.shape[0]

    terminal = np.empty((m_rep, 5))  # theta, sq_std, sq_cvx, m1, m2
    checks = np.empty((m_rep, n_chk, _kernel.CHK_COLUMNS))
    trajectories: Optional[list] = [None] * m_rep if keep_trajectories else None

    def one_replica(i: int) -> None:
        rng = np.random.Generator(np.random.Philox(config.base_seed + i))
        xs = model.draw(rng, n_steps + 1)
        warm = float(xs[0])
        theta, sq_std, sq_cvx, m1, m2, chk_i, traj = _kernel.run_stream(
            xs[1:], alpha, schedule.a1, schedule.a_exp,
            schedule.b1, schedule.b_exp, schedule.harmonic_shifted,
            warm, warm, warm, 0.0, 0.0, 1,
            oracle.sq_alpha, chk, lil_n_min, keep_trajectories)
        terminal[i] = theta, sq_std, sq_cvx, m1, m2
        checks[i] = chk_i
        if trajectories is not None:
            trajectories[i] = {"theta": traj[0], "standard": traj[1],
                               "convex": traj[2]}

    threads = resolve_threads(threads)
    if threads == 1 or m_rep == 1:
        threads = 1
        for i in range(m_rep):
            one_replica(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one_replica, range(m_rep)))

    terminal_theta = terminal[:, 0]
    terminal_sq = {"standard": terminal[:, 1], "convex": terminal[:, 2]}
    tau = terminal[:, 4] - terminal[:, 3] ** 2
    terminal_tau_sq = np.where(tau > 0.0, tau, 0.0)

    b_exp = 1.0 if schedule.harmonic_shifted else schedule.b_exp
    scale_theta = n_steps ** (0.5 * schedule.a_exp)
    scale_sq = n_steps ** (0.5 * b_exp)
    rescaled_theta = scale_theta * (terminal_theta - oracle.theta_alpha)
    rescaled_sq = {v: scale_sq * (terminal_sq[v] - oracle.sq_alpha)
                   for v in config.variant_set}

    var_rescaled_sq, corr_rescaled = {}, {}
    skew_rescaled_sq, kurt_rescaled_sq = {}, {}
    for v in config.variant_set:
        r = rescaled_sq[v]
        if m_rep >= 2:
            var_rescaled_sq[v] = float(np.var(r, ddof=1))
            corr_rescaled[v] = float(np.corrcoef(rescaled_theta, r)[0, 1])
        else:
            var_rescaled_sq[v] = math.nan
            corr_rescaled[v] = math.nan
        skew_rescaled_sq[v] = float(_stats.skew(r)) if m_rep >= 2 else math.nan
        kurt_rescaled_sq[v] = (float(_stats.kurtosis(r))
                               if m_rep >= 2 else math.nan)
    var_rescaled_theta = (float(np.var(rescaled_theta, ddof=1))
                          if m_rep >= 2 else math.nan)

    qsl_norm = _qsl_normalizer(schedule, chk)
    qsl, lil_max, checkpoint_sq = {}, {}, {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for v in config.variant_set:
            checkpoint_sq[v] = checks[:, :, _CHK_SQ[v]].copy()
            raw = checks[:, :, _CHK_QSL[v]]
            qsl[v] = np.where(qsl_norm > 0.0, raw / qsl_norm, np.nan)
            lil_max[v] = checks[:, :, _CHK_LIL[v]].copy()

    coverage_count = None
    coverage = None
    if supported and schedule.raw_sq_step(n_steps + 1) < 1.0 and n_steps >= 1:
        center_variant = ("convex" if "convex" in config.variant_set
                          else config.variant_set[0])
        z = NormalDist().inv_cdf((1.0 + coverage_level) / 2.0)
        half = (z * np.sqrt(schedule.nu_squared() * terminal_tau_sq)
                / math.sqrt(n_steps ** b_exp))
        center = terminal_sq[center_variant]
        covered = ((center - half <= oracle.sq_alpha)
                   & (oracle.sq_alpha <= center + half))
        coverage_count = int(covered.sum())
        coverage = coverage_count / m_rep

    return ExperimentReport(
        config=config,
        oracle=oracle,
        constants=constants,
        terminal_theta=terminal_theta,
        terminal_sq={v: terminal_sq[v] for v in config.variant_set},
        terminal_tau_sq=terminal_tau_sq,
        rescaled_theta=rescaled_theta,
        rescaled_sq=rescaled_sq,
        var_rescaled_theta=var_rescaled_theta,
        var_rescaled_sq=var_rescaled_sq,
        corr_rescaled=corr_rescaled,
        skew_rescaled_sq=skew_rescaled_sq,
        kurtosis_rescaled_sq=kurt_rescaled_sq,
        checkpoint_theta=checks[:, :, _kernel.CHK_THETA].copy(),
        checkpoint_sq=checkpoint_sq,
        checkpoint_tau_sq=checks[:, :, _kernel.CHK_TAU_SQ].copy(),
        qsl=qsl,
        lil_max=lil_max,
        coverage_level=coverage_level,
        coverage_count=coverage_count,
        coverage=coverage,
        duration_seconds=time.perf_counter() - t0,
        threads=threads,
        trajectories=trajectories,
    )


def qsl_statistic(trajectory, sq_alpha: float, schedule: StepSchedule,
                  checkpoints=None) -> np.ndarray:
    """Normalized running sum of squared errors along one superquantile
    trajectory.

    ``trajectory[k]`` is the iterate after k updates (index 0 = initial
    state, which the sum excludes). Returns rows (n, sum_{k<=n}(traj[k] -
    sq_alpha)^2 / norm(n)) with norm(n) = log n when b = 1 (rows start at
    n = 2) and n^(1-b) otherwise (rows start at n = 1), at the requested
    checkpoints or at every valid n.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 1 or traj.shape[0] < 2:
        raise ValueError("trajectory must be 1-D with length >= 2")
    target = float(getattr(sq_alpha, "sq_alpha", sq_alpha))
    n_last = traj.shape[0] - 1
    log_norm = schedule.harmonic_shifted or schedule.b_exp == 1.0
    n_first = 2 if log_norm else 1
    if checkpoints is None:
        ns = np.arange(n_first, n_last + 1, dtype=np.int64)
    else:
        ns = np.asarray(checkpoints, dtype=np.int64)
        if ns.size and (ns.min() < n_first or ns.max() > n_last):
            raise ValueError(
                f"checkpoints must lie in [{n_first}, {n_last}]")
    errs = traj[1:] - target
    running = np.cumsum(errs * errs)
    values = running[ns - 1] / _qsl_normalizer(schedule, ns)
    return np.column_stack([ns.astype(float), values])


def lil_envelope(trajectory, oracle: RiskOracle, schedule: StepSchedule,
                 checkpoints=None) -> np.ndarray:
    """Envelope-rescaled errors along one superquantile trajectory.

    Returns rows (n, rescale(n) * (traj[n] - sq_alpha), envelope_const)
    where rescale(n) = (n / (2 log log n))^(1/2) when b = 1 (rows start at
    n = 3) and (n^b / (2(1-b) log n))^(1/2) otherwise (rows start at n = 2),
    and envelope_const = sqrt(nu^2 * tau^2) is the almost-sure limsup of the
    |rescaled error|. A monitoring consumer checks that the running max of
    column 1's absolute value stays within a slack factor of column 2.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 1:
        raise ValueError("trajectory must be 1-D")
    n_last = traj.shape[0] - 1
    log_norm = schedule.harmonic_shifted or schedule.b_exp == 1.0
    n_first = 3 if log_norm else 2
    if n_last < n_first:
        raise ValueError(f"trajectory too short: need at least {n_first} "
                         f"updates, got {n_last}")
    if checkpoints is None:
        ns = np.arange(n_first, n_last + 1, dtype=np.int64)
    else:
        ns = np.asarray(checkpoints, dtype=np.int64)
        if ns.size and (ns.min() < n_first or ns.max() > n_last):
            raise ValueError(
                f"checkpoints must lie in [{n_first}, {n_last}]")
    const = math.sqrt(schedule.nu_squared() * oracle.tau_sq)
    rescaled = _lil_rescale(schedule, ns) * (traj[ns] - oracle.sq_alpha)
    return np.column_stack(
        [ns.astype(float), rescaled, np.full(ns.shape, const)])


def coverage_experiment(config: ExperimentConfig, level: float,
                        *, threads: Optional[int] = None) -> float:
    """Fraction of replicas whose terminal studentized CI at the given level
    contains the oracle superquantile."""
    report = run_replicas(config, coverage_level=float(level),
                          threads=threads)
    if report.coverage is None:
        raise ValueError("coverage undefined: unsupported step regime "
                         "or too few observations")
    return report.coverage
