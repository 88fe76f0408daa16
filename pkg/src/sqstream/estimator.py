"""Streaming two-time-scale estimation of a quantile and its superquantile.

A single estimator tracks four coupled quantities while observations arrive
one at a time:

* ``theta`` — the running quantile (VaR) iterate, driven by a Robbins-Monro
  step ``a_n = a1 / n**a_exp``;
* ``sq_standard`` — the tail-average superquantile (CVaR) iterate;
* ``sq_convex`` — the convexified superquantile iterate built on the
  Rockafellar-Uryasev representation;
* ``m1``/``m2`` — running first and second moments of the convexified score,
  whose difference estimates the asymptotic variance ``tau^2`` used for
  studentized confidence intervals.

Both superquantile iterates use the slower step ``b_n = b1 / n**b_exp``
(clamped below 1 so every update stays a convex combination). All updates
compare the incoming observation against the *pre-update* quantile iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

__all__ = [
    "AlphaLevel",
    "StepSchedule",
    "ConfidenceInterval",
    "TwoTimeScaleEstimator",
    "WARM_START",
    "FAST_B",
    "SLOW_B",
    "UNSUPPORTED",
]

# Regime tags for StepSchedule.theory_regime.
FAST_B = "FAST_B"
SLOW_B = "SLOW_B"
UNSUPPORTED = "UNSUPPORTED"

# Effective superquantile steps are clamped to (0, 1 - STEP_CLAMP_EPS] so that
# early iterates remain convex combinations even when b1/n**b >= 1.
STEP_CLAMP_EPS = 1e-12

_NORMAL = NormalDist()


class _WarmStart:
    """Sentinel: initialize theta and both superquantile iterates from the
    first observation (which is consumed, not ingested)."""

    __slots__ = ()

    def __repr__(self):
        return "WARM_START"


WARM_START = _WarmStart()


@dataclass(frozen=True)
class AlphaLevel:
    """Probability level in the open interval (0, 1)."""

    value: float

    def __post_init__(self):
        v = self.value
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise TypeError(f"alpha must be a real number, got {v!r}")
        v = float(v)
        if not math.isfinite(v) or not 0.0 < v < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {v}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, alpha) -> "AlphaLevel":
        return alpha if isinstance(alpha, AlphaLevel) else cls(alpha)


@dataclass(frozen=True)
class StepSchedule:
    """Power-law step sizes a_n = a1/n**a_exp and b_n = b1/n**b_exp.

    ``harmonic_shifted=True`` selects the shifted harmonic superquantile step
    b_n = 1/(n+1) (the exact-sample-mean schedule), which is *not* expressible
    as b1/n**b; b1/b_exp are forced to 1 in that case and ignored.

    Exponents must satisfy 1/2 < exp <= 1 (divergent step sums with
    square-summable squares).
    """

    a1: float
    a_exp: float
    b1: float = 1.0
    b_exp: float = 1.0
    harmonic_shifted: bool = False

    def __post_init__(self):
        for name in ("a1", "a_exp", "b1", "b_exp"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise TypeError(f"{name} must be a real number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not math.isfinite(self.a1) or self.a1 <= 0.0:
            raise ValueError(f"a1 must be positive and finite, got {self.a1}")
        if not math.isfinite(self.b1) or self.b1 <= 0.0:
            raise ValueError(f"b1 must be positive and finite, got {self.b1}")
        if not 0.5 < self.a_exp <= 1.0:
            raise ValueError(f"a_exp outside (1/2, 1]: {self.a_exp}")
        if not 0.5 < self.b_exp <= 1.0:
            raise ValueError(f"b_exp outside (1/2, 1]: {self.b_exp}")
        if self.harmonic_shifted and (self.b1 != 1.0 or self.b_exp != 1.0):
            raise ValueError("harmonic_shifted fixes b1 = b_exp = 1")

    @classmethod
    def harmonic(cls, a1: float, a_exp: float) -> "StepSchedule":
        """Schedule with the shifted harmonic superquantile step 1/(n+1)."""
        return cls(a1, a_exp, 1.0, 1.0, harmonic_shifted=True)

    def quantile_step(self, n: int) -> float:
        return self.a1 / n ** self.a_exp

    def raw_sq_step(self, n: int) -> float:
        if self.harmonic_shifted:
            return 1.0 / (n + 1)
        return self.b1 / n ** self.b_exp

    def sq_step(self, n: int) -> float:
        """Effective (clamped) superquantile step at iterate index n."""
        b = self.raw_sq_step(n)
        hi = 1.0 - STEP_CLAMP_EPS
        return hi if b > hi else b

    @property
    def theory_regime(self) -> str:
        """FAST_B (a < b = 1, b1 > 1/2), SLOW_B (1/2 < a < b < 1), or
        UNSUPPORTED. The recursion runs in every regime; theoretical
        constants exist only for the first two."""
        if self.a_exp >= 1.0:
            return UNSUPPORTED
        if self.harmonic_shifted:
            return FAST_B
        if self.b_exp == 1.0:
            return FAST_B if self.b1 > 0.5 else UNSUPPORTED
        if self.a_exp < self.b_exp:
            return SLOW_B
        return UNSUPPORTED

    def nu_squared(self) -> float:
        """Studentized CLT variance: b1^2/(2 b1 - 1) when b = 1, b1/2 when
        b < 1. Only defined in supported regimes."""
        regime = self.theory_regime
        if regime == UNSUPPORTED:
            raise ValueError(f"no studentized variance in regime {regime}")
        if self.harmonic_shifted:
            return 1.0
        if self.b_exp == 1.0:
            return self.b1 * self.b1 / (2.0 * self.b1 - 1.0)
        return self.b1 / 2.0


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    degenerate: bool = False

    def __iter__(self):
        return iter((self.lo, self.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo


class TwoTimeScaleEstimator:
    """One running two-time-scale recursion (sequential; one observation at a
    time). Instances are self-contained values: distinct estimators may run
    fully in parallel, a single one must not be shared between threads.

    Pass ``WARM_START`` (the default) for ``theta0``/``sq0`` to initialize all
    iterates from the first observation; that observation is consumed and not
    counted.
    """

    __slots__ = ("alpha", "schedule", "n", "theta", "sq_standard",
                 "sq_convex", "m1", "m2", "_warm_pending")

    def __init__(self, alpha, schedule: StepSchedule,
                 theta0=WARM_START, sq0=WARM_START):
        self.alpha = AlphaLevel.of(alpha).value
        if not isinstance(schedule, StepSchedule):
            raise TypeError("schedule must be a StepSchedule")
        self.schedule = schedule
        warm_theta = isinstance(theta0, _WarmStart)
        warm_sq = isinstance(sq0, _WarmStart)
        if warm_theta != warm_sq:
            raise ValueError("theta0 and sq0 must be warm-started together")
        self._warm_pending = warm_theta
        if warm_theta:
            theta0 = sq0 = 0.0  # placeholders until the first observation
        else:
            theta0 = float(theta0)
            sq0 = float(sq0)
            if not math.isfinite(theta0):
                raise ValueError(f"non-finite theta0: {theta0}")
            if not math.isfinite(sq0):
                raise ValueError(f"non-finite sq0: {sq0}")
        self.n = 1
        self.theta = theta0
        self.sq_standard = sq0
        self.sq_convex = sq0
        self.m1 = 0.0
        self.m2 = 0.0

    @property
    def n_observed(self) -> int:
        """Number of observations ingested so far (excludes a consumed
        warm-start value)."""
        return self.n - 1

    def ingest(self, x) -> "TwoTimeScaleEstimator":
        """Feed one observation through the coupled recursions.

        Update order: both superquantile iterates, then the tau^2 moment
        accumulators, then the quantile step, then the iterate counter. Every
        comparison uses the pre-update theta.
        """
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite observation rejected: {x}")
        if self._warm_pending:
            self.theta = x
            self.sq_standard = x
            self.sq_convex = x
            self._warm_pending = False
            return self

        n = self.n
        theta = self.theta
        one_minus_alpha = 1.0 - self.alpha
        b = self.schedule.sq_step(n)

        if x > theta:
            score_standard = x / one_minus_alpha
            excess = (x - theta) / one_minus_alpha
        else:
            score_standard = 0.0
            excess = 0.0

        self.sq_standard += b * (score_standard - self.sq_standard)
        self.sq_convex += b * ((theta + excess) - self.sq_convex)
        self.m1 += (excess - self.m1) / n
        self.m2 += (excess * excess - self.m2) / n

        a_n = self.schedule.quantile_step(n)
        self.theta = theta - a_n * ((1.0 if x <= theta else 0.0) - self.alpha)
        self.n = n + 1
        return self

    def ingest_many(self, xs) -> "TwoTimeScaleEstimator":
        for x in xs:
            self.ingest(x)
        return self

    def tau_sq(self) -> float:
        """Online estimate of the convexified-score variance, m2 - m1^2,
        clamped below at zero. Needs at least one ingested observation."""
        if self.n < 2:
            raise ValueError("tau_sq needs at least one ingested observation")
        v = self.m2 - self.m1 * self.m1
        return v if v > 0.0 else 0.0

    def confidence_interval(self, level: float,
                            variant: str = "convex") -> ConfidenceInterval:
        """Asymptotic studentized CI for the superquantile:
        center +/- z * nu * sqrt(tau_sq) / sqrt(n_observed**b_exp).
        """
        if not 0.0 < level < 1.0:
            raise ValueError(f"confidence level outside (0, 1): {level}")
        if variant == "convex":
            center = self.sq_convex
        elif variant == "standard":
            center = self.sq_standard
        else:
            raise ValueError(f"unknown variant {variant!r}")
        regime = self.schedule.theory_regime
        if regime == UNSUPPORTED:
            raise ValueError(
                f"no asymptotic interval in regime {regime} "
                f"(a_exp={self.schedule.a_exp}, b_exp={self.schedule.b_exp})")
        if self.schedule.raw_sq_step(self.n) >= 1.0:
            raise ValueError(
                "too few observations: superquantile step still >= 1")
        tau2 = self.tau_sq()  # enforces n >= 2
        n_obs = self.n_observed
        b_exp = 1.0 if self.schedule.harmonic_shifted else self.schedule.b_exp
        z = _NORMAL.inv_cdf((1.0 + level) / 2.0)
        half = z * math.sqrt(self.schedule.nu_squared() * tau2) \
            / math.sqrt(n_obs ** b_exp)
        if tau2 == 0.0:
            return ConfidenceInterval(center, center, degenerate=True)
        return ConfidenceInterval(center - half, center + half)

    def __repr__(self):
        return (f"TwoTimeScaleEstimator(alpha={self.alpha}, n={self.n}, "
                f"theta={self.theta:.6g}, sq_standard={self.sq_standard:.6g}, "
                f"sq_convex={self.sq_convex:.6g})")
