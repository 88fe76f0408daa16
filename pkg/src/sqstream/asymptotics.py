"""Theoretical constants and limits for the two-time-scale recursions.

Everything the experiment harness compares measurements against lives here:

* CLT variances of the rescaled quantile / superquantile errors,
* the studentized variance nu^2,
* quadratic-strong-law limits and law-of-iterated-logarithm envelopes for
  both time scales,
* asymptotics of the step product P_n = prod (1 - b_k)^{-1}, whose growth
  normalizes the superquantile recursion: ~ C * n^{b1} when b_exp = 1, and
  log P_n ~ b1/(1-b) * n^{1-b} + K when b_exp < 1,
* a real-argument Riemann zeta (Euler-Maclaurin) and the classical
  log-gamma series log G(1-x) = euler_gamma*x + sum x^n zeta(n)/n used to
  self-test that machinery.

Densities are always supplied by a parametric model, never estimated from
data; models without a density are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionModel, RiskOracle, risk_oracle
from .estimator import FAST_B, SLOW_B, UNSUPPORTED, StepSchedule

__all__ = [
    "TheoreticalConstants",
    "clt_constants",
    "constants_for_model",
    "pn_product",
    "log_pn_product",
    "log_pn_running",
    "pn_start_index",
    "pn_limit",
    "zeta",
    "euler_gamma_check",
    "log_pn_shift_constant",
]


@dataclass(frozen=True)
class TheoreticalConstants:
    """Limit constants for one (risk oracle, step schedule) pair.

    gamma_theta / gamma_sq are the CLT variances of sqrt(n^a)(theta_n - theta)
    and sqrt(n^b)(sq_n - sq); nu_sq the studentized variance; qsl_* the
    quadratic-strong-law limits (normalizer log n when b = 1, n^{1-b} when
    b < 1 for the superquantile; n^{1-a} for the quantile); lil_* the
    iterated-logarithm envelope constants.
    """

    gamma_theta: float
    gamma_sq: float
    nu_sq: float
    qsl_const: float
    lil_const: float
    qsl_theta: float
    lil_theta: float
    regime: str


def clt_constants(oracle: RiskOracle, schedule: StepSchedule,
                  f_at_theta: float) -> TheoreticalConstants:
    """Assemble every limit constant from the oracle variance tau^2, the
    density value at the quantile, and the step schedule."""
    regime = schedule.theory_regime
    if regime == UNSUPPORTED:
        raise ValueError(
            f"theoretical constants unavailable in regime {regime} "
            f"(a_exp={schedule.a_exp}, b_exp={schedule.b_exp}, b1={schedule.b1})")
    if not (math.isfinite(f_at_theta) and f_at_theta > 0.0):
        raise ValueError(f"density at the quantile must be positive, "
                         f"got {f_at_theta}")
    alpha = oracle.alpha
    tau_sq = oracle.tau_sq
    a1, a_exp = schedule.a1, schedule.a_exp
    b1 = schedule.b1
    b_exp = 1.0 if schedule.harmonic_shifted else schedule.b_exp

    gamma_theta = a1 * alpha * (1.0 - alpha) / (2.0 * f_at_theta)
    nu_sq = schedule.nu_squared()
    gamma_sq = nu_sq * tau_sq
    if b_exp == 1.0:
        qsl_const = nu_sq * tau_sq
    else:
        qsl_const = b1 / (2.0 * (1.0 - b_exp)) * tau_sq
    lil_const = math.sqrt(gamma_sq)
    qsl_theta = a1 * alpha * (1.0 - alpha) / (2.0 * (1.0 - a_exp) * f_at_theta)
    lil_theta = math.sqrt(gamma_theta)
    return TheoreticalConstants(
        gamma_theta=gamma_theta,
        gamma_sq=gamma_sq,
        nu_sq=nu_sq,
        qsl_const=qsl_const,
        lil_const=lil_const,
        qsl_theta=qsl_theta,
        lil_theta=lil_theta,
        regime=regime,
    )


def constants_for_model(model: DistributionModel, alpha,
                        schedule: StepSchedule) -> tuple:
    """(RiskOracle, TheoreticalConstants) for a parametric model; models
    without a density (Empirical) are rejected."""
    if not model.has_density:
        raise ValueError(
            "theoretical constants need a parametric density; "
            f"{model!r} has none")
    oracle = risk_oracle(model, alpha)
    f_theta = model.pdf(oracle.theta_alpha)
    return oracle, clt_constants(oracle, schedule, f_theta)


# ---------------------------------------------------------------------------
# Step-product asymptotics
# ---------------------------------------------------------------------------

def pn_start_index(schedule: StepSchedule) -> int:
    """First index k with b_k < 1 (all factors (1 - b_k) before it would be
    non-positive). 1 whenever b1 < 1; the shifted-harmonic step is always
    below 1."""
    if schedule.harmonic_shifted or schedule.b1 < 1.0:
        return 1
    start = int(math.floor(schedule.b1 ** (1.0 / schedule.b_exp))) + 1
    while start > 1 and schedule.raw_sq_step(start - 1) < 1.0:
        start -= 1
    while schedule.raw_sq_step(start) >= 1.0:
        start += 1
    return start


def log_pn_product(schedule: StepSchedule, n: int) -> float:
    """log of prod_{k=start..n} (1 - b_k)^{-1}, accumulated in log space."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    start = pn_start_index(schedule)
    if n < start:
        return 0.0
    ks = np.arange(start, n + 1, dtype=float)
    if schedule.harmonic_shifted:
        bs = 1.0 / (ks + 1.0)
    else:
        bs = schedule.b1 * ks ** (-schedule.b_exp)
    return float(-np.sum(np.log1p(-bs)))


def pn_product(schedule: StepSchedule, n: int) -> float:
    """The running product itself; may overflow to inf for schedules whose
    log-product exceeds float range (use log_pn_product then)."""
    return math.exp(log_pn_product(schedule, n))


def log_pn_running(schedule: StepSchedule, n: int) -> np.ndarray:
    """log P_k for every k = 1..n in one pass (index k-1 holds log P_k);
    entries before the start index are 0 (empty product)."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    start = pn_start_index(schedule)
    out = np.zeros(n)
    if n >= start:
        ks = np.arange(start, n + 1, dtype=float)
        if schedule.harmonic_shifted:
            bs = 1.0 / (ks + 1.0)
        else:
            bs = schedule.b1 * ks ** (-schedule.b_exp)
        out[start - 1:] = -np.cumsum(np.log1p(-bs))
    return out


def pn_limit(schedule: StepSchedule) -> tuple:
    """Limit description for the step product.

    Returns ("power", c): P_n / n^{b1} -> c, when b_exp = 1 (c is a ratio of
    gamma-function values; the shifted-harmonic product is exactly n + 1, so
    c = 1).
    Returns ("log_shift", K): log P_n - b1/(1-b) * n^{1-b} -> K, when
    b_exp < 1.
    """
    if schedule.harmonic_shifted:
        return "power", 1.0
    b1, b_exp = schedule.b1, schedule.b_exp
    if b_exp == 1.0:
        frac = b1 - math.floor(b1)
        if frac == 0.0:
            num = 1.0
        else:
            num = math.gamma(1.0 - frac)
        return "power", num / math.gamma(1.0 + math.floor(b1))
    start = pn_start_index(schedule)
    return "log_shift", log_pn_shift_constant(b1, b_exp, start)


def log_pn_shift_constant(b1: float, b_exp: float, start: int = 1) -> float:
    """K = sum_{l>=1} (b1^l / l) * (zeta(b*l) - sum_{k<start} k^{-b*l}).

    This is the additive constant in log P_n = b1/(1-b) * n^{1-b} + K + o(1)
    for 1/2 < b < 1; the l = 1 term uses the analytic continuation of zeta
    on (0, 1). Converges geometrically with ratio b1 / start^b < 1.
    """
    if not 0.5 < b_exp < 1.0:
        raise ValueError(f"shift constant defined for 1/2 < b_exp < 1, "
                         f"got {b_exp}")
    if b1 / start ** b_exp >= 1.0:
        raise ValueError(f"start index {start} too small for b1={b1}")
    total = 0.0
    power = 1.0  # b1^l
    for ell in range(1, 100_000):
        power *= b1
        s = b_exp * ell
        head = sum(k ** (-s) for k in range(1, start))
        term = power / ell * (zeta(s) - head)
        total += term
        if ell >= 3 and abs(term) < 1e-15 * max(abs(total), 1e-30):
            return total
    raise ArithmeticError("shift-constant series did not converge")


# ---------------------------------------------------------------------------
# Zeta and the Euler log-gamma series
# ---------------------------------------------------------------------------

# Bernoulli numbers B_2, B_4, ..., B_12 for the Euler-Maclaurin tail.
_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
              5.0 / 66.0, -691.0 / 2730.0)


def zeta(s: float, cutoff: int = 32) -> float:
    """Riemann zeta for real s > 0, s != 1, by Euler-Maclaurin summation:
    direct sum to the cutoff plus integral, midpoint and Bernoulli
    corrections. Valid on (0, 1) as the analytic continuation."""
    s = float(s)
    if not math.isfinite(s) or s <= 0.0:
        raise ValueError(f"zeta implemented for real s > 0, got {s}")
    if s == 1.0:
        raise ValueError("zeta has a pole at s = 1")
    n = cutoff
    total = sum(k ** (-s) for k in range(1, n))
    total += n ** (1.0 - s) / (s - 1.0)
    total += 0.5 * n ** (-s)
    # sum_j B_{2j}/(2j)! * s(s+1)...(s+2j-2) * n^{-s-2j+1}
    rising = 1.0
    fact = 1.0
    for j, b2j in enumerate(_BERNOULLI, start=1):
        two_j = 2 * j
        fact *= (two_j - 1) * two_j
        if j == 1:
            rising = s
        else:
            rising *= (s + two_j - 3) * (s + two_j - 2)
        total += b2j / fact * rising * n ** (-s - two_j + 1)
    return total


def euler_gamma_check(b1: float) -> tuple:
    """Self-test of the series machinery: (lhs, rhs) with
    lhs = log Gamma(1 - b1) from the library log-gamma, and
    rhs = euler_gamma * b1 + sum_{n>=2} b1^n zeta(n) / n, truncated once the
    geometric tail bound drops below 1e-12 relative."""
    b1 = float(b1)
    if not abs(b1) < 1.0:
        raise ValueError(f"series needs |b1| < 1, got {b1}")
    lhs = math.lgamma(1.0 - b1)
    rhs = float(np.euler_gamma) * b1
    if b1 != 0.0:
        power = b1  # b1^n
        for n in range(2, 10_000):
            power *= b1
            rhs += power / n * zeta(float(n))
            # zeta(m) <= 2 for m >= 2, so the remaining tail is below
            # 2 * |b1|^{n+1} / ((n+1) (1 - |b1|))
            tail = 2.0 * abs(power * b1) / ((n + 1) * (1.0 - abs(b1)))
            if tail < 1e-12 * max(abs(rhs), 1e-30):
                break
    return lhs, rhs
