"""Recursion semantics of the streaming estimator: update order, the exact
two-branch quantile step, warm start, step clamping, the running tau^2
moments, and studentized confidence intervals."""

import math

import numpy as np
import pytest

from sqstream.estimator import (
    FAST_B,
    SLOW_B,
    UNSUPPORTED,
    AlphaLevel,
    StepSchedule,
    TwoTimeScaleEstimator,
    WARM_START,
)


def make(alpha=0.5, schedule=None, theta0=0.0, sq0=0.0):
    schedule = schedule or StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0)
    return TwoTimeScaleEstimator(alpha, schedule, theta0=theta0, sq0=sq0)


# ---------------------------------------------------------------------------
# construction and parameter validation
# ---------------------------------------------------------------------------

def test_construction_initial_state():
    est = make(alpha=0.5, schedule=StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0))
    assert est.n == 1
    assert est.theta == 0.0
    assert est.sq_standard == 0.0
    assert est.sq_convex == 0.0
    assert est.m1 == 0.0 and est.m2 == 0.0


def test_construction_custom_initials():
    est = make(alpha=0.9, theta0=1.5, sq0=2.0)
    assert est.theta == 1.5
    assert est.sq_standard == 2.0
    assert est.sq_convex == 2.0


def test_exponent_outside_half_one_rejected():
    with pytest.raises(ValueError, match="a_exp"):
        StepSchedule(5.0, 0.4, 0.75, 1.0)
    with pytest.raises(ValueError, match="b_exp"):
        StepSchedule(5.0, 0.9, 0.75, 1.2)


def test_nonpositive_gains_rejected():
    with pytest.raises(ValueError):
        StepSchedule(0.0, 2.0 / 3.0)
    with pytest.raises(ValueError):
        StepSchedule(5.0, 2.0 / 3.0, b1=-1.0)


def test_nonfinite_initials_rejected():
    with pytest.raises(ValueError):
        make(theta0=math.nan, sq0=0.0)
    with pytest.raises(ValueError):
        make(theta0=0.0, sq0=math.inf)


def test_alpha_must_be_interior():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            AlphaLevel(bad)
    with pytest.raises(TypeError):
        AlphaLevel(True)
    assert AlphaLevel(0.5).value == 0.5
    assert AlphaLevel.of(AlphaLevel(0.9)).value == 0.9


def test_harmonic_flag_forces_unit_b():
    with pytest.raises(ValueError):
        StepSchedule(5.0, 2.0 / 3.0, b1=0.75, harmonic_shifted=True)
    sched = StepSchedule.harmonic(5.0, 2.0 / 3.0)
    assert sched.raw_sq_step(1) == 0.5
    assert sched.raw_sq_step(9) == 0.1


def test_warm_start_must_cover_both_initials():
    sched = StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0)
    with pytest.raises(ValueError):
        TwoTimeScaleEstimator(0.5, sched, theta0=WARM_START, sq0=0.0)


# ---------------------------------------------------------------------------
# single-step hand computations
# ---------------------------------------------------------------------------

def test_quantile_step_above_theta():
    # x > theta: indicator is 0, theta moves up by a_1 * alpha = 1 * 0.5
    est = make(schedule=StepSchedule(1.0, 1.0, 0.75, 1.0))
    est.ingest(1.0)
    assert est.theta == 0.5


def test_harmonic_first_superquantile_update():
    # first shifted-harmonic step is 1/2: sq_standard = 0 + (1/2)(2/0.5 - 0)
    est = make(schedule=StepSchedule.harmonic(1.0, 1.0))
    est.ingest(2.0)
    assert est.sq_standard == 2.0
    assert est.sq_convex == 2.0


def test_updates_use_pre_update_theta():
    # a huge quantile gain sends theta from 0 to 5 within the same ingest;
    # the superquantile side must still see the observation as exceeding
    # the old theta = 0.
    est = make(schedule=StepSchedule(10.0, 1.0, 0.75, 1.0))
    est.ingest(1.0)
    assert est.theta == 5.0
    assert est.sq_standard == pytest.approx(0.75 * 2.0)  # b_1 * x/(1-alpha)
    assert est.m1 == 2.0  # excess (1-0)/0.5 averaged over one step


def test_counter_advances_by_one():
    est = make()
    for k in range(2, 12):
        est.ingest(1.0)
        assert est.n == k
    assert est.n_observed == 10


def test_nonfinite_observation_leaves_state_unchanged():
    est = make(theta0=1.0, sq0=2.0)
    est.ingest(3.0)
    snap = (est.n, est.theta, est.sq_standard, est.sq_convex, est.m1, est.m2)
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(ValueError):
            est.ingest(bad)
        assert snap == (est.n, est.theta, est.sq_standard, est.sq_convex,
                        est.m1, est.m2)


def test_tie_counts_as_below():
    # x == theta uses the closed-below indicator: theta steps down
    est = make(alpha=0.5, schedule=StepSchedule(1.0, 1.0, 0.75, 1.0),
               theta0=2.0, sq0=7.0)
    est.ingest(2.0)
    assert est.theta == 2.0 - 1.0 * 0.5
    # and the open-above superquantile indicator treats it as no exceedance
    assert est.sq_standard == 7.0 + 0.75 * (0.0 - 7.0)
    assert est.sq_convex == 7.0 + 0.75 * (2.0 - 7.0)


# ---------------------------------------------------------------------------
# pathwise invariants
# ---------------------------------------------------------------------------

def test_two_branch_quantile_step_exact(rng):
    alpha = 0.3
    sched = StepSchedule(2.5, 0.7, 0.75, 1.0)
    est = TwoTimeScaleEstimator(alpha, sched, theta0=5.0, sq0=5.0)
    for x in rng.exponential(10.0, size=500):
        n, before = est.n, est.theta
        est.ingest(x)
        a_n = sched.quantile_step(n)
        delta = est.theta - before
        assert delta == a_n * alpha or delta == -a_n * (1.0 - alpha)


def test_step_clamp_keeps_convex_combination():
    sched = StepSchedule(5.0, 2.0 / 3.0, b1=100.0, b_exp=1.0)
    assert sched.sq_step(1) == 1.0 - 1e-12
    assert sched.raw_sq_step(1) == 100.0
    est = TwoTimeScaleEstimator(0.5, sched, theta0=0.0, sq0=-3.0)
    est.ingest(1.0)  # target value is theta + excess = 2.0
    assert -3.0 < est.sq_convex <= 2.0


def test_scale_equivariance_power_of_two(rng):
    # scaling the data, the initial values, and a1 by c = 4 shifts binary
    # exponents only, so the trajectories match bit for bit
    xs = rng.exponential(10.0, size=400)
    c = 4.0
    base = TwoTimeScaleEstimator(
        0.5, StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0), theta0=1.0, sq0=2.0)
    scaled = TwoTimeScaleEstimator(
        0.5, StepSchedule(5.0 * c, 2.0 / 3.0, 0.75, 1.0),
        theta0=1.0 * c, sq0=2.0 * c)
    for x in xs:
        base.ingest(x)
        scaled.ingest(c * x)
        assert scaled.theta == c * base.theta
        assert scaled.sq_standard == c * base.sq_standard
        assert scaled.sq_convex == c * base.sq_convex


def test_scale_equivariance_general_factor(rng):
    xs = rng.exponential(10.0, size=400)
    c = 3.7
    base = TwoTimeScaleEstimator(
        0.5, StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0), theta0=1.0, sq0=2.0)
    scaled = TwoTimeScaleEstimator(
        0.5, StepSchedule(5.0 * c, 2.0 / 3.0, 0.75, 1.0),
        theta0=c, sq0=2.0 * c)
    base.ingest_many(xs)
    scaled.ingest_many(c * xs)
    assert scaled.theta == pytest.approx(c * base.theta, rel=1e-12)
    assert scaled.sq_convex == pytest.approx(c * base.sq_convex, rel=1e-12)


def test_determinism(rng):
    xs = rng.gamma(4.0, 1 / 3, size=300)
    a = make().ingest_many(xs)
    b = make().ingest_many(xs)
    assert (a.theta, a.sq_standard, a.sq_convex, a.m1, a.m2) \
        == (b.theta, b.sq_standard, b.sq_convex, b.m1, b.m2)


def test_warm_start_consumes_first_observation(rng):
    xs = rng.exponential(10.0, size=50)
    warm = TwoTimeScaleEstimator(0.5, StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0))
    warm.ingest(xs[0])
    assert warm.n == 1 and warm.n_observed == 0
    assert warm.theta == warm.sq_standard == warm.sq_convex == xs[0]
    explicit = TwoTimeScaleEstimator(
        0.5, StepSchedule(5.0, 2.0 / 3.0, 0.75, 1.0),
        theta0=xs[0], sq0=xs[0])
    warm.ingest_many(xs[1:])
    explicit.ingest_many(xs[1:])
    assert warm.theta == explicit.theta
    assert warm.sq_convex == explicit.sq_convex
    assert warm.n == explicit.n


# ---------------------------------------------------------------------------
# tau^2 accumulators
# ---------------------------------------------------------------------------

def test_tau_sq_requires_data():
    with pytest.raises(ValueError):
        make().tau_sq()


def test_tau_sq_zero_without_exceedances():
    est = make(theta0=100.0, sq0=0.0)
    est.ingest_many([1.0, 2.0, 3.0])
    assert est.tau_sq() == 0.0
    assert est.m1 == 0.0 and est.m2 == 0.0


def test_tau_sq_constant_excess_stream():
    # a vanishing quantile gain pins theta at 0, so both observations carry
    # the same excess 10/0.5 = 20: m1 = 20, m2 = 400, variance zero
    est = make(schedule=StepSchedule(1e-300, 2.0 / 3.0, 0.75, 1.0))
    est.ingest_many([10.0, 10.0])
    assert est.m1 == 20.0
    assert est.m2 == 400.0
    assert est.tau_sq() == 0.0


def test_tau_sq_matches_direct_moments(rng):
    xs = rng.exponential(10.0, size=2000)
    est = make(theta0=5.0, sq0=5.0)
    excesses = []
    for x in xs:
        th = est.theta
        excesses.append((x - th) / 0.5 if x > th else 0.0)
        est.ingest(x)
    e = np.asarray(excesses)
    assert est.m1 == pytest.approx(e.mean(), rel=1e-12)
    assert est.m2 == pytest.approx((e * e).mean(), rel=1e-12)
    assert est.tau_sq() == pytest.approx((e * e).mean() - e.mean() ** 2,
                                         rel=1e-9)


def test_tau_sq_never_negative(rng):
    est = make(theta0=50.0, sq0=0.0)
    for x in rng.exponential(1.0, size=500):
        est.ingest(x)
        assert est.tau_sq() >= 0.0


# ---------------------------------------------------------------------------
# regimes and confidence intervals
# ---------------------------------------------------------------------------

def test_theory_regime_classifier():
    assert StepSchedule(5.0, 2 / 3, 0.75, 1.0).theory_regime == FAST_B
    assert StepSchedule(5.0, 0.6, 1.0, 0.8).theory_regime == SLOW_B
    assert StepSchedule.harmonic(5.0, 2 / 3).theory_regime == FAST_B
    # b1 <= 1/2 with b = 1 has no CLT normalization
    assert StepSchedule(5.0, 2 / 3, 0.5, 1.0).theory_regime == UNSUPPORTED
    # a >= b reversals and a = 1
    assert StepSchedule(5.0, 0.9, 1.0, 0.8).theory_regime == UNSUPPORTED
    assert StepSchedule(5.0, 1.0, 0.75, 1.0).theory_regime == UNSUPPORTED


def test_nu_squared_values():
    assert StepSchedule(5.0, 2 / 3, 0.75, 1.0).nu_squared() == 1.125
    assert StepSchedule(5.0, 0.6, 1.0, 0.8).nu_squared() == 0.5
    assert StepSchedule.harmonic(5.0, 2 / 3).nu_squared() == 1.0
    with pytest.raises(ValueError):
        StepSchedule(5.0, 1.0, 0.75, 1.0).nu_squared()


def test_confidence_interval_matches_formula(rng):
    est = make(theta0=5.0, sq0=5.0)
    est.ingest_many(rng.exponential(10.0, size=1000))
    ci = est.confidence_interval(0.95)
    z = 1.959963984540054
    half = z * math.sqrt(1.125 * est.tau_sq()) / math.sqrt(1000.0)
    assert ci.lo == pytest.approx(est.sq_convex - half, rel=1e-12)
    assert ci.hi == pytest.approx(est.sq_convex + half, rel=1e-12)
    assert not ci.degenerate
    std = est.confidence_interval(0.95, variant="standard")
    assert (std.lo + std.hi) / 2 == pytest.approx(est.sq_standard, rel=1e-12)
    assert std.width == pytest.approx(ci.width, rel=1e-12)


def test_confidence_interval_widens_with_level(rng):
    est = make(theta0=5.0, sq0=5.0)
    est.ingest_many(rng.exponential(10.0, size=500))
    assert est.confidence_interval(0.99).width \
        > est.confidence_interval(0.9).width > 0.0


def test_confidence_interval_degenerate_when_no_exceedances():
    est = make(theta0=1000.0, sq0=0.0)
    est.ingest_many([1.0, 2.0, 3.0, 4.0])
    ci = est.confidence_interval(0.95)
    assert ci.degenerate
    assert ci.lo == ci.hi == est.sq_convex


def test_confidence_interval_unsupported_regime_named():
    est = make(schedule=StepSchedule(5.0, 1.0, 0.75, 1.0))
    est.ingest_many([1.0, 2.0])
    with pytest.raises(ValueError, match=UNSUPPORTED):
        est.confidence_interval(0.95)


def test_confidence_interval_needs_small_step():
    # with b1 = 1, b = 1 the raw step is still 1 at the first opportunity
    est = make(schedule=StepSchedule(5.0, 2.0 / 3.0, 1.0, 1.0))
    est.ingest(1.0)
    assert est.schedule.raw_sq_step(est.n) < 1.0  # n = 2 is fine
    est2 = make(schedule=StepSchedule(5.0, 2.0 / 3.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        est2.confidence_interval(0.95)  # nothing ingested: raw step = 1


def test_confidence_interval_level_validation(rng):
    est = make(theta0=5.0, sq0=5.0)
    est.ingest_many(rng.exponential(10.0, size=10))
    for bad in (0.0, 1.0, -1.0, 2.0):
        with pytest.raises(ValueError):
            est.confidence_interval(bad)
    with pytest.raises(ValueError):
        est.confidence_interval(0.95, variant="averaged")


# ---------------------------------------------------------------------------
# shifted-harmonic reduction to running means (module-scale version; the
# full-length gate lives in the acceptance suite)
# ---------------------------------------------------------------------------

def test_harmonic_schedule_reduces_to_running_means(rng):
    alpha = 0.3
    xs = rng.exponential(10.0, size=3000)
    first_score = xs[0] / (1.0 - alpha)  # theta_0 = 0 and xs are positive
    est = TwoTimeScaleEstimator(alpha, StepSchedule.harmonic(5.0, 2.0 / 3.0),
                                theta0=0.0, sq0=first_score)
    sum_std = np.longdouble(first_score)
    sum_cvx = np.longdouble(first_score)
    for k, x in enumerate(xs[1:], start=2):
        th = est.theta
        exceeds = x > th
        sum_std += np.longdouble(x / (1.0 - alpha) if exceeds else 0.0)
        sum_cvx += np.longdouble(
            th + ((x - th) / (1.0 - alpha) if exceeds else 0.0))
        est.ingest(x)
        assert est.sq_standard == pytest.approx(float(sum_std / k),
                                                rel=1e-12)
        assert est.sq_convex == pytest.approx(float(sum_cvx / k), rel=1e-12)
