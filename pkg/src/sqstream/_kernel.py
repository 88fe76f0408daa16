"""Compiled inner loop for long replica runs.

``run_stream`` replays exactly the update sequence of
``TwoTimeScaleEstimator.ingest`` (same expressions, same order, so results
are bit-identical to the pure-Python path) while also accumulating the
monitoring statistics that would otherwise require storing full
trajectories: running sums of squared superquantile errors (for the
quadratic strong law) and running maxima of the rescaled errors (for the
iterated-logarithm envelope).

This module is internal; ``experiments`` is the public face.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Columns of the per-checkpoint output matrix.
CHK_THETA = 0
CHK_SQ_STANDARD = 1
CHK_SQ_CONVEX = 2
CHK_TAU_SQ = 3
CHK_QSL_RAW_STANDARD = 4
CHK_QSL_RAW_CONVEX = 5
CHK_LIL_MAX_STANDARD = 6
CHK_LIL_MAX_CONVEX = 7
CHK_COLUMNS = 8


@njit(cache=True, nogil=True)
def run_stream(xs, alpha, a1, a_exp, b1, b_exp, harmonic,
               theta0, sq_std0, sq_cvx0, m1_0, m2_0, n0,
               target_sq, checkpoints, lil_n_min, keep_traj):
    """Drive the coupled recursions over ``xs`` starting from the given
    state, with the iterate counter starting at ``n0`` (1 after a consumed
    warm-start observation).

    ``checkpoints`` are strictly increasing iterate indices (counted from
    ``n0``); at each one a row of the output matrix is filled with the
    current iterates, the tau^2 estimate, the raw (unnormalized) running
    sums of squared errors against ``target_sq``, and the running maxima of
    the envelope-rescaled absolute errors. The error statistics make sense
    only when ``n0 == 1``; pass ``target_sq = nan`` to ignore them.

    Returns ``(theta, sq_standard, sq_convex, m1, m2, checks, traj)`` where
    ``traj`` has shape (3, len(xs)+1) if ``keep_traj`` (row 0 theta, row 1
    standard, row 2 convex; column 0 the initial state) and (3, 1) otherwise.
    """
    n_steps = xs.shape[0]
    theta = theta0
    sq_std = sq_std0
    sq_cvx = sq_cvx0
    m1 = m1_0
    m2 = m2_0
    one_minus_alpha = 1.0 - alpha
    hi = 1.0 - 1e-12

    b_is_one = harmonic or b_exp == 1.0
    if b_is_one:
        lil_start = max(lil_n_min, 3)  # log log m > 0 needs m >= 3
    else:
        lil_start = max(lil_n_min, 2)  # log m > 0 needs m >= 2

    qsl_raw_std = 0.0
    qsl_raw_cvx = 0.0
    lil_max_std = 0.0
    lil_max_cvx = 0.0

    n_chk = checkpoints.shape[0]
    checks = np.empty((n_chk, CHK_COLUMNS), dtype=np.float64)
    ci = 0

    if keep_traj:
        traj = np.empty((3, n_steps + 1), dtype=np.float64)
    else:
        traj = np.empty((3, 1), dtype=np.float64)
    traj[0, 0] = theta
    traj[1, 0] = sq_std
    traj[2, 0] = sq_cvx

    for i in range(n_steps):
        x = xs[i]
        k = n0 + i  # iterate index being produced; also the step index

        if harmonic:
            b = 1.0 / (k + 1)
        else:
            b = b1 / k ** b_exp
        if b > hi:
            b = hi

        if x > theta:
            score_standard = x / one_minus_alpha
            excess = (x - theta) / one_minus_alpha
        else:
            score_standard = 0.0
            excess = 0.0

        sq_std += b * (score_standard - sq_std)
        sq_cvx += b * ((theta + excess) - sq_cvx)
        m1 += (excess - m1) / k
        m2 += (excess * excess - m2) / k

        a_n = a1 / k ** a_exp
        theta = theta - a_n * ((1.0 if x <= theta else 0.0) - alpha)

        err_std = sq_std - target_sq
        err_cvx = sq_cvx - target_sq
        qsl_raw_std += err_std * err_std
        qsl_raw_cvx += err_cvx * err_cvx
        if k >= lil_start:
            if b_is_one:
                env = math.sqrt(k / (2.0 * math.log(math.log(k))))
            else:
                env = math.sqrt(k ** b_exp
                                / (2.0 * (1.0 - b_exp) * math.log(k)))
            v = env * abs(err_std)
            if v > lil_max_std:
                lil_max_std = v
            v = env * abs(err_cvx)
            if v > lil_max_cvx:
                lil_max_cvx = v

        if keep_traj:
            traj[0, i + 1] = theta
            traj[1, i + 1] = sq_std
            traj[2, i + 1] = sq_cvx

        if ci < n_chk and checkpoints[ci] == k:
            tau = m2 - m1 * m1
            if tau < 0.0:
                tau = 0.0
            checks[ci, CHK_THETA] = theta
            checks[ci, CHK_SQ_STANDARD] = sq_std
            checks[ci, CHK_SQ_CONVEX] = sq_cvx
            checks[ci, CHK_TAU_SQ] = tau
            checks[ci, CHK_QSL_RAW_STANDARD] = qsl_raw_std
            checks[ci, CHK_QSL_RAW_CONVEX] = qsl_raw_cvx
            checks[ci, CHK_LIL_MAX_STANDARD] = lil_max_std
            checks[ci, CHK_LIL_MAX_CONVEX] = lil_max_cvx
            ci += 1

    return theta, sq_std, sq_cvx, m1, m2, checks, traj
