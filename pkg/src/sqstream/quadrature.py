"""Adaptive tail quadrature for truncated moments.

Independent numerical route to the quantities the closed-form oracles
compute: integrate x^power * pdf(x) over [t, inf), with the upper limit
found by doubling until the last doubling contributes less than a relative
tail tolerance. Used as the cross-check side of oracle tests and as the
fallback path for densities without closed-form truncated moments.
"""

from __future__ import annotations

import math

from scipy import integrate

__all__ = [
    "tail_integral",
    "trunc_moment_quad",
    "superquantile_by_quadrature",
    "variance_oracles_by_quadrature",
    "density_total_mass",
]

_TAIL_TOL = 1e-12
_REL_TOL = 1e-9


def tail_integral(f, lower: float, rel_tol: float = _REL_TOL,
                  tail_tol: float = _TAIL_TOL, max_doublings: int = 200) -> float:
    """Integrate f over [lower, inf).

    The integral is accumulated over segments [U_k, U_{k+1}] with doubling
    endpoints; iteration stops once a segment contributes less than
    tail_tol relative to the running total (checked twice in a row, so a
    single accidentally-small segment cannot truncate a heavy tail).
    """
    u0 = abs(lower) + 1.0
    total, _ = integrate.quad(f, lower, lower + u0, epsrel=rel_tol, epsabs=0.0)
    lo = lower + u0
    span = u0
    small_streak = 0
    for _ in range(max_doublings):
        span *= 2.0
        piece, _ = integrate.quad(f, lo, lo + span, epsrel=rel_tol,
                                  epsabs=max(abs(total), 1e-300) * tail_tol)
        total += piece
        lo += span
        if abs(piece) <= tail_tol * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
    raise ArithmeticError(
        f"tail integral did not stabilize after {max_doublings} doublings")


def trunc_moment_quad(pdf, t: float, power: int, **kw) -> float:
    """E[X^power * 1{X > t}] by quadrature of x^power * pdf."""
    return tail_integral(lambda x: x ** power * pdf(x), t, **kw)


def superquantile_by_quadrature(model, alpha: float) -> float:
    """Tail-mean cross-check: integrate x * pdf over [theta_alpha, inf)."""
    theta = model.quantile(alpha)
    return trunc_moment_quad(model.pdf, theta, 1) / (1.0 - alpha)


def variance_oracles_by_quadrature(model, alpha: float) -> tuple:
    """(sigma_sq, tau_sq) built purely from quadrature moments."""
    theta = model.quantile(alpha)
    one_m = 1.0 - alpha
    s = tail_integral(model.pdf, theta)
    t1 = trunc_moment_quad(model.pdf, theta, 1)
    t2 = trunc_moment_quad(model.pdf, theta, 2)
    sigma_sq = (t2 - t1 * t1) / (one_m * one_m)
    tau_sq = (t2 - 2.0 * theta * t1 + theta * theta * s
              - (t1 - theta * s) ** 2) / (one_m * one_m)
    return sigma_sq, tau_sq


def density_total_mass(model, support_lo: float | None = None) -> float:
    """Integral of the density over its support (should be 1)."""
    if support_lo is None:
        # walk left until the density is negligible
        lo = 0.0
        while model.pdf(lo) > 1e-300 and lo > -1e12:
            lo = lo * 2.0 - 1.0
        support_lo = lo
    return tail_integral(model.pdf, support_lo)


def quantile_by_bisection(model, p: float, tol: float = 1e-10) -> float:
    """Slow but assumption-free quantile cross-check via pure bisection on
    the cdf."""
    lo, hi = -1.0, 1.0
    while model.cdf(lo) > p:
        lo *= 2.0
    while model.cdf(hi) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if model.cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
