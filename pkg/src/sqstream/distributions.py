"""Samplable probability models with exact risk oracles.

Each model exposes the cdf/pdf/quantile trio plus the truncated moments
E[X * 1{X > t}] and E[X^2 * 1{X > t}], from which every ground-truth risk
quantity is assembled:

* ``quantile_oracle``       -- theta with F(theta) = alpha (VaR)
* ``superquantile_oracle``  -- tail mean beyond the quantile (CVaR)
* ``variance_oracles``      -- sigma^2 (standard score) and tau^2
                               (convexified score) at the quantile
* ``drift_functions``       -- the two mean-field drifts H and L

Closed forms are used throughout; the quadrature module provides the
independent cross-check route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

__all__ = [
    "DistributionModel",
    "Exponential",
    "Gamma",
    "Pareto",
    "Normal",
    "Empirical",
    "RiskOracle",
    "quantile_oracle",
    "superquantile_oracle",
    "variance_oracles",
    "drift_functions",
    "sample",
    "risk_oracle",
    "parse_model",
]


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class DistributionModel:
    """Base class; concrete kinds implement the abstract hooks below."""

    has_density = True

    # -- abstract ---------------------------------------------------------
    def pdf(self, x: float) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def tail_mass(self, t: float) -> float:
        """P(X > t), computed without the 1 - cdf cancellation."""
        raise NotImplementedError

    def trunc_first_moment(self, t: float) -> float:
        """E[X * 1{X > t}]."""
        raise NotImplementedError

    def trunc_second_moment(self, t: float) -> float:
        """E[X^2 * 1{X > t}]."""
        raise NotImplementedError

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    # -- shared -----------------------------------------------------------
    def sample(self, seed, n: int) -> np.ndarray:
        """n i.i.d. draws, reproducible from the seed."""
        if n < 1:
            raise ValueError(f"need n >= 1 draws, got {n}")
        return self.draw(_as_generator(seed), int(n))

    def _check_p(self, p: float) -> float:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability outside (0, 1): {p}")
        return p


@dataclass(frozen=True)
class Exponential(DistributionModel):
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"rate must be positive, got {self.rate}")

    def pdf(self, x):
        return self.rate * math.exp(-self.rate * x) if x >= 0 else 0.0

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0 else 0.0

    def tail_mass(self, t):
        return math.exp(-self.rate * t) if t > 0 else 1.0

    def quantile(self, p):
        return -math.log1p(-self._check_p(p)) / self.rate

    def trunc_first_moment(self, t):
        m = 1.0 / self.rate
        if t <= 0:
            return m
        return self.tail_mass(t) * (t + m)

    def trunc_second_moment(self, t):
        m = 1.0 / self.rate
        if t <= 0:
            return 2.0 * m * m
        return self.tail_mass(t) * (t * t + 2.0 * t * m + 2.0 * m * m)

    def draw(self, rng, n):
        return rng.exponential(scale=1.0 / self.rate, size=n)

    def descriptor(self):
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Gamma(DistributionModel):
    shape: float
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"shape must be positive, got {self.shape}")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"rate must be positive, got {self.rate}")

    def pdf(self, x):
        if x <= 0:
            return 0.0
        k, b = self.shape, self.rate
        return math.exp(k * math.log(b) + (k - 1.0) * math.log(x)
                        - b * x - math.lgamma(k))

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return float(special.gammainc(self.shape, self.rate * x))

    def tail_mass(self, t):
        if t <= 0:
            return 1.0
        return float(special.gammaincc(self.shape, self.rate * t))

    def quantile(self, p):
        # Bracketed root-find on the cdf (the regularized lower incomplete
        # gamma); bracket found by doubling from the mean.
        p = self._check_p(p)
        hi = self.shape / self.rate
        while self.cdf(hi) < p:
            hi *= 2.0
        return float(optimize.brentq(lambda x: self.cdf(x) - p, 0.0, hi,
                                     xtol=1e-12, rtol=8.9e-16))

    def trunc_first_moment(self, t):
        k, b = self.shape, self.rate
        if t <= 0:
            return k / b
        return (k / b) * float(special.gammaincc(k + 1.0, b * t))

    def trunc_second_moment(self, t):
        k, b = self.shape, self.rate
        if t <= 0:
            return k * (k + 1.0) / (b * b)
        return k * (k + 1.0) / (b * b) * float(special.gammaincc(k + 2.0, b * t))

    def draw(self, rng, n):
        return rng.gamma(self.shape, 1.0 / self.rate, size=n)

    def descriptor(self):
        return {"kind": "gamma", "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class Pareto(DistributionModel):
    """Pareto type I on [scale, inf) with tail index ``index``. The mean
    needs index > 1, the variance index > 2."""

    scale: float
    index: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not (math.isfinite(self.index) and self.index > 0):
            raise ValueError(f"index must be positive, got {self.index}")

    def pdf(self, x):
        if x < self.scale:
            return 0.0
        a, xm = self.index, self.scale
        return a * xm ** a / x ** (a + 1.0)

    def cdf(self, x):
        if x <= self.scale:
            return 0.0
        return 1.0 - (self.scale / x) ** self.index

    def tail_mass(self, t):
        if t <= self.scale:
            return 1.0
        return (self.scale / t) ** self.index

    def quantile(self, p):
        return self.scale * (1.0 - self._check_p(p)) ** (-1.0 / self.index)

    def _need_index(self, least, what):
        if self.index <= least:
            raise ValueError(
                f"Pareto index {self.index} <= {least}: {what} is infinite")

    def trunc_first_moment(self, t):
        self._need_index(1.0, "the mean")
        a, xm = self.index, self.scale
        t = max(t, xm)
        return a * xm ** a / (a - 1.0) * t ** (1.0 - a)

    def trunc_second_moment(self, t):
        self._need_index(2.0, "the second moment")
        a, xm = self.index, self.scale
        t = max(t, xm)
        return a * xm ** a / (a - 2.0) * t ** (2.0 - a)

    def draw(self, rng, n):
        return self.scale * (1.0 + rng.pareto(self.index, size=n))

    def descriptor(self):
        return {"kind": "pareto", "scale": self.scale, "index": self.index}


_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Normal(DistributionModel):
    mean: float
    sd: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean}")
        if not (math.isfinite(self.sd) and self.sd > 0):
            raise ValueError(f"sd must be positive, got {self.sd}")

    def _z(self, x):
        return (x - self.mean) / self.sd

    def pdf(self, x):
        z = self._z(x)
        return _INV_SQRT_2PI / self.sd * math.exp(-0.5 * z * z)

    def cdf(self, x):
        return 0.5 * math.erfc(-self._z(x) / _SQRT2)

    def tail_mass(self, t):
        return 0.5 * math.erfc(self._z(t) / _SQRT2)

    def quantile(self, p):
        return self.mean + self.sd * float(special.ndtri(self._check_p(p)))

    def trunc_first_moment(self, t):
        z = self._z(t)
        phi = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
        return self.mean * self.tail_mass(t) + self.sd * phi

    def trunc_second_moment(self, t):
        z = self._z(t)
        phi = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
        s = self.tail_mass(t)
        return (self.mean ** 2 + self.sd ** 2) * s \
            + self.sd * (self.mean + t) * phi

    def draw(self, rng, n):
        return rng.normal(self.mean, self.sd, size=n)

    def descriptor(self):
        return {"kind": "normal", "mean": self.mean, "sd": self.sd}


class Empirical(DistributionModel):
    """Discrete law placing mass 1/n on each stored point (duplicates keep
    their multiplicity). No density: the theoretical-constants path rejects
    this kind. Sampling bootstraps from the points."""

    has_density = False

    def __init__(self, points):
        pts = np.sort(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ValueError("Empirical model needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("Empirical points must all be finite")
        self.points = pts

    def __repr__(self):
        return f"Empirical(n={self.points.size})"

    def pdf(self, x):
        raise NotImplementedError("Empirical model has no density")

    def cdf(self, x):
        return float(np.searchsorted(self.points, x, side="right")) \
            / self.points.size

    def tail_mass(self, t):
        n = self.points.size
        return float(n - np.searchsorted(self.points, t, side="right")) / n

    def quantile(self, p):
        # Left-continuous generalized inverse: the smallest stored point x
        # with F(x) >= p, i.e. the ceil(n p)-th order statistic. Exact
        # comparisons repair any float fuzz in ceil(n p).
        p = self._check_p(p)
        n = self.points.size
        k = math.ceil(n * p)
        k = min(max(k, 1), n)
        while k > 1 and (k - 1) / n >= p:
            k -= 1
        while k < n and k / n < p:
            k += 1
        return float(self.points[k - 1])

    def superquantile(self, alpha: float) -> float:
        """Tail integral of the quantile function over [alpha, 1], divided
        by 1 - alpha: the quantile's own atom contributes the partial mass
        k/n - alpha, strictly higher points their full 1/n."""
        alpha = self._check_p(alpha)
        n = self.points.size
        q = self.quantile(alpha)
        k = int(np.searchsorted(self.points, q, side="right"))
        upper = float(np.sum(self.points[k:])) / n
        return (q * (k / n - alpha) + upper) / (1.0 - alpha)

    def trunc_first_moment(self, t):
        tail = self.points[self.points > t]
        return float(np.sum(tail)) / self.points.size

    def trunc_second_moment(self, t):
        tail = self.points[self.points > t]
        return float(np.sum(tail * tail)) / self.points.size

    def draw(self, rng, n):
        return rng.choice(self.points, size=n, replace=True)

    def descriptor(self):
        return {"kind": "empirical", "n_points": int(self.points.size)}


@dataclass(frozen=True)
class RiskOracle:
    """Ground-truth risk quantities of one (model, alpha) pair."""

    model: DistributionModel
    alpha: float
    theta_alpha: float
    sq_alpha: float
    sigma_sq: float
    tau_sq: float

    def __post_init__(self):
        if self.sq_alpha < self.theta_alpha - 1e-12 * max(1.0, abs(self.theta_alpha)):
            raise ValueError(
                f"superquantile {self.sq_alpha} below quantile {self.theta_alpha}")


def quantile_oracle(model: DistributionModel, alpha) -> float:
    """theta with F(theta) = alpha."""
    from .estimator import AlphaLevel
    return model.quantile(AlphaLevel.of(alpha).value)


def superquantile_oracle(model: DistributionModel, alpha) -> float:
    """Mean of the distribution beyond its alpha-quantile."""
    from .estimator import AlphaLevel
    a = AlphaLevel.of(alpha).value
    if isinstance(model, Empirical):
        return model.superquantile(a)
    theta = model.quantile(a)
    return model.trunc_first_moment(theta) / (1.0 - a)


def variance_oracles(model: DistributionModel, alpha) -> tuple:
    """(sigma_sq, tau_sq): variances of the standard score
    X*1{X>theta}/(1-alpha) and the convexified score
    (X-theta)*1{X>theta}/(1-alpha), both at theta = the alpha-quantile."""
    from .estimator import AlphaLevel
    a = AlphaLevel.of(alpha).value
    one_m = 1.0 - a
    theta = model.quantile(a)
    if isinstance(model, Empirical) and model.points.size == 1:
        return 0.0, 0.0  # point mass: both scores are degenerate
    s = model.tail_mass(theta)
    t1 = model.trunc_first_moment(theta)
    t2 = model.trunc_second_moment(theta)
    sigma_sq = (t2 - t1 * t1) / (one_m * one_m)
    centered_second = t2 - 2.0 * theta * t1 + theta * theta * s
    centered_first = t1 - theta * s
    tau_sq = (centered_second - centered_first * centered_first) \
        / (one_m * one_m)
    return sigma_sq, max(tau_sq, 0.0)


def drift_functions(model: DistributionModel, alpha, theta: float) -> tuple:
    """(H, L) at an arbitrary theta: the conditional mean-field drifts of the
    standard and convexified superquantile recursions. Both equal the
    superquantile at theta = the alpha-quantile; L is convex in theta."""
    from .estimator import AlphaLevel
    a = AlphaLevel.of(alpha).value
    one_m = 1.0 - a
    t1 = model.trunc_first_moment(theta)
    h = t1 / one_m
    l = theta + (t1 - theta * model.tail_mass(theta)) / one_m
    return h, l


def sample(model: DistributionModel, seed, n: int) -> np.ndarray:
    return model.sample(seed, n)


def risk_oracle(model: DistributionModel, alpha) -> RiskOracle:
    from .estimator import AlphaLevel
    a = AlphaLevel.of(alpha).value
    sigma_sq, tau_sq = variance_oracles(model, a)
    return RiskOracle(
        model=model,
        alpha=a,
        theta_alpha=quantile_oracle(model, a),
        sq_alpha=superquantile_oracle(model, a),
        sigma_sq=sigma_sq,
        tau_sq=tau_sq,
    )


def parse_model(spec: str) -> DistributionModel:
    """Parse CLI model specs: exp:0.1 | gamma:4,3 | pareto:1,3 | normal:0,1."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    try:
        params = [float(tok) for tok in rest.split(",")] if rest else []
    except ValueError:
        raise ValueError(f"cannot parse model parameters in {spec!r}") from None
    table = {
        "exp": (Exponential, 1),
        "exponential": (Exponential, 1),
        "gamma": (Gamma, 2),
        "pareto": (Pareto, 2),
        "normal": (Normal, 2),
    }
    if kind not in table:
        raise ValueError(
            f"unknown model kind {kind!r} (expected exp, gamma, pareto or normal)")
    cls, arity = table[kind]
    if len(params) != arity:
        raise ValueError(f"{kind} takes {arity} parameter(s), got {len(params)}")
    return cls(*params)
