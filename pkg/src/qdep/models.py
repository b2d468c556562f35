"""Samplers for the simulation models and closed-form copulas used as oracles.

Normal noise is written ``N(mean, variance)`` in the model catalogue, so a
noise term ``N(0, 0.25)`` has standard deviation 0.5.  Copula-only models
(Mardia, Gumbel, Clayton) are sampled with uniform margins, which is
immaterial for rank statistics.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType

import numpy as np

from . import rng as _rng
from .copula_grid import weight
from .errors import DomainError, InvalidParameter, UnknownModel
from .ranks import Sample

# Fixed order; a model's position feeds its seed derivation.
MODEL_IDS = (
    "null",
    "sr1", "sr2", "sr3", "sr4", "sr5",
    "hr1", "hr2",
    "re1", "re2", "re3", "re4",
    "bm1", "bm2", "bm3", "bm4", "bm5", "bm6", "bm7", "bm8", "bm9", "bm10", "bm11",
)

DEFAULT_PARAMS = {
    "null": {},
    "sr1": {"noise_var": 1.0},
    "sr2": {"noise_var": 0.25},
    "sr3": {"noise_var": 2.0},
    "sr4": {"noise_var": 1.0},
    "sr5": {"noise_var": 0.5},
    "hr1": {"rate": 0.1},
    "hr2": {"low": 1.0, "high": 16.0},
    "re1": {"mult_var": 4.0, "add_var": 1.0},
    "re2": {"mult_var": 1.0, "add_var": 1.0},
    "re3": {"mult_var": 1.0, "add_var": 1.0},
    "re4": {"mult_var": 1.0, "add_var": 1.0},
    "bm1": {"rho": 0.3},
    "bm2": {"weight": 0.1, "var": 6.0, "cov": 5.0},
    "bm3": {"weight": 0.3},
    "bm4": {"threshold": 1.96},
    "bm5": {"theta": -0.55},
    "bm6": {"theta": 0.5},
    "bm7": {"theta": 0.5},
    "bm8": {"df": 1.0},
    "bm9": {"df": 2.0},
    "bm10": {"df": 5.0, "alpha1": 0.3, "alpha2": 0.7, "rho": -0.7},
    "bm11": {"rho": 0.1, "alpha": 1.5},
}


@dataclass(frozen=True)
class ModelSpec:
    """A model id plus its parameters (unspecified ones take the defaults)."""

    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        mid = self.id.lower()
        if mid not in DEFAULT_PARAMS:
            raise UnknownModel(f"unknown model {self.id!r}; choose from {', '.join(MODEL_IDS)}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[mid])
        if unknown:
            raise InvalidParameter(f"{mid} has no parameter(s) {sorted(unknown)}")
        merged = {**DEFAULT_PARAMS[mid], **{k: float(v) for k, v in self.params.items()}}
        object.__setattr__(self, "id", mid)
        object.__setattr__(self, "params", MappingProxyType(merged))
        _validate(mid, merged)

    @property
    def ordinal(self):
        return MODEL_IDS.index(self.id)


def _require(cond, msg):
    if not cond:
        raise InvalidParameter(msg)


def _validate(mid, p):
    for key, value in p.items():
        _require(math.isfinite(value), f"{mid}.{key} must be finite")
        if key.endswith("var") or key in ("rate", "df"):
            _require(value > 0, f"{mid}.{key} must be positive")
    if mid == "hr2":
        _require(0 < p["low"] < p["high"], "hr2 needs 0 < low < high")
    if mid in ("bm1", "bm10", "bm11"):
        _require(-1 < p["rho"] < 1, f"{mid}.rho must be in (-1, 1)")
    if mid in ("bm2", "bm3"):
        _require(0 <= p["weight"] <= 1, f"{mid}.weight must be in [0, 1]")
    if mid == "bm2":
        _require(p["var"] > abs(p["cov"]), "bm2 covariance matrix must be positive definite")
    if mid == "bm5":
        _require(abs(p["theta"]) <= 1, "Mardia theta must be in [-1, 1]")
    if mid == "bm6":
        _require(0 <= p["theta"] <= 1, "Gumbel bivariate exponential theta must be in [0, 1]")
    if mid == "bm7":
        _require(p["theta"] > 0, "Clayton theta must be positive")
    if mid == "bm11":
        _require(0 < p["alpha"] < 2, "stable index alpha must be in (0, 2)")


# -- building blocks ----------------------------------------------------------


def _normal(gen, n, var):
    return gen.normal(0.0, math.sqrt(var), n)


def bivariate_t(gen, n, df, corr=0.0):
    """Elliptical t: ``Z / sqrt(chi2_df / df)`` with ``Z ~ N(0, [[1, corr], [corr, 1]])``."""
    z = gen.multivariate_normal([0.0, 0.0], [[1.0, corr], [corr, 1.0]], size=n)
    scale = np.sqrt(gen.chisquare(df, n) / df)
    return z / scale[:, None]


def mardia_mixture_weights(theta):
    """Mixture weights ``(w_M, w_Pi, w_W)`` of the Mardia copula.

    ``C = w_M M + w_Pi Pi + w_W W`` with the comonotone, independence and
    countermonotone copulas.
    """
    if not -1 <= theta <= 1:
        raise InvalidParameter(f"Mardia theta must be in [-1, 1], got {theta}")
    t2 = theta * theta
    return t2 * (1 + theta) / 2, 1 - t2, t2 * (1 - theta) / 2


def _mardia(gen, n, theta):
    w_m, w_pi, w_w = mardia_mixture_weights(theta)
    comp = gen.choice(3, size=n, p=[w_m, w_pi, w_w])
    u = gen.random(n)
    other = gen.random(n)
    v = np.where(comp == 0, u, np.where(comp == 1, other, 1.0 - u))
    return u, v


def gumbel_exponential_conditional_cdf(y, x, theta):
    """``P(Y <= y | X = x)`` for Gumbel's bivariate exponential distribution."""
    return 1.0 - (1.0 + theta * y) * np.exp(-y * (1.0 + theta * x))


def _gumbel_exponential(gen, n, theta, tol=1e-12):
    x = gen.exponential(1.0, n)
    target = gen.random(n)
    lo = np.zeros(n)
    hi = np.ones(n)
    while True:
        short = gumbel_exponential_conditional_cdf(hi, x, theta) < target
        if not short.any():
            break
        hi[short] *= 2.0
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        below = gumbel_exponential_conditional_cdf(mid, x, theta) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return x, 0.5 * (lo + hi)


def _clayton(gen, n, theta):
    # conditional inversion of dC/du
    u = gen.random(n)
    t = gen.random(n)
    v = ((t ** (-theta / (1 + theta)) - 1) * u ** (-theta) + 1) ** (-1 / theta)
    return u, v


def _skew_t(gen, n, df, alpha, rho):
    """Azzalini-Capitanio skew-t with correlation ``rho`` and shape ``alpha``."""
    omega = np.array([[1.0, rho], [rho, 1.0]])
    alpha = np.asarray(alpha, dtype=float)
    delta = omega @ alpha / math.sqrt(1.0 + alpha @ omega @ alpha)
    cov = np.empty((3, 3))
    cov[0, 0] = 1.0
    cov[0, 1:] = cov[1:, 0] = delta
    cov[1:, 1:] = omega
    draw = gen.multivariate_normal(np.zeros(3), cov, size=n)
    z = np.where(draw[:, :1] > 0, draw[:, 1:], -draw[:, 1:])
    return z / np.sqrt(gen.chisquare(df, n) / df)[:, None]


def positive_stable(gen, n, index):
    """Totally skewed stable ``S_index(1, 1, 0)`` for ``0 < index < 1``.

    Chambers-Mallows-Stuck; the result is positive.
    """
    v = gen.uniform(-math.pi / 2, math.pi / 2, n)
    w = gen.exponential(1.0, n)
    tan_term = math.tan(math.pi * index / 2)
    b = math.atan(tan_term) / index
    scale = (1 + tan_term**2) ** (1 / (2 * index))
    return (
        scale
        * np.sin(index * (v + b))
        / np.cos(v) ** (1 / index)
        * (np.cos(v - index * (v + b)) / w) ** ((1 - index) / index)
    )


def _sub_gaussian(gen, n, rho, alpha):
    half = alpha / 2
    a = math.cos(math.pi * alpha / 4) ** (2 / alpha) * positive_stable(gen, n, half)
    g = gen.multivariate_normal([0.0, 0.0], [[1.0, rho], [rho, 1.0]], size=n)
    return np.sqrt(a)[:, None] * g


# -- model recipes ------------------------------------------------------------


def _draw(mid, p, gen, n):
    if mid == "null":
        return gen.random(n), gen.random(n)
    if mid == "sr1":
        x = gen.random(n)
        return x, 2 + x + _normal(gen, n, p["noise_var"])
    if mid == "sr2":
        x = gen.random(n)
        return x, x**0.25 + _normal(gen, n, p["noise_var"])
    if mid == "sr3":
        x = gen.random(n)
        return x, (x <= 0.5).astype(float) + _normal(gen, n, p["noise_var"])
    if mid == "sr4":
        x = gen.standard_normal(n)
        return x, np.log1p(np.abs(x)) + _normal(gen, n, p["noise_var"])
    if mid == "sr5":
        x = gen.random(n)
        return x, 4 * ((2 * x - 1) ** 2 - 0.5) ** 2 + _normal(gen, n, p["noise_var"])
    if mid == "hr1":
        x = gen.exponential(1 / p["rate"], n)
        return x, np.sqrt(1 + 1 / x**2) * gen.standard_normal(n)
    if mid == "hr2":
        x = gen.uniform(p["low"], p["high"], n)
        return x, np.sqrt(x) * gen.standard_normal(n)
    if mid in ("re1", "re2", "re3"):
        x = gen.random(n)
        em = _normal(gen, n, p["mult_var"])
        ea = _normal(gen, n, p["add_var"])
        if mid == "re1":
            return x, 2 + x + em * x + ea
        if mid == "re2":
            return x, em * (2 + x + x**2) + ea
        return x, em / x + ea
    if mid == "re4":
        xy = bivariate_t(gen, n, 1.0)
        em = _normal(gen, n, p["mult_var"])
        ea = _normal(gen, n, p["add_var"])
        return xy[:, 0], em * xy[:, 1] + ea
    if mid == "bm1":
        xy = gen.multivariate_normal([0.0, 0.0], [[1.0, p["rho"]], [p["rho"], 1.0]], size=n)
        return xy[:, 0], xy[:, 1]
    if mid == "bm2":
        std = gen.standard_normal((n, 2))
        var, cov = p["var"], p["cov"]
        corr = gen.multivariate_normal([0.0, 0.0], [[var, cov], [cov, var]], size=n)
        xy = np.where((gen.random(n) < p["weight"])[:, None], std, corr)
        return xy[:, 0], xy[:, 1]
    if mid == "bm3":
        cauchy = bivariate_t(gen, n, 1.0)
        std = gen.standard_normal((n, 2))
        xy = np.where((gen.random(n) < p["weight"])[:, None], cauchy, std)
        return xy[:, 0], xy[:, 1]
    if mid == "bm4":
        x = gen.standard_normal(n)
        mu = np.where(np.abs(x) > p["threshold"], -x, 0.0)
        return x, mu + gen.standard_normal(n)
    if mid == "bm5":
        return _mardia(gen, n, p["theta"])
    if mid == "bm6":
        return _gumbel_exponential(gen, n, p["theta"])
    if mid == "bm7":
        return _clayton(gen, n, p["theta"])
    if mid in ("bm8", "bm9"):
        xy = bivariate_t(gen, n, p["df"])
        return xy[:, 0], xy[:, 1]
    if mid == "bm10":
        xy = _skew_t(gen, n, p["df"], (p["alpha1"], p["alpha2"]), p["rho"])
        return xy[:, 0], xy[:, 1]
    if mid == "bm11":
        xy = _sub_gaussian(gen, n, p["rho"], p["alpha"])
        return xy[:, 0], xy[:, 1]
    raise UnknownModel(mid)


def sample_with(spec, n, gen):
    """Draw ``n`` observations of ``spec`` from an existing generator."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    x, y = _draw(spec.id, spec.params, gen, n)
    return Sample(x, y)


def sample(spec, n, seed):
    """``n`` i.i.d. draws from ``spec``; a pure function of ``(spec, n, seed)``."""
    if isinstance(spec, str):
        spec = ModelSpec(spec)
    return sample_with(spec, n, _rng.stream(seed, _rng.SIMULATE, spec.ordinal))


# -- analytic copulas ---------------------------------------------------------


class Family(Enum):
    INDEPENDENCE = "independence"
    CLAYTON = "clayton"
    MARDIA = "mardia"
    FGM = "fgm"
    GUMBEL_EXPONENTIAL = "gumbel-exponential"


@dataclass(frozen=True)
class AnalyticCopula:
    family: Family
    theta: float = 0.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        t = self.theta
        if fam is Family.CLAYTON:
            _require(t > 0, "Clayton theta must be positive")
        elif fam is Family.MARDIA:
            _require(-1 <= t <= 1, "Mardia theta must be in [-1, 1]")
        elif fam is Family.FGM:
            _require(-1 <= t <= 1, "FGM theta must be in [-1, 1]")
        elif fam is Family.GUMBEL_EXPONENTIAL:
            _require(0 <= t <= 1, "Gumbel bivariate exponential theta must be in [0, 1]")

    def cdf(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        t = self.theta
        fam = self.family
        if fam is Family.INDEPENDENCE:
            return u * v
        if fam is Family.CLAYTON:
            with np.errstate(divide="ignore"):
                inner = np.maximum(u ** (-t) + v ** (-t) - 1, 0.0)
                out = inner ** (-1 / t)
            return np.where((u == 0) | (v == 0), 0.0, out)
        if fam is Family.MARDIA:
            w_m, w_pi, w_w = mardia_mixture_weights(t)
            return w_m * np.minimum(u, v) + w_pi * u * v + w_w * np.maximum(u + v - 1, 0.0)
        if fam is Family.FGM:
            return u * v * (1 + t * (1 - u) * (1 - v))
        # Gumbel bivariate exponential, margins mapped through 1 - exp(-x)
        with np.errstate(divide="ignore", invalid="ignore"):
            prod = np.log1p(-u) * np.log1p(-v)
            out = u + v - 1 + (1 - u) * (1 - v) * np.exp(-t * prod)
        return np.where((u == 1) | (v == 1), np.minimum(u, v), out)


def analytic_q(copula, u, v):
    """Quantile dependence ``(C(u, v) - uv) w(u, v)`` of a closed-form copula."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise DomainError("analytic_q is defined on the open unit square only")
    out = (copula.cdf(u, v) - u * v) * weight(u, v)
    return float(out) if out.ndim == 0 else out
