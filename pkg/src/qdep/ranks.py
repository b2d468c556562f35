"""Ranks, reversed ranks and the evaluation grid."""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import rng as _rng
from .errors import LengthMismatch, NonFiniteValue, SampleTooSmall, TiesPresent


class TiePolicy(Enum):
    ERROR = "error"
    RANDOM_BREAK = "random-break"


@dataclass(frozen=True)
class Sample:
    """Paired bivariate observations.

    Parameters
    ----------
    x, y : array-like, shape (n,)
        Finite observations, ``n >= 2``.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).ravel()
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise LengthMismatch(f"x has {x.size} values but y has {y.size}")
        if x.size < 2:
            raise SampleTooSmall(f"need at least 2 observations, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NonFiniteValue("sample contains NaN or infinite values")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.size


@dataclass(frozen=True)
class RankedSample:
    """1-based ranks ``r``, ``s`` and their reversals ``n + 1 - r``, ``n + 1 - s``."""

    r: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.int64).ravel()
        s = np.asarray(self.s, dtype=np.int64).ravel()
        if r.shape != s.shape:
            raise LengthMismatch(f"r has {r.size} values but s has {s.size}")
        n = r.size
        expected = np.arange(1, n + 1)
        if not (np.array_equal(np.sort(r), expected) and np.array_equal(np.sort(s), expected)):
            raise ValueError("r and s must each be a permutation of 1..n")
        r.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        r_prime = n + 1 - r
        s_prime = n + 1 - s
        r_prime.flags.writeable = False
        s_prime.flags.writeable = False
        object.__setattr__(self, "r_prime", r_prime)
        object.__setattr__(self, "s_prime", s_prime)

    @property
    def n(self):
        return self.r.size


class GridPoint(NamedTuple):
    i: int
    j: int
    u: float
    v: float


def _ranks_1d(values, policy, gen):
    n = values.size
    if policy is TiePolicy.RANDOM_BREAK:
        # random key as secondary sort key: uniform shuffle within tied groups
        order = np.lexsort((gen.permutation(n), values))
    else:
        order = np.argsort(values, kind="stable")
        sv = values[order]
        if np.any(sv[1:] == sv[:-1]):
            raise TiesPresent(
                "tied values present; the estimator assumes continuous margins "
                "(use the random-break tie policy for rounded data)"
            )
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return ranks


def compute_ranks(sample, tie_policy=TiePolicy.ERROR, seed=None):
    """Rank both margins of ``sample``.

    Under ``TiePolicy.RANDOM_BREAK`` tied values are ordered by a uniform
    shuffle drawn from ``seed`` (default: the package default seed), so the
    result is a permutation and reproducible.
    """
    if not isinstance(sample, Sample):
        sample = Sample(*sample)
    policy = TiePolicy(tie_policy)
    if seed is None:
        seed = _rng.DEFAULT_SEED
    gen = _rng.stream(seed, _rng.TIES)
    r = _ranks_1d(sample.x, policy, gen)
    s = _ranks_1d(sample.y, policy, gen)
    return RankedSample(r, s)


def grid_coordinates(n):
    """Grid abscissae ``u_i = (i + 0.5) / (n + 1)`` for ``i = 0..n``."""
    return (np.arange(n + 1) + 0.5) / (n + 1)


def grid_points(n):
    """All ``(n + 1)**2`` grid points, row-major (``i`` outer, ``j`` inner)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = grid_coordinates(n)
    return [GridPoint(i, j, float(u[i]), float(u[j])) for i in range(n + 1) for j in range(n + 1)]
