"""Test statistics built on the grid estimator, plus the rank HHG statistic."""

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .copula_grid import q_grid, smooth_q_grid
from .errors import DegenerateRegion, DomainError, SampleTooSmall

#: Order in which statistics are stored in pools, reports and tables.
STATISTICS = ("l_r2", "l_r6", "d_s0", "d_s4", "hhg")


@dataclass(frozen=True)
class StatConfig:
    """Tuning constants for the statistic family.

    ``l_r6`` uses exponent ``r`` and ``d_s4`` uses radius ``s``; ``l_r2`` and
    ``d_s0`` are always computed with ``r = 2`` and ``s = 0``.
    """

    r: int = 6
    epsilon: float = 0.01
    kappa: float = 0.025
    s: int = 4

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise DomainError(f"r must be a positive integer, got {self.r}")
        if not 0 <= self.epsilon < 0.5:
            raise DomainError(f"epsilon must be in [0, 0.5), got {self.epsilon}")
        if not 0 < self.kappa < 0.5:
            raise DomainError(f"kappa must be in (0, 0.5), got {self.kappa}")
        if int(self.s) != self.s or self.s < 0:
            raise DomainError(f"s must be a non-negative integer, got {self.s}")

    def as_dict(self):
        return asdict(self)

    def digest(self):
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TestStatistics:
    __test__ = False  # not a pytest class

    l_r2: float
    l_r6: float
    d_s0: float
    d_s4: float
    hhg: float

    def as_dict(self):
        return asdict(self)

    def as_array(self):
        return np.array([getattr(self, k) for k in STATISTICS])


def trimmed_region_mask(n, epsilon):
    """Grid cells whose point lies in A(eps): the unit square minus the four
    open ``eps``-corner squares (points on a corner boundary are kept)."""
    u = (np.arange(n + 1) + 0.5) / (n + 1)
    edge = (u < epsilon) | (u > 1 - epsilon)
    return ~(edge[:, None] & edge[None, :])


def central_region_mask(n, kappa):
    u = (np.arange(n + 1) + 0.5) / (n + 1)
    inside = (u >= kappa) & (u <= 1 - kappa)
    return inside[:, None] & inside[None, :]


def l_statistic(grid, r, epsilon):
    """Trimmed, standardized L_r norm of the unsmoothed estimator.

    The integral over A(eps) is approximated by the grid average
    ``sum_{K} |Q*|^r / (n+1)^2`` over cells K inside the region.
    """
    if grid.s != 0:
        raise ValueError("the L_r statistic uses the unsmoothed grid")
    if r < 1:
        raise DomainError("r must be >= 1")
    if not 0 <= epsilon < 0.5:
        raise DomainError("epsilon must be in [0, 0.5)")
    mask = trimmed_region_mask(grid.n, epsilon)
    if not mask.any():
        raise DegenerateRegion(f"no grid point lies in A({epsilon}) for n={grid.n}")
    vals = np.abs(grid.values[mask])
    peak = vals.max()
    if peak == 0:
        return 0.0
    # factor out the peak so |Q|^r cannot underflow for large r
    mean_pow = np.sum((vals / peak) ** r) / (grid.n + 1) ** 2
    return float(math.sqrt(grid.n) * peak * mean_pow ** (1.0 / r))


def d_statistic(grid, kappa):
    """``max sqrt(n) |Q*_{n,s}|`` over grid points in ``[kappa, 1 - kappa]^2``."""
    if not 0 < kappa < 0.5:
        raise DomainError("kappa must be in (0, 0.5)")
    mask = central_region_mask(grid.n, kappa)
    if not mask.any():
        raise DegenerateRegion(f"no grid point lies in [{kappa}, {1 - kappa}]^2 for n={grid.n}")
    return float(math.sqrt(grid.n) * np.abs(grid.values[mask]).max())


@numba.njit(nogil=True, cache=True)
def _hhg_kernel(r, s):
    n = r.size
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            rx = abs(r[i] - r[j])
            ry = abs(s[i] - s[j])
            a11 = 0
            a12 = 0
            a21 = 0
            a22 = 0
            for k in range(n):
                if k == i or k == j:
                    continue
                near_x = abs(r[i] - r[k]) <= rx
                near_y = abs(s[i] - s[k]) <= ry
                if near_x:
                    if near_y:
                        a11 += 1
                    else:
                        a12 += 1
                elif near_y:
                    a21 += 1
                else:
                    a22 += 1
            denom = float(a11 + a12) * float(a21 + a22) * float(a11 + a21) * float(a12 + a22)
            if denom == 0.0:
                continue
            cross = float(a12 * a21 - a11 * a22)
            total += (n - 2) * cross * cross / denom
    return total


def hhg_statistic(ranked):
    """HHG sum of 2x2 Pearson chi-square terms over ordered pairs, on rank distances.

    For each ordered pair ``(i, j)`` the other ``n - 2`` observations are
    classified by ``|r_i - r_k| <= |r_i - r_j|`` and ``|s_i - s_k| <= |s_i - s_j|``.
    Tables with an empty margin contribute nothing.
    """
    if ranked.n < 3:
        raise SampleTooSmall(f"HHG needs n >= 3, got {ranked.n}")
    return float(_hhg_kernel(np.ascontiguousarray(ranked.r), np.ascontiguousarray(ranked.s)))


def min_p(p1, p2):
    for p in (p1, p2):
        if not 0 <= p <= 1:
            raise DomainError(f"p-value {p} outside [0, 1]")
    return min(p1, p2)


def compute_statistics(ranked, config=StatConfig()):
    """All five statistics for one ranked sample."""
    grid = q_grid(ranked)
    smoothed = smooth_q_grid(grid, config.s)
    return TestStatistics(
        l_r2=l_statistic(grid, 2, config.epsilon),
        l_r6=l_statistic(grid, config.r, config.epsilon),
        d_s0=d_statistic(grid, config.kappa),
        d_s4=d_statistic(smoothed, config.kappa),
        hhg=hhg_statistic(ranked),
    )
