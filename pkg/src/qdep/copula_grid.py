"""Empirical copula on the rank grid and the symmetrized estimator of q.

All estimators are evaluated on the lattice ``u_i = (i + 0.5) / (n + 1)``,
``i = 0..n``, which never hits a pseudo-observation ``k / (n + 1)``.
Copula values are kept as integer counts; the four quadrant numerators are
kept as exact integers scaled by ``4 n (n + 1)**2`` so that algebraic
identities between them can be checked without rounding.
"""

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, SmoothingRadiusTooLarge
from .ranks import grid_coordinates


class Pairing(Enum):
    """Rank pairing fed to the copula recursion (primes denote ``n + 1 - rank``)."""

    RS = "RS"
    RS_PRIME = "RS'"
    R_PRIME_S_PRIME = "R'S'"
    R_PRIME_S = "R'S"


def _pair(ranked, pairing):
    pairing = Pairing(pairing)
    a = ranked.r if pairing in (Pairing.RS, Pairing.RS_PRIME) else ranked.r_prime
    b = ranked.s if pairing in (Pairing.RS, Pairing.R_PRIME_S) else ranked.s_prime
    return a, b


def _copula_counts(a, b, rows, cols):
    """``#{k : a_k <= i, b_k <= j}`` for ``i`` in ``rows``, ``j`` in ``cols``.

    Sorting the pairs by ``a`` gives ``b_[1..n]``; row ``i`` of the count
    table is row ``i - 1`` plus ``1(j >= b_[i])``, starting from an all-zero
    row ``0``.  The recursion is run as a cumulative sum down the rows.
    """
    n = a.size
    b_sorted = np.empty(n, dtype=np.int64)
    b_sorted[a - 1] = b
    cols = np.asarray(cols, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64)
    top = int(rows.max()) if rows.size else 0
    steps = (cols[None, :] >= b_sorted[:top, None]).astype(np.int64)
    table = np.zeros((top + 1, cols.size), dtype=np.int64)
    np.cumsum(steps, axis=0, out=table[1:])
    return table[rows]


@dataclass(frozen=True)
class CopulaGrid:
    """Empirical copula ``C_n(u_i, v_j)`` for one rank pairing, as counts."""

    n: int
    counts: np.ndarray
    pairing: Pairing = Pairing.RS

    @property
    def values(self):
        return self.counts / self.n


def empirical_copula_recursive(ranked, pairing=Pairing.RS):
    """Empirical copula of ``ranked`` on the full ``(n+1) x (n+1)`` grid, O(n^2)."""
    a, b = _pair(ranked, pairing)
    idx = np.arange(ranked.n + 1)
    counts = _copula_counts(a, b, idx, idx)
    counts.flags.writeable = False
    return CopulaGrid(ranked.n, counts, Pairing(pairing))


def _scaled_numerators(ranked, rows, cols):
    """Exact integers ``4 n (n+1)^2 N^(k)`` at ``rows x cols``, k = 1..4."""
    n = ranked.n
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    scale = 4 * (n + 1) ** 2
    # 2 (n+1) u_i = 2i + 1 and 2 (n+1) (1 - u_i) = 2(n - i) + 1
    ui, vj = 2 * rows + 1, 2 * cols + 1
    ui_rev, vj_rev = 2 * (n - rows) + 1, 2 * (n - cols) + 1

    def table(pairing, rr, cc):
        a, b = _pair(ranked, pairing)
        return _copula_counts(a, b, rr, cc)

    n1 = scale * table(Pairing.RS, rows, cols) - n * np.outer(ui, vj)
    n2 = -(scale * table(Pairing.RS_PRIME, rows, n - cols) - n * np.outer(ui, vj_rev))
    n3 = scale * table(Pairing.R_PRIME_S_PRIME, n - rows, n - cols) - n * np.outer(ui_rev, vj_rev)
    n4 = -(scale * table(Pairing.R_PRIME_S, n - rows, cols) - n * np.outer(ui_rev, vj))
    return n1, n2, n3, n4


@dataclass(frozen=True)
class QuadrantNumerators:
    """The four estimators ``N^(1..4)_n`` of ``C(u, v) - uv`` on the grid.

    ``scaled`` holds ``4 n (n+1)^2 N^(k)`` as exact int64 arrays; the float
    views ``n1 .. n4`` divide that factor out.
    """

    n: int
    scaled: tuple

    def _real(self, k):
        return self.scaled[k] / (4 * self.n * (self.n + 1) ** 2)

    @property
    def n1(self):
        return self._real(0)

    @property
    def n2(self):
        return self._real(1)

    @property
    def n3(self):
        return self._real(2)

    @property
    def n4(self):
        return self._real(3)


def quadrant_numerators(ranked):
    idx = np.arange(ranked.n + 1)
    return QuadrantNumerators(ranked.n, _scaled_numerators(ranked, idx, idx))


def _select_quadrants(n, rows, cols, n1, n2, n3, n4):
    low_u = (2 * np.asarray(rows) <= n)[:, None]  # u_i <= 1/2
    low_v = (2 * np.asarray(cols) <= n)[None, :]
    return np.where(low_u, np.where(low_v, n1, n2), np.where(low_v, n4, n3))


def symmetrized_numerator(quads, scaled=False):
    """Piece ``N*_n`` together from the quadrant numerators.

    ``N^(1)`` on ``u, v <= 1/2``, ``N^(2)`` on ``u <= 1/2 < v``, ``N^(3)`` on
    ``u, v > 1/2`` and ``N^(4)`` on ``v <= 1/2 < u``.  With ``scaled=True``
    the exact integer form (times ``4 n (n+1)^2``) is returned.
    """
    idx = np.arange(quads.n + 1)
    out = _select_quadrants(quads.n, idx, idx, *quads.scaled)
    if scaled:
        return out
    return out / (4 * quads.n * (quads.n + 1) ** 2)


def _weighted(n, rows, cols, nstar_scaled):
    # w(u_i, v_j) N*(u_i, v_j) = N_scaled / (n sqrt(a_i a_j)),
    # a_i = (2i+1)(2(n-i)+1) is symmetric under i -> n - i
    a_r = ((2 * rows + 1) * (2 * (n - rows) + 1)).astype(np.float64)
    a_c = ((2 * cols + 1) * (2 * (n - cols) + 1)).astype(np.float64)
    return nstar_scaled.astype(np.float64) / (n * np.sqrt(np.outer(a_r, a_c)))


@dataclass(frozen=True)
class QGrid:
    """``Q*_{n,s}`` on the full grid; ``s == 0`` is the unsmoothed estimator."""

    n: int
    s: int
    values: np.ndarray

    @property
    def u(self):
        return grid_coordinates(self.n)

    @property
    def z(self):
        """``sqrt(n) * Q``, approximately N(0, 1) pointwise under independence."""
        return math.sqrt(self.n) * self.values


def _q_star_block(ranked, rows, cols):
    n = ranked.n
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    nstar = _select_quadrants(n, rows, cols, *_scaled_numerators(ranked, rows, cols))
    return _weighted(n, rows, cols, nstar)


def _check_radius(n, s):
    if s < 0:
        raise ValueError("smoothing radius must be >= 0")
    if 2 * s + 1 > n + 1:
        raise SmoothingRadiusTooLarge(f"window 2s+1={2 * s + 1} exceeds grid size {n + 1}")


def _window_mean(block, row_ids, col_ids, rows, cols, s, n):
    """Mean of ``block`` over the ``(2s+1)^2`` window around each target cell.

    Window indices are clamped into ``0..n`` (edge cells are repeated) and the
    divisor is always ``(2s+1)^2``.  Rows are summed first, then columns, in a
    fixed order, so full-grid and point evaluations agree bitwise.
    """
    col_sums = np.zeros((len(rows), len(col_ids)))
    for dk in range(-s, s + 1):
        col_sums += block[np.searchsorted(row_ids, np.clip(rows + dk, 0, n))]
    acc = np.zeros((len(rows), len(cols)))
    for dl in range(-s, s + 1):
        acc += col_sums[:, np.searchsorted(col_ids, np.clip(cols + dl, 0, n))]
    return acc / (2 * s + 1) ** 2


def q_grid(ranked):
    """Symmetrized estimator ``Q*_n`` on the full grid."""
    idx = np.arange(ranked.n + 1)
    values = _q_star_block(ranked, idx, idx)
    values.flags.writeable = False
    return QGrid(ranked.n, 0, values)


def smooth_q_grid(grid, s):
    """Window-averaged ``Q*_{n,s}`` from an unsmoothed grid."""
    if grid.s != 0:
        raise ValueError("smoothing expects an unsmoothed (s=0) grid")
    n = grid.n
    _check_radius(n, s)
    if s == 0:
        return grid
    idx = np.arange(n + 1)
    values = _window_mean(grid.values, idx, idx, idx, idx, s, n)
    values.flags.writeable = False
    return QGrid(n, s, values)


def q_star_at(ranked, rows, cols, s=0):
    """``Q*_{n,s}`` on the sub-lattice ``rows x cols`` of grid indices.

    Only the rows and columns needed are counted, so this is usable for very
    large ``n`` where the full grid would not fit in memory.  Values equal the
    corresponding cells of ``q_grid`` / ``smooth_q_grid`` bitwise.
    """
    n = ranked.n
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
    if rows.size and (rows.min() < 0 or rows.max() > n) or cols.size and (cols.min() < 0 or cols.max() > n):
        raise IndexError("grid index outside 0..n")
    _check_radius(n, s)
    if s == 0:
        return _q_star_block(ranked, rows, cols)
    offsets = np.arange(-s, s + 1)
    row_ids = np.unique(np.clip(rows[:, None] + offsets, 0, n))
    col_ids = np.unique(np.clip(cols[:, None] + offsets, 0, n))
    block = _q_star_block(ranked, row_ids, col_ids)
    return _window_mean(block, row_ids, col_ids, rows, cols, s, n)


def weight(u, v):
    """``1 / sqrt(u v (1 - u) (1 - v))``."""
    return 1.0 / np.sqrt(u * v * (1 - u) * (1 - v))


def frechet_bounds(u, v):
    """Weighted Frechet-Hoeffding bounds ``(lower, upper)`` for q at ``(u, v)``."""
    if not (0 < u < 1 and 0 < v < 1):
        raise DomainError(f"({u}, {v}) is outside the open unit square")
    w = weight(u, v)
    return float(w * (max(u + v - 1, 0.0) - u * v)), float(w * (min(u, v) - u * v))


def write_grid_csv(grid, fh, include_z=True):
    """Write ``grid`` row-major as ``i,j,u,v,q[,z]`` with round-trip precision."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["i", "j", "u", "v", "q", "z"] if include_z else ["i", "j", "u", "v", "q"])
    u = grid.u
    root_n = math.sqrt(grid.n)
    for i in range(grid.n + 1):
        for j in range(grid.n + 1):
            q = float(grid.values[i, j])
            row = [i, j, repr(float(u[i])), repr(float(u[j])), repr(q)]
            if include_z:
                row.append(repr(root_n * q))
            writer.writerow(row)
