import itertools
import math

import numpy as np
import pytest

from oracles import brute_hhg, l_statistic_oracle
from qdep.copula_grid import QGrid, q_grid, smooth_q_grid
from qdep.errors import DegenerateRegion, DomainError, SampleTooSmall
from qdep.ranks import RankedSample, Sample, compute_ranks
from qdep.stats import (
    StatConfig,
    compute_statistics,
    d_statistic,
    hhg_statistic,
    l_statistic,
    min_p,
    trimmed_region_mask,
)


def random_ranked(rng, n):
    return RankedSample(rng.permutation(n) + 1, rng.permutation(n) + 1)


def const_grid(n, c, s=0):
    return QGrid(n, s, np.full((n + 1, n + 1), c))


def test_l_statistic_constants():
    assert l_statistic(const_grid(10, 0.0), 2, 0.01) == 0.0
    for r in (1, 2, 6):
        assert l_statistic(const_grid(10, 0.3), r, 0.0) == pytest.approx(math.sqrt(10) * 0.3, rel=1e-15)


def test_l_statistic_small_grid_summation():
    grid = q_grid(RankedSample([1, 2], [2, 1]))
    v = grid.values
    direct = math.sqrt(2) * (sum(v[i, j] ** 2 for i in range(3) for j in range(3)) / 9) ** 0.5
    assert l_statistic(grid, 2, 0.01) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("n, r, eps", [(12, 2, 0.01), (12, 6, 0.1), (40, 3, 0.05), (40, 6, 0.2)])
def test_l_statistic_matches_oracle(n, r, eps):
    grid = q_grid(random_ranked(np.random.default_rng(n * r), n))
    assert l_statistic(grid, r, eps) == pytest.approx(l_statistic_oracle(grid.values, r, eps), rel=1e-12)


def test_trimmed_region_only_removes_corners():
    mask = trimmed_region_mask(9, 0.15)
    # u_0 = 0.05, u_1 = 0.15 (on the boundary, kept), u_9 = 0.95
    assert not mask[0, 0] and not mask[0, 9] and not mask[9, 0] and not mask[9, 9]
    assert mask[0, 5] and mask[5, 0] and mask[1, 1]
    assert mask.sum() == 100 - 4


def test_l_statistic_errors():
    with pytest.raises(ValueError):
        l_statistic(const_grid(5, 1.0, s=1), 2, 0.01)
    with pytest.raises(DegenerateRegion):
        l_statistic(const_grid(1, 1.0), 2, 0.49)
    with pytest.raises(DomainError):
        l_statistic(const_grid(5, 1.0), 2, 0.5)


def test_d_statistic_spike():
    n = 20
    values = np.zeros((n + 1, n + 1))
    assert d_statistic(QGrid(n, 0, values), 0.025) == 0.0
    values[7, 12] = -0.8
    assert d_statistic(QGrid(n, 0, values), 0.025) == pytest.approx(math.sqrt(n) * 0.8, rel=1e-15)
    values[0, 0] = 5.0  # u_0 = 0.5/21 < 0.025
    assert d_statistic(QGrid(n, 0, values), 0.025) == pytest.approx(math.sqrt(n) * 0.8, rel=1e-15)


def test_d_statistic_degenerate():
    with pytest.raises(DegenerateRegion):
        d_statistic(const_grid(1, 1.0), 0.3)


def test_smoothing_contraction_example():
    rng = np.random.default_rng(0)
    n, s, kappa = 100, 4, 0.2
    grid = q_grid(random_ranked(rng, n))
    assert d_statistic(smooth_q_grid(grid, s), kappa) <= d_statistic(grid, kappa - s / (n + 1)) * (1 + 1e-12)


def test_hhg_n3_is_zero():
    # one remaining point per table: a row margin is always empty
    for r in itertools.permutations([1, 2, 3]):
        for s in itertools.permutations([1, 2, 3]):
            rk = RankedSample(r, s)
            assert hhg_statistic(rk) == brute_hhg(list(r), list(s)) == 0.0


def test_hhg_matches_oracle_exhaustively_n4():
    for s in itertools.permutations([1, 2, 3, 4]):
        rk = RankedSample([1, 2, 3, 4], s)
        assert hhg_statistic(rk) == pytest.approx(brute_hhg([1, 2, 3, 4], list(s)), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("n", [6, 11, 25])
def test_hhg_matches_oracle_random(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        rk = random_ranked(rng, n)
        assert hhg_statistic(rk) == pytest.approx(brute_hhg(rk.r.tolist(), rk.s.tolist()), rel=1e-12)


def test_hhg_comonotone_large():
    n = 15
    rk = RankedSample(np.arange(1, n + 1), np.arange(1, n + 1))
    value = hhg_statistic(rk)
    assert value == pytest.approx(brute_hhg(list(range(1, n + 1)), list(range(1, n + 1))), rel=1e-12)
    rng = np.random.default_rng(1)
    assert value > max(hhg_statistic(random_ranked(rng, n)) for _ in range(20))


def test_hhg_permutation_invariant_and_small_sample():
    rng = np.random.default_rng(2)
    rk = random_ranked(rng, 20)
    order = rng.permutation(20)
    shuffled = RankedSample(rk.r[order], rk.s[order])
    assert hhg_statistic(shuffled) == pytest.approx(hhg_statistic(rk), rel=1e-13)
    with pytest.raises(SampleTooSmall):
        hhg_statistic(RankedSample([1, 2], [2, 1]))


@pytest.mark.parametrize("p1, p2, expected", [(0.03, 0.4, 0.03), (1.0, 1.0, 1.0), (0.2, 0.2, 0.2)])
def test_min_p(p1, p2, expected):
    assert min_p(p1, p2) == expected


def test_min_p_domain():
    with pytest.raises(DomainError):
        min_p(-0.1, 0.5)
    with pytest.raises(DomainError):
        min_p(0.1, 1.5)


def test_stat_config_defaults_and_validation():
    cfg = StatConfig()
    assert (cfg.r, cfg.epsilon, cfg.kappa, cfg.s) == (6, 0.01, 0.025, 4)
    for bad in ({"r": 0}, {"epsilon": 0.5}, {"kappa": 0.0}, {"s": -1}):
        with pytest.raises(DomainError):
            StatConfig(**bad)
    assert StatConfig().digest() == StatConfig().digest() != StatConfig(r=2).digest()


def test_compute_statistics_rank_invariant():
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=50), rng.normal(size=50)
    a = compute_statistics(compute_ranks(Sample(x, y)))
    b = compute_statistics(compute_ranks(Sample(np.exp(x), y**3)))
    assert a == b
    assert all(v >= 0 and math.isfinite(v) for v in a.as_dict().values())
