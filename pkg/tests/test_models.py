import math

import numpy as np
import pytest
from scipy import stats as sps

from qdep.copula_grid import frechet_bounds, q_star_at
from qdep.errors import DomainError, InvalidParameter, UnknownModel
from qdep.models import (
    MODEL_IDS,
    AnalyticCopula,
    Family,
    ModelSpec,
    analytic_q,
    gumbel_exponential_conditional_cdf,
    mardia_mixture_weights,
    positive_stable,
    sample,
)
from qdep.ranks import compute_ranks

FAMILIES = [
    AnalyticCopula(Family.INDEPENDENCE),
    AnalyticCopula(Family.CLAYTON, 0.5),
    AnalyticCopula(Family.CLAYTON, 4.0),
    AnalyticCopula(Family.MARDIA, -0.55),
    AnalyticCopula(Family.FGM, 0.8),
    AnalyticCopula(Family.GUMBEL_EXPONENTIAL, 0.5),
]


@pytest.mark.parametrize("mid", MODEL_IDS)
def test_every_model_samples_deterministically(mid):
    a = sample(mid, 50, 123)
    b = sample(ModelSpec(mid), 50, 123)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert a.n == 50 and np.all(np.isfinite(a.x)) and np.all(np.isfinite(a.y))
    c = sample(mid, 50, 124)
    assert not np.array_equal(a.y, c.y)
    compute_ranks(a)  # continuous draws, no ties


def test_sr1_structure():
    s = sample("sr1", 1000, 4)
    assert np.all((s.x >= 0) & (s.x <= 1))
    resid = s.y - 2 - s.x
    assert abs(resid.mean()) < 0.1 and abs(resid.var() - 1) < 0.15


def test_sr3_step_structure():
    s = sample("sr3", 2000, 5)
    assert np.all((s.x >= 0) & (s.x <= 1))
    left = s.y[s.x <= 0.5].mean()
    right = s.y[s.x > 0.5].mean()
    assert abs(left - 1) < 0.15 and abs(right) < 0.15


def test_marginal_sanity():
    sr1 = sample("sr1", 10**5, 1)
    assert sps.kstest(sr1.x, "uniform").statistic < 0.01
    bm1 = sample("bm1", 10**5, 1)
    assert sps.kstest(bm1.x, "norm").statistic < 0.01
    assert sps.kstest(bm1.y, "norm").statistic < 0.01


def test_bm1_correlation_and_positive_diagonal():
    s = sample("bm1", 10**4, 2)
    assert abs(np.corrcoef(s.x, s.y)[0, 1] - 0.3) < 0.03
    n = 10**4
    idx = np.arange(n + 1)
    u = (idx + 0.5) / (n + 1)
    diag = idx[(u >= 0.2) & (u <= 0.8)][::50]
    q = q_star_at(compute_ranks(s), diag, diag)
    assert np.all(np.diag(q) > 0)


def test_copula_models_have_expected_dependence():
    assert abs(sps.kendalltau(*_xy("bm7", 20000)).statistic - 0.2) < 0.02  # theta / (theta + 2)
    mardia = _xy("bm5", 20000)
    # Spearman rho of the Mardia mixture is w_M - w_W = theta^3
    assert abs(sps.spearmanr(*mardia).statistic - (-0.55) ** 3) < 0.03
    # Gumbel bivariate exponential: Pearson correlation is negative for theta > 0
    assert np.corrcoef(*_xy("bm6", 20000))[0, 1] < -0.05


def _xy(mid, n, seed=3):
    s = sample(mid, n, seed)
    return s.x, s.y


def test_heavy_tailed_models():
    x, y = _xy("bm8", 20000)
    assert sps.kstest(x, "cauchy").statistic < 0.015
    x, y = _xy("bm9", 20000)
    assert sps.kstest(y, sps.t(2).cdf).statistic < 0.015
    x, y = _xy("bm11", 5000)
    # with unit-variance Gaussian parts each coordinate is S_alpha(1/sqrt(2), 0, 0)
    assert sps.kstest(x * math.sqrt(2), sps.levy_stable(1.5, 0.0).cdf).statistic < 0.025


def test_skew_t_margins_are_skewed_in_parameter_direction():
    x, y = _xy("bm10", 50000)
    assert np.median(y) > 0 and np.mean(y) > np.median(y) - 1
    assert sps.spearmanr(x, y).statistic < 0


def test_positive_stable_matches_reference():
    gen = np.random.default_rng(7)
    draws = positive_stable(gen, 5000, 0.75)
    assert np.all(draws > 0)
    assert sps.kstest(draws, sps.levy_stable(0.75, 1.0).cdf).statistic < 0.025


def test_gumbel_conditional_cdf_limits():
    x = np.array([0.0, 0.3, 2.0])
    assert np.all(gumbel_exponential_conditional_cdf(0.0, x, 0.5) == 0)
    assert np.allclose(gumbel_exponential_conditional_cdf(60.0, x, 0.5), 1.0)
    # theta = 0 gives an independent exponential
    assert gumbel_exponential_conditional_cdf(1.0, 0.7, 0.0) == pytest.approx(1 - math.exp(-1))


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, (0.0, 1.0, 0.0)), (-0.55, (0.0680625, 0.6975, 0.2344375)), (1.0, (1.0, 0.0, 0.0))],
)
def test_mardia_weights(theta, expected):
    w = mardia_mixture_weights(theta)
    assert w == pytest.approx(expected, rel=1e-12, abs=1e-15)
    assert abs(sum(w) - 1) <= np.spacing(1.0)


def test_mardia_weights_sum_to_one_everywhere():
    for theta in np.linspace(-1, 1, 201):
        w = mardia_mixture_weights(theta)
        assert min(w) >= 0 and abs(sum(w) - 1) <= 2 * np.spacing(1.0)
    with pytest.raises(InvalidParameter):
        mardia_mixture_weights(1.5)


def test_independence_q_is_zero():
    u = np.linspace(0.01, 0.99, 41)
    uu, vv = np.meshgrid(u, u)
    assert np.all(analytic_q(AnalyticCopula(Family.INDEPENDENCE), uu, vv) == 0)


def test_clayton_at_centre():
    c = AnalyticCopula(Family.CLAYTON, 0.5)
    closed = (2 * math.sqrt(2) - 1) ** -2
    assert float(c.cdf(0.5, 0.5)) == pytest.approx(closed, rel=1e-14)
    assert analytic_q(c, 0.5, 0.5) == pytest.approx(4 * (closed - 0.25), rel=1e-14)
    assert analytic_q(c, 0.5, 0.5) == pytest.approx(0.19648, abs=1e-5)


@pytest.mark.slow
def test_clayton_against_simulation():
    # numeric copula from 10^7 draws of the Clayton sampler
    s = sample(ModelSpec("bm7"), 10**7, 99)
    emp = np.mean((s.x <= 0.5) & (s.y <= 0.5))
    assert abs(4 * (emp - 0.25) - analytic_q(AnalyticCopula(Family.CLAYTON, 0.5), 0.5, 0.5)) < 1e-3


@pytest.mark.parametrize("cop", FAMILIES, ids=lambda c: f"{c.family.value}-{c.theta}")
def test_boundary_conditions(cop):
    t = np.linspace(0, 1, 51)
    assert np.allclose(cop.cdf(t, 0.0), 0, atol=1e-15)
    assert np.allclose(cop.cdf(0.0, t), 0, atol=1e-15)
    assert np.allclose(cop.cdf(t, 1.0), t, atol=1e-12)
    assert np.allclose(cop.cdf(1.0, t), t, atol=1e-12)


@pytest.mark.parametrize("cop", FAMILIES, ids=lambda c: f"{c.family.value}-{c.theta}")
def test_q_within_frechet_bounds(cop):
    grid = np.concatenate([[0.001, 0.005], np.linspace(0.01, 0.99, 60), [0.995, 0.999]])
    for u in grid:
        for v in grid[::3]:
            lo, hi = frechet_bounds(u, v)
            q = analytic_q(cop, u, v)
            assert lo - 1e-12 <= q <= hi + 1e-12


def test_analytic_q_domain():
    with pytest.raises(DomainError):
        analytic_q(AnalyticCopula(Family.FGM, 0.3), 0.0, 0.5)


def test_model_validation():
    with pytest.raises(UnknownModel):
        ModelSpec("bm99")
    with pytest.raises(InvalidParameter):
        ModelSpec("bm7", {"theta": -1.0})
    with pytest.raises(InvalidParameter):
        ModelSpec("bm5", {"theta": 2.0})
    with pytest.raises(InvalidParameter):
        ModelSpec("bm1", {"nonsense": 1.0})
    with pytest.raises(InvalidParameter):
        AnalyticCopula(Family.CLAYTON, 0.0)
    with pytest.raises(InvalidParameter):
        sample("sr1", 1, 0)
    assert ModelSpec("BM7").id == "bm7"
    assert ModelSpec("bm7", {"theta": 2}).params["theta"] == 2.0
