"""Monte-Carlo null pools, p-values and the calibrated min-p test."""

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import __version__
from . import rng as _rng
from .errors import EmptyPool, InvalidPoolSize, MismatchedPool, SampleTooSmall
from .ranks import RankedSample, Sample, TiePolicy, compute_ranks
from .stats import STATISTICS, StatConfig, TestStatistics, compute_statistics, min_p

logger = logging.getLogger(__name__)

CACHE_ENV = "QDEP_POOL_CACHE"
NULL_KINDS = ("permutation", "uniform")
MIN_P_INGREDIENTS = ("l_r6", "hhg")


def default_workers():
    return os.cpu_count() or 1


def null_ranked_sample(n, gen, kind="permutation"):
    """One draw from the independence null, already ranked.

    ``permutation`` pairs identity x-ranks with a uniform random permutation;
    ``uniform`` ranks two independent U(0,1) samples.  Both give the same law
    for rank statistics.
    """
    if kind == "permutation":
        return RankedSample(np.arange(1, n + 1), gen.permutation(n) + 1)
    if kind == "uniform":
        return compute_ranks(Sample(gen.random(n), gen.random(n)), TiePolicy.ERROR)
    raise ValueError(f"unknown null kind {kind!r}")


def parallel_map(func, items, workers):
    """Ordered map; results never depend on ``workers``."""
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


@dataclass(frozen=True)
class NullPool:
    """Null statistic values, one row per replicate in replicate order.

    ``values[m, k]`` is statistic ``STATISTICS[k]`` of replicate ``m``.
    """

    n: int
    mc: int
    seed: int
    config: StatConfig
    values: np.ndarray
    null: str = "permutation"
    _sorted: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.values.shape != (self.mc, len(STATISTICS)):
            raise ValueError(f"pool values have shape {self.values.shape}, expected ({self.mc}, {len(STATISTICS)})")
        self.values.flags.writeable = False

    def column(self, name):
        return self.values[:, STATISTICS.index(name)]

    def sorted(self, name):
        """Ascending null values of one statistic."""
        if name not in self._sorted:
            arr = np.sort(self.column(name))
            arr.flags.writeable = False
            self._sorted[name] = arr
        return self._sorted[name]

    def min_p_null(self):
        """Sorted within-pool min-p values ``M_j`` (replicate j included in its own pool)."""
        if "min_p" not in self._sorted:
            l_name, h_name = MIN_P_INGREDIENTS
            p1 = p_values(self.column(l_name), self.sorted(l_name))
            p2 = p_values(self.column(h_name), self.sorted(h_name))
            arr = np.sort(np.minimum(p1, p2))
            arr.flags.writeable = False
            self._sorted["min_p"] = arr
        return self._sorted["min_p"]

    def meta(self):
        return {
            "n": self.n,
            "mc": self.mc,
            "seed": self.seed,
            "null": self.null,
            "config": self.config.as_dict(),
            "generator": _rng.GENERATOR_ID,
        }


def build_null_pool(n, mc, seed, config=StatConfig(), workers=None, null="permutation"):
    """Simulate ``mc`` null replicates of all statistics.

    Replicate ``m`` draws from ``rng.stream(seed, POOL, m)``, so the pool is
    identical for any worker count.
    """
    if mc < 100:
        raise InvalidPoolSize(f"pool size must be >= 100, got {mc}")
    if n < 3:
        raise SampleTooSmall(f"null pools need n >= 3, got {n}")
    if null not in NULL_KINDS:
        raise ValueError(f"unknown null kind {null!r}")

    def replicate(m):
        gen = _rng.stream(seed, _rng.POOL, m)
        return compute_statistics(null_ranked_sample(n, gen, null), config).as_array()

    rows = parallel_map(replicate, range(mc), workers)
    return NullPool(n, mc, int(seed), config, np.vstack(rows), null)


def p_values(observed, pool):
    """Vectorized ``p_value``: fraction of ``pool`` strictly above each observation."""
    pool = np.asarray(pool)
    if pool.size == 0:
        raise EmptyPool("null pool is empty")
    above = pool.size - np.searchsorted(pool, observed, side="right")
    return above / pool.size


def p_value(observed, pool):
    """``(1/MC) #{i : observed < pool_i}`` for an ascending ``pool``."""
    return float(p_values(observed, pool))


class MinPResult(NamedTuple):
    p1: float
    p2: float
    m: float
    p_of_m: float


def calibrate_min_p(observed_L, observed_H, pool, n=None, config=None):
    """Ingredient p-values, their minimum and its calibrated p-value.

    ``p1`` is for the L_r statistic, ``p2`` for HHG.  The p-value of ``m`` is
    the fraction of replicates whose own min-p (against the full pool) is at
    most ``m``.
    """
    if pool.mc == 0:
        raise EmptyPool("null pool is empty")
    if n is not None and n != pool.n:
        raise MismatchedPool(f"pool was built for n={pool.n}, sample has n={n}")
    if config is not None and config != pool.config:
        raise MismatchedPool("pool was built with a different statistic configuration")
    l_name, h_name = MIN_P_INGREDIENTS
    p1 = p_value(observed_L, pool.sorted(l_name))
    p2 = p_value(observed_H, pool.sorted(h_name))
    m = min_p(p1, p2)
    null_m = pool.min_p_null()
    p_of_m = float(np.searchsorted(null_m, m, side="right") / pool.mc)
    return MinPResult(p1, p2, m, p_of_m)


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    statistics: TestStatistics
    p_values: dict
    min_p: MinPResult
    meta: dict

    def as_dict(self):
        return {
            "meta": self.meta,
            "statistics": self.statistics.as_dict(),
            "p_values": dict(self.p_values),
            "min_p": {
                "statistic": self.min_p.m,
                "p_value": self.min_p.p_of_m,
                "p_l": self.min_p.p1,
                "p_hhg": self.min_p.p2,
                "ingredients": list(MIN_P_INGREDIENTS),
            },
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def run_test(ranked, pool, config=None, meta=None):
    """Compute all statistics for ``ranked`` and calibrate them against ``pool``."""
    config = pool.config if config is None else config
    if ranked.n != pool.n:
        raise MismatchedPool(f"pool was built for n={pool.n}, sample has n={ranked.n}")
    if config != pool.config:
        raise MismatchedPool("pool was built with a different statistic configuration")
    stats = compute_statistics(ranked, config)
    pv = {name: p_value(getattr(stats, name), pool.sorted(name)) for name in STATISTICS}
    mp = calibrate_min_p(stats.l_r6, stats.hhg, pool)
    full_meta = pool.meta()
    full_meta["version"] = __version__
    full_meta.update(meta or {})
    return TestReport(stats, pv, mp, full_meta)


# -- pool cache ---------------------------------------------------------------


def cache_path(cache_dir, n, mc, seed, config, null="permutation"):
    name = f"pool_n{n}_mc{mc}_seed{seed}_{null}_{config.digest()}.csv"
    return Path(cache_dir) / name


def save_pool(pool, path):
    """Write ``pool`` as a metadata comment line, a header and one row per replicate."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        fh.write("# " + json.dumps(pool.meta(), sort_keys=True) + "\n")
        fh.write(",".join(STATISTICS) + "\n")
        for row in pool.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    os.replace(tmp, path)


def load_pool(path):
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing pool metadata line")
        meta = json.loads(first[2:])
        header = fh.readline().strip().split(",")
        if tuple(header) != STATISTICS:
            raise ValueError(f"{path}: unexpected columns {header}")
        values = np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])
    if meta.get("generator") != _rng.GENERATOR_ID:
        raise ValueError(f"{path}: pool was generated with {meta.get('generator')!r}")
    config = StatConfig(**meta["config"])
    return NullPool(meta["n"], meta["mc"], meta["seed"], config, values.reshape(-1, len(STATISTICS)), meta["null"])


def get_pool(n, mc, seed, config=StatConfig(), workers=None, cache_dir=None, null="permutation"):
    """Load the pool from ``cache_dir`` (or ``$QDEP_POOL_CACHE``) or build and store it."""
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV)
    if not cache_dir:
        return build_null_pool(n, mc, seed, config, workers, null)
    path = cache_path(cache_dir, n, mc, seed, config, null)
    if path.exists():
        pool = load_pool(path)
        if (pool.n, pool.mc, pool.seed, pool.config, pool.null) == (n, mc, seed, config, null):
            logger.info("loaded null pool from %s", path)
            return pool
        logger.warning("ignoring stale pool cache %s", path)
    pool = build_null_pool(n, mc, seed, config, workers, null)
    save_pool(pool, path)
    logger.info("saved null pool to %s", path)
    return pool
