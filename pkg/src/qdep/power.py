"""Empirical power of every test under the simulation models."""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import rng as _rng
from .calibration import calibrate_min_p, get_pool, p_value, parallel_map
from .errors import InvalidParameter
from .models import ModelSpec, sample_with
from .ranks import TiePolicy, compute_ranks
from .stats import STATISTICS, StatConfig, compute_statistics

logger = logging.getLogger(__name__)

#: Columns of a power table: the five statistics plus the calibrated min-p test.
TESTS = STATISTICS + ("min_p",)


@dataclass(frozen=True)
class PowerStudyConfig:
    models: tuple = ("null",)
    n: int = 100
    alpha: float = 0.05
    reps: int = 1000
    pool_mc: int = 2000
    seed: int = _rng.DEFAULT_SEED
    stat_config: StatConfig = field(default_factory=StatConfig)

    def __post_init__(self):
        specs = tuple(m if isinstance(m, ModelSpec) else ModelSpec(m) for m in self.models)
        object.__setattr__(self, "models", specs)
        if not 0 < self.alpha < 1:
            raise InvalidParameter(f"alpha must be in (0, 1), got {self.alpha}")
        if self.reps < 100:
            raise InvalidParameter(f"reps must be >= 100, got {self.reps}")
        if self.pool_mc < 500:
            raise InvalidParameter(f"pool_mc must be >= 500, got {self.pool_mc}")
        if self.n < 3:
            raise InvalidParameter(f"n must be >= 3, got {self.n}")

    def as_dict(self):
        return {
            "models": [{"id": m.id, "params": dict(m.params)} for m in self.models],
            "n": self.n,
            "alpha": self.alpha,
            "reps": self.reps,
            "pool_mc": self.pool_mc,
            "seed": self.seed,
            "stat_config": asdict(self.stat_config),
        }


@dataclass(frozen=True)
class PowerCell:
    power: float
    se: float

    def __str__(self):
        return f"{self.power:.4f}±{self.se:.4f}"


@dataclass
class PowerTable:
    """Rejection fractions keyed by model id, then by test name."""

    cells: dict
    meta: dict

    def as_dict(self):
        return {
            "meta": self.meta,
            "cells": {m: {t: {"power": c.power, "se": c.se} for t, c in row.items()} for m, row in self.cells.items()},
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        cells = {
            m: {t: PowerCell(c["power"], c["se"]) for t, c in row.items()} for m, row in data["cells"].items()
        }
        return cls(cells, data["meta"])

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", *TESTS])
        for model, row in self.cells.items():
            writer.writerow([model, *(str(row[t]) for t in TESTS)])


def _cell(rejections, reps):
    p = rejections / reps
    return PowerCell(p, math.sqrt(p * (1 - p) / reps))


def _rejections(spec, config, pool, workers):
    def one_rep(rep):
        gen = _rng.stream(config.seed, _rng.POWER, spec.ordinal, rep)
        ranked = compute_ranks(sample_with(spec, config.n, gen), TiePolicy.ERROR)
        stats = compute_statistics(ranked, config.stat_config)
        flags = [p_value(getattr(stats, name), pool.sorted(name)) <= config.alpha for name in STATISTICS]
        flags.append(calibrate_min_p(stats.l_r6, stats.hhg, pool).p_of_m <= config.alpha)
        return flags

    flags = np.array(parallel_map(one_rep, range(config.reps), workers), dtype=np.int64)
    return flags.sum(axis=0)


def run_power_study(config, workers=None, pool=None, cache_dir=None, on_model=None):
    """Rejection fraction of every test under every model of ``config``.

    One null pool (size ``pool_mc``) is shared by all models.  Repetition
    ``rep`` of a model draws from ``rng.stream(seed, POWER, model_ordinal,
    rep)``, so a model's row does not depend on the other models requested
    or on ``workers``.  ``on_model(model_id, row)`` is called as each row
    completes.
    """
    if pool is None:
        pool = get_pool(config.n, config.pool_mc, config.seed, config.stat_config, workers, cache_dir)
    elif (pool.n, pool.config) != (config.n, config.stat_config) or pool.mc != config.pool_mc:
        raise InvalidParameter("supplied pool does not match the study configuration")
    cells = {}
    for spec in config.models:
        logger.info("power study: model %s (%d reps)", spec.id, config.reps)
        counts = _rejections(spec, config, pool, workers)
        row = {name: _cell(int(c), config.reps) for name, c in zip(TESTS, counts)}
        cells[spec.id] = row
        if on_model is not None:
            on_model(spec.id, row)
    meta = {
        "config": config.as_dict(),
        "pool": pool.meta(),
        "shared_pool": True,
        "generator": _rng.GENERATOR_ID,
        "version": __version__,
    }
    return PowerTable(cells, meta)
