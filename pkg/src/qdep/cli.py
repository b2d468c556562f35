"""Command-line interface: ``qdep {test,heatmap,simulate,power}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.
"""

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import rng as _rng
from .calibration import CACHE_ENV, default_workers, get_pool, run_test
from .copula_grid import q_grid, smooth_q_grid, write_grid_csv
from .errors import ParseError, QdepError, SampleTooSmall, TiesPresent
from .models import MODEL_IDS, ModelSpec, sample
from .power import TESTS, PowerStudyConfig, run_power_study
from .ranks import Sample, TiePolicy, compute_ranks
from .stats import StatConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4

PGM_CLIP = 6.0

logger = logging.getLogger("qdep")


def read_sample(path):
    """Parse a two-column numeric CSV; a non-numeric first line is a header."""
    x, y = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, found {len(row)}", lineno)
            try:
                a, b = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1 and not x:
                    continue
                raise ParseError(f"non-numeric value in {row!r}", lineno) from None
            x.append(a)
            y.append(b)
    if len(x) < 3:
        raise SampleTooSmall(f"{path}: need at least 3 observations, got {len(x)}")
    return Sample(np.array(x), np.array(y))


def pgm_bytes(z):
    """8-bit P5 image of a z grid: ``clamp(round(127.5 + 21.25 z), 0, 255)``.

    Image column ``c`` is grid index ``i = c``; image row ``r`` is grid
    index ``j = n - r`` (v increases upwards).  Rounding is half-up.
    """
    z = np.asarray(z)
    pix = np.clip(np.floor(127.5 + (255.0 / (2 * PGM_CLIP)) * z + 0.5), 0, 255).astype(np.uint8)
    image = pix.T[::-1]
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode()
    return header + image.tobytes()


def _ranked(args):
    sample_ = read_sample(args.input)
    try:
        return compute_ranks(sample_, TiePolicy(args.tie_policy), args.seed)
    except TiesPresent as exc:
        raise TiesPresent(f"{exc}; rerun with --tie-policy=random-break") from None


def _stat_config(args):
    return StatConfig(r=args.r, epsilon=args.epsilon, kappa=args.kappa, s=args.s)


def _write_text(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(output).write_text(text if text.endswith("\n") else text + "\n")


def cmd_test(args):
    ranked = _ranked(args)
    config = _stat_config(args)
    pool = get_pool(ranked.n, args.mc, args.seed, config, args.workers, args.pool_cache)
    meta = {"input": str(args.input), "tie_policy": args.tie_policy}
    report = run_test(ranked, pool, config, meta)
    _write_text(report.to_json(), args.output)
    return report


def cmd_heatmap(args):
    ranked = _ranked(args)
    base = q_grid(ranked)
    grids = [base] if args.s == 0 else [base, smooth_q_grid(base, args.s)]
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for grid in grids:
        path = out / f"q_s{grid.s}.csv"
        with open(path, "w", newline="") as fh:
            write_grid_csv(grid, fh)
        written.append(path)
        if args.pgm:
            pgm = out / f"q_s{grid.s}.pgm"
            pgm.write_bytes(pgm_bytes(grid.z))
            written.append(pgm)
    for path in written:
        logger.info("wrote %s", path)
    return written


def cmd_simulate(args):
    data = sample(ModelSpec(args.model), args.n, args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y"])
    for a, b in zip(data.x, data.y):
        writer.writerow([repr(float(a)), repr(float(b))])
    _write_text(buf.getvalue(), args.output)
    return data


def cmd_power(args):
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    config = PowerStudyConfig(
        models=tuple(models),
        n=args.n,
        alpha=args.alpha,
        reps=args.reps,
        pool_mc=args.pool_mc,
        seed=args.seed,
        stat_config=_stat_config(args),
    )
    csv_fh = open(args.output, "w", newline="") if args.output not in (None, "-") else sys.stdout
    writer = csv.writer(csv_fh, lineterminator="\n")
    writer.writerow(["model", *TESTS])
    csv_fh.flush()

    def flush_row(model_id, row):
        writer.writerow([model_id, *(str(row[t]) for t in TESTS)])
        csv_fh.flush()
        logger.info("%s: %s", model_id, ", ".join(f"{t}={row[t]}" for t in TESTS))

    try:
        table = run_power_study(config, args.workers, cache_dir=args.pool_cache, on_model=flush_row)
    finally:
        if csv_fh is not sys.stdout:
            csv_fh.close()
    if args.json:
        Path(args.json).write_text(table.to_json() + "\n")
    return table


def _add_stat_flags(p):
    defaults = StatConfig()
    p.add_argument("--r", type=int, default=defaults.r, help="L_r exponent for the min-p ingredient")
    p.add_argument("--epsilon", type=float, default=defaults.epsilon, help="corner trim of the L_r region")
    p.add_argument("--kappa", type=float, default=defaults.kappa, help="margin of the supremum region")
    p.add_argument("--s", type=int, default=defaults.s, help="smoothing radius (grid cells)")


def _add_common(p, pool=True):
    p.add_argument("--seed", type=int, default=_rng.DEFAULT_SEED, help="root seed (default %(default)s)")
    if pool:
        p.add_argument("--workers", type=int, default=default_workers(), help="threads; never changes results")
        p.add_argument("--pool-cache", default=None, help=f"null pool cache directory (default ${CACHE_ENV})")


def build_parser():
    parser = argparse.ArgumentParser(prog="qdep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="independence tests with Monte-Carlo p-values")
    p.add_argument("input", help="two-column CSV")
    p.add_argument("--mc", type=int, default=10_000, help="null pool size (default %(default)s)")
    p.add_argument("--tie-policy", choices=[t.value for t in TiePolicy], default="error")
    p.add_argument("-o", "--output", default=None, help="JSON report path (default stdout)")
    _add_stat_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("heatmap", help="export the estimator grid as CSV (and PGM)")
    p.add_argument("input", help="two-column CSV")
    p.add_argument("--s", type=int, default=StatConfig().s, help="smoothing radius (default %(default)s)")
    p.add_argument("--tie-policy", choices=[t.value for t in TiePolicy], default="error")
    p.add_argument("--output-dir", default=".", help="directory for q_s<s>.csv files")
    p.add_argument("--pgm", action="store_true", help="also write 8-bit PGM images")
    _add_common(p, pool=False)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("simulate", help="draw a sample from a simulation model")
    p.add_argument("model", help=f"one of {', '.join(MODEL_IDS)}")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    _add_common(p, pool=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("power", help="empirical power study")
    p.add_argument("--models", default="null", help="comma-separated model ids")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--pool-mc", type=int, default=2000)
    p.add_argument("-o", "--output", default=None, help="CSV path, written row by row (default stdout)")
    p.add_argument("--json", default=None, help="also write the full table as JSON")
    _add_stat_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_power)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        print("qdep: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args)
    except (QdepError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"qdep: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"qdep: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
