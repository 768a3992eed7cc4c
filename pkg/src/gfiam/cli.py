"""Command-line interface.

Every option can also be set through an environment variable named
``GFIAM_<OPTION>`` (upper case, dashes as underscores), e.g. ``GFIAM_SEED``.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import DataError, GFIError, NumericalError, SchemaMismatchError
from .fiducial import PenaltyConfig
from .grouplasso import PathConfig
from .inference import intervals_from_draws, mean_draws, prediction_draws
from .io import ingest_csv, read_table, variance_screen, write_csv, write_rows
from .pipeline import fit_gfi, leave_one_out
from .report import dump, load_state, results_document, state_document
from .simulate import SimSettings, coverage_experiment, gen_dataset, selection_experiment
from .splines import SplineConfig
from .stats import RngStream

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
ENV_PREFIX = "GFIAM_"

log = logging.getLogger("gfiam")


def opt(*decls, **kw):
    """click.option with an environment-variable fallback under ``GFIAM_``."""
    long = next(d for d in decls if d.startswith("--"))
    kw.setdefault("envvar", ENV_PREFIX + long[2:].upper().replace("-", "_"))
    kw.setdefault("show_envvar", True)
    return click.option(*decls, **kw)


def spline_options(f):
    f = opt("--knots", "K", type=click.IntRange(min=1), default=6, show_default=True,
            help="Interior knots per covariate.")(f)
    f = opt("--degree", "degree", type=click.IntRange(min=2), default=3, show_default=True,
            help="Spline degree.")(f)
    return f


def fit_options(f):
    f = opt("--grid-ratio", type=click.FloatRange(0, 1, min_open=True, max_open=True),
            default=1e-3, show_default=True, help="Smallest penalty as a fraction of lambda_max.")(f)
    f = opt("--grid-size", type=click.IntRange(min=2), default=50, show_default=True,
            help="Penalty grid points per solution path.")(f)
    f = opt("--bootstraps", type=click.IntRange(min=0), default=10, show_default=True,
            help="Bootstrap resamples for the candidate set.")(f)
    f = opt("--q", "q", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=None,
            help="Model-size penalty base; default 0.2/p.")(f)
    f = opt("--draws", type=click.IntRange(min=1), default=10000, show_default=True,
            help="Fiducial draws.")(f)
    return f


def level_option(f):
    return opt("--level", "levels", type=click.FloatRange(0, 1, min_open=True, max_open=True),
               multiple=True, default=(0.95,), show_default=True,
               help="Confidence level; repeat for several.")(f)


def seed_option(f):
    return opt("--seed", type=click.IntRange(min=0), default=0, show_default=True)(f)


def threads_option(f):
    return opt("--threads", type=click.IntRange(min=1), default=1, show_default=True,
               help="Worker cap.")(f)


@click.group()
@click.version_option(__version__, prog_name="gfiam")
@click.option("-v", "--verbose", count=True)
def cli(verbose):
    """Fiducial inference for sparse additive models."""
    logging.basicConfig(
        level=logging.WARNING - 10 * min(verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _limit_threads(threads):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return
    threadpool_limits(threads)


@cli.command()
@opt("--input", "input_path", type=click.Path(dir_okay=False), required=True, help="Data CSV.")
@opt("--response", default=None, help="Response column name; default is the first column.")
@spline_options
@fit_options
@level_option
@seed_option
@opt("--screen-top", type=click.IntRange(min=1), default=None,
     help="Keep only the covariates with the largest sample variance.")
@opt("--top-k", type=click.IntRange(min=1), default=10, show_default=True)
@threads_option
@opt("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Output directory.")
def fit(input_path, response, degree, K, q, draws, levels, seed, screen_top, bootstraps,
        grid_size, grid_ratio, top_k, threads, out_dir):
    """Fit the model and write results, fitted state and tables."""
    _limit_threads(threads)
    timings = {}
    t0 = time.perf_counter()
    data = ingest_csv(input_path, response)
    screen = None
    if screen_top is not None:
        data, screen = variance_screen(data, screen_top)
    timings["ingest"] = time.perf_counter() - t0

    spline = SplineConfig(degree, K)
    path = PathConfig(grid_size=grid_size, grid_ratio=grid_ratio, bootstrap_B=bootstraps)
    penalty = PenaltyConfig(q) if q is not None else PenaltyConfig.default(data.p)
    t0 = time.perf_counter()
    result = fit_gfi(data, spline, path, penalty, draws, RngStream(seed))
    timings["fit"] = time.perf_counter() - t0

    config = {
        "input": str(input_path), "response": data.response_name, "degree": degree, "knots": K,
        "q": penalty.q, "draws": draws, "levels": list(levels), "seed": seed,
        "screen_top": screen_top, "bootstraps": bootstraps, "grid_size": grid_size,
        "grid_ratio": grid_ratio,
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = results_document(result, levels=list(levels), seed=seed, top_k=top_k,
                           screen=screen, config=config)
    dump(doc, out / "results.json")
    dump(state_document(result), out / "state.json")
    write_rows(out / "models.csv", ["rank", "predictors", "prob", "log_R"],
               [[m["rank"], "+".join(m["predictors"]) or "(empty)", m["prob"], m["log_R"]]
                for m in doc["models"]])
    write_rows(out / "sigma.csv", ["level", "point", "lower", "upper"],
               [[iv["level"], doc["sigma"]["point"], iv["lower"], iv["upper"]]
                for iv in doc["sigma"]["intervals"]])
    band_rows = []
    for b in doc["bands"]:
        for g, lo, md, hi in zip(b["grid"], b["lower"], b["median"], b["upper"]):
            band_rows.append([b["predictor"], b["level"], g, lo, md, hi])
    write_rows(out / "bands.csv", ["predictor", "level", "x", "lower", "median", "upper"], band_rows)
    if screen:
        write_rows(out / "screen.csv", ["rank", "name", "index", "variance"],
                   [[s.rank, s.name, s.index, s.variance] for s in screen])
    with open(out / "timings.json", "w", encoding="utf-8") as fh:
        json.dump(timings, fh, indent=1)
        fh.write("\n")

    top = doc["models"][0]
    click.echo(f"top model {'+'.join(top['predictors']) or '(empty)'} prob {top['prob']:.4f}")
    for iv in doc["sigma"]["intervals"]:
        click.echo(f"sigma {doc['sigma']['point']:.4f}  {iv['level']:.0%} CI "
                   f"({iv['lower']:.4f}, {iv['upper']:.4f})")


@cli.command()
@opt("--state", "state_path", type=click.Path(dir_okay=False), required=True,
     help="state.json written by `fit`.")
@opt("--input", "input_path", type=click.Path(dir_okay=False), required=True,
     help="CSV of new points; must contain every fitted covariate by name.")
@level_option
@seed_option
@opt("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def predict(state_path, input_path, levels, seed, out_path):
    """Mean confidence intervals and prediction intervals at new points."""
    state = load_state(state_path)
    header, values = read_table(input_path)
    missing = [n for n in state.names if n not in header]
    if missing:
        raise SchemaMismatchError(f"new points lack fitted covariate(s) {missing[:5]}")
    X = values[:, [header.index(n) for n in state.names]]
    mu = mean_draws(state.sample, X, state.bases, state.column_means, state.response_mean)
    pred = prediction_draws(state.sample, X, state.bases, state.column_means,
                            state.response_mean, RngStream(seed))
    rows = []
    for level in levels:
        for i, (m, p) in enumerate(zip(intervals_from_draws(mu, level),
                                       intervals_from_draws(pred, level))):
            rows.append([i, level, m.lower, m.upper, p.lower, p.upper])
    write_rows(out_path, ["row", "level", "mean_lower", "mean_upper", "pred_lower", "pred_upper"],
               rows)


@cli.command()
@opt("--input", "input_path", type=click.Path(dir_okay=False), required=True)
@opt("--response", default=None)
@spline_options
@fit_options
@opt("--level", "level", type=click.FloatRange(0, 1, min_open=True, max_open=True),
     default=0.95, show_default=True)
@seed_option
@opt("--screen-top", type=click.IntRange(min=1), default=None)
@opt("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def loo(input_path, response, degree, K, q, draws, level, seed, screen_top, bootstraps,
        grid_size, grid_ratio, out_path):
    """Leave-one-out prediction intervals for every row."""
    data = ingest_csv(input_path, response)
    if screen_top is not None:
        data, _ = variance_screen(data, screen_top)
    path = PathConfig(grid_size=grid_size, grid_ratio=grid_ratio, bootstrap_B=bootstraps)
    res = leave_one_out(data, SplineConfig(degree, K), path, q, draws, level, RngStream(seed))
    write_rows(out_path, ["row", "y", "level", "pred_lower", "pred_upper", "covered"],
               [[i, y, level, iv.lower, iv.upper, int(y in iv)] for i, y, iv in res])
    covered = sum(y in iv for _, y, iv in res)
    click.echo(f"{covered} of {len(res)} held-out responses covered ({covered / len(res):.1%})")


def sim_options(f):
    f = opt("--correlation", type=click.FloatRange(min=0), default=0.0, show_default=True,
            help="Shared-uniform mixing weight between covariates.")(f)
    f = opt("--sigma", type=click.FloatRange(min=0), default=0.8, show_default=True)(f)
    f = opt("--p", "p", type=click.IntRange(min=4), default=100, show_default=True)(f)
    f = opt("--n", "n", type=click.IntRange(min=2), default=200, show_default=True)(f)
    return f


@cli.command()
@sim_options
@seed_option
@opt("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def simulate(n, p, sigma, correlation, seed, out_path):
    """Write a dataset from the four-function additive simulation model."""
    settings = SimSettings(n=n, p=p, sigma=sigma, correlation=correlation, replications=1, seed=seed)
    write_csv(gen_dataset(settings, RngStream(seed).substream(0)), out_path)


@cli.command()
@sim_options
@spline_options
@level_option
@opt("--replications", type=click.IntRange(min=1), default=100, show_default=True)
@opt("--draws", type=click.IntRange(min=1), default=10000, show_default=True)
@opt("--bootstraps", type=click.IntRange(min=0), default=10, show_default=True)
@opt("--q", "q", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=None)
@seed_option
@threads_option
@opt("--selection", is_flag=True, default=False,
     help="Also report how often the true model has the top probability.")
@opt("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def coverage(n, p, sigma, correlation, degree, K, levels, replications, draws, bootstraps, q,
             seed, threads, selection, out_path):
    """Monte Carlo coverage of sigma^2 and mean intervals, proposed vs oracle."""
    settings = SimSettings(
        n=n, p=p, sigma=sigma, degree=degree, knots=K, levels=tuple(sorted(levels)),
        replications=replications, draws_per_rep=draws, seed=seed, correlation=correlation,
        bootstrap_B=bootstraps, q=q,
    )
    if threads == 1:
        _limit_threads(1)
    report = coverage_experiment(settings, threads=threads)
    Path(out_path).write_text(report.to_csv(), encoding="utf-8")
    for r in report.rows:
        click.echo(f"{r.target:7s} {r.method:9s} {r.level:.2f} coverage {r.coverage:.4f} "
                   f"width {r.avg_width:.4f}")
    if selection:
        click.echo(f"true model on top in {report.selection_frequency:.1%} of replications")
    if report.errors_excluded:
        click.echo(f"{report.errors_excluded} replication(s) excluded", err=True)


@cli.command()
@sim_options
@spline_options
@opt("--replications", type=click.IntRange(min=1), default=100, show_default=True)
@opt("--bootstraps", type=click.IntRange(min=0), default=10, show_default=True)
@seed_option
@threads_option
def selection(n, p, sigma, correlation, degree, K, replications, bootstraps, seed, threads):
    """How often the true model attains the highest fiducial probability."""
    settings = SimSettings(n=n, p=p, sigma=sigma, degree=degree, knots=K,
                           replications=replications, seed=seed, correlation=correlation,
                           bootstrap_B=bootstraps)
    freq = selection_experiment(settings, threads=threads)
    click.echo(f"{freq!r}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="gfiam", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (DataError, OSError, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except NumericalError as exc:
        click.echo(f"numerical failure ({type(exc).__name__}): {exc}", err=True)
        return EXIT_NUMERIC
    except GFIError as exc:  # pragma: no cover
        click.echo(f"error: {exc}", err=True)
        return EXIT_NUMERIC
    except ValueError as exc:
        click.echo(f"invalid argument: {exc}", err=True)
        return EXIT_USAGE
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
