"""
Command line interface of cwlab

Commands write one table per run, as CSV (header row, ``#`` footer lines) or as
a single JSON object. Exit codes: 0 success, 1 failed check, 2 usage or
configuration error, 3 numerical failure, 4 I/O failure.
"""
import csv
import functools
import io
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from monty.json import MontyEncoder

from cwlab import __version__
from cwlab.cmdline.configs import (
    FORMATS,
    METHODS,
    REGIMES,
    SAMPLE_KINDS,
    ChainConfig,
    DistanceConfig,
    PmfConfig,
    RateConfig,
    SampleConfig,
    VerifyConfig,
)
from cwlab.common.exceptions import ConfigError, DomainError, InternalError, NumericalError
from cwlab.common.parallel import ordered_map
from cwlab.tools.exact import exact_cdf, exact_pmf
from cwlab.tools.limits import limit_law_for
from cwlab.tools.measures import build_definetti, infer_regime
from cwlab.tools.metrics import empirical_total_variation, fit_rate
from cwlab.tools.samplers import (
    RngStream,
    fixed_point_chain,
    sample_magnetisation,
    sample_poisson_surrogate,
    sample_surrogate,
)
from cwlab.tools.verify import DEFAULT_SUITE, distance_series, run_suite

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SAMPLE_CHUNK = 10000
CHAIN_TV_MAX_N = 1000

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class OutputError(Exception):
    """Failure to read or write a file, carrying the offending path"""

    def __init__(self, path, error):
        super().__init__(f"{path}: {error}")
        self.path = path


def handle_errors(func):
    """Map the package's exceptions onto the exit-code contract"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, DomainError) as error:
            click.secho(f"Error: {error}", fg="red", err=True)
            sys.exit(EXIT_USAGE)
        except (NumericalError, InternalError) as error:
            click.secho(f"Numerical failure: {error}", fg="red", err=True)
            sys.exit(EXIT_NUMERICAL)
        except OutputError as error:
            click.secho(f"I/O failure: {error}", fg="red", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def load_config(cls, config_path, **flags):
    """Build a config from an optional YAML file, explicit flags take precedence"""
    if config_path is not None:
        if not Path(config_path).is_file():
            raise OutputError(config_path, "no such configuration file")
        try:
            conf = cls.from_yaml(Path(config_path))
        except OSError as error:
            raise OutputError(config_path, error) from error
    else:
        conf = cls()
    conf.update(flags)
    logger.debug("Configuration: %s", conf.to_dict(full=True))
    return conf


def _plain(value):
    """Python scalars for numpy values"""
    if isinstance(value, np.generic):
        return value.item()
    return value


def _cell(value) -> str:
    value = _plain(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(command, conf, columns, rows, summary=None, extra=None) -> str:
    """Render a table as CSV or JSON according to ``conf.format``"""
    rows = [[_plain(value) for value in row] for row in rows]
    summary = {key: _plain(value) for key, value in (summary or {}).items()}
    if conf.format == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": conf.to_dict(full=True),
            "columns": list(columns),
            "rows": rows,
            "summary": summary,
        }
        payload.update(extra or {})
        return json.dumps(payload, cls=MontyEncoder, indent=2) + "\n"

    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    for key, value in summary.items():
        stream.write(f"# {key}: {_cell(value)}\n")
    return stream.getvalue()


def emit(conf, text: str) -> None:
    """Write to ``conf.out`` or to standard output"""
    if conf.out:
        try:
            Path(conf.out).write_text(text)
        except OSError as error:
            raise OutputError(conf.out, error) from error
        logger.info("Written %s", conf.out)
    else:
        click.echo(text, nl=False)


# Options shared by the commands, all defaulting to None so that values from
# a configuration file are only overridden by flags actually given
config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML configuration file")
format_option = click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Output format [default: csv]")
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output path [default: stdout]")
n_option = click.option("--n", type=click.IntRange(min=1), default=None, help="Number of spins")
beta_option = click.option("--beta", type=float, default=None, help="Inverse temperature")
gamma_option = click.option("--gamma", type=float, default=None, help="Window parameter, beta_n = 1 - gamma/sqrt(n)")
mu_option = click.option("--mu", type=float, default=None, help="External field")
seed_option = click.option("--seed", type=click.IntRange(min=0), default=None, help="Seed of the random stream")


@click.group("cwlab")
@click.option("-v", "--verbose", count=True, help="Increase verbosity, repeat for debug output")
@click.version_option(__version__)
@click.pass_context
def cwlab(ctx, verbose):
    """Exact laws, De Finetti mixtures and limit theorems of the Curie-Weiss model"""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)
    ctx.ensure_object(dict)
    ctx.obj["progress"] = verbose > 0


@cwlab.command("pmf")
@config_option
@n_option
@beta_option
@gamma_option
@mu_option
@click.option("--rescale", type=float, default=None, help="Divide the spin sums by this")
@format_option
@out_option
@handle_errors
def cmd_pmf(config_path, n, beta, gamma, mu, rescale, fmt, out):
    """Exact law of the magnetisation: atoms, probabilities and CDF"""
    conf = load_config(PmfConfig, config_path, n=n, beta=beta, gamma=gamma, mu=mu, rescale=rescale, format=fmt, out=out)
    if not conf.rescale > 0:
        raise ConfigError(f"rescale must be positive, got {conf.rescale}")
    pmf = exact_pmf(conf.model_params())
    values = pmf.scaled_support(conf.rescale)
    cdf = exact_cdf(pmf, values, conf.rescale)
    rows = [(int(s), float(v), float(p), float(c)) for s, v, p, c in zip(pmf.support, values, pmf.probs, np.atleast_1d(cdf))]
    emit(conf, render("pmf", conf, ["spin_sum", "value", "prob", "cdf"], rows))


@cwlab.command("sample")
@config_option
@n_option
@beta_option
@gamma_option
@click.option("--kind", type=click.Choice(SAMPLE_KINDS), default=None, help="Exact magnetisation, a surrogate or the limit law [default: exact]")
@click.option("--regime", type=click.Choice(REGIMES), default=None, help="Regime of the limit law, inferred when unset")
@click.option("--samples", type=click.IntRange(min=0), default=None, help="Number of draws")
@seed_option
@format_option
@out_option
@click.pass_context
@handle_errors
def cmd_sample(ctx, config_path, n, beta, gamma, kind, regime, samples, seed, fmt, out):
    """
    Draw magnetisations through the De Finetti mixture, its surrogates or the
    limit law. Draws are made in chunks, each on its own sub-stream of the seed.
    """
    conf = load_config(
        SampleConfig,
        config_path,
        n=n,
        beta=beta,
        gamma=gamma,
        kind=kind,
        regime=regime,
        samples=samples,
        seed=seed,
        format=fmt,
        out=out,
    )
    params = conf.model_params()
    rng = RngStream(conf.seed)
    chunks = [(i, min(SAMPLE_CHUNK, conf.samples - start)) for i, start in enumerate(range(0, conf.samples, SAMPLE_CHUNK))]

    if conf.kind == "limit":
        law = limit_law_for(params, conf.regime or infer_regime(params))

        def draw(cell):
            index, size = cell
            return np.asarray(law.sample(size, rng.split(index)), dtype=float)

    else:
        mix = build_definetti(params, tail_tol=conf.tail_tol, grid_points=conf.grid_points)
        sampler = {"exact": sample_magnetisation, "surrogate": sample_surrogate, "poisson": sample_poisson_surrogate}[conf.kind]

        def draw(cell):
            index, size = cell
            return np.asarray(sampler(params, mix, rng.split(index), size))

    parts = ordered_map(draw, chunks, desc="sample", progress=ctx.obj["progress"])
    values = np.concatenate(parts) if parts else np.empty(0)
    summary = {"samples": int(values.size)}
    if values.size:
        summary.update({"mean": float(np.mean(values)), "variance": float(np.var(values))})
    emit(conf, render("sample", conf, ["index", "value"], list(enumerate(values.tolist())), summary))


@cwlab.command("distance")
@config_option
@click.option("--regime", type=click.Choice(REGIMES), default=None, help="Regime [default: subcritical]")
@click.option("--method", type=click.Choice(METHODS), default=None, help="Distance [default: exact-kol]")
@beta_option
@gamma_option
@click.option("--n-grid", default=None, help="Geometric grid min:max[:factor] [default: 64:8192:2]")
@click.option("--window", type=float, default=None, help="Exclusion window around the two-point atoms")
@format_option
@out_option
@click.pass_context
@handle_errors
def cmd_distance(ctx, config_path, regime, method, beta, gamma, n_grid, window, fmt, out):
    """Distance to the limit law over a grid of n, with a log-log rate fit"""
    conf = load_config(
        DistanceConfig,
        config_path,
        regime=regime,
        method=method,
        beta=beta,
        gamma=gamma,
        n_grid=n_grid,
        window=window,
        format=fmt,
        out=out,
    )
    points = distance_series(conf.regime, conf.grid(), conf.method, conf.beta, conf.gamma, conf.window, progress=ctx.obj["progress"])
    summary = {}
    fit = None
    if len(points) >= 3 and all(d > 0 for _, d in points):
        fit = fit_rate(points)
        summary = {"slope": fit.slope, "intercept": fit.intercept, "max_abs_residual": fit.max_abs_residual}
    else:
        summary = {"fit": "unavailable"}
    extra = {"fit": fit.as_dict()} if fit is not None else {}
    emit(conf, render("distance", conf, ["n", "distance"], points, summary, extra))


def read_series(path):
    """(n, distance) pairs from a CSV written by `distance`"""
    try:
        text = Path(path).read_text()
    except OSError as error:
        raise OutputError(path, error) from error
    lines = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
    points = []
    for line in lines[1:]:
        fields = line.split(",")
        try:
            points.append((int(fields[0]), float(fields[1])))
        except (IndexError, ValueError) as error:
            raise ConfigError(f"Malformed row {line!r} in {path}") from error
    return points


@cwlab.command("rate")
@config_option
@click.option("--series", type=click.Path(dir_okay=False), default=None, help="CSV with n and distance columns")
@format_option
@out_option
@handle_errors
def cmd_rate(config_path, series, fmt, out):
    """Fit distance ~ n^slope to a series produced by `distance`"""
    conf = load_config(RateConfig, config_path, series=series, format=fmt, out=out)
    fit = fit_rate(read_series(conf.series))
    rows = [(n, d, float(fit.predict(n)), r) for (n, d), r in zip(fit.points, fit.residuals)]
    summary = {"slope": fit.slope, "intercept": fit.intercept, "max_abs_residual": fit.max_abs_residual}
    emit(conf, render("rate", conf, ["n", "distance", "fitted", "residual"], rows, summary, {"fit": fit.as_dict()}))


@cwlab.command("chain")
@config_option
@n_option
@beta_option
@gamma_option
@mu_option
@click.option("--steps", type=click.IntRange(min=0), default=None, help="Recorded steps after burn-in")
@click.option("--burn-in", type=click.IntRange(min=0), default=None, help="Discarded steps [default: 10 n]")
@seed_option
@format_option
@out_option
@handle_errors
def cmd_chain(config_path, n, beta, gamma, mu, steps, burn_in, seed, fmt, out):
    """Run the fixed-point chain and tabulate its occupation law on the lattice"""
    conf = load_config(
        ChainConfig,
        config_path,
        n=n,
        beta=beta,
        gamma=gamma,
        mu=mu,
        steps=steps,
        burn_in=burn_in,
        seed=seed,
        format=fmt,
        out=out,
    )
    params = conf.model_params()
    trajectory = fixed_point_chain(params, conf.steps, conf.burn_in, RngStream(conf.seed))
    counts = np.bincount((trajectory + params.n) // 2, minlength=params.n + 1)
    frequency = counts / trajectory.size if trajectory.size else np.zeros(params.n + 1)
    spins = np.arange(-params.n, params.n + 1, 2)

    columns = ["spin_sum", "count", "frequency"]
    rows = [[int(s), int(c), float(f)] for s, c, f in zip(spins, counts, frequency)]
    summary = {"steps": int(trajectory.size)}
    if trajectory.size:
        summary["mean"] = float(np.mean(trajectory))
    if params.n <= CHAIN_TV_MAX_N and params.mu == 0:
        pmf = exact_pmf(params)
        columns.append("exact")
        for row, p in zip(rows, pmf.probs):
            row.append(float(p))
        if trajectory.size:
            summary["tv"] = empirical_total_variation(trajectory, pmf)
    emit(conf, render("chain", conf, columns, rows, summary))


@cwlab.command("verify")
@config_option
@click.option("--all", "run_all", is_flag=True, help="Run the whole suite")
@click.option("--only", multiple=True, type=click.Choice(list(DEFAULT_SUITE)), help="Run this check, may be repeated")
@click.option("--beta", type=float, default=None, help="Override beta in the selected checks")
@click.option("--gamma", type=float, default=None, help="Override gamma in the selected checks")
@click.option("--n", type=click.IntRange(min=1), default=None, help="Override n in the selected checks")
@click.option("--slack", type=float, default=None, help="Slack constant of the centred binomial bound")
@format_option
@out_option
@click.pass_context
@handle_errors
def cmd_verify(ctx, config_path, run_all, only, beta, gamma, n, slack, fmt, out):
    """Run numerical checks; exits with 1 when any of them fails"""
    if run_all and only:
        raise ConfigError("--all and --only are mutually exclusive")
    conf = load_config(
        VerifyConfig,
        config_path,
        only=list(only) if only else None,
        beta=beta,
        gamma=gamma,
        n=n,
        slack=slack,
        format=fmt,
        out=out,
    )
    if run_all:
        conf.only = []
    reports = run_suite(conf.only or None, conf.settings(), progress=ctx.obj["progress"])
    passed = all(report.passed for report in reports)
    for report in reports:
        click.secho(report.summary(), fg="green" if report.passed else "red", err=True)

    rows = [
        [
            report.name,
            report.passed,
            ";".join(_cell(v) for v in report.observed),
            ";".join(_cell(v) for v in report.bound_or_target),
            report.detail,
        ]
        for report in reports
    ]
    summary = {"checks": len(reports), "failed": sum(not report.passed for report in reports), "passed": passed}
    extra = {"reports": [report.as_dict() for report in reports]}
    emit(conf, render("verify", conf, ["name", "passed", "observed", "bound_or_target", "detail"], rows, summary, extra))
    if not passed:
        sys.exit(EXIT_CHECK_FAILED)


CONFIG_CLASSES = {
    "pmf": PmfConfig,
    "sample": SampleConfig,
    "distance": DistanceConfig,
    "rate": RateConfig,
    "chain": ChainConfig,
    "verify": VerifyConfig,
}


@cwlab.command("config-keys")
@click.argument("command", type=click.Choice(list(CONFIG_CLASSES)))
def cmd_config_keys(command):
    """Keys a --config file may set for COMMAND, with their defaults"""
    click.echo(CONFIG_CLASSES[command].get_description())
