import click
import json
import logging
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

from .config import Settings, load_body, load_lemma41_config, load_theorem1_config
from .errors import InequalityViolation, SupportLabError
from .logging_config import configure_logging

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
EXIT_USAGE = 64

GRAMMAR = """\
usage: supportlab [--log-level LEVEL] COMMAND [ARGS]

  measure   --config BODY [--samples N] [--seed S] [--sampler box|rays] [--out PATH] [--exact --index I --mesh H]
  dbl       A.msr B.msr [--block K] [--grid G] [--backend network|simplex|highs] [--format csv|json]
  hausdorff BODY_K BODY_L [--format csv|json]
  lemma41   --config PATH [--samples N] [--seed S] [--format csv|json] [--out PATH]
  theorem1  --config PATH [--samples N] [--seed S] [--workers W] [--db PATH [--force]]
            [--format csv|json] [--out PATH]
  tightness --n N --i I [--h-grid H,H,...] [--samples N] [--seed S] [--grid G]
            [--workers W] [--no-certify] [--source quadrature|extracted] [--format csv|json] [--out PATH]
  status    [RUN_ID] --db PATH

config files are KEY=VALUE lines; see docs/grammar.md.
"""

SEED = click.IntRange(0, 2 ** 64 - 1)


class SupportLabGroup(click.Group):
    """Maps outcomes to exit codes: 0 ok, 2 inequality violated, 1 error, 64 usage."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rc = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                              standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            click.echo(GRAMMAR, err=True, nl=False)
            sys.exit(EXIT_USAGE)
        except InequalityViolation as e:
            click.echo(f"Inequality violated: {e}", err=True)
            sys.exit(EXIT_VIOLATION)
        except (SupportLabError, click.ClickException, OSError, ValueError) as e:
            message = e.format_message() if isinstance(e, click.ClickException) else str(e)
            logger.error("Command failed", extra={"error": message, "error_type": type(e).__name__})
            click.echo(f"Error: {message}", err=True)
            sys.exit(EXIT_ERROR)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_ERROR)
        sys.exit(rc if isinstance(rc, int) else EXIT_OK)


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
        logger.info("Wrote output", extra={"path": out, "bytes": len(text)})
    else:
        click.echo(text, nl=False)


def _json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _single_row_csv(row: dict, schema: str) -> str:
    from .experiments import write_csv
    return write_csv([row], list(row), schema=schema)


@click.group(cls=SupportLabGroup)
@click.option('--log-level', default=None, help='Set logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)')
def main(log_level):
    """Support measures of convex bodies: extraction, d_bL distances and Hölder experiments"""
    configure_logging(log_level)
    logger.info("CLI initialized", extra={"log_level": log_level})


@main.command()
@click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Body file')
@click.option('--samples', default=20000, type=click.IntRange(min=1), help='Box draws per body')
@click.option('--seed', default=0, type=SEED, envvar='SUPPORTLAB_SEED', help='Random seed')
@click.option('--out', 'out_path', default=None, help='Measure file to write (stdout if omitted)')
@click.option('--exact', is_flag=True, help='Use the exact ball/polytope oracle instead of sampling')
@click.option('--index', 'index', default=None, type=click.IntRange(min=0), help='Single index i (with --exact)')
@click.option('--mesh', default=0.1, type=click.FloatRange(min=0, min_open=True), help='Oracle mesh width')
@click.option('--sampler', type=click.Choice(['box', 'rays']), default='box',
              help='Box rejection draws or randomized ray quadrature')
def measure(config_path, samples, seed, out_path, exact, index, mesh, sampler):
    """Extract Λ_0 … Λ_{n-1} of a body and serialize them"""
    from .measure_io import dumps
    from .measures import ball_support_measure_exact, extract_support_measures, polytope_support_measure_exact
    from .models.body import BodyKind

    body = load_body(config_path)
    logger.info("Starting measure extraction", extra={"body": body.describe(), "samples": samples, "seed": seed,
                                                      "exact": exact, "sampler": sampler})
    if exact:
        indices = [index] if index is not None else list(range(body.dim))
        oracle = ball_support_measure_exact if body.kind is BodyKind.BALL else polytope_support_measure_exact
        measures = [oracle(body, i, mesh) for i in indices]
    else:
        if index is not None:
            raise click.UsageError("--index needs --exact")
        measures = extract_support_measures(body, samples, seed, settings=Settings(sampler=sampler)).measures
    _emit(dumps(measures), out_path)


@main.command()
@click.argument('first', type=click.Path(exists=True, dir_okay=False))
@click.argument('second', type=click.Path(exists=True, dir_okay=False))
@click.option('--block', default=0, type=click.IntRange(min=0), help='Which measure block of each file')
@click.option('--grid', default=None, type=click.FloatRange(min=0, min_open=True), help='Coarsening cell size')
@click.option('--backend', type=click.Choice(['network', 'simplex', 'highs']), default=None, help='LP backend')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default=None, help='Structured output')
def dbl(first, second, block, grid, backend, fmt):
    """Bounded-Lipschitz distance between two serialized measures"""
    from .measure_io import read_measures
    from .metric import bounded_lipschitz_distance, total_variation_distance

    blocks = [read_measures(first), read_measures(second)]
    for path, found in zip((first, second), blocks):
        if block >= len(found):
            raise click.UsageError(f"{path} has {len(found)} block(s); --block {block} is out of range")
    mu, nu = blocks[0][block], blocks[1][block]
    result = bounded_lipschitz_distance(mu, nu, grid=grid, backend=backend)
    if fmt is None:
        click.echo(repr(result.value))
        return
    row = {"dbl": result.value, "coarsening_bound": result.coarsening_bound, "duality_gap": result.duality_gap,
           "atoms": result.atoms, "total_variation": total_variation_distance(mu, nu)}
    click.echo(_json(row) if fmt == 'json' else _single_row_csv(row, "supportlab-dbl v1"), nl=False)


@main.command()
@click.argument('body_k', type=click.Path(exists=True, dir_okay=False))
@click.argument('body_l', type=click.Path(exists=True, dir_okay=False))
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default=None, help='Structured output')
def hausdorff(body_k, body_l, fmt):
    """Certified Hausdorff distance bracket of two bodies"""
    from .geometry import hausdorff_bracket

    bracket = hausdorff_bracket(load_body(body_k), load_body(body_l))
    if fmt is None:
        click.echo(repr(bracket.hi))
        return
    row = {"lo": bracket.lo, "hi": bracket.hi, "method": bracket.method, "evaluations": bracket.evaluations}
    click.echo(_json(row) if fmt == 'json' else _single_row_csv(row, "supportlab-hausdorff v1"), nl=False)


@main.command()
@click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Lemma config file')
@click.option('--samples', default=None, type=click.IntRange(min=1), help='Box draws (overrides config)')
@click.option('--seed', default=None, type=SEED, envvar='SUPPORTLAB_SEED', help='Random seed (overrides config)')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default='csv', help='Output format')
@click.option('--out', 'out_path', default=None, help='Output file (stdout if omitted)')
def lemma41(config_path, samples, seed, fmt, out_path):
    """Compare d_bL of shell measures with its projection/normal/volume bound"""
    from .experiments import run_lemma41

    config = _override(load_lemma41_config(config_path), samples, seed)
    report = run_lemma41(config)
    row = report.as_row()
    _emit(_json(row) if fmt == 'json' else _single_row_csv(row, "supportlab-lemma41 v1"), out_path)
    if not report.holds:
        logger.warning("Shell comparison failed", extra=row)
        return EXIT_VIOLATION


def _override(config, samples, seed):
    update = {}
    if samples is not None:
        update["samples"] = samples
    if seed is not None:
        update["seed"] = seed
    return config.model_copy(update=update) if update else config


@main.command()
@click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Experiment config file')
@click.option('--samples', default=None, type=click.IntRange(min=1), help='Box draws (overrides config)')
@click.option('--seed', default=None, type=SEED, envvar='SUPPORTLAB_SEED', help='Random seed (overrides config)')
@click.option('--workers', default=1, type=click.IntRange(min=1), help='Concurrent ladder steps')
@click.option('--db', 'db_path', default=None, help='Experiment store (sqlite) for caching runs')
@click.option('--force', is_flag=True, help='Recompute even if the store holds this run')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default='csv', help='Output format')
@click.option('--out', 'out_path', default=None, help='Output file (stdout if omitted)')
def theorem1(config_path, samples, seed, workers, db_path, force, fmt, out_path):
    """Run a perturbation ladder and fit d_bL against d_H"""
    from .db import ExperimentStore, new_run
    from .experiments import run_theorem1, theorem1_csv, theorem1_json

    config = _override(load_theorem1_config(config_path), samples, seed)
    store = ExperimentStore(db_path) if db_path else None
    run = new_run("theorem1", config.model_dump(mode="json"))
    if store and not force:
        cached = store.get_completed_by_sha(run.sha256)
        if cached:
            logger.info("Using cached run", extra={"run_id": cached.id, "sha256": cached.sha256})
            _emit(cached.report_json if fmt == 'json' else cached.report_csv, out_path)
            return EXIT_VIOLATION if cached.metadata.get("violations") else EXIT_OK
    if store:
        store.save_run(run)

    start = time.perf_counter()
    try:
        result = run_theorem1(config, workers=workers)
    except Exception as e:
        if store:
            run.status, run.error, run.completed_at = "failed", f"{type(e).__name__}: {e}", datetime.now()
            store.save_run(run)
        raise
    csv_text, json_text = theorem1_csv(result), theorem1_json(result)
    if store:
        run.status, run.completed_at = "done", datetime.now()
        run.report_csv, run.report_json = csv_text, json_text
        run.wall_time = time.perf_counter() - start
        run.metadata = {"violations": result.violations, "records": len(result.records)}
        store.save_run(run)
        click.echo(f"run {run.id}", err=True)
    _emit(json_text if fmt == 'json' else csv_text, out_path)
    if result.violations:
        for v in result.violations:
            click.echo(f"violation: {v}", err=True)
        return EXIT_VIOLATION


@main.command()
@click.option('--n', 'n', required=True, type=click.IntRange(2, 6), help='Ambient dimension')
@click.option('--i', 'i', required=True, type=click.IntRange(min=1), help='Index i in 1..n-1')
@click.option('--h-grid', default='0.3,0.2,0.1,0.05', help='Comma-separated cap radii in (0, 0.5]')
@click.option('--samples', default=20000, type=click.IntRange(min=1), help='Box draws per body')
@click.option('--seed', default=0, type=SEED, envvar='SUPPORTLAB_SEED', help='Random seed')
@click.option('--grid', default=0.1, type=click.FloatRange(min=0, min_open=True), help='Coarsening cell size')
@click.option('--workers', default=1, type=click.IntRange(min=1), help='Concurrent grid points')
@click.option('--no-certify', is_flag=True, help='Skip the Hausdorff bracket and normal bundle checks')
@click.option('--source', type=click.Choice(['quadrature', 'extracted']), default='quadrature',
              help='Cap quadrature or Monte-Carlo extraction')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default='csv', help='Output format')
@click.option('--out', 'out_path', default=None, help='Output file (stdout if omitted)')
def tightness(n, i, h_grid, samples, seed, grid, workers, no_certify, source, fmt, out_path):
    """Cap-cut tightness table for the exponent 1/2"""
    from .caps import TIGHTNESS_COLUMNS, tightness_report
    from .experiments import write_csv

    if i > n - 1:
        raise click.BadParameter(f"--i must be at most n-1 = {n - 1}", param_hint="--i")
    try:
        grid_values = [float(h) for h in h_grid.replace(" ", "").split(",") if h]
    except ValueError:
        raise click.BadParameter(f"not a list of numbers: {h_grid}", param_hint="--h-grid")
    report = tightness_report(n, i, grid_values, samples=samples, seed=seed, workers=workers, grid=grid,
                              certify=not no_certify, source=source)
    rows = [r.as_row() for r in report.rows]
    if fmt == 'json':
        text = _json({"schema_version": "supportlab-tightness v1", "rows": rows,
                      "slope": report.fit.slope if report.fit.usable else None})
    else:
        text = write_csv(rows, TIGHTNESS_COLUMNS, schema="supportlab-tightness v1")
    _emit(text, out_path)
    click.echo(f"slope {report.fit.slope!r}", err=True)
    if report.violations():
        return EXIT_VIOLATION


@main.command()
@click.argument('run_id', required=False)
@click.option('--db', 'db_path', required=True, type=click.Path(exists=True, dir_okay=False),
              help='Experiment store (sqlite)')
def status(run_id, db_path):
    """Show a stored run, or list recent runs"""
    from .db import ExperimentStore

    store = ExperimentStore(db_path)
    if run_id is None:
        for run in store.list_runs():
            click.echo(f"{run.id}  {run.command}  {run.status}  {run.created_at.isoformat()}")
        return
    run = store.get_run(run_id)
    if run is None:
        raise click.ClickException(f"Run not found: {run_id}")
    click.echo(_json({
        "id": run.id,
        "command": run.command,
        "status": run.status,
        "sha256": run.sha256,
        "created_at": run.created_at.isoformat(),
        "completed_at": run.completed_at.isoformat() if run.completed_at else None,
        "wall_time": run.wall_time,
        "error": run.error,
        "metadata": run.metadata,
    }), nl=False)


if __name__ == '__main__':
    main()
