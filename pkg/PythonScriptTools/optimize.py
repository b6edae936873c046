#!/usr/bin/env python3
"""
Architecture Refactoring Optimizer
Searches refactoring sequences for a case-study model with NSGA-II, trading
off performance, reliability, performance antipatterns and architectural
distance, and reports quality indicators over the resulting Pareto fronts.

Usage:
    optimize.py run --case ttbs --brf on --fuzziness 0.95 --evolutions 72
    optimize.py run --out results            # full grid for both case studies
    optimize.py indicators --case ttbs --out results
    optimize.py space --case cocome
    optimize.py validate path/to/model.json
"""
import json
import logging
import sys
from pathlib import Path

import click

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from database import init_database, record_run  # noqa: E402
from engine.config import (  # noqa: E402
    CASE_STUDIES,
    EVOLUTION_LEVELS,
    FUZZINESS_LEVELS,
    GaConfig,
    ProblemConfig,
    configuration_grid,
)
from engine.errors import ConfigError, HarnessError, ModelError  # noqa: E402
from engine.fixtures import load_case_study  # noqa: E402
from engine.harness import recompute_indicators, run_grid, solution_space_size  # noqa: E402
from engine.indicators import best  # noqa: E402
from engine.model import lint, load_model_file  # noqa: E402
from engine.refactoring import target_counts  # noqa: E402

logger = logging.getLogger('optimize')

FUZZINESS_CHOICES = {'0': None, '0.55': 0.55, '0.8': 0.80, '0.95': 0.95}


def configure_logging(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )


def build_configs(cases, brf, fuzziness, evolutions, runs, seed, out, config_file):
    """Configurations selected on the command line; omitted dimensions span the full grid"""
    if config_file is not None:
        data = json.loads(Path(config_file).read_text(encoding='utf-8'))
        data['output_dir'] = str(out)
        base = ProblemConfig.from_dict(data)
        if runs is not None:
            base = base.with_ga(independent_runs=runs)
        return [base]
    ga = GaConfig(independent_runs=runs or 3, seed=seed)
    configs = []
    for case in cases or CASE_STUDIES:
        configs.extend(configuration_grid(
            case,
            brf_values=(brf == 'on',) if brf else (True, False),
            fuzziness_values=(FUZZINESS_CHOICES[fuzziness],) if fuzziness else FUZZINESS_LEVELS,
            evolution_values=(evolutions,) if evolutions else EVOLUTION_LEVELS,
            ga=ga,
            output_dir=out,
        ))
    return configs


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Debug logging.')
def cli(verbose):
    """Many-objective refactoring optimizer for architecture models."""
    configure_logging(verbose)


@cli.command()
@click.option('--case', 'cases', type=click.Choice(CASE_STUDIES), multiple=True, help='Case study (default: all).')
@click.option('--brf', type=click.Choice(['on', 'off']), help='Baseline refactoring factors (default: both).')
@click.option('--fuzziness', type=click.Choice(list(FUZZINESS_CHOICES)), help='Antipattern fuzziness, 0 disables (default: all).')
@click.option('--evolutions', type=click.IntRange(min=1), help='Genetic evolutions (default: 72, 82 and 102).')
@click.option('--runs', type=click.IntRange(min=1), help='Independent runs per configuration (default: 3).')
@click.option('--seed', type=int, default=0, show_default=True, help='Master seed.')
@click.option('--jobs', type=click.IntRange(min=1), default=1, show_default=True, help='Parallel runs.')
@click.option('--out', type=click.Path(file_okay=False, path_type=Path), default=Path('results'), show_default=True)
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False), help='JSON problem configuration.')
@click.pass_context
def run(ctx, cases, brf, fuzziness, evolutions, runs, seed, jobs, out, config_file):
    """Run one configuration or the configuration grid."""
    try:
        configs = build_configs(cases, brf, fuzziness, evolutions, runs, seed, out, config_file)
    except (ConfigError, json.JSONDecodeError) as e:
        raise click.UsageError(str(e))

    ledger = out / 'ledger.db'
    init_database(ledger)
    try:
        result = run_grid(configs, master_seed=seed, jobs=jobs,
                          on_run=lambda outcome: record_run(outcome.ledger_row(), ledger))
    except (HarnessError, ConfigError) as e:
        raise click.UsageError(str(e))

    for case, case_result in result.cases.items():
        click.echo(f"\n== {case}: {len(case_result.reference)} reference solutions ==")
        click.echo(best(case_result.indicators).to_string(index=False))
        click.echo('')
        click.echo(case_result.shares.to_string(index=False))
    click.echo(f"\n{len(result.outcomes)} runs in {result.wall_clock:.1f}s, {len(result.failures)} failed")
    for failure in result.failures:
        click.echo(f"  {failure.config_id} run {failure.run_index}: {failure.error}", err=True)
    ctx.exit(1 if result.failures else 0)


@cli.command()
@click.option('--case', type=click.Choice(CASE_STUDIES), required=True)
@click.option('--out', type=click.Path(file_okay=False, path_type=Path), default=Path('results'), show_default=True)
def indicators(case, out):
    """Recompute reference front and report tables from persisted fronts."""
    try:
        case_result = recompute_indicators(out, case)
    except HarnessError as e:
        raise click.UsageError(str(e))
    click.echo(best(case_result.indicators).to_string(index=False))
    click.echo('')
    click.echo(case_result.improvements.to_string(index=False))


@cli.command()
@click.option('--case', type=click.Choice(CASE_STUDIES))
@click.option('--model', 'model_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--length', type=click.IntRange(min=1), default=4, show_default=True)
def space(case, model_file, length):
    """Size of the solution space for sequences of LENGTH actions."""
    if (case is None) == (model_file is None):
        raise click.UsageError('give exactly one of --case or --model')
    try:
        model = load_case_study(case) if case else load_model_file(model_file)
    except ModelError as e:
        raise click.UsageError(str(e))
    for kind, n in target_counts(model).items():
        click.echo(f"{kind:5} {n:6d} valid targets")
    omega = solution_space_size(model, length)
    click.echo(f"Omega = {omega} ({float(omega):.3e})")


@cli.command()
@click.argument('model_file', type=click.Path(exists=True, dir_okay=False), required=False)
@click.option('--case', type=click.Choice(CASE_STUDIES))
@click.pass_context
def validate(ctx, model_file, case):
    """Validate a model document and list lint warnings."""
    if (case is None) == (model_file is None):
        raise click.UsageError('give exactly one of MODEL_FILE or --case')
    try:
        model = load_case_study(case) if case else load_model_file(model_file)
    except ModelError as e:
        click.echo(f"invalid model: {e}", err=True)
        ctx.exit(1)
    click.echo(f"{len(model.components)} components, {len(model.nodes)} nodes, "
               f"{len(model.links)} links, {len(model.scenarios)} scenarios")
    for warning in lint(model):
        click.echo(f"warning: {warning}")


if __name__ == '__main__':
    cli()
