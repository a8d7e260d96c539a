"""
Command-line interface for sqn-control.

Usage:
    sqn-control pilot --env sh2                     # Estimate the intervention threshold
    sqn-control train --env sh2 --algo ia-ppo       # Full experiment
    sqn-control baseline --env mh1                  # Backpressure only, no learning
    sqn-control summarize ./runs                    # Cross-seed summary table
    sqn-control validate --env mh2 --steps 100000   # Structural invariants
    sqn-control info                                # Shipped environments
"""

from __future__ import annotations

import math
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import click
from rich.console import Console
from rich.table import Table

from sqn_control import __version__
from sqn_control.config import ExperimentConfig
from sqn_control.constants import (
    BACKPRESSURE,
    BASELINE_ALGORITHMS,
    CLIP_EPSILON,
    CLIP_FORM_STANDARD,
    CLIP_FORMS,
    DEFAULT_SEEDS,
    DEFAULT_STEPS,
    FULL_SCALE_STEPS,
    GAE_LAMBDA,
    IA_PPO,
    INTERVENTION_ALGORITHMS,
    LEARNING_ALGORITHMS,
    LEARNING_RATE,
    MAXWEIGHT,
    MINIBATCHES,
    OMEGA,
    SHIPPED_ENVIRONMENTS,
    THRESHOLD_GAMMA,
    THRESHOLD_R_MIN,
    THRESHOLD_RULE_MAX,
    THRESHOLD_RULES,
    UPDATE_EPOCHS,
)

console = Console()

F = TypeVar("F", bound=Callable[..., Any])


def parse_seeds(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[int, ...]:
    """Parse a seed count (``5``) or an explicit list (``0,3,7``)."""
    if value is None:
        return tuple(range(DEFAULT_SEEDS))
    try:
        if "," in value:
            seeds = tuple(int(s.strip()) for s in value.split(",") if s.strip())
        else:
            seeds = tuple(range(int(value)))
    except ValueError as e:
        raise click.BadParameter(f"Invalid seeds: {value!r}. Expected a count or a comma-separated list") from e
    if not seeds:
        raise click.BadParameter("at least one seed is required")
    return seeds


def _common_options(func: F) -> F:
    """Options shared by every experiment command."""
    options = [
        click.option("-e", "--env", default="sh1", show_default=True,
                     help=f"Environment: {', '.join(SHIPPED_ENVIRONMENTS)} or a JSON file"),
        click.option("-s", "--seeds", callback=parse_seeds,
                     help=f"Seed count or comma-separated seeds (default: {DEFAULT_SEEDS})"),
        click.option("--steps", type=int, default=DEFAULT_STEPS, show_default=True,
                     help="Total steps per seed, pilot included"),
        click.option("--full-scale", is_flag=True, help=f"Run {FULL_SCALE_STEPS:,} steps per seed"),
        click.option("--te", "rollout_length", type=int, default=None,
                     help="Episode length (default: 2048 single-hop, 512 multi-hop)"),
        click.option("--pilot-episodes", type=int, default=None,
                     help="Fixed pilot length in episodes (default: until the time average settles)"),
        click.option("--omega", type=float, default=OMEGA, show_default=True,
                     help="Target drift for the threshold estimate"),
        click.option("--threshold-rule", type=click.Choice(sorted(THRESHOLD_RULES)),
                     default=THRESHOLD_RULE_MAX, show_default=True, help="Threshold estimator form"),
        click.option("-o", "--out", "output_dir", type=click.Path(file_okay=False, path_type=Path),
                     default=Path("./runs"), show_default=True, help="Output directory"),
        click.option("--workers", type=int, default=1, show_default=True, help="Seeds run in parallel"),
        click.option("--dry-run", is_flag=True, help="Show the configuration without running"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _learning_options(func: F) -> F:
    """Update-phase and gate options of the train command."""
    options = [
        click.option("--epochs", type=int, default=UPDATE_EPOCHS, show_default=True,
                     help="Update epochs per trajectory"),
        click.option("--minibatches", type=int, default=MINIBATCHES, show_default=True,
                     help="Minibatches per epoch"),
        click.option("--clip", type=float, default=CLIP_EPSILON, show_default=True,
                     help="PPO clipping epsilon"),
        click.option("--clip-form", type=click.Choice(sorted(CLIP_FORMS)), default=CLIP_FORM_STANDARD,
                     show_default=True, help="Surrogate clipping form"),
        click.option("--lambda", "gae_lambda", type=float, default=GAE_LAMBDA, show_default=True,
                     help="GAE lambda"),
        click.option("--lr", "learning_rate", type=float, default=LEARNING_RATE, show_default=True,
                     help="Adam step size"),
        click.option("--normalize/--no-normalize", "normalize_advantages", default=True,
                     help="Standardize advantages over free steps"),
        click.option("--gamma", type=float, default=THRESHOLD_GAMMA, show_default=True,
                     help="Threshold step size"),
        click.option("--rmin", "r_min", type=float, default=THRESHOLD_R_MIN, show_default=True,
                     help="Intervention rate below which the threshold is frozen"),
        click.option("--resume", type=click.Path(exists=True, path_type=Path), default=None,
                     help="Checkpoint file or run directory to continue from"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _build_config(verbose: bool, full_scale: bool, **kwargs: Any) -> ExperimentConfig:
    if full_scale:
        kwargs["steps"] = FULL_SCALE_STEPS
    return ExperimentConfig(verbose=verbose, **kwargs)


@click.group()
@click.version_option(version=__version__, prog_name="sqn-control")
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
@click.pass_context
def main(ctx: click.Context, verbose: bool) -> None:
    """
    sqn-control - Intervention-assisted reinforcement learning for queueing networks

    Simulate single-hop and multi-hop stochastic queueing networks, train
    actor-critic policies that fall back to MaxWeight or Backpressure outside
    a learned region, and summarize multi-seed runs.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose


@main.command()
@_common_options
@click.pass_context
def pilot(ctx: click.Context, dry_run: bool, full_scale: bool, **kwargs: Any) -> None:
    """
    Run the stabilizing policy alone and estimate the intervention threshold.

    Writes one drift table per seed and prints both threshold estimates.

    Examples:

        sqn-control pilot --env sh2 --seeds 3

        sqn-control pilot --env mh2 --omega -0.2 --threshold-rule min
    """
    verbose = ctx.obj.get("verbose", False)

    try:
        config = _build_config(verbose, full_scale, **kwargs)
        if dry_run or verbose:
            console.print("\n[bold]Configuration:[/bold]\n")
            _show_config(config)
        if dry_run:
            return

        from sqn_control.experiment import pilot_only
        from sqn_control.export.csv import drift_path, write_drift_table

        table = Table(title=f"Pilot threshold estimates: {config.env}")
        table.add_column("Seed", justify="right", style="cyan")
        table.add_column("Pilot steps", justify="right")
        table.add_column("Point", justify="right")
        table.add_column("Weighted", justify="right")
        table.add_column("Mean drift beyond", justify="right")

        for seed in config.seeds:
            result = pilot_only(config, seed)
            write_drift_table(drift_path(config.output_dir, seed), result.table)
            table.add_row(
                str(seed),
                f"{result.steps:,}",
                f"{result.point:g}",
                f"{result.weighted:g}",
                f"{result.drift_beyond:.3f}",
            )

        console.print()
        console.print(table)
        console.print(f"Drift tables: {config.output_dir}")

    except Exception as e:
        console.print(f"\n[bold red]Error:[/bold red] {e}")
        if verbose:
            console.print_exception()
        sys.exit(1)


@main.command()
@_common_options
@_learning_options
@click.option(
    "-a", "--algo", "algorithm",
    type=click.Choice(sorted(LEARNING_ALGORITHMS)),
    default=IA_PPO,
    show_default=True,
    help="Learning algorithm",
)
@click.pass_context
def train(ctx: click.Context, dry_run: bool, full_scale: bool, **kwargs: Any) -> None:
    """
    Run a full online training experiment.

    Examples:

        sqn-control train --env sh2 --algo ia-ppo --seeds 5

        sqn-control train --env mh1 --algo ac-ppo --steps 300000 --out ./runs/mh1

        sqn-control train --env sh2 --resume ./runs/checkpoints/ia-ppo_seed0.pt
    """
    _run_experiment(ctx, dry_run, full_scale, **kwargs)


@main.command()
@_common_options
@click.option(
    "-a", "--algo", "algorithm",
    type=click.Choice(sorted(BASELINE_ALGORITHMS)),
    default=None,
    help="Baseline policy (default: maxweight single-hop, backpressure multi-hop)",
)
@click.pass_context
def baseline(ctx: click.Context, dry_run: bool, full_scale: bool, algorithm: str | None, **kwargs: Any) -> None:
    """
    Run a non-learning policy and record its metrics.

    Examples:

        sqn-control baseline --env sh1

        sqn-control baseline --env sh2 --algo random
    """
    if algorithm is None:
        try:
            from sqn_control.env.spec import resolve_config

            algorithm = MAXWEIGHT if resolve_config(kwargs["env"]).is_single_hop else BACKPRESSURE
        except Exception as e:
            console.print(f"\n[bold red]Error:[/bold red] {e}")
            sys.exit(1)
    _run_experiment(ctx, dry_run, full_scale, algorithm=algorithm, **kwargs)


def _run_experiment(ctx: click.Context, dry_run: bool, full_scale: bool, **kwargs: Any) -> None:
    verbose = ctx.obj.get("verbose", False)

    try:
        config = _build_config(verbose, full_scale, **kwargs)

        if dry_run:
            console.print("\n[bold]Dry run - would execute with:[/bold]\n")
            _show_config(config)
            return

        if verbose:
            console.print("\n[bold]Configuration:[/bold]\n")
            _show_config(config)

        console.print(f"\n[bold green]Starting sqn-control v{__version__}[/bold green]\n")

        from sqn_control.experiment import Experiment

        experiment = Experiment(config)
        runs = experiment.run()

        console.print("\n[bold green]Experiment complete![/bold green]")
        for run in runs:
            threshold = "" if config.algorithm not in INTERVENTION_ALGORITHMS else (
                f", q* {run.q_star_weighted:g} -> {run.final_q_star:g}"
            )
            console.print(
                f"Seed {run.seed}: {run.steps:,} steps, final time-average backlog "
                f"{run.final_time_avg:.2f}{threshold}"
            )
        if experiment.summary is not None:
            _print_summary(experiment.summary)
        console.print(f"Output: {config.output_dir}")

    except Exception as e:
        console.print(f"\n[bold red]Error:[/bold red] {e}")
        if verbose:
            console.print_exception()
        sys.exit(1)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "-o", "--output",
    type=click.Path(dir_okay=False, writable=True, path_type=Path),
    default=None,
    help="Summary CSV path (default: RUN_DIR/summary.csv)",
)
@click.pass_context
def summarize(ctx: click.Context, run_dir: Path, output: Path | None) -> None:
    """
    Summarize every metrics file in a run directory.

    Reports mean and 95% confidence interval of the final time-averaged and
    moving-average backlog per algorithm, and when the moving average first
    drops below the baseline.
    """
    verbose = ctx.obj.get("verbose", False)

    try:
        from sqn_control.export.csv import write_summary
        from sqn_control.metrics.summary import summarize as summarize_run

        frame = summarize_run(run_dir)
        output = output or run_dir / "summary.csv"
        write_summary(output, frame)
        _print_summary(frame)
        console.print(f"[green]Summary written to:[/green] {output}")

    except Exception as e:
        console.print(f"\n[bold red]Error:[/bold red] {e}")
        if verbose:
            console.print_exception()
        sys.exit(1)


@main.command()
@click.option("-e", "--env", default="sh1", show_default=True, help="Environment name or JSON file")
@click.option("--steps", type=int, default=10_000, show_default=True, help="Random steps to simulate")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the random streams")
@click.option("--strict", is_flag=True, help="Exit with status 1 when a check fails")
@click.pass_context
def validate(ctx: click.Context, env: str, steps: int, seed: int, strict: bool) -> None:
    """
    Check the structural invariants of a network under random actions.

    Packet conservation, nonnegative queues, empty destination queues,
    allocation row sums, and mask compliance.
    """
    verbose = ctx.obj.get("verbose", False)

    console.print(f"\n[bold]Validating:[/bold] {env} ({steps:,} steps, seed {seed})\n")

    try:
        from sqn_control.env.spec import resolve_config
        from sqn_control.validation.checks import validate_network

        results = validate_network(resolve_config(env), steps=steps, seed=seed, verbose=True)

        if results.get("overall_passed"):
            console.print("\n[bold green]Validation PASSED[/bold green]")
        else:
            console.print("\n[bold red]Validation FAILED[/bold red]")
            if strict:
                sys.exit(1)

    except Exception as e:
        console.print(f"\n[bold red]Error:[/bold red] {e}")
        if verbose:
            console.print_exception()
        sys.exit(1)


@main.command()
@click.pass_context
def info(ctx: click.Context) -> None:
    """
    Show the shipped environments.
    """
    from sqn_control.env.spec import load_shipped

    table = Table(title="sqn-control - Shipped Environments")
    table.add_column("Name", style="cyan")
    table.add_column("Kind")
    table.add_column("K", justify="right")
    table.add_column("M", justify="right")
    table.add_column("N", justify="right")
    table.add_column("Mean arrivals")
    table.add_column("Mean capacities")

    for name in SHIPPED_ENVIRONMENTS:
        network = load_shipped(name)
        table.add_row(
            name,
            network.kind.value,
            str(network.num_classes),
            str(network.num_links),
            str(network.nodes),
            ", ".join(f"{c.mean_arrivals:.2f}" for c in network.classes),
            ", ".join(f"{link.mean_capacity:.2f}" for link in network.links),
        )

    console.print()
    console.print(table)
    console.print()
    console.print("[dim]Custom networks: pass a JSON document path to --env[/dim]")


def _show_config(config: ExperimentConfig) -> None:
    """Display configuration in a table."""
    table = Table(show_header=False, box=None)
    table.add_column("Key", style="cyan")
    table.add_column("Value")

    table.add_row("Environment", config.env)
    table.add_row("Algorithm", config.algorithm)
    table.add_row("Seeds", ", ".join(str(s) for s in config.seeds))
    table.add_row("Steps", f"{config.steps:,}")
    table.add_row("Episode length", str(config.rollout_length or "by network kind"))
    table.add_row("Pilot episodes", str(config.pilot_episodes or "until converged"))
    table.add_row("Epochs / minibatches", f"{config.epochs} / {config.minibatches}")
    table.add_row("Clip", f"{config.clip} ({config.clip_form})")
    table.add_row("GAE lambda", str(config.gae_lambda))
    table.add_row("Gate", f"omega={config.omega}, gamma={config.gamma}, r_min={config.r_min}")
    table.add_row("Threshold rule", config.threshold_rule)
    table.add_row("Output", str(config.output_dir))
    table.add_row("Resume", str(config.resume) if config.resume else "no")

    console.print(table)


def _print_summary(frame: Any) -> None:
    """Display a summary frame."""
    table = Table(title="Run Summary")
    table.add_column("Algorithm", style="cyan")
    table.add_column("Seeds", justify="right")
    table.add_column("Final time avg", justify="right")
    table.add_column("Final moving avg", justify="right")
    table.add_column("Crossing t", justify="right")

    def _with_ci(mean: float, ci: float) -> str:
        return f"{mean:.2f}" if math.isnan(ci) else f"{mean:.2f} ± {ci:.2f}"

    for row in frame.itertuples(index=False):
        crossing = "n/a" if math.isnan(row.crossing_t) else (
            "never" if math.isinf(row.crossing_t) else f"{row.crossing_t:,.0f}"
        )
        table.add_row(
            row.algorithm,
            str(row.seeds),
            _with_ci(row.final_time_avg, row.final_time_avg_ci),
            _with_ci(row.final_moving_avg, row.final_moving_avg_ci),
            crossing,
        )

    console.print()
    console.print(table)


if __name__ == "__main__":
    main()
