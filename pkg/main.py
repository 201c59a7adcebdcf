"""
pinstt - synthesize, certify and track neural spatiotemporal tubes

Commands:
    synth     train a tube for a scenario and write the model + training log
    verify    certify a model against its scenario
    simulate  closed-loop rollout of the bundled plant through the tube
    plot      SVG of obstacles, tube slices and a simulated trajectory
    info      architecture metadata of a model file

Exit codes: 0 ok, 1 simulation criteria failed, 2 training did not converge,
3 certificate failed, 4 scenario error, 5 model format error, 6 non-finite /
divergence, 7 precondition / blow-up / invalid tube, 8 grid mismatch, 9 I/O.
"""

import json
from functools import wraps
from pathlib import Path
from typing import Optional

import typer

from config.environments import current_config, validate_config
from state.scenario import ScenarioBundle
from services.plotting import plot_tube
from services.simulator import run_bundle
from services.trainer import train
from services.verifier import certify
from utils.errors import IO_EXIT_CODE, PinsttError
from utils.io import (
    load_model,
    parse_scenario,
    read_trajectory,
    save_model,
    write_report,
    write_train_log,
    write_trajectory,
)
from utils.logger import logger

app = typer.Typer(name="pinstt", help="Neural spatiotemporal tubes for reach-avoid-stay control.",
                  no_args_is_help=True, add_completion=False)

SeedOverride = typer.Option(None, "--seed-override", help="Replace training and simulation seeds")
LogLevel = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR")


# -----------------------------
# Helpers
# -----------------------------
def _command(func):
    """Map library errors to documented exit codes with a one-line message"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except typer.Exit:
            raise
        except PinsttError as exc:
            typer.echo(f"error: {exc}", err=True)
            raise typer.Exit(code=exc.exit_code)
        except OSError as exc:
            typer.echo(f"error: {exc}", err=True)
            raise typer.Exit(code=IO_EXIT_CODE)

    return wrapper


def _setup(log_level: Optional[str]):
    problems = validate_config(current_config)
    if problems:
        typer.echo("config: " + "; ".join(problems), err=True)
    if log_level:
        logger.configure(level=log_level)


def _load_bundle(path: Path, seed_override: Optional[int]) -> ScenarioBundle:
    bundle = parse_scenario(path)
    if seed_override is None:
        return bundle
    return bundle.model_copy(update={
        "training": bundle.training.model_copy(update={"seed": seed_override}),
        "simulation": bundle.simulation.model_copy(update={"seed": seed_override}),
    })


# -----------------------------
# Commands
# -----------------------------
@app.command()
@_command
def synth(
    scenario: Path = typer.Argument(..., help="Scenario file (.scn)"),
    out: Path = typer.Option(Path("tube.pnst"), "-o", "--out", help="Model file to write"),
    log_csv: Optional[Path] = typer.Option(None, "--log", help="Training log CSV (default: <out>.csv)"),
    seed_override: Optional[int] = SeedOverride,
    log_level: Optional[str] = LogLevel,
):
    """Train a tube; exit 2 when the loss tolerance is not reached."""
    _setup(log_level)
    bundle = _load_bundle(scenario, seed_override)
    net, log = train(bundle.scenario, bundle.training)
    save_model(net, out)
    write_train_log(log, log_csv or out.with_suffix(".csv"))
    typer.echo(json.dumps({"model": str(out), "converged": log.converged, "epochs": log.final_epoch,
                           "best_loss": log.best_loss, "seconds": log.wall_clock}))
    if not log.converged:
        raise typer.Exit(code=2)


@app.command()
@_command
def verify(
    model: Path = typer.Argument(..., help="Model file (.pnst)"),
    scenario: Path = typer.Argument(..., help="Scenario file (.scn)"),
    report: Optional[Path] = typer.Option(None, "--report", help="Also write the certificate here"),
    seed_override: Optional[int] = SeedOverride,
    log_level: Optional[str] = LogLevel,
):
    """Certify a tube; exit 3 when the certificate fails."""
    _setup(log_level)
    net = load_model(model)
    bundle = _load_bundle(scenario, seed_override)
    cert = certify(net, bundle.scenario, bundle.training)
    text = cert.to_report()
    if report is not None:
        write_report(text, report)
    typer.echo(text)
    if not cert.passed:
        raise typer.Exit(code=3)


@app.command()
@_command
def simulate(
    model: Path = typer.Argument(..., help="Model file (.pnst)"),
    scenario: Path = typer.Argument(..., help="Scenario file (.scn)"),
    out_dir: Path = typer.Option(Path(current_config.OUTPUT_DIR), "-o", "--out-dir"),
    seed_override: Optional[int] = SeedOverride,
    log_level: Optional[str] = LogLevel,
):
    """Closed-loop rollout; exit 0 iff the target is reached with no clamp events."""
    _setup(log_level)
    net = load_model(model)
    bundle = _load_bundle(scenario, seed_override)
    traj, metrics = run_bundle(bundle, net)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory(traj, out_dir / "trajectory.csv")
    write_report(metrics.to_report(), out_dir / "metrics.json")
    typer.echo(metrics.to_report())
    if not metrics.success:
        raise typer.Exit(code=1)


@app.command()
@_command
def plot(
    trajectory: Path = typer.Argument(..., help="Trajectory CSV from simulate"),
    scenario: Path = typer.Argument(..., help="Scenario file (.scn)"),
    out: Path = typer.Option(Path("tube.svg"), "-o", "--out"),
    model: Optional[Path] = typer.Option(None, "--model", help="Draw tube slices from this model"),
    log_level: Optional[str] = LogLevel,
):
    """Write an SVG of the scenario, tube and trajectory."""
    _setup(log_level)
    bundle = parse_scenario(scenario)
    frame = read_trajectory(trajectory)
    columns = [f"x_1_{j}" for j in range(1, bundle.scenario.dimension + 1)]
    net = load_model(model) if model is not None else None
    plot_tube(bundle.scenario, out, outputs=frame[columns].to_numpy(), net=net)
    typer.echo(str(out))


@app.command()
@_command
def info(model: Path = typer.Argument(..., help="Model file (.pnst)")):
    """Print architecture metadata of a model file."""
    net = load_model(model)
    typer.echo(json.dumps({"n": net.n, "t_c": net.t_c, "widths": list(net.widths),
                           "parameters": net.num_params}, indent=2))


if __name__ == "__main__":
    app()
