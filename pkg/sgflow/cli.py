"""Console script for sgflow."""

import json
import logging
import os
from dataclasses import replace
from typing import Any, Dict, List, NoReturn, Optional

import typer
from rich.console import Console

from sgflow import __version__
from sgflow.constants import GraphKind, NoiseKind, Scale, Variant, VerifyCol
from sgflow.drift import NonConvergence
from sgflow.ergodics import (
    ErgodicComparison,
    concentration_check,
    decay_rate_fit,
    default_functionals,
    extinction_time,
    occupation_average,
    plasma_decay_bound,
)
from sgflow.evolve import PicardStall, Trajectory, solve_additive, solve_multiplicative, zero_path
from sgflow.noise import NoiseSpec, sample_path
from sgflow.presets import (
    ConfigError,
    ExperimentPreset,
    build_all,
    build_coefficient,
    get_preset,
    list_presets,
    load_config,
    noise_spec,
    save_config,
)
from sgflow.utils import ensure_outdir, path_seed, reset_timings, timed, write_manifest
from sgflow.verify import SUITES, run_suites

CONTEXT_SETTINGS = dict(help_option_names=["-h", "--help"])
app = typer.Typer(context_settings=CONTEXT_SETTINGS, add_completion=False)

logger = logging.getLogger("SGFLOW")

DEFAULT_PRESET = "tvflow_1d"


@app.callback(invoke_without_command=True, no_args_is_help=True)
def main(
    version: bool = typer.Option(False, "--version", "-V", help="Show version."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose info."),
):
    """SGFLOW: simulator and property lab for singular stochastic gradient flows."""
    console = Console()
    console.rule("[bold blue]SGFLOW[/bold blue]")
    console.print(f"Version: {__version__}", justify="center")
    console.print("Author: Jianhua Wang", justify="center")
    console.print("Email: jianhua.mert@gmail.com", justify="center")
    if version:
        typer.echo(f"SGFLOW version: {__version__}")
        raise typer.Exit()
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logging.info("Verbose mode is on.")
    else:
        for name in [
            "SGFLOW",
            "Spectral",
            "Graphs",
            "Drift",
            "Noise",
            "Evolve",
            "Ergodics",
            "Presets",
            "Verify",
            "Utils",
        ]:
            logging.getLogger(name).setLevel(logging.INFO)


def _load_preset(
    config: Optional[str],
    preset: Optional[str],
    variant: Optional[Variant],
    seed: Optional[int] = None,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
    paths: Optional[int] = None,
) -> ExperimentPreset:
    """Preset from a TOML file or the catalogue, with command-line overrides applied."""
    try:
        exp = load_config(config) if config else get_preset(preset or DEFAULT_PRESET)
        if variant is not None:
            exp = exp.with_variant(variant)
        exp = exp.with_overrides(dt=dt, horizon=horizon)
        if seed is not None:
            exp = replace(exp, diagnostics=replace(exp.diagnostics, master_seed=seed))
        if paths is not None:
            exp = replace(exp, diagnostics=replace(exp.diagnostics, n_paths=paths))
    except ConfigError as e:
        _config_exit(e)
    reset_timings()
    return exp


def _config_exit(err: ConfigError) -> NoReturn:
    console = Console()
    console.print("[red]Invalid configuration:[/red]")
    for msg in err.errors:
        console.print(f"  {msg}")
    raise typer.Exit(2) from err


def _numerical_exit(err: Exception) -> NoReturn:
    logger.error(f"Numerical failure: {err}")
    raise typer.Exit(1) from err


@timed("solve")
def _trajectory(exp: ExperimentPreset, verbose: bool = False) -> Trajectory:
    space, op, x0 = build_all(exp)
    cfg = exp.solver
    seed = path_seed(exp.diagnostics.master_seed, 0)
    if exp.variant == Variant.MULTIPLICATIVE:
        return solve_multiplicative(op, x0, build_coefficient(exp, space), seed, cfg, verbose)
    spec = noise_spec(exp)
    if spec.kind == NoiseKind.ZERO:
        path = zero_path(op, cfg.dt, cfg.n_steps)
    else:
        path = sample_path(space, spec, seed, cfg.dt, cfg.n_steps, modes=cfg.m)
    return solve_additive(op, x0, path, cfg, verbose=verbose)


def _run_trajectory(exp: ExperimentPreset, verbose: bool = False) -> Trajectory:
    try:
        return _trajectory(exp, verbose)
    except (NonConvergence, PicardStall) as e:
        _numerical_exit(e)


def _finish(outdir: str, exp: ExperimentPreset, command: str, extra: Optional[Dict[str, Any]] = None) -> None:
    path = write_manifest(outdir, exp.to_dict(), exp.diagnostics.master_seed, command, extra)
    logger.info(f"Wrote {path}")


@app.command(
    name="simulate",
    help="Simulate one trajectory and write its diagnostics.",
)
def run_simulate(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="TOML configuration."),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Preset name."),
    variant: Optional[Variant] = typer.Option(None, "--variant", help="Noise variant."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Master seed."),
    outdir: str = typer.Option(".", "--out", "-o", help="Output directory."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Final time."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step."),
    states: bool = typer.Option(False, "--states", help="Also write the binary state dump."),
    progress: bool = typer.Option(False, "--progress", help="Show a progress bar."),
):
    """Simulate one trajectory and write its diagnostics."""
    exp = _load_preset(config, preset, variant, seed, horizon, dt)
    traj = _run_trajectory(exp, progress)
    ensure_outdir(outdir)
    traj.write_csv(os.path.join(outdir, "trajectory.csv"))
    if states:
        traj.write_states(os.path.join(outdir, "states.bin"))
    if traj.picard_log is not None:
        traj.picard_log.to_csv(os.path.join(outdir, "picard_log.csv"), index=False)
    _finish(outdir, exp, "simulate")


@app.command(
    name="ergodic",
    help="Occupation averages of the test functionals and Lyapunov concentration.",
)
def run_ergodic(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="TOML configuration."),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Preset name."),
    variant: Variant = typer.Option(Variant.ADDITIVE, "--variant", help="Noise variant."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Master seed."),
    outdir: str = typer.Option(".", "--out", "-o", help="Output directory."),
    workers: int = typer.Option(1, "--workers", "-w", help="Number of worker processes."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Final time T."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step."),
    paths: Optional[int] = typer.Option(None, "--paths", "-n", help="Number of paths."),
    compare: bool = typer.Option(False, "--compare", help="Also start from -x and compare."),
):
    """Occupation averages of the test functionals and Lyapunov concentration."""
    exp = _load_preset(config, preset, variant, seed, horizon, dt, paths)
    if exp.variant == Variant.MULTIPLICATIVE:
        _config_exit(ConfigError(["variant: ergodic runs need additive noise"]))
    space, op, x0 = build_all(exp)
    spec = noise_spec(exp)
    dg = exp.diagnostics
    functionals = default_functionals(space)
    ensure_outdir(outdir)
    extra: Dict[str, Any] = {"n_paths": dg.n_paths, "workers": workers}
    try:
        est = timed("occupation")(occupation_average)(
            op, spec, x0, functionals, exp.solver, dg.n_paths, dg.master_seed, workers
        )
        est.to_frame().to_csv(os.path.join(outdir, "occupation.csv"), index=False)
        if compare:
            other = occupation_average(
                op, spec, -x0, functionals, exp.solver, dg.n_paths, dg.master_seed, workers
            )
            cmp = ErgodicComparison(est, other)
            table = est.to_frame()
            table["estimate_y"] = other.estimate
            table["gap"] = cmp.gaps
            table["combined_stderr"] = cmp.combined_se
            table["within"] = cmp.within
            table.to_csv(os.path.join(outdir, "comparison.csv"), index=False)
        conc = timed("concentration")(concentration_check)(
            op, spec, x0, dg.radii, exp.solver, dg.n_paths, dg.master_seed, workers
        )
        conc.to_csv(os.path.join(outdir, "concentration.csv"), index=False)
    except NonConvergence as e:
        _numerical_exit(e)
    _finish(outdir, exp, "ergodic", extra)


@app.command(
    name="extinction",
    help="Measure the extinction time of a deterministic run against its bound.",
)
def run_extinction(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="TOML configuration."),
    preset: Optional[str] = typer.Option("fastdiff_1d", "--preset", "-p", help="Preset name."),
    outdir: str = typer.Option(".", "--out", "-o", help="Output directory."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Final time."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step."),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Coercivity exponent, default from preset."),
):
    """Measure the extinction time of a deterministic run against its bound."""
    exp = _load_preset(config, preset, Variant.DETERMINISTIC, None, horizon, dt)
    _, op, _ = build_all(exp)
    traj = _run_trajectory(exp)
    alpha = alpha if alpha is not None else exp.diagnostics.alpha
    report = extinction_time(op, traj, alpha, exp.solver.extinction_threshold)
    ensure_outdir(outdir)
    traj.write_csv(os.path.join(outdir, "trajectory.csv"))
    with open(os.path.join(outdir, "extinction.json"), "w") as f:
        json.dump(report.to_dict(), f, indent=4)
    Console().print(
        f"Extinction time: {report.time:g}  bound: {report.bound:g}  holds: {report.holds}"
    )
    _finish(outdir, exp, "extinction")


@app.command(
    name="decay",
    help="Fit the decay exponent of a deterministic run.",
)
def run_decay(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="TOML configuration."),
    preset: Optional[str] = typer.Option("plasma_2d", "--preset", "-p", help="Preset name."),
    outdir: str = typer.Option(".", "--out", "-o", help="Output directory."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Final time."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step."),
):
    """Fit the decay exponent of a deterministic run."""
    exp = _load_preset(config, preset, Variant.DETERMINISTIC, None, horizon, dt)
    _, op, _ = build_all(exp)
    traj = _run_trajectory(exp)
    ensure_outdir(outdir)
    traj.write_csv(os.path.join(outdir, "trajectory.csv"))
    window = exp.diagnostics.decay_window
    try:
        slope = decay_rate_fit(traj, window)
    except ValueError as e:
        logger.error(str(e))
        raise typer.Exit(1) from e
    result: Dict[str, Any] = {"window": list(window), "slope": slope}
    if op.graph.kind == GraphKind.LOG_PLASMA:
        table, holds = plasma_decay_bound(op, traj)
        table.to_csv(os.path.join(outdir, "plasma_bounds.csv"), index=False)
        result["theta_bound_holds"] = holds
    with open(os.path.join(outdir, "decay.json"), "w") as f:
        json.dump(result, f, indent=4)
    Console().print(f"Fitted slope on {window}: {slope:.4f}")
    _finish(outdir, exp, "decay")


@app.command(
    name="picard",
    help="Multiplicative run with the Picard sweep log.",
)
def run_picard(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="TOML configuration."),
    preset: Optional[str] = typer.Option("curveshort_1d", "--preset", "-p", help="Preset name."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Master seed."),
    outdir: str = typer.Option(".", "--out", "-o", help="Output directory."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Final time."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step."),
):
    """Multiplicative run with the Picard sweep log."""
    exp = _load_preset(config, preset, Variant.MULTIPLICATIVE, seed, horizon, dt)
    traj = _run_trajectory(exp, verbose=True)
    ensure_outdir(outdir)
    traj.write_csv(os.path.join(outdir, "trajectory.csv"))
    traj.picard_log.to_csv(os.path.join(outdir, "picard_log.csv"), index=False)
    ratios = traj.picard_log["ratio"].dropna()
    worst = float(ratios.max()) if len(ratios) else float("nan")
    _finish(outdir, exp, "picard", {"max_ratio": worst})


@app.command(
    name="verify",
    help="Run the property suites.",
)
def run_verify(
    suites: Optional[List[str]] = typer.Option(None, "--suite", help="Suite to run, repeatable; default all."),
    scale: Scale = typer.Option(Scale.QUICK, "--scale", help="Problem size."),
    seed: int = typer.Option(0, "--seed", "-s", help="Master seed."),
    workers: int = typer.Option(1, "--workers", "-w", help="Number of worker processes."),
    outdir: Optional[str] = typer.Option(None, "--out", "-o", help="Output directory."),
):
    """Run the property suites."""
    reset_timings()
    try:
        table = run_suites(suites, scale, seed, workers)
    except ValueError as e:
        Console().print(f"[red]{e}[/red]")
        raise typer.Exit(2) from e
    except (NonConvergence, PicardStall) as e:
        _numerical_exit(e)
    console = Console()
    failed = table[~table[VerifyCol.PASSED]]
    for row in failed.itertuples():
        console.print(f"[red]FAILED[/red] {row.suite}/{row.check}: {row.value:.4g} vs {row.threshold:.4g}")
    console.print(f"{len(table) - len(failed)}/{len(table)} checks passed")
    if outdir:
        ensure_outdir(outdir)
        table.to_csv(os.path.join(outdir, "verify.csv"), index=False)
        write_manifest(outdir, {"suites": suites or list(SUITES), "scale": scale.value}, seed, "verify")
    if len(failed):
        raise typer.Exit(1)


@app.command(
    name="dump-noise",
    help="Write the increments of a noise path as CSV.",
)
def run_dump_noise(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="TOML configuration."),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Preset name."),
    variant: Variant = typer.Option(Variant.ADDITIVE, "--variant", help="Noise variant."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Master seed."),
    outdir: str = typer.Option(".", "--out", "-o", help="Output directory."),
    horizon: Optional[float] = typer.Option(None, "--horizon", help="Final time."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step."),
    index: int = typer.Option(0, "--index", "-i", help="Path index in the seed block."),
):
    """Write the increments of a noise path as CSV."""
    exp = _load_preset(config, preset, variant, seed, horizon, dt)
    space, _, _ = build_all(exp)
    cfg = exp.solver
    if exp.variant == Variant.MULTIPLICATIVE:
        # the Wiener path behind the multiplicative run
        spec = NoiseSpec(NoiseKind.WIENER, exp.noise.sigma, exp.noise.rho)
    else:
        spec = noise_spec(exp)
    seed_i = path_seed(exp.diagnostics.master_seed, index)
    path = sample_path(space, spec, seed_i, cfg.dt, cfg.n_steps, modes=cfg.m)
    ensure_outdir(outdir)
    path.write_csv(os.path.join(outdir, "noise.csv"))
    _finish(outdir, exp, "dump-noise", {"path_index": index, "path_seed": seed_i})


@app.command(
    name="presets",
    help="List the preset catalogue or write a preset as TOML.",
)
def run_presets(
    name: Optional[str] = typer.Argument(None, help="Preset to write."),
    output: Optional[str] = typer.Option(None, "--out", "-o", help="TOML file to write."),
):
    """List the preset catalogue or write a preset as TOML."""
    console = Console()
    if name is None:
        for preset_name in list_presets():
            exp = get_preset(preset_name)
            kinds = ", ".join(v.value for v in exp.variants)
            console.print(f"{preset_name}: {exp.operator.form.value}/{exp.operator.graph.value} [{kinds}]")
        return
    try:
        exp = get_preset(name)
    except ConfigError as e:
        _config_exit(e)
    path = output or f"{name}.toml"
    save_config(exp, path)
    console.print(f"Wrote {path}")


if __name__ == "__main__":
    app(main)
