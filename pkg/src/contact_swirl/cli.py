"""
Contact Swirl Solver CLI
"""
import logging
import sys
from typing import Any, Dict, Optional, Tuple

import click

from .core.config import parse_config
from .core.runner import EXIT_GATE_FAILED, EXIT_OK, Runner
from .errors import ConfigError, ContactSwirlError


def _parse_grid(text: Optional[str]) -> Tuple[Optional[int], Optional[int]]:
    if text is None:
        return None, None
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
        raise ConfigError(f"--grid expects NXxNR (e.g. 64x32), got '{text}'")
    return int(parts[0]), int(parts[1])


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _fail(error: ContactSwirlError, verbose: bool) -> None:
    click.echo(f"Error [{error.error_class}]: {error.message}", err=True)
    if verbose:
        import traceback
        traceback.print_exc()
    sys.exit(error.exit_code)


config_option = click.option("--config", "config_path", type=click.Path(),
                             help="YAML config file")
out_option = click.option("--out", default=None, help="Output directory")
grid_option = click.option("--grid", default=None, help="Grid size NXxNR, e.g. 64x32")
windows_option = click.option("--windows", default=None, type=int,
                              help="Number of far-field axial windows")
verbose_option = click.option("--verbose", "-v", is_flag=True, help="Verbose output")


@click.group()
@click.version_option(package_name="contact-swirl-solver")
def cli():
    """Contact Swirl Solver - subsonic swirling flow with a free contact boundary"""
    pass


@cli.command()
@config_option
@out_option
@grid_option
@click.option("--sigma-scale", default=None, type=float,
              help="Scale factor multiplying the entrance perturbation")
@click.option("--seed", default=None, type=int, help="Seed for random profile families")
@windows_option
@verbose_option
def solve(config_path, out, grid, sigma_scale, seed, windows, verbose):
    """
    Run one solve and write fields, free boundary and report.

    Exit codes:
      0: converged, all gates pass
      2: converged but a diagnostic gate failed
      3: configuration or I/O error
      4: numerical state error
      5: divergence
    """
    _setup_logging(verbose)
    try:
        nx, nr = _parse_grid(grid)
        config = parse_config(config_path, {
            "output.out_dir": out, "grid.nx": nx, "grid.nr": nr,
            "profile.scale": sigma_scale, "seed": seed, "diagnostics.windows": windows,
        })
        if verbose:
            click.echo(f"Contact Swirl Solver v{Runner.VERSION}")
            click.echo(f"Output directory: {config.output.out_dir}")
            click.echo(f"Grid: {config.grid.nx}x{config.grid.nr}, L={config.grid.L}")
        runner = Runner(config, config_source=config_path, verbose=verbose)
        exit_code = runner.solve()
    except ContactSwirlError as e:
        _fail(e, verbose)
    if verbose:
        click.echo(f"Solve completed with exit code: {exit_code}")
    sys.exit(exit_code)


@cli.command()
@config_option
@out_option
@grid_option
@click.option("--scales", default=None,
              help="Comma-separated sigma scale factors (overrides the config sweep)")
@click.option("--seed", default=None, type=int, help="Seed for random profile families")
@windows_option
@click.option("--max-workers", default=None, type=int,
              help="Maximum parallel solves (default: config max_workers)")
@verbose_option
def sweep(config_path, out, grid, scales, seed, windows, max_workers, verbose):
    """Run one solve per sigma scale into sigma_<scale> subdirectories."""
    _setup_logging(verbose)
    try:
        nx, nr = _parse_grid(grid)
        overrides: Dict[str, Any] = {
            "output.out_dir": out, "grid.nx": nx, "grid.nr": nr, "seed": seed,
            "diagnostics.windows": windows, "max_workers": max_workers,
        }
        if scales is not None:
            try:
                overrides["sweep"] = [float(s) for s in scales.split(",") if s.strip()]
            except ValueError as e:
                raise ConfigError(f"--scales: {e}") from e
        config = parse_config(config_path, overrides)
        runner = Runner(config, config_source=config_path, verbose=verbose)
        exit_code = runner.sweep()
    except ContactSwirlError as e:
        _fail(e, verbose)
    sys.exit(exit_code)


@cli.command()
@config_option
@out_option
@windows_option
@verbose_option
def diagnose(config_path, out, windows, verbose):
    """Regenerate diagnostics.yaml from a written run directory."""
    _setup_logging(verbose)
    try:
        config = parse_config(config_path, {"output.out_dir": out,
                                            "diagnostics.windows": windows})
        exit_code = Runner(config, config_source=config_path, verbose=verbose).diagnose()
    except ContactSwirlError as e:
        _fail(e, verbose)
    sys.exit(exit_code)


@cli.command()
@config_option
@verbose_option
def verify(config_path, verbose):
    """Run the headless property suite; exit 0 iff every check passes."""
    from .core.verify import run_property_suite

    _setup_logging(verbose)
    try:
        config = parse_config(config_path, {})
        results = run_property_suite(config.gas.to_parameters())
    except ContactSwirlError as e:
        _fail(e, verbose)
    for result in results:
        mark = "PASS" if result.passed else "FAIL"
        click.echo(f"{mark} {result.name}: {result.detail}")
    sys.exit(EXIT_OK if all(r.passed for r in results) else EXIT_GATE_FAILED)


# CLIエントリポイント
def main():
    cli()


if __name__ == "__main__":
    main()
