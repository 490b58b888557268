"""
Command line entry points: sweep, collapse, compile, verify, serve
"""
import sys
from pathlib import Path
from typing import Optional

import click

from app.config.logger import get_logger
from app.config.settings import settings
from app.config.sweep_config import load_scaling_grid, load_sweep_config
from app.exceptions import OutputError
from app.services.analysis import load_data_points
from app.services.compiler import compile_naive, compile_optimized, gate_stats, lower_to_cnot
from app.services.fss import collapse_csv, render_report, write_collapsed_curve, write_report, write_surface
from app.services.gf2_core import BitMatrix, backfill_optimize, rank
from app.services.qasm import export_circuit
from app.services.sweep import emit_outputs, run_sweep
from app.services.verifier import run_checks

logger = get_logger("cli")


@click.group()
def cli():
    """Measurement-driven entanglement transition toolkit"""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Sweep YAML file")
@click.option("--emit-circuits", "emit_dir", type=click.Path(file_okay=False), default=None, help="Write QASM for the first samples here")
@click.option("--output", "output_dir", type=click.Path(file_okay=False), default=None, help="Root for run directories")
@click.option("--quiet", is_flag=True, help="Hide progress bars")
def sweep(config_path: str, emit_dir: Optional[str], output_dir: Optional[str], quiet: bool):
    """Run a sweep and write its run directory"""
    try:
        cfg = load_sweep_config(config_path)
        if emit_dir:
            cfg = cfg.model_copy(update={"emit_circuits_dir": emit_dir})
        result = run_sweep(cfg, progress=not quiet)
        run_dir = cfg.run_dir(output_dir)
        emit_outputs(result, str(run_dir))
    except (ValueError, OutputError) as e:
        raise click.ClickException(str(e))
    click.echo(f"{len(result.points)} data points written to {run_dir}")


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False), help="DataPoint CSV")
@click.option("--grid", "grid_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Scaling grid YAML")
@click.option("--surface", "surface_path", type=click.Path(dir_okay=False), default=None, help="Write the cost surface CSV")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="Write the fit report")
@click.option("--collapsed", "collapsed_path", type=click.Path(dir_okay=False), default=None, help="Write the rescaled (t, q) curve CSV")
@click.option("--workers", type=int, default=1, show_default=True)
def collapse(
    data_path: str,
    grid_path: Optional[str],
    surface_path: Optional[str],
    report_path: Optional[str],
    collapsed_path: Optional[str],
    workers: int,
):
    """Finite-size scaling collapse of a DataPoint CSV"""
    try:
        grid = load_scaling_grid(grid_path)
        result = collapse_csv(data_path, grid, settings.VITRIQ_THREADS or workers)
        if surface_path:
            write_surface(surface_path, result)
        if report_path:
            write_report(report_path, result, grid)
        if collapsed_path:
            write_collapsed_curve(collapsed_path, load_data_points(data_path), result, grid)
    except (ValueError, OutputError) as e:
        raise click.ClickException(str(e))
    click.echo(render_report(result, grid), nl=False)


@cli.command(name="compile")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Matrix text file ('R L' header)")
@click.option("--naive", is_flag=True, help="Two-register construction on the matrix as given")
@click.option("--emit-qasm", is_flag=True, help="Print or write OpenQASM 2.0")
@click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None, help="QASM destination")
def compile_matrix(matrix_path: str, naive: bool, emit_qasm: bool, output_path: Optional[str]):
    """Compile a parity-check matrix and report gate counts"""
    try:
        matrix = BitMatrix.from_text(Path(matrix_path).read_text(encoding="utf-8"))
        if naive:
            circuit = lower_to_cnot(compile_naive(matrix))
        else:
            circuit = lower_to_cnot(compile_optimized(backfill_optimize(matrix)))
    except (ValueError, OutputError) as e:
        raise click.ClickException(str(e))

    stats = gate_stats(circuit)
    click.echo(
        f"rows={matrix.n_rows} L={matrix.n_cols} rank={rank(matrix)} qubits={stats.n_qubits} "
        f"cnot={stats.n_cnot} h={stats.n_h} measure={stats.n_measure} depth={stats.depth}",
        err=emit_qasm and output_path is None,
    )
    if emit_qasm:
        text = export_circuit(circuit)
        if output_path:
            Path(output_path).write_text(text, encoding="utf-8")
            logger.info(f"QASM written: {output_path}")
        else:
            click.echo(text, nl=False)


@cli.command()
@click.option("--quick", is_flag=True, help="Reduced instance counts")
@click.option("--seed", type=int, default=0, show_default=True)
def verify(quick: bool, seed: int):
    """Run the oracle suite; exits nonzero if any check fails"""
    results = run_checks(quick=quick, seed=seed)
    for r in results:
        status = click.style("PASS", fg="green") if r.passed else click.style("FAIL", fg="red")
        click.echo(f"{status} {r.name:<20} {r.seconds:7.2f}s  {r.detail}")
    if not all(r.passed for r in results):
        sys.exit(1)


@cli.command()
def serve():
    """Start the HTTP API"""
    from run import run_concurrently

    run_concurrently()


if __name__ == "__main__":
    cli()
