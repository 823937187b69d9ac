"""`plan` command line: batch runs, the service, field generation, allocation."""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click
import numpy as np

from .allocation import CellPrior, ExponentialDetection, evaluate, optimize
from .environment import gyre_field, uniform_field
from .geo import Disk, GeoPoint, GridSpec, grid_aggregate
from .pipeline import load_config, load_snapshot_csv, run
from .units import NM_M, parse_time


@click.group()
def main():
    """Bayesian search planning: priors, drift, posterior chains, allocation."""


@main.command("run")
@click.argument("config_path", type=click.Path(exists=True))
def run_cmd(config_path):
    """Execute a batch pipeline from a JSON config."""
    config = load_config(config_path)
    manifest = run(config)
    click.echo(f"status: {manifest.status}")
    for stage in manifest.stages:
        digest = stage.get("snapshot_digest", "")[:12]
        secs = stage.get("seconds", "")
        click.echo(f"  {stage['label']:<24} {secs!s:>8}s  {digest}")
    if manifest.status != "ok":
        click.echo(f"failed at: {manifest.failed_stage}: {manifest.error}", err=True)
        sys.exit(1)
    click.echo(f"artifacts: {config.output_dir}")


@main.command("serve")
@click.argument("config_path", type=click.Path(exists=True), required=False)
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(config_path, port, host):
    """Start the planning service (optionally with a default config)."""
    import uvicorn

    from .service import create_app

    default = load_config(config_path) if config_path else None
    app = create_app(default)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("envgen")
@click.argument("shape", type=click.Choice(["uniform", "gyre"]))
@click.option("--kind", type=click.Choice(["current", "wind"]), required=True)
@click.option("--center", required=True, help="lat,lon of the field center")
@click.option("--radius-nm", default=150.0, show_default=True)
@click.option("--spacing-nm", default=40.0, show_default=True)
@click.option("--t0", required=True, help="ISO-8601 start time")
@click.option("--t1", required=True, help="ISO-8601 end time")
@click.option("--step-min", default=720.0, show_default=True)
@click.option("--u-kts", default=0.0, help="east speed (uniform)")
@click.option("--v-kts", default=0.0, help="north speed (uniform)")
@click.option("--omega-per-hour", default=0.05, help="rotation rate (gyre)")
@click.option("-o", "--output", type=click.Path(), required=True)
def envgen_cmd(shape, kind, center, radius_nm, spacing_nm, t0, t1, step_min, u_kts, v_kts, omega_per_hour, output):
    """Generate a synthetic analytic velocity field as CSV."""
    lat, lon = (float(v) for v in center.split(","))
    c = GeoPoint(lat, lon)
    start, end = parse_time(t0), parse_time(t1)
    if end <= start:
        raise click.UsageError("t1 must be after t0")
    times = np.arange(start, end + step_min / 2, step_min)
    if shape == "uniform":
        fld = uniform_field(kind, u_kts, v_kts, c, radius_nm * NM_M, spacing_nm * NM_M, times)
    else:
        fld = gyre_field(kind, omega_per_hour, c, radius_nm * NM_M, spacing_nm * NM_M, times)
    Path(output).write_text(fld.to_csv())
    click.echo(f"wrote {fld.n_nodes} nodes x {len(times)} times to {output}")


@main.command("allocate")
@click.argument("cells_csv", type=click.Path(exists=True))
@click.option("--budget", type=float, required=True, help="total effort, hours")
@click.option("-o", "--output", type=click.Path(), required=True)
def allocate_cmd(cells_csv, budget, output):
    """Optimize effort over a cell file (columns: cell_id,p,rho)."""
    with open(cells_csv) as fh:
        rows = list(csv.DictReader(fh))
    ids = [r["cell_id"] for r in rows]
    p = np.array([float(r["p"]) for r in rows])
    rho = np.array([float(r["rho"]) for r in rows])
    prior = CellPrior(p / p.sum())
    det = ExponentialDetection(rho)
    alloc = optimize(prior, det, budget)
    achieved, spent = evaluate(alloc, prior, det)
    with open(output, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cell_id", "p", "rho", "effort_hours"])
        for cid, pp, rr, z in zip(ids, prior.probs, rho, alloc.efforts):
            writer.writerow([cid, repr(float(pp)), repr(float(rr)), repr(float(z))])
    click.echo(f"achieved detection probability {achieved:.6f} spending {spent:.3f} h")


@main.command("heatmap")
@click.argument("snapshot_csv", type=click.Path(exists=True))
@click.option("--center", required=True, help="lat,lon of the grid frame origin")
@click.option("--cell-m", default=NM_M, show_default=True)
@click.option("--radius-nm", default=42.0, show_default=True, help="half-extent")
@click.option("-o", "--output", type=click.Path(), required=True, help=".png/.pgm/.csv")
def heatmap_cmd(snapshot_csv, center, cell_m, radius_nm, output):
    """Render a particle snapshot CSV to a grayscale heatmap."""
    lat, lon = (float(v) for v in center.split(","))
    ps = load_snapshot_csv(Path(snapshot_csv).read_bytes())
    disk = Disk(GeoPoint(lat, lon), radius_nm * NM_M)
    grid = GridSpec.covering_disk(disk, cell_m, margin_cells=0)
    cm = grid_aggregate(ps, grid)
    out = Path(output)
    if out.suffix == ".png":
        out.write_bytes(cm.to_png())
    elif out.suffix == ".pgm":
        out.write_bytes(cm.to_pgm())
    elif out.suffix == ".csv":
        out.write_text(cm.to_csv())
    else:
        raise click.UsageError("output must end in .png, .pgm or .csv")
    click.echo(f"wrote {grid.nx}x{grid.ny} heatmap to {output}")


if __name__ == "__main__":
    main()
