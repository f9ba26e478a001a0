"""Command-line interface.

Subcommands mirror the pipeline stages: ``weights`` (matrices to weight
vector and consistency report), ``score`` (layers to rasters and the
combined surface), ``candidates`` (surface to tiered sites), ``solve``
(instance JSON to solution or curve), ``pipeline`` (everything), ``report``
(re-render artifacts from a report.json), and ``fixture`` (write the bundled
demo project).

Exit codes: 0 success, 2 validation error, 3 solver refusal, 4 I/O error.
"""

from __future__ import annotations

import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import click

from .errors import BranchSiteError, SolverRefused, StageError
from .fixture import write_fixture
from .mclp import (
    coverage_curve,
    coverage_table_csv,
    improve_swap,
    instance_from_json,
    solve_exact,
    solve_greedy,
)
from .overlay import esri_ascii_text, score_points_geojson
from .project import (
    build_candidate_set,
    build_surface,
    evaluate_weights,
    load_project,
    render_report,
    run_pipeline,
    write_pipeline_artifacts,
)
from .candidates import candidates_geojson

LOCK_NAME = ".branchsite.lock"


@contextmanager
def _locked_output(out_dir: Path):
    """One CLI process per output directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OSError(
            f"output directory {out_dir} is in use by another run "
            f"(remove {lock} if that run is gone)"
        ) from None
    try:
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Project JSON file.")
@click.option("--out", "out_dir", type=click.Path(), default="out",
              help="Output directory (default: ./out).")
@click.option("--seed", type=int, default=0,
              help="Random seed (fixture generation only).")
@click.pass_context
def cli(ctx, config_path, out_dir, seed):
    """Site-selection toolkit: criterion weighting, suitability overlay,
    candidate extraction, and maximal covering solvers."""
    ctx.obj = {
        "config": None if config_path is None else Path(config_path),
        "out": Path(out_dir),
        "seed": seed,
    }


def _require_config(ctx) -> Path:
    path = ctx.obj["config"]
    if path is None:
        raise click.UsageError("this command needs --config <project.json>")
    return path


@cli.command()
@click.pass_context
def weights(ctx):
    """Derive criterion weights and the consistency report."""
    cfg = load_project(_require_config(ctx))
    vector, gates = evaluate_weights(cfg)
    out = ctx.obj["out"]
    with _locked_output(out):
        payload = {
            "config_digest": cfg.digest,
            "mode": cfg.mode,
            "weights": vector.as_dict(),
            "consistency": [
                {"matrix": g.matrix_id, "cr": g.cr, "threshold": g.threshold,
                 "passed": g.passed}
                for g in gates
            ],
        }
        (out / "weights.json").write_text(_dump(payload))
    for g in gates:
        click.echo(f"{g.matrix_id}: CR={g.cr:.6f} "
                   f"{'pass' if g.passed else 'FAIL'}")
    for item, value in vector.as_dict().items():
        click.echo(f"{item}: {value:.6f}")
    click.echo(f"wrote {out / 'weights.json'}")


@cli.command()
@click.pass_context
def score(ctx):
    """Rasterize every criterion and write the combined score surface."""
    cfg = load_project(_require_config(ctx))
    surface = build_surface(cfg)
    out = ctx.obj["out"]
    with _locked_output(out):
        (out / "score.asc").write_text(
            esri_ascii_text(surface.score.grid, surface.score.values))
        meta = {"config_digest": cfg.digest, "mode": cfg.mode}
        (out / "score_points.geojson").write_text(
            _dump(score_points_geojson(surface.score, meta=meta)))
        raster_dir = out / "rasters"
        raster_dir.mkdir(exist_ok=True)
        for raster in surface.rasters:
            (raster_dir / f"{raster.criterion_id}.asc").write_text(
                esri_ascii_text(raster.grid, raster.values))
    click.echo(f"wrote {out / 'score.asc'} and {len(surface.rasters)} criterion rasters")


@cli.command()
@click.pass_context
def candidates(ctx):
    """Extract, tier, and merge candidate sites."""
    cfg = load_project(_require_config(ctx))
    surface = build_surface(cfg)
    tiered, merged = build_candidate_set(cfg, surface)
    out = ctx.obj["out"]
    with _locked_output(out):
        meta = {"config_digest": cfg.digest, "mode": cfg.mode}
        (out / "candidates.geojson").write_text(
            _dump(candidates_geojson(merged, meta=meta)))
    click.echo(f"{len(tiered)} proposed + {len(merged) - len(tiered)} existing "
               f"-> {out / 'candidates.geojson'}")


@cli.command()
@click.option("--instance", "instance_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="MCLP instance JSON.")
@click.option("--p", "p_single", type=int, default=None,
              help="Solve for one facility budget.")
@click.option("--p-max", type=int, default=None,
              help="Solve the coverage curve for p = 1..p_max.")
@click.option("--method", type=click.Choice(["exact", "greedy+swap"]),
              default="exact", show_default=True)
@click.option("--override-cap", is_flag=True,
              help="Run the exact solver above its size cap.")
@click.pass_context
def solve(ctx, instance_path, p_single, p_max, method, override_cap):
    """Solve an MCLP instance JSON for a budget or a whole curve."""
    if (p_single is None) == (p_max is None):
        raise click.UsageError("pass exactly one of --p or --p-max")
    inst = instance_from_json(Path(instance_path).read_text())
    out = ctx.obj["out"]
    with _locked_output(out):
        if p_single is not None:
            if method == "exact":
                sol = solve_exact(inst, p_single, override_cap=override_cap)
            else:
                sol = improve_swap(inst, solve_greedy(inst, p_single))
            (out / "solution.json").write_text(_dump(sol.to_dict()))
            click.echo(f"p={sol.p}: {sol.coverage_pct:g}% covered "
                       f"by {', '.join(sol.selected)}")
        else:
            curve = coverage_curve(inst, p_max, method=method,
                                   override_cap=override_cap)
            (out / "solutions.json").write_text(
                _dump({"rows": [r.to_dict() for r in curve.rows]}))
            (out / "coverage.csv").write_text(coverage_table_csv(curve))
            for row in curve.rows:
                click.echo(f"p={row.p}: {row.coverage_pct:g}% "
                           f"({', '.join(row.selected)})")


@cli.command()
@click.pass_context
def pipeline(ctx):
    """Run the whole pipeline and write every artifact."""
    cfg = load_project(_require_config(ctx))
    report = run_pipeline(cfg)
    out = ctx.obj["out"]
    with _locked_output(out):
        written = write_pipeline_artifacts(report, out)
    if report.data["extraction_empty"]:
        click.echo("no cell reached the extraction threshold; "
                   "no coverage table was produced")
    else:
        for row in report.data["curve"]:
            click.echo(f"p={row['p']}: {row['coverage_pct']:g}% "
                       f"({', '.join(row['selected'])})")
    click.echo(f"wrote {len(written)} files to {out}")


@cli.command()
@click.option("--report", "report_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="A report.json from a previous run.")
@click.pass_context
def report(ctx, report_path):
    """Re-render artifacts from an existing report."""
    data = json.loads(Path(report_path).read_text())
    out = ctx.obj["out"]
    with _locked_output(out):
        written = render_report(data, out)
    click.echo(f"re-rendered {len(written)} files to {out}")


@cli.command()
@click.pass_context
def fixture(ctx):
    """Write the bundled demo project ("isfahan20") to the output directory."""
    out = ctx.obj["out"]
    config_path = write_fixture(out, seed=ctx.obj["seed"])
    click.echo(f"wrote demo project to {config_path}")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, SolverRefused):
        return 3
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, BranchSiteError):
        return 2
    if isinstance(exc, OSError):
        return 4
    return 1


def main(argv=None) -> int:
    try:
        cli(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 130
    except click.ClickException as exc:
        exc.show()
        return 2
    except (BranchSiteError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
