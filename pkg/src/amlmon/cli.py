"""Command-line entry points: learn, capture, report, serve, datagen."""

from __future__ import annotations

import logging
import sys
from datetime import date
from pathlib import Path

import click

from .datagen import GeneratorConfig, emit, generate, load_config, self_check
from .ingest import ConfigurationError
from .model import ClientKind
from .report import render_phase_reports
from .service import DEFAULT_K, learn_all, run_analysis
from .store import DATA_DIR_ENV, Store, StoreError

LOGGER = logging.getLogger(__name__)


@click.group()
@click.option(
    "--data-dir",
    envvar=DATA_DIR_ENV,
    default="data",
    show_default=True,
    type=click.Path(path_type=Path),
    help=f"Store directory (or set {DATA_DIR_ENV}).",
)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def main(ctx: click.Context, data_dir: Path, verbose: bool) -> None:
    """Behavior-profile transaction monitoring toolkit."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = Store(data_dir)


@main.command()
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--k-singular", default=DEFAULT_K[ClientKind.SINGULAR_PERSON],
              show_default=True, type=int)
@click.option("--k-entity", default=DEFAULT_K[ClientKind.LEGAL_ENTITY],
              show_default=True, type=int)
@click.pass_obj
def learn(store: Store, seed: int, k_singular: int, k_entity: int) -> None:
    """Profile the reference cycle and learn the segment models."""
    try:
        models = learn_all(
            store,
            seed=seed,
            k_by_segment={
                ClientKind.SINGULAR_PERSON: k_singular,
                ClientKind.LEGAL_ENTITY: k_entity,
            },
        )
    except StoreError as exc:
        raise click.ClickException(str(exc))
    for segment, model in models.items():
        click.echo(
            f"{segment.value}: {model.clustering.k} clusters,"
            f" {model.ruleset.n_rules} rules"
            f" ({model.ruleset.misclassified} misclassified),"
            f" version {model.version}"
        )


@main.command()
@click.option("--date", "analysis_date", required=True,
              type=click.DateTime(formats=["%Y-%m-%d"]),
              help="Analysis date; the window is the month before it.")
@click.option("--mar", default=0.0, show_default=True, type=float,
              help="Additional risk margin, percent.")
@click.option("--product", default=None, help="Restrict to one product.")
@click.option("--client", default=None, help="Restrict to one client id.")
@click.pass_obj
def capture(store: Store, analysis_date, mar: float,
            product: str | None, client: str | None) -> None:
    """Run the three capture phases and persist the analysis run."""
    if product and client:
        raise click.UsageError("--product and --client are mutually exclusive")
    scope = {"kind": "all"}
    if product:
        scope = {"kind": "product", "product": product}
    elif client:
        scope = {"kind": "client", "client": client}
    try:
        run = run_analysis(store, analysis_date.date(), mar, scope)
    except StoreError as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"run {run.run_id}: {len(run.items)} suspicions"
        f" from {run.profile_count} profiles"
    )
    if run.recall is not None:
        click.echo(f"ground-truth recall: {run.recall:.4f}")


@main.command()
@click.option("--run", "run_id", required=True, help="Run id to render.")
@click.option("--unmasked", is_flag=True,
              help="Print real identifiers (trusted use only).")
@click.pass_obj
def report(store: Store, run_id: str, unmasked: bool) -> None:
    """Render the three-phase text report for a stored run."""
    try:
        run = store.load_run(run_id)
    except KeyError:
        raise click.ClickException(f"unknown run {run_id}")
    click.echo(render_phase_reports(run, masked=not unmasked), nl=False)


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--token", default=None, envvar="AMLMON_TOKEN",
              help="Static bearer token required on API calls.")
@click.option("--frontend", default=None, type=click.Path(path_type=Path),
              help="Directory with built frontend assets to serve at /.")
@click.pass_obj
def serve(store: Store, port: int, host: str,
          token: str | None, frontend: Path | None) -> None:
    """Serve the JSON API (and optionally the frontend) over HTTP."""
    import uvicorn

    from .api import create_app

    app = create_app(store, token=token, frontend_dir=frontend)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, path_type=Path),
              help="key=value generator config; defaults apply if omitted.")
@click.option("--out", "out_dir", default=None, type=click.Path(path_type=Path),
              help="Output directory [default: the store's inputs/].")
@click.option("--gzip", "compress", is_flag=True, help="Write gzip-compressed files.")
@click.option("--self-check/--no-self-check", "check", default=True,
              show_default=True,
              help="Verify every injected account trips a rule.")
@click.pass_obj
def datagen(store: Store, config_path: Path | None, out_dir: Path | None,
            compress: bool, check: bool) -> None:
    """Generate a synthetic population with labeled scenarios."""
    try:
        config = load_config(config_path) if config_path else GeneratorConfig()
        config.validate()
        dataset = generate(config)
    except ConfigurationError as exc:
        raise click.ClickException(str(exc))
    if check:
        missed = self_check(dataset)
        if missed:
            raise click.ClickException(
                "generator self-check failed; undetectable injected accounts: "
                + ", ".join(k.as_str() for k in missed)
            )
    paths = emit(dataset, out_dir or store.inputs_dir, compress=compress)
    for name in sorted(paths):
        click.echo(f"{name}: {paths[name]}")


if __name__ == "__main__":  # pragma: no cover
    main()
