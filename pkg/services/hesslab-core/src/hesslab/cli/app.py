# =============================================================================
# hesslab - Command-Line Application
# =============================================================================

import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Type

import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from ..core.log import setup_logging
from .commands import (
    cmd_correspondence,
    cmd_overlap,
    cmd_pacbayes,
    cmd_spectra,
    cmd_train,
    cmd_verify_theorem,
)
from .io import error_document
from .run_config import (
    CorrespondenceConfig,
    OverlapConfig,
    PacBayesConfig,
    RunConfig,
    SpectraConfig,
    TheoremConfig,
    TrainConfig,
    load_config,
)

app = typer.Typer(
    name="hesslab",
    help="Layer-wise Hessian structure of fully connected networks.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console(stderr=True)

ConfigOpt = typer.Option(None, "--config", help="JSON run config")
OutOpt = typer.Option(None, "--out", help="Output directory")
SeedOpt = typer.Option(None, "--seed", min=0, help="Seed for every random stream")
ThreadsOpt = typer.Option(None, "--threads", min=1, help="Worker threads")


@app.callback()
def main(
    log_level: str = typer.Option("INFO", "--log-level", help="Log level for stderr"),
) -> None:
    setup_logging(level=log_level)


def _run(
    command: Callable[[Any], Path],
    model: Type[RunConfig],
    config: Optional[Path],
    overrides: Dict[str, Any],
) -> None:
    """Validate, execute, summarize; on failure print the error document and exit nonzero."""
    try:
        cfg = load_config(model, config, overrides)
        manifest = command(cfg)
    except Exception as exc:
        doc, code = error_document(exc)
        if doc["error"] == "internal":
            logger.exception("unexpected failure")
        sys.stderr.write(json.dumps(doc, sort_keys=True, default=str) + "\n")
        raise typer.Exit(code)

    payload = json.loads(manifest.read_text(encoding="utf-8"))
    table = Table(title=f"hesslab {payload['command']}", show_header=True)
    table.add_column("file")
    for name in payload["files"]:
        table.add_row(name)
    console.print(table)
    console.print(f"[green]manifest:[/green] {manifest}")


def _common(out: Optional[str], seed: Optional[int], threads: Optional[int]) -> Dict[str, Any]:
    return {"out": out, "seed": seed, "threads": threads}


@app.command()
def train(
    config: Optional[Path] = ConfigOpt,
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    epochs: Optional[int] = typer.Option(None, "--epochs", min=0),
) -> None:
    """Train networks with SGD, one checkpoint set per seed."""
    overrides = {**_common(out, seed, threads), "epochs": epochs}
    if seed is not None:
        overrides["seeds"] = [seed]
    _run(cmd_train, TrainConfig, config, overrides)


@app.command()
def spectra(
    config: Optional[Path] = ConfigOpt,
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint"),
    k: Optional[int] = typer.Option(None, "--k", min=1),
) -> None:
    """True vs. Kronecker-approximate layer spectra and structure statistics."""
    _run(cmd_spectra, SpectraConfig, config, {**_common(out, seed, threads), "checkpoint": checkpoint, "k": k})


@app.command()
def overlap(
    config: Optional[Path] = ConfigOpt,
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    k_max: Optional[int] = typer.Option(None, "--k-max", min=1),
) -> None:
    """Top-k eigenspace overlap across independently trained models."""
    _run(cmd_overlap, OverlapConfig, config, {**_common(out, seed, threads), "k_max": k_max})


@app.command()
def correspondence(
    config: Optional[Path] = ConfigOpt,
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint"),
    top: Optional[int] = typer.Option(None, "--top", min=1),
) -> None:
    """Correspondence matrices between Hessian and factor eigenvectors."""
    overrides = {**_common(out, seed, threads), "checkpoint": checkpoint, "top": top}
    _run(cmd_correspondence, CorrespondenceConfig, config, overrides)


@app.command("verify-theorem")
def verify_theorem(
    config: Optional[Path] = ConfigOpt,
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
) -> None:
    """Check the output-Hessian subspace theorem on random two-layer problems."""
    overrides = _common(out, None, threads)
    if seed is not None:
        overrides["seeds"] = [seed]
    _run(cmd_verify_theorem, TheoremConfig, config, overrides)


@app.command()
def pacbayes(
    config: Optional[Path] = ConfigOpt,
    out: Optional[str] = OutOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    variant: Optional[str] = typer.Option(None, "--variant", help="base, appr, iter or iter_m"),
    iterations: Optional[int] = typer.Option(None, "--iterations", min=0),
) -> None:
    """Optimize and certify a PAC-Bayes bound in the Hessian eigenbasis."""
    overrides = {**_common(out, seed, threads), "variant": variant, "iterations": iterations}
    _run(cmd_pacbayes, PacBayesConfig, config, overrides)
