"""Command-line interface for fp-spectra."""

import contextlib
import json
from collections.abc import Iterator
from pathlib import Path

import click
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from fp_spectra import add_file_sink
from fp_spectra.config import Settings, get_settings
from fp_spectra.constructions import chain_certificate
from fp_spectra.errors import ConfigInvalidError, SpectraError
from fp_spectra.field import FieldCtx, make_field
from fp_spectra.fset import FpSet, parse_set_spec, set_to_literal
from fp_spectra.incidence import GridPoints, LineFamily, check_incidence_bound
from fp_spectra.presets import PRESET_NAMES
from fp_spectra.runner import (
    estimate_exponent,
    make_config,
    render_records,
    run_scan,
    write_records,
)
from fp_spectra.setexpr import evaluate
from fp_spectra.spectra import det_spectrum, per_spectrum
from fp_spectra.verify import run_verify

console = Console()

# values shown before a listing is elided
MAX_SHOWN = 64


def configure_verbose_logging(level: str = "INFO") -> None:
    """Configure verbose logging through the rich console."""
    logger.remove()
    logger.add(
        lambda msg: console.print(msg, end="", markup=False, highlight=False),
        level=level,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
    )
    console.print(f"[dim]Logging enabled at {level}[/dim]")


def configure_quiet_logging() -> None:
    """Configure quiet logging - only show errors."""
    logger.remove()
    # Only show ERROR and above in quiet mode
    logger.add(lambda msg: None, level="ERROR")


def load_settings_or_abort() -> Settings:
    """Load settings from the environment/.env or abort with a helpful message."""
    try:
        return get_settings()
    except ValidationError as e:
        console.print("[bold red]Error:[/bold red] Invalid configuration")
        console.print("\nCheck the SPECTRA_* environment variables and your .env file.")
        console.print(f"Details: {escape(str(e))}")
        raise click.exceptions.Exit(1) from e


@contextlib.contextmanager
def reported_errors() -> Iterator[None]:
    """Turn domain errors into a red error line and exit code 1."""
    try:
        yield
    except SpectraError as e:
        console.print(f"[bold red]Error:[/bold red] {escape(str(e))}")
        raise click.exceptions.Exit(1) from e


def _shown(s: FpSet) -> str:
    if s.card <= MAX_SHOWN:
        return "{" + set_to_literal(s) + "}"
    head = ",".join(str(a) for a in s.elements[:MAX_SHOWN])
    return "{" + head + f",...}} ({s.card - MAX_SHOWN} more)"


def _parse_sizes(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        msg = f"--sizes must be a comma-separated list of integers, got '{text}'"
        raise ConfigInvalidError(msg) from e


@click.group()
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable progress logging",
)
@click.option(
    "--log-file",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Also write log records (at SPECTRA_LOG_LEVEL) to this file",
)
@click.option("--log-json", is_flag=True, help="Write --log-file records as JSON lines")
@click.version_option(package_name="fp-spectra")
def main(verbose: bool, log_file: Path | None, log_json: bool) -> None:
    """Determinant and permanent spectra of matrices over subsets of F_p.

    SPEC arguments are either an explicit set literal such as 0,1,4 or generator
    syntax: random:size=8,seed=3  interval:start=1,size=5
    geometric:start=1,ratio=2,size=6  symmetric:h=3
    """
    settings = load_settings_or_abort()
    if verbose:
        configure_verbose_logging(settings.log_level)
    else:
        configure_quiet_logging()
    if log_file is not None:
        add_file_sink(log_file, settings.log_level, serialize=log_json)


@main.command()
@click.option("--p", "p", required=True, type=int, help="Prime modulus")
@click.option("--set", "set_spec", required=True, help="Entry set A (SPEC)")
@click.option("--d", "d", default=2, show_default=True, type=int, help="Matrix dimension")
@click.option("--per", is_flag=True, help="Permanents instead of determinants")
@click.option("--counts", is_flag=True, help="Also count matrices per value")
@click.option("--budget", type=int, default=None, help="Enumeration budget in matrices")
@click.option("--seed", type=int, default=None, help="Root seed for sampling mode")
@click.option("--workers", type=int, default=None, help="Worker processes")
@click.option("--json", "as_json", is_flag=True, help="Print JSON")
def spectrum(
    p: int,
    set_spec: str,
    d: int,
    per: bool,
    counts: bool,
    budget: int | None,
    seed: int | None,
    workers: int | None,
    as_json: bool,
) -> None:
    """Print the determinant (or permanent) spectrum of d x d matrices over A."""
    with reported_errors():
        ctx = make_field(p)
        A = parse_set_spec(ctx, set_spec)
        compute = per_spectrum if per else det_spectrum
        result = compute(A, d, want_counts=counts, budget=budget, seed=seed, workers=workers)

    if as_json:
        click.echo(json.dumps(result.to_dict(), indent=2))
        return

    name = "Per" if per else "Det"
    console.print(f"[bold]{name} spectrum[/bold] of {d}x{d} matrices over A = {_shown(A)} in F_{p}")
    console.print(f"Distinct values: [green]{result.cardinality}[/green]")
    console.print(f"Values: {_shown(result.values)}")
    if result.exact:
        console.print(f"Exact: all {result.matrices_enumerated} matrices enumerated")
    else:
        console.print(
            f"[yellow]Lower bound:[/yellow] sampled {result.matrices_enumerated} matrices"
        )
    if result.counts is not None:
        table = Table(title="Matrices per value")
        table.add_column("t", justify="right")
        table.add_column("count", justify="right")
        for t, c in sorted(result.counts.items())[:MAX_SHOWN]:
            table.add_row(str(t), str(c))
        console.print(table)
        if result.saturated:
            console.print("[yellow]Warning:[/yellow] counts saturated at 2**64 - 1")


def _parse_binding(ctx: FieldCtx, binding: str) -> tuple[str, FpSet]:
    name, sep, spec = binding.partition("=")
    if not sep or not name.strip():
        msg = f"--bind expects NAME=SPEC, got '{binding}'"
        raise ConfigInvalidError(msg)
    return name.strip(), parse_set_spec(ctx, spec)


@main.command(name="eval")
@click.option("--p", "p", required=True, type=int, help="Prime modulus")
@click.option("--expr", "expr", required=True, help="Set expression, e.g. 'A*A - A*A'")
@click.option("--bind", "bindings", multiple=True, help="NAME=SPEC binding (repeatable)")
@click.option("--json", "as_json", is_flag=True, help="Print JSON")
def eval_command(p: int, expr: str, bindings: tuple[str, ...], as_json: bool) -> None:
    """Evaluate a set expression over bound sets."""
    with reported_errors():
        ctx = make_field(p)
        env = dict(_parse_binding(ctx, b) for b in bindings)
        result = evaluate(expr, env, ctx)

    if as_json:
        payload = {"p": p, "expr": expr, "cardinality": result.card, "set": list(result.elements)}
        click.echo(json.dumps(payload, indent=2))
        return
    console.print(f"{escape(expr)} = {_shown(result)}")
    console.print(f"Cardinality: [green]{result.card}[/green]")


@main.command()
@click.option("--p", "p", required=True, type=int, help="Prime modulus")
@click.option("--set", "set_spec", required=True, help="Entry set A (SPEC)")
@click.option("--d", "d", required=True, type=int, help="Matrix dimension")
@click.option(
    "--target",
    type=click.Choice(["det", "per"]),
    default="det",
    show_default=True,
    help="Spectrum to certify",
)
@click.option("--budget", type=int, default=None, help="Budget for the exact base spectrum")
@click.option("--json", "as_json", is_flag=True, help="Print JSON")
def certify(p: int, set_spec: str, d: int, target: str, budget: int | None, as_json: bool) -> None:
    """Print a chain certificate: a set provably inside the spectrum."""
    with reported_errors():
        ctx = make_field(p)
        A = parse_set_spec(ctx, set_spec)
        cert = chain_certificate(A, d, target, budget=budget)

    if as_json:
        click.echo(json.dumps(cert.to_dict(), indent=2))
        return
    console.print(f"[bold]{target} certificate[/bold] for d={d} over A = {_shown(A)} in F_{p}")
    console.print(f"Formula: [cyan]{escape(cert.formula)}[/cyan]")
    for name, bound in sorted(cert.bindings.items()):
        console.print(f"  {name} = {_shown(bound)}")
    console.print(f"Chain: {' -> '.join(cert.chain)}")
    console.print(f"Certified values: [green]{cert.cardinality}[/green] {_shown(cert.subset)}")
    if cert.degenerate:
        console.print("[yellow]Warning:[/yellow] degenerate construction, (d-1)! vanishes mod p")


@main.command()
@click.option("--p", "p", required=True, type=int, help="Prime modulus")
@click.option("--xs", required=True, help="x-coordinates (SPEC)")
@click.option("--ys", required=True, help="y-coordinates (SPEC)")
@click.option("--slopes", required=True, help="Slopes c (SPEC); 0 is dropped")
@click.option("--offsets", required=True, help="Offsets b (SPEC)")
@click.option("--workers", type=int, default=None, help="Worker processes")
@click.option("--json", "as_json", is_flag=True, help="Print JSON")
def incidence(
    p: int, xs: str, ys: str, slopes: str, offsets: str, workers: int | None, as_json: bool
) -> None:
    """Count incidences between a grid and lines y = c(x - b)."""
    with reported_errors():
        ctx = make_field(p)
        grid = GridPoints(parse_set_spec(ctx, xs), parse_set_spec(ctx, ys))
        lines = LineFamily.from_sets(parse_set_spec(ctx, slopes), parse_set_spec(ctx, offsets))
        report = check_incidence_bound(grid, lines, workers)

    if as_json:
        payload = {
            "p": p,
            "incidences": report.incidences,
            "P1": report.p1,
            "P2": report.p2,
            "lines": report.lines,
            "swapped": report.swapped,
            "rhs": report.rhs,
            "ratio": report.ratio,
            "grid_hypothesis_ok": report.grid_hypothesis_ok,
            "field_hypothesis_ok": report.field_hypothesis_ok,
            "field_ratio": report.field_ratio,
            "hypothesis_failed": report.hypothesis_failed,
            "excluded_zero_slope": report.excluded_zero_slope,
        }
        click.echo(json.dumps(payload, indent=2))
        return
    console.print(f"Incidences: [green]{report.incidences}[/green]")
    console.print(f"|P1|={report.p1}  |P2|={report.p2}  |L|={report.lines}")
    console.print(f"Bound |P1|^(3/4)|P2|^(1/2)|L|^(3/4) + |L| = {report.rhs:.6g}")
    console.print(f"Ratio I/bound = {report.ratio:.6g}")
    console.print(
        f"|P1||P2|^2 <= |L|^3: {report.grid_hypothesis_ok}   "
        f"|P1||L| <= p^2: {report.field_hypothesis_ok} (ratio {report.field_ratio:.6g})"
    )
    if report.excluded_zero_slope:
        console.print("[dim]Slope 0 excluded from the line family[/dim]")
    if report.hypothesis_failed:
        console.print("[yellow]Warning:[/yellow] hypotheses of the incidence bound fail")


@main.command()
@click.option("--preset", required=True, type=click.Choice(PRESET_NAMES), help="Experiment")
@click.option("--p", "p", required=True, type=int, help="Prime modulus")
@click.option(
    "--family",
    type=click.Choice(["random", "interval", "geometric", "explicit"]),
    default="random",
    show_default=True,
    help="Set family",
)
@click.option("--sizes", default="", help="Comma-separated set sizes, e.g. 4,8,16")
@click.option("--elements", multiple=True, type=int, help="Element of the explicit set (repeatable)")
@click.option("--start", type=int, default=0, help="First element (interval, geometric)")
@click.option("--ratio", type=int, default=2, help="Ratio (geometric)")
@click.option("--d", "d", type=int, default=None, help="Dimension (preset default if omitted)")
@click.option("--trials", type=int, default=1, show_default=True, help="Trials per size")
@click.option("--seed", type=int, default=None, help="Root seed (settings default if omitted)")
@click.option("--budget", type=int, default=None, help="Enumeration budget in matrices")
@click.option("--workers", type=int, default=None, help="Worker processes")
@click.option("--timing", is_flag=True, help="Record wall time (output no longer reproducible)")
@click.option(
    "--out",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="Write records to FILE.csv or FILE.json",
)
def scan(
    preset: str,
    p: int,
    family: str,
    sizes: str,
    elements: tuple[int, ...],
    start: int,
    ratio: int,
    d: int | None,
    trials: int,
    seed: int | None,
    budget: int | None,
    workers: int | None,
    timing: bool,
    out: Path | None,
) -> None:
    """Run a preset over set sizes and trials and compare against its bound."""
    settings = load_settings_or_abort()
    with reported_errors():
        if family == "explicit":
            template: dict[str, object] = {"kind": "explicit", "elements": elements}
        else:
            template = {"kind": family, "size": 1, "start": start, "ratio": ratio}
        cfg = make_config(
            preset=preset,
            p=p,
            family=template,
            sizes=_parse_sizes(sizes),
            d=d,
            trials=trials,
            seed=settings.seed if seed is None else seed,
            budget=budget,
            workers=workers,
            record_timing=timing,
        )
        records = run_scan(cfg, progress=out is None)
        if out is not None:
            write_records(records, out)

    console.print(render_records(records))
    if len({r.card_A for r in records if r.measured > 0}) >= 2:
        fit = estimate_exponent(records)
        kind = "lower-bound slope" if fit.lower_bound else "slope"
        console.print(f"Fitted {kind}: {fit.slope:.4f} (residual {fit.residual:.3g})")
    if out is not None:
        console.print(f"\nOutput: [cyan]{out}[/cyan]")


@main.command()
@click.option(
    "--level",
    type=click.Choice(["quick", "full"]),
    default="quick",
    show_default=True,
    help="Battery size",
)
@click.option("--workers", type=int, default=None, help="Worker count for the determinism check")
def verify(level: str, workers: int | None) -> None:
    """Run the invariant battery; exit code 2 if any invariant fails."""
    with reported_errors():
        report = run_verify(level, workers)

    table = Table(title=f"Invariants ({level})")
    table.add_column("invariant")
    table.add_column("cases", justify="right")
    table.add_column("result")
    for result in report.results:
        status = "[green]pass[/green]" if result.passed else "[bold red]FAIL[/bold red]"
        table.add_row(result.name, str(result.cases), status)
    console.print(table)

    for failure in report.failures:
        counterexample = escape(failure.counterexample or "")
        console.print(f"[red]{failure.name}[/red] counterexample: {counterexample}")
    if not report.passed:
        raise click.exceptions.Exit(2)
    console.print("\n[bold green]All invariants passed[/bold green]")


if __name__ == "__main__":
    main()
