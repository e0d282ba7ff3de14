import typer # type: ignore
try:
    # typer >= 0.26 vendors click; its exceptions live under typer._click
    from typer import _click as click # type: ignore
except ImportError:
    import click # type: ignore
from rich.console import Console # type: ignore
from rich.panel import Panel # type: ignore
from rich.table import Table # type: ignore
from rich import print as rprint # type: ignore
from rich.markup import escape # type: ignore
from math import radians
from pathlib import Path
from typing import List, Optional
import sys
import os
import logging

# Add parent directory to sys.path to allow importing from engine
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from engine import __version__ # type: ignore
from engine.config_manager import config_manager # type: ignore
from engine.cumulant_core import ( # type: ignore
    CumulantSequence,
    MomentSequence,
    cumulants_to_moments,
    format_scalar,
    moments_to_cumulants,
)
from engine.errors import NormcharError # type: ignore
from engine.estimation import invariance_test # type: ignore
from engine.formats import ( # type: ignore
    ReportFile,
    canonical_digest,
    format_sequence,
    load_raw,
    load_scenario,
    load_side_spec,
    read_sequence,
    write_report,
    write_sequence,
)
from engine.samples import SampleMatrix # type: ignore
from engine.symbolic import ( # type: ignore
    INFORMATIONAL_KINDS,
    CharacterizationReport,
    characterize as run_characterize,
    characterize_prop2,
    characterize_vector,
    quadratic_reduction_check,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2

DEFAULT_LOG_FILE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "logs", "normchar.log")
logger = logging.getLogger("normchar.cli")


def _log_file() -> str:
    try:
        return config_manager.get_config().log_file or DEFAULT_LOG_FILE
    except NormcharError:
        return DEFAULT_LOG_FILE


LOG_FILE = _log_file()


def setup_logging(log_file: str = LOG_FILE):
    """File is DEBUG, console is ERROR (keeps the rich summary clean)."""
    root_logger = logging.getLogger()
    if any(getattr(h, "_normchar", False) for h in root_logger.handlers):
        return
    os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    try:
        file_handler.setLevel(config_manager.get_config().log_level)
    except NormcharError:
        file_handler.setLevel(logging.DEBUG)
    file_handler._normchar = True

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.ERROR)
    console_handler._normchar = True

    root_logger.setLevel(logging.DEBUG)
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)

    # Silence noisy numeric stacks
    logging.getLogger("numexpr").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


setup_logging()

console = Console()
app = typer.Typer(help="normchar: exact cumulant calculus and normal-characterization checks")
config_app = typer.Typer(help="Show or change NORMCHAR_* settings (.env)")
app.add_typer(config_app, name="config")


def _fail(e: Exception):
    """Operational error: red panel, traceback to the log file, exit 1."""
    logger.error(f"{type(e).__name__}: {e}", exc_info=True)
    rprint(Panel(f"[bold red]{type(e).__name__}:[/bold red] {escape(str(e))}", border_style="red"))
    raise typer.Exit(EXIT_ERROR)


def _require_file(path: Path):
    if not path.exists():
        raise FileNotFoundError(f"No such file: {path}")


# ── convert ──────────────────────────────────────────────────────────────────

@app.command()
def convert(
    input: Path = typer.Argument(..., help="Sequence file: m_1..m_K or r_1..r_K, comma separated"),
    source: str = typer.Option(..., "--from", help="What the input holds: moments or cumulants"),
    order: Optional[int] = typer.Option(None, "--order", "-k", help="Truncate to the first K entries"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the converted sequence here"),
    report: Optional[Path] = typer.Option(None, "--report", help="Write a JSON conversion report here"),
):
    """Convert between raw moments and cumulants, exactly."""
    try:
        if source not in ("moments", "cumulants"):
            raise click.BadParameter("--from must be 'moments' or 'cumulants'")
        _require_file(input)
        values = read_sequence(input)
        if order is not None:
            if order < 1 or order > len(values):
                raise ValueError(f"--order {order} outside [1, {len(values)}] for this file")
            values = values[:order]
        if source == "moments":
            result = moments_to_cumulants(MomentSequence.of(values)).cumulants
            target = "cumulants"
        else:
            result = cumulants_to_moments(CumulantSequence(tuple(values))).tail()
            target = "moments"
        logger.info(f"Converted {len(values)} {source} from {input} to {target}")
        if report:
            given = [format_scalar(v) for v in values]
            digest = canonical_digest({"sequence": given, "from": source})
            write_report(report, ReportFile(kind="conversion", input_digest=digest, report={
                "from": source,
                "to": target,
                "order": len(values),
                source: given,
                target: [format_scalar(v) for v in result],
            }))
    except (NormcharError, OSError, ValueError, click.BadParameter) as e:
        _fail(e)

    table = Table(title=f"{source} → {target}")
    table.add_column("k", justify="right", style="cyan")
    table.add_column(source)
    table.add_column(target, style="green")
    for k, (a, b) in enumerate(zip(values, result), start=1):
        table.add_row(str(k), str(format_scalar(a)), str(format_scalar(b)))
    console.print(table)
    if output:
        try:
            write_sequence(output, result)
        except OSError as e:
            _fail(e)
        rprint(f"[dim]Wrote {output}[/dim]")
    else:
        console.print(format_sequence(result), end="", highlight=False)
    if report:
        rprint(f"[dim]Report written to {report}[/dim]")


# ── characterize ─────────────────────────────────────────────────────────────

def _print_characterization(report: CharacterizationReport, title: str):
    style = "green" if report.characterized else "red"
    body = f"[bold {style}]{report.verdict.value}[/bold {style}] (K = {report.order})"
    for note in report.notes:
        body += f"\n[dim]{note}[/dim]"
    rprint(Panel(body, title=title, border_style=style))

    if report.runs:
        runs = Table(title="Runs")
        runs.add_column("statistic")
        runs.add_column("verdict")
        for run in report.runs:
            colour = "green" if run["verdict"] == "Characterized" else "red"
            runs.add_row(run["context"], f"[{colour}]{run['verdict']}[/{colour}]")
        console.print(runs)

    if report.violations:
        table = Table(title="Violations")
        table.add_column("k", justify="right")
        table.add_column("witness", style="red")
        table.add_column("coefficient")
        table.add_column("context", style="dim")
        for v in report.violations:
            table.add_row(str(v.order), v.witness(), str(format_scalar(v.coefficient)), v.context)
        console.print(table)

    table = Table(title="Constraints")
    table.add_column("constraint")
    table.add_column("value", justify="right")
    table.add_column("kind", style="dim")
    for c in report.all_constraints():
        mark = "[green]✓[/green]" if c.holds else ("[yellow]·[/yellow]" if c.kind in INFORMATIONAL_KINDS else "[red]✗[/red]")
        table.add_row(f"{mark} {c.symbol} = 0", str(format_scalar(c.value)), c.kind)
    console.print(table)


@app.command()
def characterize(
    scenario: Path = typer.Option(..., "--scenario", "-s", help="Scenario JSON file"),
    order: Optional[int] = typer.Option(None, "--order", "-k", help="Highest cumulant order K (defaults to the scenario's)"),
    prop2: bool = typer.Option(False, "--prop2", help="Two-statistic check over (X, Y | Z, T)"),
    vector: Optional[int] = typer.Option(None, "--vector", help="Vector check; m = number of X labels on the left"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the JSON report here"),
):
    """Decide whether the scenario's statistic is radial and what that forces."""
    try:
        if prop2 and vector is not None:
            raise click.BadParameter("--prop2 and --vector are exclusive")
        _require_file(scenario)
        file = load_scenario(scenario)
        spec = file.to_spec(order)
        if prop2:
            mode = "prop2"
            report = characterize_prop2(spec)
        elif vector is not None:
            mode = f"vector:{vector}"
            m = len(file.left.labels) - 1
            total = m + len(file.right.labels) - 1
            if vector != m or not 1 <= vector < total:
                raise ValueError(f"--vector {vector} does not match the scenario: {m} X labels on the left, {total} in all")
            report = characterize_vector(spec)
        else:
            mode = "single"
            report = run_characterize(spec, vars=file.coeff_vars)
        digest = canonical_digest({"scenario": load_raw(scenario), "order": spec.order, "mode": mode})
        result = ReportFile(kind="characterization", input_digest=digest, report=report.to_dict())
        if output:
            write_report(output, result)
    except (NormcharError, OSError, ValueError, click.BadParameter) as e:
        _fail(e)

    _print_characterization(report, title=f"{scenario.name} [{mode}]")
    if output:
        rprint(f"[dim]Report written to {output}[/dim]")
    raise typer.Exit(EXIT_OK if report.characterized else EXIT_NEGATIVE)


# ── simulate ─────────────────────────────────────────────────────────────────

def _parse_angles(text: str) -> List[float]:
    try:
        degrees = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"--angles must be comma-separated degrees, got '{text}'") from None
    if len(degrees) < 3:
        raise click.BadParameter(f"--angles needs at least 3 entries, got {len(degrees)}")
    return [radians(d) for d in degrees]


@app.command()
def simulate(
    left: str = typer.Option(..., "--left", help="Left side: family name or side-spec JSON"),
    right: str = typer.Option(..., "--right", help="Right side: family name or side-spec JSON"),
    seed: int = typer.Option(..., "--seed", help="Required; seeds are never taken from the environment"),
    radius: float = typer.Option(1.0, "--radius", help="Circle radius for (a, b)"),
    angles: str = typer.Option("0,22.5,45,67.5,90", "--angles", help="Comma-separated angles in degrees"),
    n: Optional[int] = typer.Option(None, "--n", help="Draws per angle (default NORMCHAR_SAMPLE_SIZE)"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Per-pair level (default NORMCHAR_ALPHA)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the JSON report here"),
):
    """Monte-Carlo test that the law of a*S1 + Y + b*S2 + Z is constant on a circle."""
    try:
        settings = config_manager.get_config()
        grid = _parse_angles(angles)
        left_spec = load_side_spec(left)
        right_spec = load_side_spec(right)
        n = n or settings.sample_size
        alpha = alpha or settings.alpha
        report = invariance_test(
            left_spec,
            right_spec,
            radius,
            grid,
            n,
            seed,
            alpha=alpha,
            permutations=settings.permutations,
            asymptotic_min_n=settings.asymptotic_min_n,
            workers=settings.workers,
        )
        digest = canonical_digest({
            "left": left_spec.model_dump(mode="json"),
            "right": right_spec.model_dump(mode="json"),
            "radius": radius,
            "angles": angles,
            "n": n,
            "seed": seed,
            "alpha": alpha,
        })
        if output:
            write_report(output, ReportFile(kind="invariance", input_digest=digest, report=report.to_dict()))
    except (NormcharError, OSError, ValueError, click.BadParameter) as e:
        _fail(e)

    table = Table(title=f"KS pairs (n = {report.n}, {report.method})")
    table.add_column("θ_i°", justify="right")
    table.add_column("θ_j°", justify="right")
    table.add_column("D", justify="right")
    table.add_column("p", justify="right")
    for p in report.pairs:
        colour = "red" if p.rejected else "green"
        table.add_row(f"{p.theta_i * 180 / 3.141592653589793:.4g}", f"{p.theta_j * 180 / 3.141592653589793:.4g}",
                      f"{p.statistic:.5f}", f"[{colour}]{p.p_value:.3g}[/{colour}]")
    console.print(table)

    diag = Table(title="Normality diagnostics")
    for col in ("column", "skewness", "± se", "excess kurtosis", "± se"):
        diag.add_column(col, justify="right")
    for d in report.diagnostics:
        diag.add_row(d.label, f"{d.skewness:.4f}", f"{d.skewness_se:.4f}", f"{d.excess_kurtosis:.4f}", f"{d.kurtosis_se:.4f}")
    console.print(diag)

    style = "green" if report.within_band else "red"
    verdict = "invariant" if report.within_band else "NOT invariant"
    rprint(Panel(f"[bold {style}]{verdict}[/bold {style}]: {report.rejections} of {len(report.pairs)} pairs rejected "
                 f"at α = {report.alpha} (H₀ band ≤ {report.rejection_limit}), min p = {report.min_p_value:.3g}",
                 border_style=style))
    if output:
        rprint(f"[dim]Report written to {output}[/dim]")
    raise typer.Exit(EXIT_OK if report.within_band else EXIT_NEGATIVE)


# ── reduce ───────────────────────────────────────────────────────────────────

@app.command()
def reduce(
    coeffs: str = typer.Option(..., "--coeffs", help="Comma-separated a_1..a_n"),
    samples: Path = typer.Option(..., "--samples", help="CSV with n columns"),
    split: Optional[int] = typer.Option(None, "--split", help="m: X_1..X_m feed Y, the rest feed Z"),
    columns: Optional[str] = typer.Option(None, "--columns", help="Comma-separated CSV columns to use, in order (default: all)"),
    exact: bool = typer.Option(False, "--exact", help="Rational evaluation (residual is exactly 0)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the JSON report here"),
):
    """Check sum a_i X_i + Y + Z = sum (X_i + a_i/2)^2 - sum a_i^2 / 4 on sample rows."""
    try:
        tolerance = config_manager.get_config().residual_tol
        values = [part.strip() for part in coeffs.split(",") if part.strip()]
        _require_file(samples)
        matrix = SampleMatrix.from_csv(samples)
        if columns:
            matrix = matrix.select([name.strip() for name in columns.split(",") if name.strip()])
        residual = quadratic_reduction_check(values, matrix, split=split, exact=exact)
        if output:
            digest = canonical_digest({"coeffs": values, "columns": list(matrix.labels), "samples": matrix.data.tolist(), "split": split, "exact": exact})
            write_report(output, ReportFile(kind="reduction", input_digest=digest, report={
                "rows": matrix.n_rows,
                "columns": list(matrix.labels),
                "max_residual": str(format_scalar(residual)),
                "tolerance": tolerance,
            }))
    except (NormcharError, OSError, ValueError) as e:
        _fail(e)

    ok = residual < tolerance
    style = "green" if ok else "red"
    rprint(Panel(f"max residual over {matrix.n_rows} rows: [bold {style}]{format_scalar(residual)}[/bold {style}] "
                 f"(tolerance {tolerance})", border_style=style))
    raise typer.Exit(EXIT_OK if ok else EXIT_NEGATIVE)


# ── operational commands ─────────────────────────────────────────────────────

def _config_key(key: str) -> str:
    key = key.upper()
    return key if key.startswith("NORMCHAR_") else "NORMCHAR_" + key


@config_app.command("show")
def config_show():
    """Effective settings (environment over .env over defaults)."""
    try:
        settings = config_manager.get_config()
    except NormcharError as e:
        _fail(e)
    table = Table(title=f"normchar {__version__} configuration")
    table.add_column("key", style="cyan")
    table.add_column("value")
    for name, value in settings.model_dump().items():
        table.add_row(f"NORMCHAR_{name.upper()}", "" if value is None else str(value))
    console.print(table)
    rprint(f"[dim]{config_manager.env_path}[/dim]")


@config_app.command("set")
def config_set(key: str = typer.Argument(...), value: str = typer.Argument(...)):
    """Persist KEY=VALUE to .env (validated before writing)."""
    try:
        key = _config_key(key)
        previous = os.environ.get(key)
        os.environ[key] = value
        try:
            config_manager.get_config()
        finally:
            if previous is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = previous
        config_manager.set_key(key, value)
    except (NormcharError, OSError) as e:
        _fail(e)
    rprint(f"[green]✓[/green] {key}={value}")


@config_app.command("get")
def config_get(key: str = typer.Argument(...)):
    """Print one key as stored in .env (or the environment)."""
    key = _config_key(key)
    value = config_manager.get_key(key)
    if not value:
        rprint(f"[yellow]{key} is not set; the default applies.[/yellow]")
        return
    rprint(f"{key}={value}")


@config_app.command("unset")
def config_unset(key: str = typer.Argument(...)):
    """Remove one key from .env so its default applies again."""
    key = _config_key(key)
    try:
        config_manager.delete_key(key)
    except OSError as e:
        _fail(e)
    rprint(f"[yellow]Removed {key}[/yellow]")


@config_app.command("reset")
def config_reset():
    """Clear every key from .env."""
    config_manager.reset_all()
    rprint("[yellow]Configuration reset to defaults.[/yellow]")


@app.command()
def logs(lines: int = typer.Option(50, "--lines", "-n", help="Number of lines to show")):
    """View normchar diagnostic logs."""
    if not os.path.exists(LOG_FILE):
        rprint("[yellow]No log file found yet.[/yellow]")
        return

    rprint(Panel(f"[bold green]📜 NORMCHAR LOGS[/bold green] (Last {lines} lines)", border_style="cyan"))
    try:
        with open(LOG_FILE, "r") as f:
            all_lines = f.readlines()
        for line in all_lines[max(0, len(all_lines) - lines):]:
            # Colorize based on level
            if "ERROR" in line: rprint(f"[red]{line.strip()}[/red]")
            elif "WARNING" in line: rprint(f"[yellow]{line.strip()}[/yellow]")
            elif "DEBUG" in line: rprint(f"[dim]{line.strip()}[/dim]")
            else: rprint(line.strip())
    except Exception as e:
        rprint(f"[red]Failed to read logs: {e}[/red]")


@app.command()
def version():
    """Print the tool version."""
    rprint(f"normchar {__version__}")


def main():
    """Entry point: usage errors exit 1, leaving 2 for principled negatives."""
    try:
        code = app(standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        sys.exit(EXIT_ERROR)
    except click.exceptions.Abort:
        sys.exit(EXIT_ERROR)
    sys.exit(code or EXIT_OK)


if __name__ == "__main__":
    main()
