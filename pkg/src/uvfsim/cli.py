"""Command line front end: headless runs, the gateway service, replays.

Exit codes: 2 for scenario parse/validation problems, 3 for runtime
failures (simulation errors, unreachable service).
"""

from __future__ import annotations

import json
import sys
import urllib.error
import urllib.request
from pathlib import Path

import click

from .metrics import export_metrics
from .scenario import GOLDEN_SEED, ParseError, ValidationError, golden_scenario, load_scenario
from .sim import SimulationError, run as run_sim, trace_from_jsonl

EXIT_PARSE = 2
EXIT_RUNTIME = 3


def _load(scenario_path):
    if scenario_path is None:
        return golden_scenario()
    return load_scenario(scenario_path)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Adaptive fleet-architecture simulator."""


@main.command("run")
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Scenario file; the bundled demonstration scenario when omitted.")
@click.option("--seed", type=int, default=GOLDEN_SEED, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="results",
              show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]),
              default="csv", show_default=True)
def cli_run(scenario_path, seed, out_dir, fmt):
    """Run a scenario headless and write the trace and metric tables."""
    try:
        scenario = _load(scenario_path)
    except (ParseError, ValidationError) as err:
        _fail(EXIT_PARSE, str(err))
    try:
        trace = run_sim(scenario, seed)
    except SimulationError as err:
        _fail(EXIT_RUNTIME, str(err))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.jsonl"
    trace_path.write_text(trace.to_jsonl() + "\n")
    written = {"trace": trace_path}
    for chosen in (("csv", "json") if fmt == "both" else (fmt,)):
        for label, path in export_metrics(trace, out, fmt=chosen).items():
            written[f"{label} ({chosen})"] = path

    click.echo(f"snapshots: {len(trace.snapshots())}")
    click.echo(f"patterns: {trace.patterns()}")
    click.echo(f"trace sha256: {trace.digest()}")
    for label, path in sorted(written.items()):
        click.echo(f"wrote {label}: {path}")


@main.command("serve")
@click.option("--port", type=int, default=8000, envvar="UVFSIM_PORT", show_default=True,
              help="Port (env UVFSIM_PORT).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--scenario", "scenario_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=GOLDEN_SEED, show_default=True)
@click.option("--pace", type=float, default=0.0, show_default=True,
              help="Simulated minutes per wall second; 0 starts paused.")
def cli_serve(port, host, scenario_path, seed, pace):
    """Serve the gateway API around one live session."""
    import uvicorn

    from .server import create_app

    try:
        scenario = _load(scenario_path)
    except (ParseError, ValidationError) as err:
        _fail(EXIT_PARSE, str(err))
    uvicorn.run(create_app(scenario, seed, pace), host=host, port=port, log_level="warning")


@main.command("replay")
@click.argument("trace_file", type=click.Path())
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="results",
              show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]),
              default="csv", show_default=True)
def cli_replay(trace_file, out_dir, fmt):
    """Regenerate metric tables from a recorded trace file."""
    try:
        text = Path(trace_file).read_text()
    except OSError as err:
        _fail(EXIT_PARSE, str(err))
    try:
        trace = trace_from_jsonl(text)
    except (ValueError, KeyError) as err:
        _fail(EXIT_PARSE, f"{trace_file}: not a trace file ({err})")
    if not trace.snapshots():
        _fail(EXIT_PARSE, f"{trace_file}: trace contains no snapshots")
    try:
        for chosen in (("csv", "json") if fmt == "both" else (fmt,)):
            written = export_metrics(trace, out_dir, fmt=chosen)
            for label, path in sorted(written.items()):
                click.echo(f"wrote {label}: {path}")
    except OSError as err:
        _fail(EXIT_RUNTIME, str(err))


@main.command("export-session")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              default="session_scenario.json", show_default=True)
def cli_export_session(url, out_path):
    """Download a live session as a replayable scenario file."""
    try:
        with urllib.request.urlopen(f"{url.rstrip('/')}/session/export") as resp:
            data = json.load(resp)
    except (urllib.error.URLError, ValueError) as err:
        _fail(EXIT_RUNTIME, f"cannot export from {url}: {err}")
    Path(out_path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote scenario: {out_path} (replay with --seed {data.get('seed')})")


if __name__ == "__main__":
    main()
