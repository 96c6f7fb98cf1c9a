"""Experiment command line.

Subcommands: ``run`` (one experiment end to end), ``sweep-ez`` (aggregate
I/N and active count per zone radius), ``validate`` (scenario/policy lint),
``serve`` (HTTP API), ``export`` (store dumps), ``timings`` (per-stage
latency table). ``run`` exits 0 only when the loop converged; ``validate``
exits 0 only when everything parses clean.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dsa import trace_csv
from .policy import PolicyError, PolicySet, format_policy, load_policy
from .runner import (
    ExperimentError,
    ExperimentRequest,
    map_geojson,
    report_csv_for_record,
    resolve_policy_path,
    resolve_scenario_path,
    run_experiment,
    summary_text,
    sweep_csv,
)
from .scenario import ScenarioError, build_world, load_scenario
from .store import Store


@click.group()
def main() -> None:
    """Spectrum coexistence experiments."""


def _load_inputs(scenario_ref: str, policy_ref: str | None, data_dir: str):
    scenario = load_scenario(resolve_scenario_path(scenario_ref, data_dir))
    policy_path = resolve_policy_path(policy_ref, data_dir)
    policy = load_policy(policy_path) if policy_path is not None else PolicySet()
    return scenario, policy


def _write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    # Content is fully assembled before the first write, so a failure never
    # leaves a partial output directory behind.
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out_dir / name).write_text(content)


common_options = [
    click.option("--scenario", "scenario_ref", required=True, help="manifest path, directory, or fixture name"),
    click.option("--policy", "policy_ref", default=None, help="policy file or name (default policy otherwise)"),
    click.option("--weather", default="clear", show_default=True, help="named weather trace from the manifest"),
    click.option("--seed", type=int, default=None, help="override both RNG seeds"),
    click.option("--data-dir", default="fixtures", show_default=True),
]


def with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command()
@with_options(common_options)
@click.option("--out", "out_dir", default="out", show_default=True, type=click.Path())
@click.option("--ez-min", type=float, default=None)
@click.option("--ez-max", type=float, default=None)
@click.option("--ez-step", type=float, default=None)
@click.option("--store", "store_path", default=None, help="persist the record into this store")
def run(scenario_ref, policy_ref, weather, seed, data_dir, out_dir, ez_min, ez_max, ez_step, store_path):
    """Run one closed-loop experiment and write record + CSVs + summary."""
    try:
        scenario, policy = _load_inputs(scenario_ref, policy_ref, data_dir)
        request = ExperimentRequest(
            scenario=scenario_ref,
            mode="feedback_loop",
            weather=weather,
            seed=seed,
            ez_min_m=ez_min,
            ez_max_m=ez_max,
            ez_step_m=ez_step,
        )
        store = Store(store_path) if store_path else None
        record = run_experiment(scenario, policy, request, store=store)
        assert record.decision is not None
        files = {
            "trace.csv": trace_csv(record.decision),
            "report.csv": report_csv_for_record(record),
            "record.json": json.dumps(record.to_dict(), indent=1, sort_keys=True) + "\n",
            "map.geojson": json.dumps(map_geojson(scenario, record), indent=1) + "\n",
            "summary.txt": summary_text(record),
        }
        _write_outputs(Path(out_dir), files)
        click.echo(summary_text(record), nl=False)
        sys.exit(0 if record.decision.converged else 1)
    except (ScenarioError, PolicyError, ExperimentError) as exc:
        raise click.ClickException(str(exc))


@main.command("sweep-ez")
@with_options(common_options)
@click.option("--out", "out_dir", default="out", show_default=True, type=click.Path())
@click.option("--ez-min", type=float, default=None)
@click.option("--ez-max", type=float, default=None)
@click.option("--ez-step", type=float, default=None)
def sweep_ez(scenario_ref, policy_ref, weather, seed, data_dir, out_dir, ez_min, ez_max, ez_step):
    """Aggregate I/N and active-station count for each zone radius."""
    try:
        scenario, policy = _load_inputs(scenario_ref, policy_ref, data_dir)
        request = ExperimentRequest(
            scenario=scenario_ref,
            mode="ez_sweep",
            weather=weather,
            seed=seed,
            ez_min_m=ez_min,
            ez_max_m=ez_max,
            ez_step_m=ez_step,
        )
        record = run_experiment(scenario, policy, request)
        assert record.sweep is not None
        _write_outputs(Path(out_dir), {"sweep.csv": sweep_csv(record.sweep)})
        for row in record.sweep:
            agg = "none" if row.aggregate_in_db is None else f"{row.aggregate_in_db:9.3f} dB"
            click.echo(f"ez {row.ez_radius_m:6.0f} m  aggregate {agg}  active {row.active_count}")
    except (ScenarioError, PolicyError, ExperimentError) as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.option("--scenario", "scenario_ref", default=None)
@click.option("--policy", "policy_ref", default=None)
@click.option("--data-dir", default="fixtures", show_default=True)
@click.option("--print", "print_policy", is_flag=True, help="pretty-print the validated policy")
def validate(scenario_ref, policy_ref, data_dir, print_policy):
    """Lint a scenario manifest and/or a policy file."""
    failed = False
    if scenario_ref is not None:
        try:
            scenario = load_scenario(resolve_scenario_path(scenario_ref, data_dir))
            build_world(scenario)
            click.echo(
                f"scenario {scenario.name}: ok "
                f"({len(scenario.mbs_list)} stations, {len(scenario.buildings)} buildings)"
            )
        except (ScenarioError, ExperimentError, ValueError) as exc:
            click.echo(f"scenario: INVALID: {exc}", err=True)
            failed = True
    if policy_ref is not None:
        try:
            policy = load_policy(resolve_policy_path(policy_ref, data_dir))
            click.echo(f"policy {policy.policy_id}: ok")
            if print_policy:
                click.echo(format_policy(policy), nl=False)
        except (PolicyError, ExperimentError) as exc:
            click.echo(f"policy: INVALID: {exc}", err=True)
            failed = True
    if scenario_ref is None and policy_ref is None:
        raise click.ClickException("nothing to validate; pass --scenario and/or --policy")
    sys.exit(1 if failed else 0)


@main.command()
@with_options(common_options)
def timings(scenario_ref, policy_ref, weather, seed, data_dir):
    """Run one experiment and print the per-stage latency table."""
    try:
        scenario, policy = _load_inputs(scenario_ref, policy_ref, data_dir)
        request = ExperimentRequest(scenario=scenario_ref, weather=weather, seed=seed)
        record = run_experiment(scenario, policy, request)
    except (ScenarioError, PolicyError, ExperimentError) as exc:
        raise click.ClickException(str(exc))
    t = record.timings
    rows = [
        ("Experiment Setup", t.setup_ms),
        ("Interference Analysis", t.interference_ms),
        ("DSA Decisions", t.dsa_ms),
    ]
    width = max(len(name) for name, _ in rows)
    click.echo(f"{'Stage'.ljust(width)}  Latency (ms)")
    for name, ms in rows:
        click.echo(f"{name.ljust(width)}  {ms:12.3f}")


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--kind", required=True, help="registration | context | priority | policy | experiment")
@click.option("--out", "out_path", default="-", help="output file, '-' for stdout")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def export(store_path, kind, out_path, fmt):
    """Dump one record kind from a store."""
    store = Store(store_path)
    try:
        if fmt == "csv":
            content = store.export_csv(kind)
        else:
            content = json.dumps(dict(store.list(kind)), indent=1, sort_keys=True) + "\n"
    finally:
        store.close()
    if out_path == "-":
        click.echo(content, nl=False)
    else:
        Path(out_path).write_text(content)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True, envvar="COEXSIM_HOST")
@click.option("--port", default=8000, show_default=True, type=int, envvar="COEXSIM_PORT")
@click.option("--data-dir", default="fixtures", show_default=True, envvar="COEXSIM_DATA_DIR")
@click.option("--store", "store_path", default=":memory:", show_default=True, envvar="COEXSIM_STORE")
@click.option("--workers", default=2, show_default=True, type=int, envvar="COEXSIM_WORKERS")
@click.option("--frontend-dir", default=None, envvar="COEXSIM_FRONTEND_DIR",
              help="serve a built web UI from this directory")
@click.option("--config", "config_path", default=None, envvar="COEXSIM_CONFIG",
              help="YAML file with the same keys; flags and env vars win")
def serve(host, port, data_dir, store_path, workers, frontend_dir, config_path):
    """Start the HTTP API (and optionally the web UI)."""
    import uvicorn
    import yaml

    from .service import ServiceConfig, create_app

    if config_path:
        doc = yaml.safe_load(Path(config_path).read_text()) or {}
        ctx = click.get_current_context()
        if ctx.get_parameter_source("host").name == "DEFAULT":
            host = doc.get("host", host)
        if ctx.get_parameter_source("port").name == "DEFAULT":
            port = int(doc.get("port", port))
        if ctx.get_parameter_source("data_dir").name == "DEFAULT":
            data_dir = doc.get("data_dir", data_dir)
        if ctx.get_parameter_source("store_path").name == "DEFAULT":
            store_path = doc.get("store", store_path)
        if ctx.get_parameter_source("workers").name == "DEFAULT":
            workers = int(doc.get("workers", workers))
        if ctx.get_parameter_source("frontend_dir").name == "DEFAULT":
            frontend_dir = doc.get("frontend_dir", frontend_dir)
    app = create_app(
        ServiceConfig(
            data_dir=data_dir,
            store_path=store_path,
            workers=workers,
            frontend_dir=frontend_dir,
        )
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
