"""Experiment orchestration shared by the CLI and the HTTP service.

One request describes an experiment (scenario, weather, policy, seeds,
mode); the runner builds the world, resolves the context through the
broker, registers the radios, executes the requested mode, and assembles an
immutable record with per-stage timings (setup / interference analysis /
control decisions).

Every experiment also carries a baseline all-stations evaluation: it feeds
the per-station scatter export and the map tiers, including stations the
decision later turned off.
"""

from __future__ import annotations

import math
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from . import geo
from .context import ContextBroker, ContextSnapshot, FileTraceProvider, override_snapshot
from .dsa import (
    ControlSet,
    DsaDecision,
    RevocationReason,
    StepResult,
    active_ids_for_decision,
    run_feedback_loop,
    single_step,
)
from .interference import InterferenceReport, World, evaluate
from .policy import PolicySet, threshold_for
from .scenario import Scenario, build_world
from .store import KIND_EXPERIMENT, Registration, Store


class ExperimentError(Exception):
    pass


MODES = ("feedback_loop", "single_step", "ez_sweep")


@dataclass(frozen=True)
class ExperimentRequest:
    scenario: str = ""
    mode: str = "feedback_loop"
    weather: str = "clear"  # named trace, or "override"
    override_weather_kind: str | None = None
    override_rain_rate: float | None = None
    seed: int | None = None
    policy: str | None = None
    controls: ControlSet | None = None
    ez_min_m: float | None = None
    ez_max_m: float | None = None
    ez_step_m: float | None = None
    time_s: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ExperimentError(f"unknown mode {self.mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class StageTimings:
    setup_ms: float
    interference_ms: float
    dsa_ms: float

    def to_dict(self) -> dict:
        return {
            "experiment_setup_ms": self.setup_ms,
            "interference_analysis_ms": self.interference_ms,
            "dsa_decision_ms": self.dsa_ms,
        }


@dataclass(frozen=True)
class SweepRow:
    ez_radius_m: float
    aggregate_in_db: float | None
    active_count: int


@dataclass(frozen=True)
class ExperimentRecord:
    experiment_id: str
    scenario_name: str
    mode: str
    weather: str
    context: ContextSnapshot
    policy_id: str
    threshold_db: float
    seeds: Mapping[str, int]
    baseline: InterferenceReport
    decision: DsaDecision | None
    final: InterferenceReport | None
    sweep: tuple[SweepRow, ...] | None
    step: StepResult | None
    timings: StageTimings
    created_at: float

    def to_dict(self) -> dict:
        doc = {
            "experiment_id": self.experiment_id,
            "scenario": self.scenario_name,
            "mode": self.mode,
            "weather": self.weather,
            "context": self.context.to_dict(),
            "policy_id": self.policy_id,
            "threshold_db": self.threshold_db,
            "seeds": dict(self.seeds),
            "timings": self.timings.to_dict(),
            "created_at": self.created_at,
            "baseline_report": self.baseline.to_dict(),
            "decision": self.decision.to_dict() if self.decision else None,
            "final_report": self.final.to_dict() if self.final else None,
            "sweep": [
                {
                    "ez_radius_m": row.ez_radius_m,
                    "aggregate_in_db": row.aggregate_in_db,
                    "active_count": row.active_count,
                }
                for row in self.sweep
            ]
            if self.sweep is not None
            else None,
        }
        if self.step is not None:
            doc["step"] = {
                "passed": self.step.passed,
                "threshold_db": self.step.threshold_db,
                "ez_radius_m": self.step.ez_radius_m,
                "active_ids": list(self.step.active_ids),
                "report": self.step.report.to_dict(),
            }
        return doc


def resolve_context(
    scenario: Scenario, request: ExperimentRequest, store: Store | None = None
) -> ContextSnapshot:
    """Weather from a named scenario trace, an explicit override, or (with
    ``weather: live`` and a configured endpoint) the HTTP adapter."""
    broker = ContextBroker(scenario.fss.location, store=store)
    if request.weather == "override":
        kind = request.override_weather_kind or (
            "rain_snow" if (request.override_rain_rate or 0.0) > 0.0 else "clear"
        )
        broker.override(
            override_snapshot(
                kind,
                request.override_rain_rate or 0.0,
                scenario.fss.location,
                timestamp=request.time_s,
            )
        )
    elif request.weather == "live":
        from .context import OpenWeatherMapProvider

        provider = OpenWeatherMapProvider()
        if not provider.resolved_url():
            raise ExperimentError(
                "weather 'live' needs COEXSIM_WEATHER_URL (or an explicit endpoint)"
            )
        broker.register(provider)
        return broker.get_context("weather", time_s=time.time())
    else:
        trace_path = scenario.weather_trace_path(request.weather)
        broker.register(FileTraceProvider(path=trace_path, provider_id=f"trace:{request.weather}"))
    return broker.get_context("weather", time_s=request.time_s)


def ez_sweep(
    world: World,
    context: ContextSnapshot,
    radii: list[float],
    on_report=None,
) -> tuple[SweepRow, ...]:
    """Aggregate I/N and active count for each zone radius (no revocations)."""
    rows = []
    for radius in radii:
        active = [
            mid
            for mid in world.order
            if mid in world.active and world.links[mid].distance_2d_m >= radius
        ]
        report = evaluate(world.with_active(active), context)
        if on_report is not None:
            on_report(report)
        rows.append(
            SweepRow(
                ez_radius_m=radius,
                aggregate_in_db=report.aggregate_i_over_n_db,
                active_count=len(active),
            )
        )
    return tuple(rows)


def sweep_radii(policy: PolicySet) -> list[float]:
    radii = []
    radius = policy.ez_min_m
    while radius <= policy.ez_max_m + 1e-9:
        radii.append(radius)
        radius += policy.ez_step_m
    return radii


def run_experiment(
    scenario: Scenario,
    policy: PolicySet,
    request: ExperimentRequest,
    store: Store | None = None,
    experiment_id: str | None = None,
) -> ExperimentRecord:
    experiment_id = experiment_id or uuid.uuid4().hex[:12]
    created_at = time.time()

    if request.ez_min_m is not None or request.ez_max_m is not None or request.ez_step_m is not None:
        from dataclasses import replace as dc_replace

        policy = dc_replace(
            policy,
            ez_min_m=request.ez_min_m if request.ez_min_m is not None else policy.ez_min_m,
            ez_max_m=request.ez_max_m if request.ez_max_m is not None else policy.ez_max_m,
            ez_step_m=request.ez_step_m if request.ez_step_m is not None else policy.ez_step_m,
        )
    if request.seed is not None:
        scenario = scenario.with_seed(request.seed)

    setup_start = time.perf_counter()
    context = resolve_context(scenario, request, store=store)
    world = build_world(scenario)
    if store is not None:
        _register_radios(store, scenario, created_at)
    setup_ms = (time.perf_counter() - setup_start) * 1000.0

    interference_ms = 0.0

    def track(report: InterferenceReport) -> None:
        nonlocal interference_ms
        interference_ms += report.elapsed_ms

    baseline = evaluate(world.with_active(world.order), context)
    track(baseline)

    threshold = threshold_for(context, policy)
    decision = None
    final = None
    sweep = None
    step = None

    dsa_start = time.perf_counter()
    if request.mode == "feedback_loop":
        decision = run_feedback_loop(world, context, policy, on_report=track)
        final = evaluate(world.with_active(active_ids_for_decision(world, decision)), context)
        track(final)
    elif request.mode == "ez_sweep":
        sweep = ez_sweep(world, context, sweep_radii(policy), on_report=track)
    elif request.mode == "single_step":
        controls = request.controls or ControlSet()
        step = single_step(world, controls, context, policy)
        track(step.report)
    dsa_ms = (time.perf_counter() - dsa_start) * 1000.0 - _loop_interference_ms(
        interference_ms, baseline
    )

    record = ExperimentRecord(
        experiment_id=experiment_id,
        scenario_name=scenario.name,
        mode=request.mode,
        weather=request.weather,
        context=context,
        policy_id=policy.policy_id,
        threshold_db=threshold,
        seeds={"ue_drop": scenario.seeds.ue_drop, "shadow": scenario.seeds.shadow},
        baseline=baseline,
        decision=decision,
        final=final,
        sweep=sweep,
        step=step,
        timings=StageTimings(
            setup_ms=setup_ms,
            interference_ms=interference_ms,
            dsa_ms=max(dsa_ms, 0.0),
        ),
        created_at=created_at,
    )
    if store is not None:
        store.put(
            KIND_EXPERIMENT,
            experiment_id,
            record.to_dict(),
            created_at=created_at,
            refs={"context": context.snapshot_id, "policy": policy.policy_id},
        )
    return record


def _loop_interference_ms(total_tracked_ms: float, baseline: InterferenceReport) -> float:
    # The control-stage clock starts after the baseline evaluation; subtract
    # only the evaluation time that accrued inside the control stage.
    return total_tracked_ms - baseline.elapsed_ms


def _register_radios(store: Store, scenario: Scenario, now: float) -> None:
    store.register(
        Registration(
            entity_id="fss",
            kind="FSS",
            scenario_id=scenario.name,
            latitude_deg=scenario.fss.location.latitude_deg,
            longitude_deg=scenario.fss.location.longitude_deg,
            parameters={"height_m": scenario.fss.location.height_m},
            registered_at=now,
        )
    )
    for station in scenario.mbs_list:
        store.register(
            Registration(
                entity_id=station.id,
                kind="MBS",
                scenario_id=scenario.name,
                latitude_deg=station.location.latitude_deg,
                longitude_deg=station.location.longitude_deg,
                parameters={"height_m": station.location.height_m},
                registered_at=now,
            )
        )


def sweep_csv(rows) -> str:
    lines = ["ez_m,aggregate_in_db,active_count"]
    for row in rows:
        agg = "" if row.aggregate_in_db is None else repr(row.aggregate_in_db)
        lines.append(f"{row.ez_radius_m!r},{agg},{row.active_count}")
    return "\n".join(lines) + "\n"


def trace_csv_for_record(record: ExperimentRecord) -> str:
    """Iteration rows for whichever mode the record ran."""
    from .dsa import trace_csv

    if record.decision is not None:
        return trace_csv(record.decision)
    lines = ["iteration,ez_m,aggregate_in_db,active_count"]
    if record.sweep is not None:
        for i, row in enumerate(record.sweep):
            agg = "" if row.aggregate_in_db is None else repr(row.aggregate_in_db)
            lines.append(f"{i},{row.ez_radius_m!r},{agg},{row.active_count}")
    elif record.step is not None:
        agg = record.step.report.aggregate_i_over_n_db
        ez = record.step.ez_radius_m
        lines.append(
            f"0,{'' if ez is None else repr(ez)},"
            f"{'' if agg is None else repr(agg)},{record.step.report.active_mbs_count}"
        )
    return "\n".join(lines) + "\n"


def report_csv_for_record(record: ExperimentRecord) -> str:
    from .interference import report_csv

    return report_csv(record.baseline)


def interference_tier(individual_in_db: float | None, threshold_db: float) -> str:
    """Map tier for the UI: high at/above threshold, medium within 10 dB."""
    if individual_in_db is None:
        return "low"
    if individual_in_db >= threshold_db:
        return "high"
    if individual_in_db >= threshold_db - 10.0:
        return "medium"
    return "low"


def map_geojson(scenario: Scenario, record: ExperimentRecord) -> dict:
    """The UI's entire data contract: receiver, stations, and the zone."""
    features: list[dict] = []
    fss = scenario.fss.location
    features.append(
        {
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [fss.longitude_deg, fss.latitude_deg]},
            "properties": {"kind": "fss", "height_m": fss.height_m},
        }
    )
    baseline_by_id = {c.mbs_id: c for c in record.baseline.contributions}
    decision = record.decision
    step = record.step
    for station in scenario.mbs_list:
        contribution = baseline_by_id.get(station.id)
        individual = contribution.individual_in_db if contribution else None
        if decision is not None:
            active = station.id not in decision.revoked_ids and station.active
            reason = decision.revocation_reason(station.id)
        elif step is not None:
            active = station.id in step.active_ids
            reason = None if active else "control"
        else:
            active = station.active
            reason = None
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [station.location.longitude_deg, station.location.latitude_deg],
                },
                "properties": {
                    "kind": "mbs",
                    "id": station.id,
                    "active": active,
                    "revoked_reason": reason.value if isinstance(reason, RevocationReason) else reason,
                    "individual_in_db": individual,
                    "distance_m": contribution.distance_2d_m if contribution else None,
                    "los": contribution.los if contribution else None,
                    "interference_tier": interference_tier(individual, record.threshold_db),
                },
            }
        )
    ez_radius = None
    if decision is not None:
        ez_radius = decision.ez_radius_m
    elif step is not None and step.ez_radius_m is not None:
        ez_radius = step.ez_radius_m
    if ez_radius is not None:
        origin = scenario.origin
        ring = []
        for k in range(64):
            angle = 2.0 * math.pi * k / 64
            point = geo.from_enu(
                origin,
                geo.EnuPoint(ez_radius * math.sin(angle), ez_radius * math.cos(angle), 0.0),
            )
            ring.append([point.longitude_deg, point.latitude_deg])
        ring.append(ring[0])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"kind": "exclusion_zone", "radius_m": ez_radius},
            }
        )
    return {
        "type": "FeatureCollection",
        "features": features,
        "properties": {
            "experiment_id": record.experiment_id,
            "threshold_db": record.threshold_db,
            "aggregate_in_db": (
                record.decision.trace[-1].aggregate_in_db
                if record.decision is not None and record.decision.trace
                else record.baseline.aggregate_i_over_n_db
            ),
            "converged": record.decision.converged if record.decision else None,
        },
    }


def summary_text(record: ExperimentRecord) -> str:
    lines = [
        f"experiment {record.experiment_id} ({record.mode}) on {record.scenario_name}",
        f"weather {record.context.weather_kind.value} "
        f"(rain {record.context.rain_rate_mm_per_hr} mm/h), "
        f"threshold {record.threshold_db} dB",
    ]
    if record.decision is not None:
        d = record.decision
        final_agg = d.trace[-1].aggregate_in_db if d.trace else None
        lines += [
            f"converged: {d.converged} at ez radius {d.ez_radius_m:.0f} m "
            f"after {len(d.trace)} iteration(s)",
            f"final aggregate I/N: "
            + ("none (no interference)" if final_agg is None else f"{final_agg:.3f} dB"),
            f"revoked stations: {len(d.revoked)} "
            f"({sum(1 for _, r in d.revoked if r is RevocationReason.INDIVIDUAL_EXCESS)} for individual excess)",
            f"active stations: {d.trace[-1].active_count if d.trace else 0}",
        ]
    if record.sweep is not None:
        lines.append(f"sweep rows: {len(record.sweep)}")
    if record.step is not None:
        lines.append(f"step verdict: {'pass' if record.step.passed else 'fail'}")
    t = record.timings
    lines += [
        f"timings: setup {t.setup_ms:.1f} ms, interference analysis "
        f"{t.interference_ms:.1f} ms, dsa decision {t.dsa_ms:.1f} ms",
    ]
    return "\n".join(lines) + "\n"


def resolve_scenario_path(ref: str, data_dir: str | Path = "fixtures") -> Path:
    """Accept a manifest path, a scenario directory, or a fixture name."""
    path = Path(ref)
    if path.is_file():
        return path
    if path.is_dir():
        return path / "manifest.yaml"
    candidate = Path(data_dir) / ref / "manifest.yaml"
    if candidate.is_file():
        return candidate
    raise ExperimentError(f"cannot resolve scenario {ref!r} (tried {path} and {candidate})")


def resolve_policy_path(ref: str | None, data_dir: str | Path = "fixtures") -> Path | None:
    if ref is None:
        candidate = Path(data_dir) / "policies" / "default_12ghz.yaml"
        return candidate if candidate.is_file() else None
    path = Path(ref)
    if path.is_file():
        return path
    candidate = Path(data_dir) / "policies" / f"{ref}.yaml"
    if candidate.is_file():
        return candidate
    raise ExperimentError(f"cannot resolve policy {ref!r}")
