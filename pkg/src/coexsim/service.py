"""HTTP facade over the experiment runner.

Experiments run asynchronously on a bounded worker pool and are polled by
id; artifact endpoints (trace/report CSV, map GeoJSON) answer 409 until the
record exists. Error bodies are structured ``{code, message, detail}`` and
never carry stack traces.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, RedirectResponse
from pydantic import BaseModel

from .context import ContextSnapshot, WeatherKind, override_snapshot
from .dsa import ControlSet, UnknownMbsError, single_step
from .geo import GeoPoint
from .interference import World
from .policy import PolicyError, PolicySet, load_policy
from .runner import (
    ExperimentError,
    ExperimentRecord,
    ExperimentRequest,
    map_geojson,
    report_csv_for_record,
    run_experiment,
    trace_csv_for_record,
)
from .scenario import Scenario, ScenarioError, build_world, load_scenario, load_scenario_text
from .store import Store

log = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    data_dir: str = "fixtures"
    store_path: str = ":memory:"
    workers: int = 2
    default_policy: str | None = None
    frontend_dir: str | None = None


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: object = None) -> None:
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(message)


@dataclass
class ExperimentHandle:
    experiment_id: str
    status: str  # queued | running | done | failed
    record: ExperimentRecord | None = None
    error: str | None = None
    scenario: Scenario | None = None
    policy: PolicySet | None = None
    world: World | None = None
    context: ContextSnapshot | None = None


class ExperimentBody(BaseModel):
    scenario_id: str
    mode: str = "feedback_loop"
    weather: str = "clear"
    override_weather_kind: str | None = None
    override_rain_rate: float | None = None
    seed: int | None = None
    policy: str | None = None
    ez_min_m: float | None = None
    ez_max_m: float | None = None
    ez_step_m: float | None = None
    controls: dict | None = None


class StepBody(BaseModel):
    ez_radius_m: float | None = None
    mbs_overrides: dict[str, bool] = {}


class OverrideBody(BaseModel):
    weather_kind: str | None = None
    rain_rate_mm_per_hr: float = 0.0
    reset: bool = False


@dataclass
class AppState:
    config: ServiceConfig
    store: Store
    scenarios: dict[str, Scenario] = field(default_factory=dict)
    experiments: dict[str, ExperimentHandle] = field(default_factory=dict)
    context_override: ContextSnapshot | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    executor: ThreadPoolExecutor | None = None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = AppState(config=config, store=Store(config.store_path))
    state.executor = ThreadPoolExecutor(max_workers=config.workers)
    _autoload_scenarios(state)

    app = FastAPI(title="coexsim", version="0.1.0")
    app.state.coexsim = state

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(_request: Request, exc: Exception):
        log.exception("unhandled error")
        return JSONResponse(
            status_code=500,
            content={"code": "internal", "message": "internal error", "detail": None},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "scenarios": sorted(state.scenarios)}

    @app.post("/scenarios")
    async def upload_scenario(request: Request):
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            scenario = load_scenario_text(text, base_dir=config.data_dir)
        except ScenarioError as exc:
            raise ApiError(400, "scenario_parse", str(exc))
        with state.lock:
            state.scenarios[scenario.name] = scenario
        return {"scenario_id": scenario.name, "mbs_count": len(scenario.mbs_list)}

    @app.get("/scenarios")
    def list_scenarios():
        with state.lock:
            return {
                "scenarios": [
                    {
                        "scenario_id": name,
                        "mbs_count": len(s.mbs_list),
                        "building_count": len(s.buildings),
                        "weather_traces": [n for n, _ in s.weather_traces],
                    }
                    for name, s in sorted(state.scenarios.items())
                ]
            }

    @app.post("/experiments", status_code=202)
    def create_experiment(body: ExperimentBody):
        scenario = _get_scenario(state, body.scenario_id)
        policy = _load_policy_ref(state, body.policy)
        controls = None
        if body.controls is not None:
            controls = ControlSet(
                ez_radius_m=body.controls.get("ez_radius_m"),
                mbs_overrides=dict(body.controls.get("mbs_overrides") or {}),
            )
        weather = body.weather
        override_kind = body.override_weather_kind
        override_rate = body.override_rain_rate
        if weather == "current":
            snap = _current_context(state)
            weather = "override"
            override_kind = snap.weather_kind.value
            override_rate = snap.rain_rate_mm_per_hr
        elif weather not in ("override", "live") and not any(
            name == weather for name, _ in scenario.weather_traces
        ):
            raise ApiError(404, "unknown_weather", f"scenario has no weather trace {weather!r}")
        try:
            request = ExperimentRequest(
                scenario=body.scenario_id,
                mode=body.mode,
                weather=weather,
                override_weather_kind=override_kind,
                override_rain_rate=override_rate,
                seed=body.seed,
                policy=body.policy,
                controls=controls,
                ez_min_m=body.ez_min_m,
                ez_max_m=body.ez_max_m,
                ez_step_m=body.ez_step_m,
            )
        except ExperimentError as exc:
            raise ApiError(422, "bad_request", str(exc))
        handle = ExperimentHandle(
            experiment_id=uuid.uuid4().hex[:12], status="queued",
            scenario=scenario, policy=policy,
        )
        with state.lock:
            state.experiments[handle.experiment_id] = handle
        assert state.executor is not None
        state.executor.submit(_execute, state, handle, request)
        return {"experiment_id": handle.experiment_id, "status": handle.status}

    @app.get("/experiments/{experiment_id}")
    def get_experiment(experiment_id: str):
        handle = _get_handle(state, experiment_id)
        body = {"experiment_id": experiment_id, "status": handle.status}
        if handle.status == "failed":
            body["error"] = handle.error
        if handle.record is not None:
            body["record"] = handle.record.to_dict()
        return body

    @app.get("/experiments/{experiment_id}/trace.csv")
    def get_trace(experiment_id: str):
        record = _require_record(state, experiment_id)
        return Response(content=trace_csv_for_record(record), media_type="text/csv")

    @app.get("/experiments/{experiment_id}/report.csv")
    def get_report(experiment_id: str):
        record = _require_record(state, experiment_id)
        return Response(content=report_csv_for_record(record), media_type="text/csv")

    @app.get("/experiments/{experiment_id}/map.geojson")
    def get_map(experiment_id: str):
        handle = _get_handle(state, experiment_id)
        record = _require_record(state, experiment_id)
        assert handle.scenario is not None
        return JSONResponse(content=map_geojson(handle.scenario, record), media_type="application/geo+json")

    @app.post("/experiments/{experiment_id}/step")
    def step_experiment(experiment_id: str, body: StepBody):
        handle = _get_handle(state, experiment_id)
        if handle.status != "done" or handle.world is None:
            raise ApiError(409, "not_ready", f"experiment {experiment_id} is {handle.status}")
        assert handle.policy is not None and handle.context is not None
        controls = ControlSet(ez_radius_m=body.ez_radius_m, mbs_overrides=dict(body.mbs_overrides))
        try:
            result = single_step(handle.world, controls, handle.context, handle.policy)
        except UnknownMbsError as exc:
            raise ApiError(422, "unknown_mbs", "unknown mbs ids in controls", detail=exc.ids)
        aggregate = result.report.aggregate_i_over_n_db
        return {
            "verdict": "pass" if result.passed else "fail",
            "aggregate_in_db": aggregate,
            "threshold_db": result.threshold_db,
            "delta_db": None if aggregate is None else aggregate - result.threshold_db,
            "active_count": result.report.active_mbs_count,
            "active_ids": list(result.active_ids),
            "report": result.report.to_dict(),
        }

    @app.get("/contexts/current")
    def current_context():
        return _current_context(state).to_dict()

    @app.post("/contexts/override")
    def override_context(body: OverrideBody):
        if body.reset:
            with state.lock:
                state.context_override = None
            return {"override": None}
        kind = body.weather_kind or (
            "rain_snow" if body.rain_rate_mm_per_hr > 0.0 else "clear"
        )
        try:
            snap = override_snapshot(
                kind, body.rain_rate_mm_per_hr, _default_location(state), timestamp=time.time()
            )
        except ValueError as exc:
            raise ApiError(422, "bad_override", str(exc))
        with state.lock:
            state.context_override = snap
        return {"override": snap.to_dict()}

    if config.frontend_dir and Path(config.frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        @app.get("/")
        def index():
            return RedirectResponse("/ui/")

        app.mount("/ui", StaticFiles(directory=config.frontend_dir, html=True), name="ui")

    return app


def _autoload_scenarios(state: AppState) -> None:
    data_dir = Path(state.config.data_dir)
    if not data_dir.is_dir():
        return
    for manifest in sorted(data_dir.glob("*/manifest.yaml")):
        try:
            scenario = load_scenario(manifest)
        except ScenarioError as exc:
            log.warning("skipping %s: %s", manifest, exc)
            continue
        state.scenarios[scenario.name] = scenario
        log.info("loaded scenario %r (%d stations)", scenario.name, len(scenario.mbs_list))


def _get_scenario(state: AppState, scenario_id: str) -> Scenario:
    with state.lock:
        scenario = state.scenarios.get(scenario_id)
    if scenario is None:
        raise ApiError(404, "unknown_scenario", f"no scenario {scenario_id!r}")
    return scenario


def _load_policy_ref(state: AppState, ref: str | None) -> PolicySet:
    from .runner import resolve_policy_path

    try:
        path = resolve_policy_path(ref or state.config.default_policy, state.config.data_dir)
    except ExperimentError as exc:
        raise ApiError(404, "unknown_policy", str(exc))
    if path is None:
        return PolicySet()
    try:
        return load_policy(path)
    except PolicyError as exc:
        raise ApiError(400, "policy_parse", str(exc))


def _get_handle(state: AppState, experiment_id: str) -> ExperimentHandle:
    with state.lock:
        handle = state.experiments.get(experiment_id)
    if handle is None:
        raise ApiError(404, "unknown_experiment", f"no experiment {experiment_id!r}")
    return handle


def _require_record(state: AppState, experiment_id: str) -> ExperimentRecord:
    handle = _get_handle(state, experiment_id)
    if handle.status == "failed":
        raise ApiError(409, "failed", f"experiment failed: {handle.error}")
    if handle.record is None:
        raise ApiError(409, "not_ready", f"experiment {experiment_id} is {handle.status}")
    return handle.record


def _current_context(state: AppState) -> ContextSnapshot:
    with state.lock:
        if state.context_override is not None:
            return state.context_override
    return override_snapshot(
        WeatherKind.CLEAR, 0.0, _default_location(state), timestamp=time.time()
    )


def _default_location(state: AppState) -> GeoPoint:
    with state.lock:
        for scenario in state.scenarios.values():
            return scenario.fss.location
    return GeoPoint(0.0, 0.0, 1.0)


def _execute(state: AppState, handle: ExperimentHandle, request: ExperimentRequest) -> None:
    handle.status = "running"
    try:
        assert handle.scenario is not None and handle.policy is not None
        scenario = handle.scenario
        if request.seed is not None:
            scenario = scenario.with_seed(request.seed)
        record = run_experiment(
            scenario,
            handle.policy,
            request,
            store=state.store,
            experiment_id=handle.experiment_id,
        )
        # Keep the evaluated world around for interactive what-if steps.
        handle.world = build_world(scenario)
        handle.context = record.context
        handle.record = record
        handle.status = "done"
    except Exception as exc:  # surfaces through GET /experiments/{id}
        log.exception("experiment %s failed", handle.experiment_id)
        handle.error = str(exc)
        handle.status = "failed"
