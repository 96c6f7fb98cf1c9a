import { ApiClient, ApiError } from "./api.js";
import { mapSummary, renderLegend, renderMap } from "./mapView.js";
import {
  ViewModel,
  applyMap,
  applyStatus,
  applyToast,
  applyVerdict,
  beginEvaluate,
  beginExperiment,
  clearToggles,
  initialState,
  proposedControls,
  setProposedRadius,
  setWeather,
  toggleStation,
  weatherKindFor,
} from "./state.js";
import { renderTraceChart } from "./traceChart.js";
import { renderPanel, renderToast } from "./whatIfPanel.js";

const POLL_MS = 1000;

const api = new ApiClient("");
let state: ViewModel = initialState();

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

function update(next: ViewModel | null): void {
  if (next === null) return;
  state = next;
  render();
}

function render(): void {
  $("status").textContent = state.experimentId
    ? `experiment ${state.experimentId}: ${state.experimentStatus ?? "?"}`
    : "no experiment yet";
  $("map-holder").innerHTML = state.map
    ? renderMap(state.map) + renderLegend()
    : '<div class="placeholder">run the loop to draw the deployment</div>';
  if (state.map) {
    const summary = mapSummary(state.map);
    $("map-summary").textContent =
      `${summary.stations} stations, ${summary.active} on / ${summary.revoked} off` +
      (summary.ezRadiusM === null ? "" : `, zone ${summary.ezRadiusM} m`);
  } else {
    $("map-summary").textContent = "";
  }
  $("chart-holder").innerHTML =
    state.trace.length && state.thresholdDb !== null
      ? renderTraceChart(state.trace, state.thresholdDb)
      : "";
  $("panel").innerHTML = renderPanel(state);
  $("toast-holder").innerHTML = renderToast(state);
  wirePanel();
}

function wirePanel(): void {
  document.querySelectorAll<HTMLInputElement>('input[name="weather"]').forEach((el) => {
    el.onchange = () => update(setWeather(state, el.value as "clear" | "rainy"));
  });
  const slider = document.getElementById("ez-slider") as HTMLInputElement | null;
  if (slider) {
    slider.oninput = () => {
      update(setProposedRadius(state, Number(slider.value)));
    };
  }
  document.querySelectorAll<HTMLInputElement>(".mbs-toggle").forEach((el) => {
    el.onchange = () => update(toggleStation(state, el.dataset.mbsId ?? "", el.checked));
  });
  const evaluate = document.getElementById("evaluate");
  if (evaluate) evaluate.onclick = () => void runEvaluate();
  const runLoop = document.getElementById("run-loop");
  if (runLoop) runLoop.onclick = () => void startLoop();
  const reset = document.getElementById("reset-toggles");
  if (reset) reset.onclick = () => update(clearToggles(state));
}

async function startLoop(): Promise<void> {
  try {
    const scenarios = await api.listScenarios();
    const scenario = scenarios.scenarios[0];
    if (!scenario) {
      update(applyToast(state, "no scenarios loaded on the server"));
      return;
    }
    await api.overrideContext({
      weather_kind: weatherKindFor(state.selectedWeather),
      rain_rate_mm_per_hr: state.selectedWeather === "rainy" ? 10.0 : 0.0,
    });
    const created = await api.createExperiment({
      scenario_id: scenario.scenario_id,
      mode: "feedback_loop",
      weather: state.selectedWeather === "rainy" ? "rainy" : "clear",
    });
    update({ ...beginExperiment(state, created.experiment_id), scenarioId: scenario.scenario_id });
    const experimentId = created.experiment_id;
    const status = await api.waitForExperiment(experimentId, POLL_MS, 180_000, (s) => {
      update(
        applyStatus(
          state,
          experimentId,
          s.status,
          s.record?.decision?.trace ?? null,
          s.record?.threshold_db ?? null,
        ),
      );
    });
    const map = await api.getMap(experimentId);
    update(applyMap(state, experimentId, map));
    void status;
  } catch (error) {
    update(applyToast(state, describe(error)));
  }
}

async function runEvaluate(): Promise<void> {
  if (!state.experimentId) {
    update(applyToast(state, "run the loop first"));
    return;
  }
  const begun = beginEvaluate(state);
  if (begun === null) return; // one evaluation at a time
  update(begun);
  const experimentId = state.experimentId;
  const controls = proposedControls(state);
  try {
    const verdict = await api.step(experimentId, controls);
    update(
      applyVerdict(
        state,
        experimentId,
        verdict,
        `zone ${controls.ez_radius_m} m, ${Object.keys(controls.mbs_overrides).length} override(s)`,
      ),
    );
    const map = await api.getMap(experimentId);
    update(applyMap(state, experimentId, map));
  } catch (error) {
    update(applyToast(state, describe(error)));
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    const detail = error.detail ? ` ${JSON.stringify(error.detail)}` : "";
    return `[${error.code}] ${error.message}${detail}`;
  }
  return String(error);
}

document.addEventListener("DOMContentLoaded", () => {
  render();
});
