import type { MapDocument, StepResponse, TraceRow, WeatherKind } from "./types.js";

/** Client view model. Everything rendered comes from server payloads held
 * here; the proposed* fields are the only client-owned values and they are
 * inputs, never results. */
export interface ViewModel {
  scenarioId: string | null;
  experimentId: string | null;
  experimentStatus: string | null;
  map: MapDocument | null;
  trace: TraceRow[];
  thresholdDb: number | null;
  selectedWeather: "clear" | "rainy";
  proposedRadiusM: number;
  proposedToggles: Record<string, boolean>;
  lastVerdict: StepResponse | null;
  evaluateInFlight: boolean;
  toast: string | null;
  history: { label: string; verdict: string; aggregate: number | null }[];
}

export function initialState(): ViewModel {
  return {
    scenarioId: null,
    experimentId: null,
    experimentStatus: null,
    map: null,
    trace: [],
    thresholdDb: null,
    selectedWeather: "clear",
    proposedRadiusM: 500,
    proposedToggles: {},
    lastVerdict: null,
    evaluateInFlight: false,
    toast: null,
    history: [],
  };
}

export function weatherKindFor(selected: "clear" | "rainy"): WeatherKind {
  return selected === "clear" ? "clear" : "rain_snow";
}

export function setWeather(state: ViewModel, weather: "clear" | "rainy"): ViewModel {
  return { ...state, selectedWeather: weather };
}

export function setProposedRadius(state: ViewModel, radiusM: number): ViewModel {
  const snapped = Math.min(5000, Math.max(500, Math.round(radiusM / 500) * 500));
  return { ...state, proposedRadiusM: snapped };
}

export function toggleStation(state: ViewModel, mbsId: string, on: boolean): ViewModel {
  return { ...state, proposedToggles: { ...state.proposedToggles, [mbsId]: on } };
}

export function clearToggles(state: ViewModel): ViewModel {
  return { ...state, proposedToggles: {} };
}

/** Start a new experiment: any payload still in flight for the previous id
 * becomes stale and will be dropped by acceptExperimentPayload. */
export function beginExperiment(state: ViewModel, experimentId: string): ViewModel {
  return {
    ...state,
    experimentId,
    experimentStatus: "queued",
    map: null,
    trace: [],
    lastVerdict: null,
    proposedToggles: {},
  };
}

/** Guard: payloads for superseded experiment ids are discarded. */
export function acceptExperimentPayload(state: ViewModel, experimentId: string): boolean {
  return state.experimentId === experimentId;
}

export function applyStatus(
  state: ViewModel,
  experimentId: string,
  status: string,
  trace: TraceRow[] | null,
  thresholdDb: number | null,
): ViewModel {
  if (!acceptExperimentPayload(state, experimentId)) return state;
  return {
    ...state,
    experimentStatus: status,
    trace: trace ?? state.trace,
    thresholdDb: thresholdDb ?? state.thresholdDb,
  };
}

export function applyMap(state: ViewModel, experimentId: string, map: MapDocument): ViewModel {
  if (!acceptExperimentPayload(state, experimentId)) return state;
  return {
    ...state,
    map,
    thresholdDb: map.properties.threshold_db,
    proposedRadiusM: ezRadiusFrom(map) ?? state.proposedRadiusM,
  };
}

function ezRadiusFrom(map: MapDocument): number | null {
  for (const feature of map.features) {
    if (feature.properties.kind === "exclusion_zone") {
      return (feature.properties as { radius_m: number }).radius_m;
    }
  }
  return null;
}

export function beginEvaluate(state: ViewModel): ViewModel | null {
  if (state.evaluateInFlight) return null; // at most one in flight
  return { ...state, evaluateInFlight: true };
}

export function applyVerdict(
  state: ViewModel,
  experimentId: string,
  verdict: StepResponse,
  label: string,
): ViewModel {
  const done = { ...state, evaluateInFlight: false };
  if (!acceptExperimentPayload(state, experimentId)) return done;
  return {
    ...done,
    lastVerdict: verdict,
    history: [
      ...state.history,
      { label, verdict: verdict.verdict, aggregate: verdict.aggregate_in_db },
    ],
  };
}

export function applyToast(state: ViewModel, toast: string | null): ViewModel {
  return { ...state, toast, evaluateInFlight: false };
}

/** Controls equivalent to the server's converged decision: its zone radius
 * plus explicit off-switches for every revoked station. */
export function convergedControls(map: MapDocument): {
  ez_radius_m: number | null;
  mbs_overrides: Record<string, boolean>;
} {
  const overrides: Record<string, boolean> = {};
  let radius: number | null = null;
  for (const feature of map.features) {
    if (feature.properties.kind === "mbs") {
      const props = feature.properties as { id: string; active: boolean };
      if (!props.active) overrides[props.id] = false;
    } else if (feature.properties.kind === "exclusion_zone") {
      radius = (feature.properties as { radius_m: number }).radius_m;
    }
  }
  return { ez_radius_m: radius, mbs_overrides: overrides };
}

/** Proposed controls from the panel state. */
export function proposedControls(state: ViewModel): {
  ez_radius_m: number;
  mbs_overrides: Record<string, boolean>;
} {
  return {
    ez_radius_m: state.proposedRadiusM,
    mbs_overrides: { ...state.proposedToggles },
  };
}
