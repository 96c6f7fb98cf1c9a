/** Wire types for the coexistence service API. The UI treats all of these
 * as read-only: every number it displays comes from one of these fields. */

export type WeatherKind = "clear" | "cloudy" | "rain_snow" | "extreme";

export type InterferenceTier = "high" | "medium" | "low";

export interface MbsProperties {
  kind: "mbs";
  id: string;
  active: boolean;
  revoked_reason: string | null;
  individual_in_db: number | null;
  distance_m: number | null;
  los: boolean | null;
  interference_tier: InterferenceTier;
}

export interface FssProperties {
  kind: "fss";
  height_m: number;
}

export interface EzProperties {
  kind: "exclusion_zone";
  radius_m: number;
}

export interface MapFeature {
  type: "Feature";
  geometry: {
    type: "Point" | "Polygon";
    coordinates: number[] | number[][][];
  };
  properties: MbsProperties | FssProperties | EzProperties;
}

export interface MapDocument {
  type: "FeatureCollection";
  features: MapFeature[];
  properties: {
    experiment_id: string;
    threshold_db: number;
    aggregate_in_db: number | null;
    converged: boolean | null;
  };
}

export interface TraceRow {
  iteration: number;
  ez_radius_m: number;
  aggregate_in_db: number | null;
  active_count: number;
  elapsed_ms?: number;
}

export interface DecisionDocument {
  ez_radius_m: number;
  converged: boolean;
  threshold_db: number;
  revoked: { mbs_id: string; reason: string }[];
  trace: TraceRow[];
}

export interface ExperimentRecord {
  experiment_id: string;
  scenario: string;
  mode: string;
  weather: string;
  threshold_db: number;
  decision: DecisionDocument | null;
  context: { weather_kind: WeatherKind; rain_rate_mm_per_hr: number };
}

export interface ExperimentStatus {
  experiment_id: string;
  status: "queued" | "running" | "done" | "failed";
  error?: string;
  record?: ExperimentRecord;
}

export interface StepResponse {
  verdict: "pass" | "fail";
  aggregate_in_db: number | null;
  threshold_db: number;
  delta_db: number | null;
  active_count: number;
  active_ids: string[];
}

export interface ScenarioSummary {
  scenario_id: string;
  mbs_count: number;
  building_count: number;
  weather_traces: string[];
}
