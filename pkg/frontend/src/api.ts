import type {
  ExperimentStatus,
  MapDocument,
  ScenarioSummary,
  StepResponse,
  WeatherKind,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let code = "http_error";
    let message = `${response.status} ${response.statusText}`;
    let detail: unknown = null;
    try {
      const body = (await response.json()) as {
        code?: string;
        message?: string;
        detail?: unknown;
      };
      code = body.code ?? code;
      message = body.message ?? message;
      detail = body.detail ?? null;
    } catch {
      // non-JSON error body; keep the HTTP status text
    }
    throw new ApiError(response.status, code, message, detail);
  }
  return (await response.json()) as T;
}

/** Thin typed client over the service endpoints the UI consumes. */
export class ApiClient {
  constructor(public baseUrl: string = "") {}

  listScenarios(): Promise<{ scenarios: ScenarioSummary[] }> {
    return request(`${this.baseUrl}/scenarios`);
  }

  createExperiment(body: {
    scenario_id: string;
    mode?: string;
    weather?: string;
    seed?: number;
  }): Promise<{ experiment_id: string }> {
    return request(`${this.baseUrl}/experiments`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getExperiment(id: string): Promise<ExperimentStatus> {
    return request(`${this.baseUrl}/experiments/${id}`);
  }

  getMap(id: string): Promise<MapDocument> {
    return request(`${this.baseUrl}/experiments/${id}/map.geojson`);
  }

  step(
    id: string,
    controls: { ez_radius_m?: number | null; mbs_overrides?: Record<string, boolean> },
  ): Promise<StepResponse> {
    return request(`${this.baseUrl}/experiments/${id}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(controls),
    });
  }

  overrideContext(body: {
    weather_kind?: WeatherKind;
    rain_rate_mm_per_hr?: number;
    reset?: boolean;
  }): Promise<unknown> {
    return request(`${this.baseUrl}/contexts/override`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** Poll an experiment until it finishes; throws on failure status. */
  async waitForExperiment(
    id: string,
    pollMs = 1000,
    timeoutMs = 120_000,
    onUpdate?: (status: ExperimentStatus) => void,
  ): Promise<ExperimentStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.getExperiment(id);
      onUpdate?.(status);
      if (status.status === "done") return status;
      if (status.status === "failed") {
        throw new ApiError(500, "experiment_failed", status.error ?? "experiment failed");
      }
      if (Date.now() > deadline) {
        throw new ApiError(408, "timeout", `experiment ${id} still ${status.status}`);
      }
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }
}
