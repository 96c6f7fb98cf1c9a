/** End-to-end against the real service: spawns `coexsim serve` with the
 * shipped fixture, then drives the same client/render code the browser
 * runs. Requires the Python package to be installed (pip install -e ..). */

import { type ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { mapSummary, renderMap } from "../src/mapView.js";
import { convergedControls } from "../src/state.js";
import { renderTraceChart } from "../src/traceChart.js";
import type { ExperimentStatus } from "../src/types.js";

const PORT = 8900 + (process.pid % 50);
const BASE = `http://127.0.0.1:${PORT}`;
const FIXTURES = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "../../fixtures",
);

let server: ChildProcess;
const api = new ApiClient(BASE);

async function waitForHealth(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service never became healthy");
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

async function runLoop(weather: "clear" | "rainy"): Promise<ExperimentStatus> {
  const created = await api.createExperiment({
    scenario_id: "blacksburg_synth",
    mode: "feedback_loop",
    weather,
  });
  return api.waitForExperiment(created.experiment_id, 250, 120_000);
}

beforeAll(async () => {
  server = spawn(
    "coexsim",
    ["serve", "--port", String(PORT), "--data-dir", FIXTURES, "--workers", "2"],
    { stdio: "ignore" },
  );
  await waitForHealth();
}, 60_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("live service", () => {
  it("lists the shipped scenario", async () => {
    const body = await api.listScenarios();
    const scenario = body.scenarios.find((s) => s.scenario_id === "blacksburg_synth");
    expect(scenario).toBeDefined();
    expect(scenario!.mbs_count).toBe(33);
  });

  it("renders 33 station markers plus the receiver from map.geojson", async () => {
    const done = await runLoop("clear");
    const map = await api.getMap(done.experiment_id);
    const svg = renderMap(map);
    expect(svg.match(/class="mbs /g)?.length).toBe(33);
    expect(svg.match(/class="fss"/g)?.length).toBe(1);
    expect(mapSummary(map)).toMatchObject({ stations: 33 });
    expect(svg).toContain('class="ez"');
  }, 180_000);

  it("moves the threshold line from -8.5 to -12 when weather turns rainy", async () => {
    const clearDone = await runLoop("clear");
    const rainyDone = await runLoop("rainy");
    const clearRecord = clearDone.record!;
    const rainyRecord = rainyDone.record!;
    expect(clearRecord.threshold_db).toBe(-8.5);
    expect(rainyRecord.threshold_db).toBe(-12.0);

    const clearChart = renderTraceChart(
      clearRecord.decision!.trace,
      clearRecord.threshold_db,
    );
    const rainyChart = renderTraceChart(
      rainyRecord.decision!.trace,
      rainyRecord.threshold_db,
    );
    expect(clearChart).toContain('data-threshold-db="-8.5"');
    expect(rainyChart).toContain('data-threshold-db="-12"');
    expect(clearChart).toContain("threshold -8.5 dB");
    expect(rainyChart).toContain("threshold -12 dB");

    // Both loops converge on the fixture, rainy never at a smaller radius.
    expect(clearRecord.decision!.converged).toBe(true);
    expect(rainyRecord.decision!.converged).toBe(true);
    expect(rainyRecord.decision!.ez_radius_m).toBeGreaterThanOrEqual(
      clearRecord.decision!.ez_radius_m,
    );
  }, 180_000);

  it("passes an Evaluate on the converged control set", async () => {
    const done = await runLoop("clear");
    const map = await api.getMap(done.experiment_id);
    const verdict = await api.step(done.experiment_id, convergedControls(map));
    expect(verdict.verdict).toBe("pass");
    expect(
      verdict.aggregate_in_db === null ||
        verdict.aggregate_in_db <= verdict.threshold_db,
    ).toBe(true);
  }, 180_000);

  it("passes with the zone slider alone at 3000 m on this deployment", async () => {
    const done = await runLoop("clear");
    const verdict = await api.step(done.experiment_id, { ez_radius_m: 3000 });
    expect(verdict.verdict).toBe("pass");
  }, 180_000);

  it("rejects unknown station overrides with a structured 422", async () => {
    const done = await runLoop("clear");
    await expect(
      api.step(done.experiment_id, { mbs_overrides: { nonexistent: true } }),
    ).rejects.toMatchObject({ status: 422, code: "unknown_mbs", detail: ["nonexistent"] });
  }, 180_000);
});
