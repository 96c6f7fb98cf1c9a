import type { TraceRow } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = {
  width: 640,
  height: 300,
  left: 60,
  right: 16,
  top: 16,
  bottom: 36,
};

export interface ChartScales {
  x: (radiusM: number) => number;
  y: (db: number) => number;
  yMin: number;
  yMax: number;
}

/** Scales covering the trace rows plus the threshold, with a little air. */
export function chartScales(
  rows: TraceRow[],
  thresholdDb: number,
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): ChartScales {
  const radii = rows.map((r) => r.ez_radius_m);
  const values = rows
    .map((r) => r.aggregate_in_db)
    .filter((v): v is number => v !== null);
  const xMin = radii.length ? Math.min(...radii) : 0;
  const xMax = radii.length ? Math.max(...radii) : 1;
  const yMin = Math.min(thresholdDb, ...(values.length ? values : [thresholdDb])) - 2;
  const yMax = Math.max(thresholdDb, ...(values.length ? values : [thresholdDb])) + 2;
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const plotW = geometry.width - geometry.left - geometry.right;
  const plotH = geometry.height - geometry.top - geometry.bottom;
  return {
    x: (radius) => geometry.left + ((radius - xMin) / xSpan) * plotW,
    y: (db) => geometry.top + ((yMax - db) / ySpan) * plotH,
    yMin,
    yMax,
  };
}

/** Aggregate I/N versus zone radius as an SVG string. Rows are drawn exactly
 * as received (one marker per iteration, straight connectors, no smoothing);
 * the dashed line is the active threshold. */
export function renderTraceChart(
  rows: TraceRow[],
  thresholdDb: number,
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  const scales = chartScales(rows, thresholdDb, geometry);
  const parts: string[] = [];
  parts.push(
    `<svg class="chart" viewBox="0 0 ${geometry.width} ${geometry.height}" ` +
      `width="${geometry.width}" height="${geometry.height}" xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(
    `<rect x="0" y="0" width="${geometry.width}" height="${geometry.height}" fill="#fff"/>`,
  );

  const thresholdY = scales.y(thresholdDb);
  parts.push(
    `<line class="threshold" data-threshold-db="${thresholdDb}" ` +
      `x1="${geometry.left}" x2="${geometry.width - geometry.right}" ` +
      `y1="${thresholdY.toFixed(1)}" y2="${thresholdY.toFixed(1)}" ` +
      `stroke="#c62828" stroke-width="1.5" stroke-dasharray="6 4"/>`,
  );
  parts.push(
    `<text x="${geometry.width - geometry.right}" y="${(thresholdY - 5).toFixed(1)}" ` +
      `text-anchor="end" font-size="11" fill="#c62828">threshold ${thresholdDb} dB</text>`,
  );

  const drawable = rows.filter((r) => r.aggregate_in_db !== null);
  if (drawable.length > 0) {
    const points = drawable
      .map((r) => `${scales.x(r.ez_radius_m).toFixed(1)},${scales.y(r.aggregate_in_db as number).toFixed(1)}`)
      .join(" ");
    parts.push(
      `<polyline class="trace" points="${points}" fill="none" stroke="#1e88e5" stroke-width="2"/>`,
    );
    for (const row of drawable) {
      parts.push(
        `<circle class="trace-point" data-iteration="${row.iteration}" ` +
          `data-aggregate-db="${row.aggregate_in_db}" ` +
          `cx="${scales.x(row.ez_radius_m).toFixed(1)}" ` +
          `cy="${scales.y(row.aggregate_in_db as number).toFixed(1)}" r="4" fill="#1e88e5">` +
          `</circle>`,
      );
    }
  }
  for (const row of rows) {
    if (row.aggregate_in_db === null) {
      // Sentinel iteration (nothing radiating): tick on the baseline.
      parts.push(
        `<text class="trace-sentinel" x="${scales.x(row.ez_radius_m).toFixed(1)}" ` +
          `y="${(geometry.height - geometry.bottom + 14).toFixed(1)}" ` +
          `text-anchor="middle" font-size="11" fill="#607d8b">off</text>`,
      );
    }
  }

  parts.push(
    `<line x1="${geometry.left}" y1="${geometry.height - geometry.bottom}" ` +
      `x2="${geometry.width - geometry.right}" y2="${geometry.height - geometry.bottom}" stroke="#37474f"/>`,
  );
  parts.push(
    `<line x1="${geometry.left}" y1="${geometry.top}" x2="${geometry.left}" ` +
      `y2="${geometry.height - geometry.bottom}" stroke="#37474f"/>`,
  );
  for (const row of rows) {
    const x = scales.x(row.ez_radius_m);
    parts.push(
      `<text x="${x.toFixed(1)}" y="${geometry.height - 8}" text-anchor="middle" ` +
        `font-size="10" fill="#37474f">${row.ez_radius_m}</text>`,
    );
  }
  parts.push(
    `<text x="10" y="${geometry.top + 10}" font-size="11" fill="#37474f">I/N dB</text>`,
  );
  parts.push(
    `<text x="${geometry.width / 2}" y="${geometry.height - 22}" text-anchor="middle" ` +
      `font-size="11" fill="#37474f">zone radius (m)</text>`,
  );
  parts.push("</svg>");
  return parts.join("");
}
