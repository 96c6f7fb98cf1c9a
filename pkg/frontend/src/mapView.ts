import type { EzProperties, FssProperties, MapDocument, MbsProperties } from "./types.js";

/** Fixed display radii per interference tier, in metres of map space.
 * The tier itself comes from the server; only the drawing size is ours,
 * and the legend says so. */
export const TIER_RADIUS_M: Record<string, number> = {
  high: 420,
  medium: 280,
  low: 150,
};

export const TIER_COLOR: Record<string, string> = {
  high: "#9e9e9e",
  medium: "#fb8c00",
  low: "#fdd835",
};

const EARTH_RADIUS_M = 6_371_000;

export interface ProjectedPoint {
  x: number;
  y: number;
}

/** Equirectangular display projection around an anchor; east = +x, north = -y
 * (SVG y grows downward). Purely presentational. */
export function project(
  lonDeg: number,
  latDeg: number,
  anchorLonDeg: number,
  anchorLatDeg: number,
): ProjectedPoint {
  const rad = Math.PI / 180;
  const x = EARTH_RADIUS_M * (lonDeg - anchorLonDeg) * rad * Math.cos(anchorLatDeg * rad);
  const y = -EARTH_RADIUS_M * (latDeg - anchorLatDeg) * rad;
  return { x, y };
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fssAnchor(doc: MapDocument): [number, number] {
  const fss = doc.features.find((f) => f.properties.kind === "fss");
  if (!fss || fss.geometry.type !== "Point") {
    throw new Error("map document has no fss point");
  }
  const [lon, lat] = fss.geometry.coordinates as number[];
  return [lon, lat];
}

/** Render the server's map document as a self-contained SVG string.
 * One marker per station, tier circle underneath, receiver marker, and the
 * exclusion-zone ring exactly as the server drew it. */
export function renderMap(doc: MapDocument, sizePx = 640): string {
  const [anchorLon, anchorLat] = fssAnchor(doc);
  const extent = 5200; // metres shown from the receiver outward
  const parts: string[] = [];
  parts.push(
    `<svg class="map" viewBox="${-extent} ${-extent} ${2 * extent} ${2 * extent}" ` +
      `width="${sizePx}" height="${sizePx}" xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(
    `<rect x="${-extent}" y="${-extent}" width="${2 * extent}" height="${2 * extent}" fill="#f6f8f7"/>`,
  );

  const zone = doc.features.find((f) => f.properties.kind === "exclusion_zone");
  if (zone && zone.geometry.type === "Polygon") {
    const ring = (zone.geometry.coordinates as number[][][])[0];
    const points = ring
      .map(([lon, lat]) => {
        const p = project(lon, lat, anchorLon, anchorLat);
        return `${p.x.toFixed(1)},${p.y.toFixed(1)}`;
      })
      .join(" ");
    const radius = (zone.properties as EzProperties).radius_m;
    parts.push(
      `<polygon class="ez" data-radius-m="${radius}" points="${points}" ` +
        `fill="rgba(30,136,229,0.08)" stroke="#1e88e5" stroke-width="40" stroke-dasharray="120 80"/>`,
    );
  }

  // Tier circles under the markers so markers stay clickable.
  for (const feature of doc.features) {
    if (feature.properties.kind !== "mbs" || feature.geometry.type !== "Point") continue;
    const props = feature.properties as MbsProperties;
    const [lon, lat] = feature.geometry.coordinates as number[];
    const p = project(lon, lat, anchorLon, anchorLat);
    const tier = props.interference_tier;
    parts.push(
      `<circle class="tier tier-${tier}" cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" ` +
        `r="${TIER_RADIUS_M[tier]}" fill="${TIER_COLOR[tier]}" fill-opacity="0.35" stroke="none"/>`,
    );
  }

  for (const feature of doc.features) {
    if (feature.properties.kind !== "mbs" || feature.geometry.type !== "Point") continue;
    const props = feature.properties as MbsProperties;
    const [lon, lat] = feature.geometry.coordinates as number[];
    const p = project(lon, lat, anchorLon, anchorLat);
    const color = props.active ? "#2e7d32" : "#c62828";
    const status = props.active
      ? "active"
      : `off (${props.revoked_reason ?? "manual"})`;
    const individual =
      props.individual_in_db === null ? "n/a" : `${props.individual_in_db.toFixed(1)} dB`;
    parts.push(
      `<g class="mbs ${props.active ? "mbs-active" : "mbs-revoked"}" data-mbs-id="${esc(props.id)}">` +
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="90" fill="${color}" stroke="#fff" stroke-width="20"/>` +
        `<title>${esc(props.id)}: ${esc(status)}, individual I/N ${esc(individual)}, ` +
        `${props.los === null ? "?" : props.los ? "LOS" : "NLOS"}</title></g>`,
    );
  }

  const fss = project(anchorLon, anchorLat, anchorLon, anchorLat);
  parts.push(
    `<g class="fss"><rect x="${fss.x - 110}" y="${fss.y - 110}" width="220" height="220" ` +
      `transform="rotate(45 ${fss.x} ${fss.y})" fill="#1565c0" stroke="#fff" stroke-width="24"/>` +
      `<title>earth station receiver</title></g>`,
  );
  parts.push("</svg>");
  return parts.join("");
}

export function renderLegend(): string {
  return (
    '<div class="legend">' +
    '<span class="legend-item"><span class="swatch" style="background:#1565c0"></span>receiver</span>' +
    '<span class="legend-item"><span class="swatch" style="background:#2e7d32"></span>station on</span>' +
    '<span class="legend-item"><span class="swatch" style="background:#c62828"></span>station off</span>' +
    `<span class="legend-item"><span class="swatch" style="background:${TIER_COLOR.high}"></span>high tier</span>` +
    `<span class="legend-item"><span class="swatch" style="background:${TIER_COLOR.medium}"></span>medium tier</span>` +
    `<span class="legend-item"><span class="swatch" style="background:${TIER_COLOR.low}"></span>low tier</span>` +
    '<span class="legend-note">circle size encodes the server-reported tier, not a physical radius</span>' +
    "</div>"
  );
}

export function mapSummary(doc: MapDocument): {
  stations: number;
  active: number;
  revoked: number;
  ezRadiusM: number | null;
} {
  let stations = 0;
  let active = 0;
  let ezRadiusM: number | null = null;
  for (const feature of doc.features) {
    if (feature.properties.kind === "mbs") {
      stations += 1;
      if ((feature.properties as MbsProperties).active) active += 1;
    } else if (feature.properties.kind === "exclusion_zone") {
      ezRadiusM = (feature.properties as EzProperties).radius_m;
    }
  }
  return { stations, active, revoked: stations - active, ezRadiusM };
}

export type { FssProperties };
