import type { MapDocument, TraceRow } from "../src/types.js";

export function syntheticMap(): MapDocument {
  const ring: number[][] = [];
  for (let k = 0; k <= 16; k++) {
    const angle = (2 * Math.PI * k) / 16;
    ring.push([-80.43444 + 0.01 * Math.sin(angle), 37.2025 + 0.009 * Math.cos(angle)]);
  }
  return {
    type: "FeatureCollection",
    features: [
      {
        type: "Feature",
        geometry: { type: "Point", coordinates: [-80.43444, 37.2025] },
        properties: { kind: "fss", height_m: 4.5 },
      },
      {
        type: "Feature",
        geometry: { type: "Point", coordinates: [-80.4254, 37.2025] },
        properties: {
          kind: "mbs",
          id: "east1",
          active: true,
          revoked_reason: null,
          individual_in_db: -14.2,
          distance_m: 800,
          los: true,
          interference_tier: "medium",
        },
      },
      {
        type: "Feature",
        geometry: { type: "Point", coordinates: [-80.43444, 37.2115] },
        properties: {
          kind: "mbs",
          id: "north1",
          active: false,
          revoked_reason: "individual_excess",
          individual_in_db: 2.5,
          distance_m: 1000,
          los: true,
          interference_tier: "high",
        },
      },
      {
        type: "Feature",
        geometry: { type: "Point", coordinates: [-80.4444, 37.1925] },
        properties: {
          kind: "mbs",
          id: "far1",
          active: true,
          revoked_reason: null,
          individual_in_db: -40.0,
          distance_m: 4000,
          los: false,
          interference_tier: "low",
        },
      },
      {
        type: "Feature",
        geometry: { type: "Polygon", coordinates: [ring] },
        properties: { kind: "exclusion_zone", radius_m: 1000 },
      },
    ],
    properties: {
      experiment_id: "exp1",
      threshold_db: -8.5,
      aggregate_in_db: -9.1,
      converged: true,
    },
  };
}

export function syntheticTrace(): TraceRow[] {
  return [
    { iteration: 0, ez_radius_m: 500, aggregate_in_db: -7.2, active_count: 29 },
    { iteration: 1, ez_radius_m: 1000, aggregate_in_db: -7.3, active_count: 28 },
    { iteration: 2, ez_radius_m: 1500, aggregate_in_db: -8.9, active_count: 24 },
  ];
}
