#!/usr/bin/env python3
"""Generate the blacksburg_synth fixture.

Synthesizes a deployment with the same shape as the real Blacksburg site:
one rooftop FSS receiver, 33 macro stations within 5 km, and a building
stock (10-40 m) dense enough to give a healthy LOS/NLOS mix. Stations are
laid out in distance rings around the receiver, with blocker buildings
dropped onto selected interference axes to force NLOS links.

The layout RNG seed is searched so the shipped fixture has well-behaved
dynamics with the committed experiment seeds:

* two LOS stations inside 1 km that get revoked for individual excess,
* clear-weather convergence between 2000 and 3000 m with a passing
  what-if at a 3000 m zone,
* rainy convergence at a radius >= the clear radius.

Re-running this script reproduces the committed fixture byte for byte.
"""

from __future__ import annotations

import argparse
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from coexsim import geo
from coexsim.antenna import FssAntennaParams, MbsAntennaParams
from coexsim.context import override_snapshot
from coexsim.dsa import ControlSet, RevocationReason, run_feedback_loop, single_step
from coexsim.interference import RadioParams, evaluate
from coexsim.policy import PolicySet
from coexsim.propagation import PathLossParams
from coexsim.scenario import (
    BandPlan,
    BuildingFootprint,
    CoverageGeometry,
    FssReceiver,
    MacroBaseStation,
    Scenario,
    Seeds,
    build_world,
    save_scenario,
)

FSS_LAT = 37.2025
FSS_LON = -80.43444
UE_SEED = 20240
SHADOW_SEED = 20241

# (min radius m, max radius m, force NLOS, station count)
RINGS = [
    (800.0, 800.0, False, 1),
    (950.0, 950.0, False, 1),
    (1200.0, 2300.0, True, 6),
    (2400.0, 3000.0, False, 3),
    (3000.0, 3400.0, False, 2),
    (2400.0, 3400.0, True, 6),
    (3800.0, 4900.0, False, 2),
    (3600.0, 4900.0, True, 12),
]

CLUTTER_COUNT = 120


def _rect(center_e, center_n, width, depth, angle_rad):
    hw, hd = width / 2.0, depth / 2.0
    cos_a, sin_a = math.cos(angle_rad), math.sin(angle_rad)
    corners = []
    for dx, dy in ((-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)):
        corners.append(
            (center_e + dx * cos_a - dy * sin_a, center_n + dx * sin_a + dy * cos_a)
        )
    return corners


def synth_layout(master_seed: int):
    rng = random.Random(master_seed)
    origin = geo.GeoPoint(FSS_LAT, FSS_LON, 0.0)

    stations = []
    blockers = []
    station_i = 0
    for r_min, r_max, force_nlos, count in RINGS:
        for _ in range(count):
            station_i += 1
            radius = rng.uniform(r_min, r_max)
            azimuth = rng.uniform(0.0, 360.0)
            east = radius * math.sin(math.radians(azimuth))
            north = radius * math.cos(math.radians(azimuth))
            point = geo.from_enu(origin, geo.EnuPoint(east, north, 25.0))
            stations.append(
                MacroBaseStation(
                    id=f"mbs{station_i:02d}",
                    location=geo.GeoPoint(
                        point.latitude_deg, point.longitude_deg, 25.0
                    ),
                )
            )
            if force_nlos:
                # Drop a blocker square onto the interference axis, taller
                # than the ray there; the link runs 25 m down to 4.5 m.
                t = rng.uniform(0.35, 0.65)
                seg_h = 25.0 + t * (4.5 - 25.0)
                height = min(40.0, round(seg_h + rng.uniform(6.0, 12.0)))
                blockers.append(
                    (
                        _rect(
                            east * (1.0 - t),
                            north * (1.0 - t),
                            30.0,
                            30.0,
                            rng.uniform(0.0, math.pi),
                        ),
                        height,
                    )
                )

    clutter = []
    for _ in range(CLUTTER_COUNT):
        radius = math.sqrt(rng.uniform(150.0**2, 4800.0**2))
        azimuth = rng.uniform(0.0, 2.0 * math.pi)
        clutter.append(
            (
                _rect(
                    radius * math.sin(azimuth),
                    radius * math.cos(azimuth),
                    rng.uniform(15.0, 60.0),
                    rng.uniform(15.0, 60.0),
                    rng.uniform(0.0, math.pi),
                ),
                round(rng.uniform(10.0, 40.0)),
            )
        )

    buildings = []
    for i, (corners, height) in enumerate(blockers + clutter, start=1):
        ring = tuple(
            (p.latitude_deg, p.longitude_deg)
            for p in (
                geo.from_enu(origin, geo.EnuPoint(e, n, 1.0)) for e, n in corners
            )
        )
        buildings.append(
            BuildingFootprint(id=f"bldg{i:03d}", ring_latlon=ring, height_m=float(height))
        )
    return stations, buildings


def make_scenario(master_seed: int, traces: dict[str, str]) -> Scenario:
    stations, buildings = synth_layout(master_seed)
    return Scenario(
        name="blacksburg_synth",
        fss=FssReceiver(
            location=geo.GeoPoint(FSS_LAT, FSS_LON, 4.5),
            antenna=FssAntennaParams(),
            noise_temperature_k=290.0,
        ),
        mbs_list=tuple(stations),
        buildings=tuple(buildings),
        radio=RadioParams(),
        mbs_antenna=MbsAntennaParams(),
        pathloss=PathLossParams(shadow_seed=SHADOW_SEED),
        seeds=Seeds(ue_drop=UE_SEED, shadow=SHADOW_SEED),
        band=BandPlan(),
        coverage=CoverageGeometry(),
        weather_traces=tuple(traces.items()),
    )


def check_dynamics(scenario: Scenario, verbose: bool = False) -> bool:
    world = build_world(scenario)
    policy = PolicySet()
    clear = override_snapshot("clear", 0.0, scenario.fss.location)
    rainy = override_snapshot("rain_snow", 10.0, scenario.fss.location)

    dec_clear = run_feedback_loop(world, clear, policy)
    dec_rainy = run_feedback_loop(world, rainy, policy)
    baseline = evaluate(world, clear)
    by_id = {c.mbs_id: c for c in baseline.contributions}
    los_fraction = sum(1 for c in baseline.contributions if c.los) / len(
        baseline.contributions
    )
    step_3000 = single_step(world, ControlSet(ez_radius_m=3000.0), clear, policy)

    inner_ok = True
    for mid in ("mbs01", "mbs02"):
        reason = dec_clear.revocation_reason(mid)
        inner_ok = inner_ok and by_id[mid].los and reason is RevocationReason.INDIVIDUAL_EXCESS

    checks = {
        "clear converged": dec_clear.converged,
        "rainy converged": dec_rainy.converged,
        "clear radius in [2000, 3000]": 2000.0 <= dec_clear.ez_radius_m <= 3000.0,
        "rainy radius >= clear radius": dec_rainy.ez_radius_m >= dec_clear.ez_radius_m,
        "what-if at 3000 m passes": step_3000.passed,
        "inner pair LOS + excess-revoked": inner_ok,
        "mbs01 individually above threshold": (
            by_id["mbs01"].individual_in_db is not None
            and by_id["mbs01"].individual_in_db > dec_clear.threshold_db + 1.0
        ),
        "LOS fraction in [0.15, 0.7]": 0.15 <= los_fraction <= 0.7,
    }
    if verbose:
        print(
            f"  clear: r={dec_clear.ez_radius_m:.0f} converged={dec_clear.converged} "
            f"iters={len(dec_clear.trace)} | rainy: r={dec_rainy.ez_radius_m:.0f} "
            f"converged={dec_rainy.converged} iters={len(dec_rainy.trace)} "
            f"| LOS {los_fraction:.2f}"
        )
        for name, ok in checks.items():
            if not ok:
                print(f"  FAILED: {name}")
    return all(checks.values())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures/blacksburg_synth")
    parser.add_argument("--seed", type=int, default=None,
                        help="layout seed; searched from 0 when omitted")
    parser.add_argument("--max-seeds", type=int, default=400)
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    clear_path = out_dir / "weather_clear.csv"
    rain_path = out_dir / "weather_rain.csv"
    clear_path.write_text("unix_time,kind,rain_rate\n0,clear,0\n")
    rain_path.write_text("unix_time,kind,rain_rate\n0,rain_snow,10.0\n")
    traces = {"clear": str(clear_path.resolve()), "rainy": str(rain_path.resolve())}

    if args.seed is not None:
        candidates = [args.seed]
    else:
        candidates = list(range(args.max_seeds))
    chosen = None
    for master_seed in candidates:
        scenario = make_scenario(master_seed, traces)
        print(f"layout seed {master_seed}:")
        if check_dynamics(scenario, verbose=True):
            chosen = master_seed
            break
    if chosen is None:
        sys.exit("no layout seed satisfied the fixture constraints")

    scenario = make_scenario(chosen, traces)
    manifest = save_scenario(scenario, out_dir)
    print(f"layout seed {chosen} accepted")
    print(f"wrote {manifest} ({len(scenario.mbs_list)} stations, "
          f"{len(scenario.buildings)} buildings)")


if __name__ == "__main__":
    main()
