import math
from pathlib import Path

import pytest

from coexsim import geo
from coexsim.antenna import FssAntennaParams, MbsAntennaParams
from coexsim.context import override_snapshot
from coexsim.interference import RadioParams
from coexsim.policy import load_policy
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
    load_scenario,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

FSS_LAT = 37.2025
FSS_LON = -80.43444


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def blacksburg() -> Scenario:
    return load_scenario(FIXTURES / "blacksburg_synth")


@pytest.fixture(scope="session")
def blacksburg_world(blacksburg):
    return build_world(blacksburg)


@pytest.fixture(scope="session")
def default_policy():
    return load_policy(FIXTURES / "policies" / "default_12ghz.yaml")


@pytest.fixture()
def clear_ctx():
    return override_snapshot("clear", 0.0, geo.GeoPoint(FSS_LAT, FSS_LON, 4.5))


@pytest.fixture()
def rainy_ctx():
    return override_snapshot("rain_snow", 10.0, geo.GeoPoint(FSS_LAT, FSS_LON, 4.5))


def enu_rect_latlon(origin, center_e, center_n, half_w=15.0, half_d=15.0):
    """Axis-aligned square footprint around an ENU center, as lat/lon ring."""
    ring = []
    for de, dn in ((-half_w, -half_d), (half_w, -half_d), (half_w, half_d), (-half_w, half_d)):
        p = geo.from_enu(origin, geo.EnuPoint(center_e + de, center_n + dn, 1.0))
        ring.append((p.latitude_deg, p.longitude_deg))
    return tuple(ring)


def make_scenario(
    stations,
    buildings=(),
    sigma_los=0.0,
    sigma_nlos=0.0,
    ue_per_sector=10,
    ue_seed=7,
    shadow_seed=11,
    name="synthetic",
    total_power_w=10.0,
) -> Scenario:
    """Small in-memory scenario.

    ``stations``: iterable of (distance_m, azimuth_deg) or (distance_m,
    azimuth_deg, height_m) around the receiver. ``buildings``: iterable of
    (center_e, center_n, half_size, height_m) squares in ENU.
    """
    origin = geo.GeoPoint(FSS_LAT, FSS_LON, 0.0)
    mbs_list = []
    for k, entry in enumerate(stations, start=1):
        dist, az = entry[0], entry[1]
        height = entry[2] if len(entry) > 2 else 25.0
        p = geo.from_enu(
            origin,
            geo.EnuPoint(
                dist * math.sin(math.radians(az)), dist * math.cos(math.radians(az)), height
            ),
        )
        mbs_list.append(
            MacroBaseStation(
                id=f"m{k:02d}",
                location=geo.GeoPoint(p.latitude_deg, p.longitude_deg, height),
                ue_per_sector=ue_per_sector,
            )
        )
    footprints = []
    for k, (ce, cn, half, height) in enumerate(buildings, start=1):
        footprints.append(
            BuildingFootprint(
                id=f"b{k:02d}",
                ring_latlon=enu_rect_latlon(origin, ce, cn, half, half),
                height_m=height,
            )
        )
    return Scenario(
        name=name,
        fss=FssReceiver(
            location=geo.GeoPoint(FSS_LAT, FSS_LON, 4.5),
            antenna=FssAntennaParams(),
        ),
        mbs_list=tuple(mbs_list),
        buildings=tuple(footprints),
        radio=RadioParams(total_power_w=total_power_w),
        mbs_antenna=MbsAntennaParams(),
        pathloss=PathLossParams(
            sigma_los_db=sigma_los, sigma_nlos_db=sigma_nlos, shadow_seed=shadow_seed
        ),
        seeds=Seeds(ue_drop=ue_seed, shadow=shadow_seed),
        band=BandPlan(),
        coverage=CoverageGeometry(),
    )
