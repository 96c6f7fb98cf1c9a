"""World model and data ingestion.

A scenario is described by one YAML manifest that embeds every parameter
and seed and references two data files: a cell-site CSV (``id,lat,lon,
height_m``, OpenCellID-compatible subset, extra columns ignored) and a
GeoJSON FeatureCollection of building footprints (height read from the
``height_m`` property, falling back to ``height``).

All geometry is kept in latitude/longitude; east/north/up positions are
recomputed from the manifest on every world build with the receiver site
as the frame origin, so the projection convention cannot drift through a
save/load cycle.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from . import geo
from .antenna import Beam, FssAntennaParams, MbsAntennaParams, fss_gain
from .interference import MbsLink, RadioParams, World
from .propagation import PathLossParams

log = logging.getLogger(__name__)

SCENARIO_RADIUS_M = 5000.0
DEFAULT_BUILDING_HEIGHT_M = 15.0
UE_HEIGHT_M = 1.5


class ScenarioError(Exception):
    """Malformed manifest or data file."""


@dataclass(frozen=True)
class FssReceiver:
    location: geo.GeoPoint
    antenna: FssAntennaParams
    noise_temperature_k: float = 290.0

    def __post_init__(self) -> None:
        if self.location.height_m <= 0.0:
            raise ScenarioError("receiver height must be positive")


@dataclass(frozen=True)
class MacroBaseStation:
    id: str
    location: geo.GeoPoint
    sector_azimuths_deg: tuple[float, float, float] = (0.0, 120.0, 240.0)
    ue_per_sector: int = 10
    active: bool = True

    def __post_init__(self) -> None:
        if len(self.sector_azimuths_deg) != 3:
            raise ScenarioError(f"mbs {self.id}: exactly three sectors required")
        if self.ue_per_sector < 0:
            raise ScenarioError(f"mbs {self.id}: negative ue_per_sector")


@dataclass(frozen=True)
class BuildingFootprint:
    id: str
    ring_latlon: tuple[tuple[float, float], ...]  # (lat, lon) vertices
    height_m: float


@dataclass(frozen=True)
class Seeds:
    ue_drop: int = 1
    shadow: int = 2


@dataclass(frozen=True)
class BandPlan:
    low_ghz: float = 12.2
    high_ghz: float = 12.7
    channel_count: int = 5

    def __post_init__(self) -> None:
        if not self.low_ghz < self.high_ghz:
            raise ScenarioError("band edges out of order")
        if self.channel_count < 1:
            raise ScenarioError("need at least one channel")

    @property
    def center_ghz(self) -> float:
        return 0.5 * (self.low_ghz + self.high_ghz)

    @property
    def channel_bandwidth_hz(self) -> float:
        return (self.high_ghz - self.low_ghz) * 1e9 / self.channel_count


@dataclass(frozen=True)
class CoverageGeometry:
    """Cell geometry shared by every station in the deployment."""

    mbs_height_m: float = 25.0
    coverage_radius_m: float = 500.0
    min_ue_distance_m: float = 35.0

    def __post_init__(self) -> None:
        if not 0.0 < self.min_ue_distance_m < self.coverage_radius_m:
            raise ScenarioError("need 0 < min UE distance < coverage radius")


@dataclass(frozen=True)
class Scenario:
    name: str
    fss: FssReceiver
    mbs_list: tuple[MacroBaseStation, ...]
    buildings: tuple[BuildingFootprint, ...]
    radio: RadioParams
    mbs_antenna: MbsAntennaParams
    pathloss: PathLossParams
    seeds: Seeds
    band: BandPlan
    coverage: CoverageGeometry
    weather_traces: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        ids = [m.id for m in self.mbs_list]
        if len(ids) != len(set(ids)):
            raise ScenarioError("duplicate mbs ids")
        bids = [b.id for b in self.buildings]
        if len(bids) != len(set(bids)):
            raise ScenarioError("duplicate building ids")

    @property
    def origin(self) -> geo.GeoPoint:
        """ENU frame anchor: the receiver site at ground level."""
        return geo.GeoPoint(
            self.fss.location.latitude_deg, self.fss.location.longitude_deg, 0.0
        )

    def weather_trace_path(self, name: str) -> str:
        for trace_name, path in self.weather_traces:
            if trace_name == name:
                return path
        raise ScenarioError(
            f"no weather trace named {name!r}; have "
            f"{[n for n, _ in self.weather_traces]}"
        )

    def with_seed(self, seed: int) -> "Scenario":
        """Override both RNG streams with one master seed."""
        return replace(
            self,
            seeds=Seeds(ue_drop=seed, shadow=seed),
            pathloss=replace(self.pathloss, shadow_seed=seed),
        )


def _stable_seed(*parts) -> int:
    """Platform-stable integer from string parts (never the builtin hash)."""
    text = ":".join(str(p) for p in parts)
    return int.from_bytes(
        hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big"
    )


def load_mbs_csv(text: str, defaults: CoverageGeometry, source: str = "mbs.csv") -> list[MacroBaseStation]:
    reader = csv.DictReader(io.StringIO(text))
    stations: list[MacroBaseStation] = []
    if reader.fieldnames is None:
        return stations
    required = {"id", "lat", "lon"}
    missing = required - set(reader.fieldnames)
    if missing:
        raise ScenarioError(f"{source}: missing columns {sorted(missing)}")
    for lineno, row in enumerate(reader, start=2):
        try:
            height_text = (row.get("height_m") or "").strip()
            height = float(height_text) if height_text else defaults.mbs_height_m
            stations.append(
                MacroBaseStation(
                    id=row["id"].strip(),
                    location=geo.GeoPoint(float(row["lat"]), float(row["lon"]), height),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{source} line {lineno}: {exc}") from exc
    return stations


def load_buildings_geojson(text: str, source: str = "buildings.geojson") -> list[BuildingFootprint]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: invalid JSON: {exc}") from exc
    if doc.get("type") != "FeatureCollection":
        raise ScenarioError(f"{source}: expected a FeatureCollection")
    defaulted = 0
    out: list[BuildingFootprint] = []
    for i, feature in enumerate(doc.get("features", [])):
        label = feature.get("id") or feature.get("properties", {}).get("id") or f"feature {i}"
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ScenarioError(f"{source}: {label}: only Polygon features supported")
        try:
            exterior = geom["coordinates"][0]
            ring = tuple((float(lat), float(lon)) for lon, lat in exterior)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{source}: {label}: bad coordinates: {exc}") from exc
        if len(ring) >= 2 and ring[0] == ring[-1]:
            ring = ring[:-1]  # GeoJSON rings repeat the first vertex
        if len(ring) < 3:
            raise ScenarioError(f"{source}: {label}: ring needs >= 3 distinct vertices")
        props = feature.get("properties") or {}
        height = props.get("height_m", props.get("height"))
        if height is None:
            height = DEFAULT_BUILDING_HEIGHT_M
            defaulted += 1
        out.append(BuildingFootprint(id=str(label), ring_latlon=ring, height_m=float(height)))
    if defaulted:
        log.warning("%s: %d building(s) missing height, defaulted to %.0f m",
                    source, defaulted, DEFAULT_BUILDING_HEIGHT_M)
    return out


def _require(mapping: dict, key: str, source: str):
    if key not in mapping:
        raise ScenarioError(f"{source}: missing required key {key!r}")
    return mapping[key]


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario manifest plus its data files."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.yaml"
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read manifest {path}: {exc}") from exc
    return load_scenario_text(text, base_dir=path.parent, source=str(path))


def load_scenario_text(text: str, base_dir: str | Path, source: str = "<manifest>") -> Scenario:
    base_dir = Path(base_dir)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: manifest must be a mapping")

    fss_doc = _require(doc, "fss", source)
    try:
        fss = FssReceiver(
            location=geo.GeoPoint(
                float(_require(fss_doc, "latitude_deg", f"{source}:fss")),
                float(_require(fss_doc, "longitude_deg", f"{source}:fss")),
                float(fss_doc.get("height_m", 4.5)),
            ),
            antenna=FssAntennaParams(**fss_doc.get("antenna", {})),
            noise_temperature_k=float(fss_doc.get("noise_temperature_k", 290.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{source}: fss: {exc}") from exc

    try:
        coverage = CoverageGeometry(**doc.get("coverage", {}))
        band = BandPlan(**doc.get("band", {}))
        radio_doc = dict(doc.get("radio", {}))
        radio_doc.setdefault("channel_bandwidth_hz", band.channel_bandwidth_hz)
        radio_doc.setdefault("noise_temperature_k", fss.noise_temperature_k)
        radio = RadioParams(**radio_doc)
        seeds = Seeds(**doc.get("seeds", {}))
        pathloss_doc = dict(doc.get("pathloss", {}))
        pathloss_doc.setdefault("frequency_ghz", band.center_ghz)
        pathloss_doc.setdefault("rx_height_m", fss.location.height_m)
        pathloss_doc["shadow_seed"] = seeds.shadow
        pathloss = PathLossParams(**pathloss_doc)
        mbs_antenna = MbsAntennaParams(**doc.get("mbs_antenna", {}))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{source}: parameters: {exc}") from exc

    mbs_doc = doc.get("mbs", {})
    sector_azimuths = tuple(float(a) for a in mbs_doc.get("sector_azimuths_deg", (0.0, 120.0, 240.0)))
    ue_per_sector = int(mbs_doc.get("ue_per_sector", 10))
    stations: list[MacroBaseStation] = []
    if "mbs_csv" in doc and doc["mbs_csv"]:
        csv_path = base_dir / doc["mbs_csv"]
        try:
            csv_text = csv_path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read {csv_path}: {exc}") from exc
        stations = load_mbs_csv(csv_text, coverage, source=str(csv_path))
        stations = [
            replace(s, sector_azimuths_deg=sector_azimuths, ue_per_sector=ue_per_sector)
            for s in stations
        ]

    buildings: list[BuildingFootprint] = []
    if "buildings_geojson" in doc and doc["buildings_geojson"]:
        gj_path = base_dir / doc["buildings_geojson"]
        try:
            gj_text = gj_path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read {gj_path}: {exc}") from exc
        buildings = load_buildings_geojson(gj_text, source=str(gj_path))

    origin = geo.GeoPoint(fss.location.latitude_deg, fss.location.longitude_deg, 0.0)

    kept_stations = []
    dropped = 0
    for s in stations:
        if geo.distance_2d(geo.EnuPoint(0, 0, 0), _horizontal_enu(origin, s.location)) <= SCENARIO_RADIUS_M:
            kept_stations.append(s)
        else:
            dropped += 1
    if dropped:
        log.warning("%s: dropped %d station(s) beyond %.0f m of the receiver",
                    source, dropped, SCENARIO_RADIUS_M)

    kept_buildings = []
    dropped_b = 0
    for b in buildings:
        centroid_lat = sum(v[0] for v in b.ring_latlon) / len(b.ring_latlon)
        centroid_lon = sum(v[1] for v in b.ring_latlon) / len(b.ring_latlon)
        centroid = geo.GeoPoint(centroid_lat, centroid_lon, 1.0)
        if geo.distance_2d(geo.EnuPoint(0, 0, 0), _horizontal_enu(origin, centroid)) <= SCENARIO_RADIUS_M + 500.0:
            kept_buildings.append(b)
        else:
            dropped_b += 1
    if dropped_b:
        log.warning("%s: dropped %d building(s) outside the scenario extent", source, dropped_b)

    traces = tuple(
        (str(name), str((base_dir / p).resolve()))
        for name, p in (doc.get("weather_traces") or {}).items()
    )

    return Scenario(
        name=str(doc.get("name", base_dir.name)),
        fss=fss,
        mbs_list=tuple(kept_stations),
        buildings=tuple(kept_buildings),
        radio=radio,
        mbs_antenna=mbs_antenna,
        pathloss=pathloss,
        seeds=seeds,
        band=band,
        coverage=coverage,
        weather_traces=traces,
    )


def _horizontal_enu(origin: geo.GeoPoint, p: geo.GeoPoint) -> geo.EnuPoint:
    e = geo.to_enu(origin, p)
    return geo.EnuPoint(e.east_m, e.north_m, 0.0)


def _relative_if_inside(path: str, base: Path) -> str:
    try:
        return str(Path(path).resolve().relative_to(base.resolve()))
    except ValueError:
        return path


def save_scenario(scenario: Scenario, out_dir: str | Path) -> Path:
    """Write manifest + data files; inverse of :func:`load_scenario`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    mbs_lines = ["id,lat,lon,height_m"]
    for s in scenario.mbs_list:
        mbs_lines.append(
            f"{s.id},{s.location.latitude_deg!r},{s.location.longitude_deg!r},{s.location.height_m!r}"
        )
    (out_dir / "mbs.csv").write_text("\n".join(mbs_lines) + "\n")

    features = []
    for b in scenario.buildings:
        coords = [[lon, lat] for lat, lon in b.ring_latlon]
        coords.append(coords[0])
        features.append(
            {
                "type": "Feature",
                "id": b.id,
                "properties": {"height_m": b.height_m},
                "geometry": {"type": "Polygon", "coordinates": [coords]},
            }
        )
    (out_dir / "buildings.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, indent=1)
    )

    manifest = {
        "name": scenario.name,
        "fss": {
            "latitude_deg": scenario.fss.location.latitude_deg,
            "longitude_deg": scenario.fss.location.longitude_deg,
            "height_m": scenario.fss.location.height_m,
            "noise_temperature_k": scenario.fss.noise_temperature_k,
            "antenna": {
                "boresight_gain_dbi": scenario.fss.antenna.boresight_gain_dbi,
                "boresight_azimuth_deg": scenario.fss.antenna.boresight_azimuth_deg,
                "boresight_elevation_deg": scenario.fss.antenna.boresight_elevation_deg,
                "near_in_deg": scenario.fss.antenna.near_in_deg,
                "far_out_deg": scenario.fss.antenna.far_out_deg,
                "backlobe_dbi": scenario.fss.antenna.backlobe_dbi,
            },
        },
        "mbs_csv": "mbs.csv",
        "buildings_geojson": "buildings.geojson",
        "mbs": {
            "sector_azimuths_deg": list(
                scenario.mbs_list[0].sector_azimuths_deg if scenario.mbs_list else (0.0, 120.0, 240.0)
            ),
            "ue_per_sector": scenario.mbs_list[0].ue_per_sector if scenario.mbs_list else 10,
        },
        "coverage": {
            "mbs_height_m": scenario.coverage.mbs_height_m,
            "coverage_radius_m": scenario.coverage.coverage_radius_m,
            "min_ue_distance_m": scenario.coverage.min_ue_distance_m,
        },
        "mbs_antenna": {
            "peak_gain_dbi": scenario.mbs_antenna.peak_gain_dbi,
            "theta_3db_deg": scenario.mbs_antenna.theta_3db_deg,
            "phi_3db_deg": scenario.mbs_antenna.phi_3db_deg,
            "sidelobe_floor_db": scenario.mbs_antenna.sidelobe_floor_db,
            "sector_width_deg": scenario.mbs_antenna.sector_width_deg,
        },
        "radio": {
            "total_power_w": scenario.radio.total_power_w,
            "channel_bandwidth_hz": scenario.radio.channel_bandwidth_hz,
            "noise_temperature_k": scenario.radio.noise_temperature_k,
        },
        "band": {
            "low_ghz": scenario.band.low_ghz,
            "high_ghz": scenario.band.high_ghz,
            "channel_count": scenario.band.channel_count,
        },
        "pathloss": {
            "frequency_ghz": scenario.pathloss.frequency_ghz,
            "tx_height_m": scenario.pathloss.tx_height_m,
            "rx_height_m": scenario.pathloss.rx_height_m,
            "sigma_los_db": scenario.pathloss.sigma_los_db,
            "sigma_nlos_db": scenario.pathloss.sigma_nlos_db,
        },
        "seeds": {"ue_drop": scenario.seeds.ue_drop, "shadow": scenario.seeds.shadow},
        "weather_traces": {
            name: _relative_if_inside(path, out_dir)
            for name, path in scenario.weather_traces
        },
    }
    (out_dir / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=False))
    return out_dir / "manifest.yaml"


def drop_ues(scenario: Scenario) -> dict[str, tuple[Beam, ...]]:
    """Drop UEs uniformly in each sector's service annulus and steer beams.

    Deterministic from the ue_drop seed; each (station, sector) pair gets an
    independent substream, so station order never matters.
    """
    origin = scenario.origin
    r_min = scenario.coverage.min_ue_distance_m
    r_max = scenario.coverage.coverage_radius_m
    width = scenario.mbs_antenna.sector_width_deg
    out: dict[str, tuple[Beam, ...]] = {}
    for station in scenario.mbs_list:
        pos = geo.to_enu(origin, station.location)
        beams: list[Beam] = []
        for sector_index, boresight in enumerate(station.sector_azimuths_deg):
            rng = random.Random(
                _stable_seed(scenario.seeds.ue_drop, station.id, sector_index)
            )
            for j in range(station.ue_per_sector):
                radius = math.sqrt(
                    rng.random() * (r_max**2 - r_min**2) + r_min**2
                )
                azimuth = (boresight - width / 2.0 + rng.random() * width) % 360.0
                ue = geo.EnuPoint(
                    pos.east_m + radius * math.sin(math.radians(azimuth)),
                    pos.north_m + radius * math.cos(math.radians(azimuth)),
                    UE_HEIGHT_M,
                )
                steer_az, steer_el = geo.angles_between(pos, ue)
                beams.append(
                    Beam(
                        mbs_id=station.id,
                        sector_index=sector_index,
                        ue_id=f"{station.id}/s{sector_index}/u{j}",
                        steering_azimuth_deg=steer_az,
                        steering_elevation_deg=steer_el,
                        sector_boresight_deg=boresight,
                        sector_width_deg=width,
                    )
                )
        out[station.id] = tuple(beams)
    return out


def build_world(scenario: Scenario) -> World:
    """Project the scenario into ENU and precompute link geometry and LOS."""
    origin = scenario.origin
    fss_pos = geo.to_enu(origin, scenario.fss.location)
    buildings = [
        geo.Building(
            id=b.id,
            footprint=tuple(
                (e.east_m, e.north_m)
                for e in (
                    geo.to_enu(origin, geo.GeoPoint(lat, lon, 1.0))
                    for lat, lon in b.ring_latlon
                )
            ),
            height_m=b.height_m,
        )
        for b in scenario.buildings
    ]
    index = geo.SpatialIndex.build(buildings) if buildings else None
    links: dict[str, MbsLink] = {}
    for station in scenario.mbs_list:
        pos = geo.to_enu(origin, station.location)
        az_to_fss, el_to_fss = geo.angles_between(pos, fss_pos)
        az_from_fss, el_from_fss = geo.angles_between(fss_pos, pos)
        links[station.id] = MbsLink(
            mbs_id=station.id,
            position=pos,
            distance_2d_m=geo.distance_2d(pos, fss_pos),
            distance_3d_m=geo.distance_3d(pos, fss_pos),
            los=geo.is_los(pos, fss_pos, buildings, index),
            azimuth_to_fss_deg=az_to_fss,
            elevation_to_fss_deg=el_to_fss,
            fss_gain_dbi=fss_gain(az_from_fss, el_from_fss, scenario.fss.antenna),
        )
    return World(
        fss_position=fss_pos,
        fss_antenna=scenario.fss.antenna,
        mbs_antenna=scenario.mbs_antenna,
        pathloss=scenario.pathloss,
        radio=scenario.radio,
        links=links,
        beams=drop_ues(scenario),
        order=tuple(s.id for s in scenario.mbs_list),
        active=frozenset(s.id for s in scenario.mbs_list if s.active),
        index=index,
    )
