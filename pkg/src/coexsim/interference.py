"""Aggregate interference-to-noise evaluation at the earth-station receiver.

Each active base station splits its conducted power equally across its
steered beams; every beam contributes

    I = per-beam power + beam gain toward the victim
        + dish gain from the interferer's direction - path loss

in dBW. Per-station powers are summed in watts and compared against the
thermal noise floor ``10*log10(kTB)``.

An evaluation is a pure function of the world, the context, and the seeds:
shadow fading is keyed per link, so station order and parallelism never
change a single reported bit. Watt sums use ``math.fsum`` (correctly
rounded), making the aggregate independent of summation order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from .antenna import Beam, FssAntennaParams, MbsAntennaParams, fss_gain, mbs_beam_gain
from .context import ContextSnapshot
from .geo import EnuPoint, SpatialIndex
from .propagation import PathLossParams, path_loss

BOLTZMANN_J_PER_K = 1.380649e-23


@dataclass(frozen=True)
class RadioParams:
    """Transmit and receiver-noise parameters shared by all base stations."""

    total_power_w: float = 10.0
    channel_bandwidth_hz: float = 1.0e8
    noise_temperature_k: float = 290.0

    def __post_init__(self) -> None:
        if self.total_power_w <= 0.0:
            raise ValueError("total power must be positive")
        if self.channel_bandwidth_hz <= 0.0:
            raise ValueError("bandwidth must be positive")
        if self.noise_temperature_k <= 0.0:
            raise ValueError("noise temperature must be positive")


@dataclass(frozen=True)
class MbsLink:
    """Static geometry of one base-station -> receiver interference axis."""

    mbs_id: str
    position: EnuPoint
    distance_2d_m: float
    distance_3d_m: float
    los: bool
    azimuth_to_fss_deg: float
    elevation_to_fss_deg: float
    fss_gain_dbi: float


@dataclass(frozen=True)
class World:
    """Immutable evaluation input: geometry, beams, antennas, and seeds.

    Built once from a scenario (see ``scenario.build_world``); the active
    set is the only thing the control loop varies, via :meth:`with_active`.
    """

    fss_position: EnuPoint
    fss_antenna: FssAntennaParams
    mbs_antenna: MbsAntennaParams
    pathloss: PathLossParams
    radio: RadioParams
    links: Mapping[str, MbsLink]
    beams: Mapping[str, tuple[Beam, ...]]
    order: tuple[str, ...]
    active: frozenset[str]
    index: SpatialIndex | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", MappingProxyType(dict(self.links)))
        object.__setattr__(self, "beams", MappingProxyType(dict(self.beams)))

    def with_active(self, active_ids) -> "World":
        unknown = set(active_ids) - set(self.order)
        if unknown:
            raise KeyError(f"unknown mbs ids: {sorted(unknown)}")
        return replace(self, active=frozenset(active_ids))


@dataclass(frozen=True)
class MbsContribution:
    mbs_id: str
    distance_2d_m: float
    distance_3d_m: float
    los: bool
    per_beam_dbw: tuple[tuple[str, float], ...]
    power_w: float
    individual_in_db: float | None  # None when the station radiates nothing


@dataclass(frozen=True)
class InterferenceReport:
    """One evaluation: per-beam, per-station, and aggregate results.

    ``aggregate_i_over_n_db`` is ``None`` when nothing radiates (the
    no-interference sentinel); callers compare through :meth:`meets` so the
    sentinel never leaks into dB arithmetic.
    """

    contributions: tuple[MbsContribution, ...]
    noise_floor_dbw: float
    aggregate_i_over_n_db: float | None
    active_mbs_count: int
    radio: RadioParams
    elapsed_ms: float

    @property
    def per_mbs_w(self) -> dict[str, float]:
        return {c.mbs_id: c.power_w for c in self.contributions}

    def meets(self, threshold_db: float) -> bool:
        if self.aggregate_i_over_n_db is None:
            return True
        return self.aggregate_i_over_n_db <= threshold_db

    def to_dict(self) -> dict:
        return {
            "noise_floor_dbw": self.noise_floor_dbw,
            "aggregate_i_over_n_db": self.aggregate_i_over_n_db,
            "active_mbs_count": self.active_mbs_count,
            "total_power_w": self.radio.total_power_w,
            "channel_bandwidth_hz": self.radio.channel_bandwidth_hz,
            "noise_temperature_k": self.radio.noise_temperature_k,
            "elapsed_ms": self.elapsed_ms,
            "contributions": [
                {
                    "mbs_id": c.mbs_id,
                    "distance_2d_m": c.distance_2d_m,
                    "distance_3d_m": c.distance_3d_m,
                    "los": c.los,
                    "power_w": c.power_w,
                    "individual_in_db": c.individual_in_db,
                    "per_beam_dbw": dict(c.per_beam_dbw),
                }
                for c in self.contributions
            ],
        }


def per_beam_power(total_power_w: float, ue_count: int) -> float:
    """Equal power split across beams, in dBW."""
    if ue_count < 1:
        raise ValueError("no active beams")
    if total_power_w <= 0.0:
        raise ValueError("total power must be positive")
    return 10.0 * math.log10(total_power_w) - 10.0 * math.log10(ue_count)


def noise_floor(params: RadioParams) -> float:
    """Thermal noise floor 10*log10(kTB) in dBW."""
    return 10.0 * math.log10(
        BOLTZMANN_J_PER_K * params.noise_temperature_k * params.channel_bandwidth_hz
    )


def beam_interference(
    beam: Beam,
    world: World,
    context: ContextSnapshot,
    params: RadioParams | None = None,
) -> float:
    """Received interference of a single beam at the dish, in dBW."""
    params = params or world.radio
    link = world.links[beam.mbs_id]
    ue_count = len(world.beams[beam.mbs_id])
    sample = path_loss(
        link.distance_3d_m,
        link_id=beam.mbs_id,
        los=link.los,
        rain_rate_mm_per_hr=context.rain_rate_mm_per_hr,
        params=world.pathloss,
    )
    power = per_beam_power(params.total_power_w, ue_count)
    tx_gain = mbs_beam_gain(
        beam, link.azimuth_to_fss_deg, link.elevation_to_fss_deg, world.mbs_antenna
    )
    return power + tx_gain + link.fss_gain_dbi - sample.total_db


def _evaluate_mbs(
    mbs_id: str, world: World, context: ContextSnapshot, params: RadioParams
) -> MbsContribution:
    link = world.links[mbs_id]
    beams = world.beams.get(mbs_id, ())
    per_beam: list[tuple[str, float]] = []
    if beams:
        sample = path_loss(
            link.distance_3d_m,
            link_id=mbs_id,
            los=link.los,
            rain_rate_mm_per_hr=context.rain_rate_mm_per_hr,
            params=world.pathloss,
        )
        power = per_beam_power(params.total_power_w, len(beams))
        for beam in beams:
            tx_gain = mbs_beam_gain(
                beam,
                link.azimuth_to_fss_deg,
                link.elevation_to_fss_deg,
                world.mbs_antenna,
            )
            per_beam.append(
                (beam.ue_id, power + tx_gain + link.fss_gain_dbi - sample.total_db)
            )
    watts = math.fsum(10.0 ** (dbw / 10.0) for _, dbw in per_beam)
    individual = (
        10.0 * math.log10(watts) - noise_floor(params) if watts > 0.0 else None
    )
    return MbsContribution(
        mbs_id=mbs_id,
        distance_2d_m=link.distance_2d_m,
        distance_3d_m=link.distance_3d_m,
        los=link.los,
        per_beam_dbw=tuple(per_beam),
        power_w=watts,
        individual_in_db=individual,
    )


def evaluate(
    world: World,
    context: ContextSnapshot,
    params: RadioParams | None = None,
    workers: int | None = None,
) -> InterferenceReport:
    """Evaluate aggregate I/N for the world's active stations.

    With ``workers`` the per-station work fans out over a thread pool;
    contributions are reassembled in station order and watt sums are
    correctly rounded, so the result is bit-identical to a sequential run.
    """
    started = time.perf_counter()
    params = params or world.radio
    nf = noise_floor(params)
    active_ids = [mid for mid in world.order if mid in world.active]
    if workers and workers > 1 and len(active_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda mid: _evaluate_mbs(mid, world, context, params), active_ids)
            )
        contributions = tuple(results)
    else:
        contributions = tuple(
            _evaluate_mbs(mid, world, context, params) for mid in active_ids
        )
    total_w = math.fsum(c.power_w for c in contributions)
    aggregate = 10.0 * math.log10(total_w) - nf if total_w > 0.0 else None
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return InterferenceReport(
        contributions=contributions,
        noise_floor_dbw=nf,
        aggregate_i_over_n_db=aggregate,
        active_mbs_count=len(active_ids),
        radio=params,
        elapsed_ms=elapsed_ms,
    )


def aggregate_from_watts(per_mbs_w: Mapping[str, float], noise_floor_dbw: float) -> float | None:
    """Aggregate I/N from already-computed per-station watt totals."""
    total_w = math.fsum(per_mbs_w.values())
    if total_w <= 0.0:
        return None
    return 10.0 * math.log10(total_w) - noise_floor_dbw


def report_csv(report: InterferenceReport) -> str:
    """Per-station CSV: one row per active station, scenario order."""
    lines = ["mbs_id,distance_m,los,individual_in_db"]
    for c in report.contributions:
        individual = "" if c.individual_in_db is None else repr(c.individual_in_db)
        lines.append(
            f"{c.mbs_id},{c.distance_2d_m!r},{'true' if c.los else 'false'},{individual}"
        )
    return "\n".join(lines) + "\n"
