"""Antenna gain models for the interfering sectors and the victim dish.

The macro-cell beam uses the standard parabolic (quadratic-in-dB) pattern
with a sidelobe floor; defaults are consistent with an 8x8 element array
(8 dBi element plus ~18 dB array gain). A beam evaluated outside its own
120-degree sector takes one extra sidelobe-floor attenuation rather than an
absolute null, which keeps the gain finite and testable.

The earth-station dish uses the classic 29 - 25*log10(phi) off-axis
envelope with a boresight plateau and a backlobe floor. The envelope is
clamped at the backlobe level so the pattern is non-increasing in the
off-axis angle for any parameter set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geo import wrap_angle_deg


@dataclass(frozen=True)
class MbsAntennaParams:
    peak_gain_dbi: float = 26.0
    theta_3db_deg: float = 10.0
    phi_3db_deg: float = 10.0
    sidelobe_floor_db: float = 30.0
    sector_width_deg: float = 120.0

    def __post_init__(self) -> None:
        if self.peak_gain_dbi <= 0.0:
            raise ValueError("peak gain must be positive")
        if self.theta_3db_deg <= 0.0 or self.phi_3db_deg <= 0.0:
            raise ValueError("3 dB beamwidths must be positive")
        if self.sidelobe_floor_db <= 0.0:
            raise ValueError("sidelobe floor must be positive")
        if not 0.0 < self.sector_width_deg <= 360.0:
            raise ValueError("sector width must be in (0, 360]")


@dataclass(frozen=True)
class FssAntennaParams:
    boresight_gain_dbi: float = 33.8
    boresight_azimuth_deg: float = 180.0
    boresight_elevation_deg: float = 40.0
    near_in_deg: float = 1.0
    far_out_deg: float = 48.0
    backlobe_dbi: float = -10.0

    def __post_init__(self) -> None:
        if not 0.0 < self.near_in_deg < self.far_out_deg <= 180.0:
            raise ValueError("need 0 < near_in < far_out <= 180")
        envelope_at_near_in = 29.0 - 25.0 * math.log10(self.near_in_deg)
        if self.boresight_gain_dbi <= envelope_at_near_in:
            raise ValueError(
                "boresight gain must exceed the envelope at the near-in angle"
            )


@dataclass(frozen=True)
class Beam:
    """One downlink beam of a sector, steered at its served UE."""

    mbs_id: str
    sector_index: int
    ue_id: str
    steering_azimuth_deg: float
    steering_elevation_deg: float
    sector_boresight_deg: float
    sector_width_deg: float = 120.0

    def __post_init__(self) -> None:
        if self.sector_index not in (0, 1, 2):
            raise ValueError(f"sector index {self.sector_index} not in {{0,1,2}}")
        if not self.contains_azimuth(self.steering_azimuth_deg):
            raise ValueError(
                f"beam {self.ue_id}: steering azimuth "
                f"{self.steering_azimuth_deg} outside sector span"
            )

    def contains_azimuth(self, azimuth_deg: float) -> bool:
        half = self.sector_width_deg / 2.0
        return abs(wrap_angle_deg(azimuth_deg - self.sector_boresight_deg)) <= half


def mbs_beam_gain(
    beam: Beam, target_az_deg: float, target_el_deg: float, params: MbsAntennaParams
) -> float:
    """Gain of a steered beam toward an arbitrary direction, in dBi."""
    d_theta = wrap_angle_deg(target_az_deg - beam.steering_azimuth_deg)
    d_phi = target_el_deg - beam.steering_elevation_deg
    attenuation = min(
        12.0 * (d_theta / params.theta_3db_deg) ** 2
        + 12.0 * (d_phi / params.phi_3db_deg) ** 2,
        params.sidelobe_floor_db,
    )
    gain = params.peak_gain_dbi - attenuation
    if not beam.contains_azimuth(target_az_deg):
        gain -= params.sidelobe_floor_db
    return gain


def angular_separation_deg(
    az1_deg: float, el1_deg: float, az2_deg: float, el2_deg: float
) -> float:
    """Great-circle angle between two (azimuth, elevation) directions."""
    az1, el1 = math.radians(az1_deg), math.radians(el1_deg)
    az2, el2 = math.radians(az2_deg), math.radians(el2_deg)
    cos_sep = math.sin(el1) * math.sin(el2) + math.cos(el1) * math.cos(el2) * math.cos(
        az1 - az2
    )
    return math.degrees(math.acos(max(-1.0, min(1.0, cos_sep))))


def fss_gain(target_az_deg: float, target_el_deg: float, params: FssAntennaParams) -> float:
    """Receive gain of the dish from a direction, in dBi.

    Boresight plateau inside the near-in angle, then the 29 - 25*log10(phi)
    envelope (floored at the backlobe level), then the backlobe beyond the
    far-out angle.
    """
    phi = angular_separation_deg(
        params.boresight_azimuth_deg,
        params.boresight_elevation_deg,
        target_az_deg,
        target_el_deg,
    )
    if phi < params.near_in_deg:
        return params.boresight_gain_dbi
    if phi <= params.far_out_deg:
        return max(29.0 - 25.0 * math.log10(phi), params.backlobe_dbi)
    return params.backlobe_dbi
