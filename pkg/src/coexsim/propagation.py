"""Path loss between a macro base station and the earth-station receiver.

Three stacked terms:

* a 3GPP urban-macro style LOS/NLOS base loss (the LOS branch is the
  sub-breakpoint formula; with 25 m / 4.5 m antennas at 12.45 GHz the
  breakpoint lies near 11.7 km, beyond any 5 km scenario, so the second
  branch is unreachable and deliberately not implemented);
* lognormal shadow fading, drawn deterministically per link from a keyed
  hash so repeated evaluations of the same world agree bit-for-bit;
* rain attenuation from a curve-fit cubic in frequency whose coefficients
  are themselves cubics in the rain rate (vertical polarization), scaled
  by the path length in km.

LOS/NLOS is a deterministic geometric input here (decided from building
geometry), never a probability.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

MIN_MODEL_DISTANCE_M = 10.0
RAIN_FREQ_RANGE_GHZ = (10.0, 100.0)


@dataclass(frozen=True)
class PathLossParams:
    frequency_ghz: float = 12.45
    tx_height_m: float = 25.0
    rx_height_m: float = 4.5
    sigma_los_db: float = 4.0
    sigma_nlos_db: float = 7.8
    shadow_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.5 <= self.frequency_ghz <= 100.0:
            raise ValueError(
                f"frequency {self.frequency_ghz} GHz outside 0.5-100 GHz validity"
            )
        if self.sigma_los_db < 0.0 or self.sigma_nlos_db < 0.0:
            raise ValueError("shadow sigmas must be >= 0")


@dataclass(frozen=True)
class PropagationSample:
    """Per-link loss decomposition; ``total_db`` is always the exact sum."""

    los: bool
    base_loss_db: float
    shadow_db: float
    rain_db: float

    @property
    def total_db(self) -> float:
        return self.base_loss_db + self.shadow_db + self.rain_db


def base_path_loss(d3d_m: float, los: bool, params: PathLossParams) -> float:
    """Urban-macro base loss in dB; NLOS takes the max against the LOS branch."""
    if d3d_m < MIN_MODEL_DISTANCE_M:
        raise ValueError(f"below model validity: d3d={d3d_m} m < 10 m")
    f = params.frequency_ghz
    pl_los = 28.0 + 22.0 * math.log10(d3d_m) + 20.0 * math.log10(f)
    if los:
        return pl_los
    pl_nlos = (
        13.54
        + 39.08 * math.log10(d3d_m)
        + 20.0 * math.log10(f)
        - 0.6 * (params.rx_height_m - 1.5)
    )
    return max(pl_los, pl_nlos)


def _standard_normal(seed: int, link_id: str) -> float:
    """Counter-based deterministic N(0,1) draw keyed by (seed, link_id).

    blake2b is used as the keyed bit source so the draw is stable across
    processes and interpreter runs (never the builtin ``hash``), then mapped
    through Box-Muller.
    """
    digest = hashlib.blake2b(
        link_id.encode("utf-8"),
        key=f"shadow:{seed}".encode("utf-8"),
        digest_size=16,
    ).digest()
    a, b = struct.unpack("<QQ", digest)
    u1 = (a + 0.5) / 2.0**64  # open interval (0, 1): log(u1) stays finite
    u2 = (b + 0.5) / 2.0**64
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def shadow_fading(link_id: str, los: bool, params: PathLossParams) -> float:
    """Zero-mean Gaussian shadow term in dB, deterministic per (seed, link)."""
    sigma = params.sigma_los_db if los else params.sigma_nlos_db
    if sigma == 0.0:
        return 0.0
    return sigma * _standard_normal(params.shadow_seed, link_id)


def _rain_coefficients(x: float) -> tuple[float, float, float, float]:
    """Cubic-in-rain-rate coefficients of the frequency polynomial."""
    a = -5.520e-12 * x**3 + 3.26e-9 * x**2 - 1.21e-7 * x - 6e-6
    b = 8e-10 * x**3 - 4.522e-7 * x**2 - 3.03e-5 * x + 0.001
    c = -5.71e-9 * x**3 + 6e-7 * x**2 + 8.707e-3 * x - 0.018
    d = -1.073e-7 * x**3 + 1.068e-4 * x**2 - 0.0598e-3 * x + 0.0442
    return a, b, c, d


def rain_specific_attenuation(rain_rate_mm_per_hr: float, frequency_ghz: float) -> float:
    """Specific attenuation in dB/km, clamped at zero.

    The curve fit has a nonzero residual at zero rain (slightly negative at
    the low end of the band, slightly positive higher up); zero rain must
    add zero loss, so the zero-rate case returns exactly 0 and positive
    rates are clamped at zero.
    """
    if rain_rate_mm_per_hr < 0.0:
        raise ValueError(f"negative rain rate: {rain_rate_mm_per_hr}")
    lo, hi = RAIN_FREQ_RANGE_GHZ
    if not lo <= frequency_ghz <= hi:
        raise ValueError(
            f"rain model validity: frequency {frequency_ghz} GHz outside 10-100 GHz"
        )
    if rain_rate_mm_per_hr == 0.0:
        return 0.0
    a, b, c, d = _rain_coefficients(rain_rate_mm_per_hr)
    f = frequency_ghz
    attenuation = a * f**3 + b * f**2 + c * f + d
    return max(attenuation, 0.0)


@dataclass(frozen=True)
class RainModel:
    """Rain context for a link; vertical polarization only."""

    rain_rate_mm_per_hr: float = 0.0
    polarization: str = "vertical"

    def __post_init__(self) -> None:
        if self.rain_rate_mm_per_hr < 0.0:
            raise ValueError("rain rate must be >= 0")
        if self.polarization != "vertical":
            raise ValueError("only vertical polarization is modelled")

    def specific_attenuation(self, frequency_ghz: float) -> float:
        return rain_specific_attenuation(self.rain_rate_mm_per_hr, frequency_ghz)


def path_loss(
    d3d_m: float,
    link_id: str,
    los: bool,
    rain_rate_mm_per_hr: float,
    params: PathLossParams,
) -> PropagationSample:
    """Full per-link decomposition: base + shadow + rain-over-path.

    The rain term is specific attenuation (dB/km) times the path length in
    km. Zero rain yields exactly the dry-weather loss.
    """
    base = base_path_loss(d3d_m, los, params)
    shadow = shadow_fading(link_id, los, params)
    if rain_rate_mm_per_hr == 0.0:
        rain = 0.0
    else:
        rain = rain_specific_attenuation(
            rain_rate_mm_per_hr, params.frequency_ghz
        ) * (d3d_m / 1000.0)
    return PropagationSample(los=los, base_loss_db=base, shadow_db=shadow, rain_db=rain)
