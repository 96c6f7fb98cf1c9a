"""Context acquisition: weather snapshots from pluggable providers.

Providers are read-only sources (a deterministic CSV trace for experiments,
an optional HTTP adapter for live weather); the broker owns caching,
staleness marking, persistence, and change notification. Experiments drive
the broker with an explicit clock, so runs replay bit-identically.
"""

from __future__ import annotations

import csv
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol

from .geo import GeoPoint


class WeatherKind(str, Enum):
    CLEAR = "clear"
    CLOUDY = "cloudy"
    RAIN_SNOW = "rain_snow"
    EXTREME = "extreme"


class ContextUnavailableError(Exception):
    """No provider (or no record) can answer the query."""


def derive_weather_kind(rain_rate_mm_per_hr: float, alert: bool = False) -> WeatherKind:
    """Weather class from rate alone; cloudy is only ever explicit."""
    if rain_rate_mm_per_hr <= 0.0:
        return WeatherKind.CLEAR
    if rain_rate_mm_per_hr >= 10.0 and alert:
        return WeatherKind.EXTREME
    return WeatherKind.RAIN_SNOW


@dataclass(frozen=True)
class ContextSnapshot:
    timestamp: float
    weather_kind: WeatherKind
    rain_rate_mm_per_hr: float
    location: GeoPoint
    provenance: str
    stale: bool = False

    def __post_init__(self) -> None:
        if self.rain_rate_mm_per_hr < 0.0:
            raise ValueError("rain rate must be >= 0")
        if self.rain_rate_mm_per_hr > 0.0 and self.weather_kind not in (
            WeatherKind.RAIN_SNOW,
            WeatherKind.EXTREME,
        ):
            raise ValueError(
                f"rain rate {self.rain_rate_mm_per_hr} inconsistent with "
                f"{self.weather_kind.value}"
            )
        if self.weather_kind is WeatherKind.CLEAR and self.rain_rate_mm_per_hr != 0.0:
            raise ValueError("clear weather requires zero rain rate")

    @property
    def snapshot_id(self) -> str:
        return f"{self.provenance}:{self.timestamp:.3f}"

    def value_equals(self, other: "ContextSnapshot | None") -> bool:
        """Same observed value (change detection ignores staleness)."""
        return (
            other is not None
            and self.weather_kind == other.weather_kind
            and self.rain_rate_mm_per_hr == other.rain_rate_mm_per_hr
            and self.timestamp == other.timestamp
        )

    def to_dict(self) -> dict:
        return {
            "snapshot_id": self.snapshot_id,
            "timestamp": self.timestamp,
            "weather_kind": self.weather_kind.value,
            "rain_rate_mm_per_hr": self.rain_rate_mm_per_hr,
            "latitude_deg": self.location.latitude_deg,
            "longitude_deg": self.location.longitude_deg,
            "provenance": self.provenance,
            "stale": self.stale,
        }


class ContextProvider(Protocol):
    provider_id: str
    kinds: frozenset[str]
    refresh_period_s: float
    max_age_s: float | None

    def snapshot(self, kind: str, location: GeoPoint, time_s: float) -> ContextSnapshot | None:
        ...


@dataclass
class FileTraceProvider:
    """Deterministic weather trace: CSV rows ``unix_time,kind,rain_rate``.

    The kind column may be blank, in which case it is derived from the rate.
    Lookups return the latest row at or before the query time.
    """

    path: str
    provider_id: str = "file-trace"
    refresh_period_s: float = 600.0
    max_age_s: float | None = None
    kinds: frozenset[str] = frozenset({"weather"})
    _entries: list[tuple[float, WeatherKind, float]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        with open(self.path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].strip().startswith("#"):
                    continue
                if lineno == 1 and not _is_number(row[0]):
                    continue  # header row
                try:
                    t = float(row[0])
                    rate = float(row[2]) if len(row) > 2 and row[2].strip() else 0.0
                    kind_text = row[1].strip() if len(row) > 1 else ""
                    kind = (
                        WeatherKind(kind_text) if kind_text else derive_weather_kind(rate)
                    )
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{self.path} line {lineno}: {exc}") from exc
                self._entries.append((t, kind, rate))
        self._entries.sort(key=lambda e: e[0])

    def snapshot(self, kind: str, location: GeoPoint, time_s: float) -> ContextSnapshot | None:
        if kind not in self.kinds:
            return None
        current = None
        for t, weather, rate in self._entries:
            if t <= time_s:
                current = (t, weather, rate)
            else:
                break
        if current is None:
            return None
        t, weather, rate = current
        stale = self.max_age_s is not None and (time_s - t) > self.max_age_s
        return ContextSnapshot(
            timestamp=t,
            weather_kind=weather,
            rain_rate_mm_per_hr=rate,
            location=location,
            provenance=self.provider_id,
            stale=stale,
        )


def parse_openweathermap(payload: dict, location: GeoPoint, provider_id: str) -> ContextSnapshot:
    """Map an OpenWeatherMap-shaped current-weather document to a snapshot."""
    rate = 0.0
    rain = payload.get("rain") or {}
    snow = payload.get("snow") or {}
    for bucket in (rain, snow):
        rate += float(bucket.get("1h", bucket.get("3h", 0.0)) or 0.0)
    main = ""
    weather_list = payload.get("weather") or []
    if weather_list:
        main = str(weather_list[0].get("main", "")).lower()
    alert = bool(payload.get("alerts"))
    if main in ("rain", "drizzle", "snow", "thunderstorm") or rate > 0.0:
        kind = derive_weather_kind(max(rate, 0.1), alert=alert or main == "thunderstorm")
        rate = max(rate, 0.0)
        if rate == 0.0:
            rate = 0.1  # reported precipitation without a rate figure
    elif main == "clouds":
        kind = WeatherKind.CLOUDY
    else:
        kind = WeatherKind.CLEAR
        rate = 0.0
    return ContextSnapshot(
        timestamp=float(payload.get("dt", 0.0)),
        weather_kind=kind,
        rain_rate_mm_per_hr=rate,
        location=location,
        provenance=provider_id,
    )


@dataclass
class OpenWeatherMapProvider:
    """HTTP adapter for an OpenWeatherMap-style endpoint. Disabled unless a
    URL is configured (``COEXSIM_WEATHER_URL`` or explicit argument)."""

    url: str | None = None
    provider_id: str = "openweathermap"
    refresh_period_s: float = 600.0
    max_age_s: float | None = 3600.0
    kinds: frozenset[str] = frozenset({"weather"})

    def resolved_url(self) -> str | None:
        return self.url or os.environ.get("COEXSIM_WEATHER_URL")

    def snapshot(self, kind: str, location: GeoPoint, time_s: float) -> ContextSnapshot | None:
        url = self.resolved_url()
        if kind not in self.kinds or not url:
            return None
        import httpx

        response = httpx.get(
            url,
            params={"lat": location.latitude_deg, "lon": location.longitude_deg},
            timeout=10.0,
        )
        response.raise_for_status()
        return parse_openweathermap(response.json(), location, self.provider_id)


@dataclass(frozen=True)
class Subscription:
    kind: str
    token: int


class ContextBroker:
    """Caches provider snapshots, persists them, and fans out changes.

    Concurrent ``get_context`` calls are safe; subscription callbacks are
    dispatched sequentially from ``poll`` so handlers need not be
    re-entrant.
    """

    def __init__(self, location: GeoPoint, store=None) -> None:
        self.location = location
        self._store = store
        self._providers: dict[str, ContextProvider] = {}
        self._cache: dict[str, tuple[ContextSnapshot, float]] = {}
        self._last_dispatched: dict[str, ContextSnapshot] = {}
        self._subs: dict[str, dict[int, Callable[[ContextSnapshot], None]]] = {}
        self._next_token = 0
        self._lock = threading.Lock()

    def register(self, provider: ContextProvider) -> None:
        with self._lock:
            for kind in provider.kinds:
                self._providers[kind] = provider

    def get_context(
        self, kind: str, location: GeoPoint | None = None, time_s: float = 0.0
    ) -> ContextSnapshot:
        location = location or self.location
        with self._lock:
            provider = self._providers.get(kind)
            if provider is None:
                raise ContextUnavailableError(f"context unavailable: no provider for {kind!r}")
            cached = self._cache.get(kind)
            if cached is not None:
                snap, fetched_at = cached
                if 0.0 <= time_s - fetched_at < provider.refresh_period_s:
                    return snap
        snap = provider.snapshot(kind, location, time_s)
        if snap is None:
            raise ContextUnavailableError(
                f"context unavailable: provider {provider.provider_id!r} has no "
                f"record for {kind!r} at t={time_s}"
            )
        with self._lock:
            self._cache[kind] = (snap, time_s)
        if self._store is not None:
            self._store.put(
                "context", snap.snapshot_id, snap.to_dict(), created_at=time_s
            )
        return snap

    def subscribe(self, kind: str, callback: Callable[[ContextSnapshot], None]) -> Subscription:
        with self._lock:
            self._next_token += 1
            self._subs.setdefault(kind, {})[self._next_token] = callback
            return Subscription(kind=kind, token=self._next_token)

    def unsubscribe(self, subscription: Subscription) -> None:
        with self._lock:
            self._subs.get(subscription.kind, {}).pop(subscription.token, None)

    def poll(self, kind: str, time_s: float) -> ContextSnapshot:
        """Fetch the current snapshot and notify subscribers on value change."""
        snap = self.get_context(kind, time_s=time_s)
        with self._lock:
            previous = self._last_dispatched.get(kind)
            changed = not snap.value_equals(previous)
            if changed:
                self._last_dispatched[kind] = snap
            callbacks = list(self._subs.get(kind, {}).values()) if changed else []
        for cb in callbacks:
            cb(snap)
        return snap

    def override(self, snapshot: ContextSnapshot) -> None:
        """Pin a synthetic snapshot (what-if weather) ahead of any provider."""
        provider = _OverrideProvider(snapshot)
        with self._lock:
            self._providers["weather"] = provider
            self._cache.pop("weather", None)


def override_snapshot(
    weather_kind: WeatherKind | str,
    rain_rate_mm_per_hr: float,
    location: GeoPoint,
    timestamp: float = 0.0,
) -> ContextSnapshot:
    kind = WeatherKind(weather_kind)
    return ContextSnapshot(
        timestamp=timestamp,
        weather_kind=kind,
        rain_rate_mm_per_hr=rain_rate_mm_per_hr,
        location=location,
        provenance="override",
    )


@dataclass
class _OverrideProvider:
    pinned: ContextSnapshot
    provider_id: str = "override"
    refresh_period_s: float = 0.0
    max_age_s: float | None = None
    kinds: frozenset[str] = frozenset({"weather"})

    def snapshot(self, kind: str, location: GeoPoint, time_s: float) -> ContextSnapshot | None:
        if kind not in self.kinds:
            return None
        return self.pinned


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False
