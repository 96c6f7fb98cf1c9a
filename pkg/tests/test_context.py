import pytest

from coexsim import context as ctx
from coexsim.geo import GeoPoint
from coexsim.store import Store

LOC = GeoPoint(37.2025, -80.43444, 4.5)


def write_trace(tmp_path, rows, name="trace.csv"):
    path = tmp_path / name
    path.write_text("unix_time,kind,rain_rate\n" + "\n".join(rows) + "\n")
    return str(path)


class TestSnapshot:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ctx.ContextSnapshot(0.0, ctx.WeatherKind.CLEAR, 5.0, LOC, "p")
        with pytest.raises(ValueError):
            ctx.ContextSnapshot(0.0, ctx.WeatherKind.CLOUDY, 5.0, LOC, "p")
        snap = ctx.ContextSnapshot(0.0, ctx.WeatherKind.RAIN_SNOW, 5.0, LOC, "p")
        assert snap.snapshot_id == "p:0.000"

    def test_derive_kind(self):
        assert ctx.derive_weather_kind(0.0) is ctx.WeatherKind.CLEAR
        assert ctx.derive_weather_kind(5.0) is ctx.WeatherKind.RAIN_SNOW
        assert ctx.derive_weather_kind(15.0) is ctx.WeatherKind.RAIN_SNOW
        assert ctx.derive_weather_kind(15.0, alert=True) is ctx.WeatherKind.EXTREME


class TestFileTraceProvider:
    def test_passthrough(self, tmp_path):
        provider = ctx.FileTraceProvider(write_trace(tmp_path, ["0,clear,0"]))
        snap = provider.snapshot("weather", LOC, 0.0)
        assert snap.weather_kind is ctx.WeatherKind.CLEAR
        assert snap.rain_rate_mm_per_hr == 0.0

    def test_lookup_latest_entry(self, tmp_path):
        provider = ctx.FileTraceProvider(
            write_trace(tmp_path, ["0,clear,0", "3600,rain_snow,10"])
        )
        assert provider.snapshot("weather", LOC, 3599.0).weather_kind is ctx.WeatherKind.CLEAR
        snap = provider.snapshot("weather", LOC, 3600.0)
        assert snap.weather_kind is ctx.WeatherKind.RAIN_SNOW
        assert snap.rain_rate_mm_per_hr == 10.0

    def test_kind_derived_when_blank(self, tmp_path):
        provider = ctx.FileTraceProvider(write_trace(tmp_path, ["0,,7.5"]))
        assert provider.snapshot("weather", LOC, 0.0).weather_kind is ctx.WeatherKind.RAIN_SNOW

    def test_before_first_entry_is_none(self, tmp_path):
        provider = ctx.FileTraceProvider(write_trace(tmp_path, ["100,clear,0"]))
        assert provider.snapshot("weather", LOC, 50.0) is None

    def test_staleness_flag(self, tmp_path):
        provider = ctx.FileTraceProvider(
            write_trace(tmp_path, ["0,clear,0"]), max_age_s=1000.0
        )
        assert not provider.snapshot("weather", LOC, 500.0).stale
        assert provider.snapshot("weather", LOC, 5000.0).stale

    def test_bad_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("unix_time,kind,rain_rate\n0,clear,0\nbogus,clear,zero\n")
        with pytest.raises(ValueError, match="line 3"):
            ctx.FileTraceProvider(str(path))


class TestBroker:
    def test_no_provider_error(self):
        broker = ctx.ContextBroker(LOC)
        with pytest.raises(ctx.ContextUnavailableError, match="context unavailable"):
            broker.get_context("weather", time_s=0.0)

    def test_get_context_roundtrip(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(ctx.FileTraceProvider(write_trace(tmp_path, ["0,clear,0"])))
        snap = broker.get_context("weather", time_s=0.0)
        assert snap.weather_kind is ctx.WeatherKind.CLEAR
        assert snap.provenance == "file-trace"

    def test_snapshots_persisted_to_store(self, tmp_path):
        store = Store(":memory:")
        broker = ctx.ContextBroker(LOC, store=store)
        broker.register(ctx.FileTraceProvider(write_trace(tmp_path, ["0,clear,0"])))
        snap = broker.get_context("weather", time_s=0.0)
        assert store.get("context", snap.snapshot_id)["weather_kind"] == "clear"

    def test_subscribe_fires_once_per_change(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(
            ctx.FileTraceProvider(
                write_trace(tmp_path, ["0,clear,0", "3600,rain_snow,10"]),
                refresh_period_s=0.0,
            )
        )
        seen = []
        broker.subscribe("weather", seen.append)
        for t in range(0, 7201, 600):
            broker.poll("weather", float(t))
        # initial value plus exactly one flip
        assert len(seen) == 2
        assert seen[1].weather_kind is ctx.WeatherKind.RAIN_SNOW

    def test_constant_trace_single_notification(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(
            ctx.FileTraceProvider(write_trace(tmp_path, ["0,clear,0"]), refresh_period_s=0.0)
        )
        seen = []
        broker.subscribe("weather", seen.append)
        for t in range(0, 7201, 600):
            broker.poll("weather", float(t))
        assert len(seen) == 1  # only the initial observation

    def test_fan_out_and_unsubscribe_idempotent(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(
            ctx.FileTraceProvider(write_trace(tmp_path, ["0,clear,0"]), refresh_period_s=0.0)
        )
        a, b = [], []
        sub_a = broker.subscribe("weather", a.append)
        broker.subscribe("weather", b.append)
        broker.poll("weather", 0.0)
        assert len(a) == len(b) == 1
        broker.unsubscribe(sub_a)
        broker.unsubscribe(sub_a)  # second call is a no-op
        broker.poll("weather", 0.0)
        assert len(a) == 1

    def test_cache_respects_refresh_period(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(
            ctx.FileTraceProvider(
                write_trace(tmp_path, ["0,clear,0", "100,rain_snow,3"]),
                refresh_period_s=600.0,
            )
        )
        first = broker.get_context("weather", time_s=0.0)
        # within the refresh period the cached snapshot is served
        assert broker.get_context("weather", time_s=100.0) is first
        later = broker.get_context("weather", time_s=700.0)
        assert later.weather_kind is ctx.WeatherKind.RAIN_SNOW

    def test_override_wins(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(ctx.FileTraceProvider(write_trace(tmp_path, ["0,clear,0"])))
        broker.override(ctx.override_snapshot("rain_snow", 12.0, LOC))
        snap = broker.get_context("weather", time_s=0.0)
        assert snap.rain_rate_mm_per_hr == 12.0
        assert snap.provenance == "override"

    def test_timestamps_monotone(self, tmp_path):
        broker = ctx.ContextBroker(LOC)
        broker.register(
            ctx.FileTraceProvider(
                write_trace(tmp_path, ["0,clear,0", "100,rain_snow,1", "200,clear,0"]),
                refresh_period_s=0.0,
            )
        )
        stamps = [broker.poll("weather", float(t)).timestamp for t in range(0, 300, 50)]
        assert stamps == sorted(stamps)


class TestOpenWeatherMapShape:
    def test_parse_rain(self):
        payload = {"dt": 1700000000, "weather": [{"main": "Rain"}], "rain": {"1h": 6.5}}
        snap = ctx.parse_openweathermap(payload, LOC, "owm")
        assert snap.weather_kind is ctx.WeatherKind.RAIN_SNOW
        assert snap.rain_rate_mm_per_hr == 6.5
        assert snap.timestamp == 1700000000.0

    def test_parse_clear_and_clouds(self):
        clear = ctx.parse_openweathermap({"dt": 1, "weather": [{"main": "Clear"}]}, LOC, "owm")
        assert clear.weather_kind is ctx.WeatherKind.CLEAR
        cloudy = ctx.parse_openweathermap({"dt": 1, "weather": [{"main": "Clouds"}]}, LOC, "owm")
        assert cloudy.weather_kind is ctx.WeatherKind.CLOUDY

    def test_parse_alert_escalates(self):
        payload = {
            "dt": 2,
            "weather": [{"main": "Rain"}],
            "rain": {"1h": 20.0},
            "alerts": [{"event": "flood"}],
        }
        assert ctx.parse_openweathermap(payload, LOC, "owm").weather_kind is ctx.WeatherKind.EXTREME

    def test_provider_disabled_without_url(self, monkeypatch):
        monkeypatch.delenv("COEXSIM_WEATHER_URL", raising=False)
        provider = ctx.OpenWeatherMapProvider()
        assert provider.snapshot("weather", LOC, 0.0) is None
