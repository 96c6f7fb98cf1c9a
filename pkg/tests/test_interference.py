import math
import random

import pytest

from coexsim import geo, interference as iet
from coexsim.antenna import Beam
from coexsim.context import override_snapshot
from coexsim.scenario import build_world

from conftest import make_scenario
from oracles import ref_evaluate

CLEAR = override_snapshot("clear", 0.0, geo.GeoPoint(37.2025, -80.43444, 4.5))
RAINY = override_snapshot("rain_snow", 10.0, geo.GeoPoint(37.2025, -80.43444, 4.5))


class TestPerBeamPower:
    def test_single_beam_gets_everything(self):
        assert iet.per_beam_power(10.0, 1) == pytest.approx(10.0)

    def test_thirty_beams(self):
        assert iet.per_beam_power(10.0, 30) == pytest.approx(-4.771212547196624, abs=1e-12)

    def test_one_watt_ten_beams(self):
        assert iet.per_beam_power(1.0, 10) == pytest.approx(-10.0)

    def test_zero_beams_rejected(self):
        with pytest.raises(ValueError, match="no active beams"):
            iet.per_beam_power(10.0, 0)


class TestNoiseFloor:
    def test_reference_value(self):
        assert iet.noise_floor(iet.RadioParams()) == pytest.approx(
            -123.97518719422811, abs=1e-9
        )

    def test_bandwidth_doubling_adds_3db(self):
        base = iet.noise_floor(iet.RadioParams())
        double = iet.noise_floor(iet.RadioParams(channel_bandwidth_hz=2.0e8))
        assert double - base == pytest.approx(3.010299956639812, abs=1e-12)

    def test_half_temperature_shifts_down_3db(self):
        base = iet.noise_floor(iet.RadioParams())
        half = iet.noise_floor(iet.RadioParams(noise_temperature_k=145.0))
        assert half - base == pytest.approx(-3.010299956639812, abs=1e-12)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            iet.RadioParams(total_power_w=0.0)
        with pytest.raises(ValueError):
            iet.RadioParams(channel_bandwidth_hz=-1.0)


class TestBeamInterference:
    def test_boresight_composition(self):
        # Station due north with the beam steered straight at the receiver
        # and the dish pointed straight back: both gains at their peaks.
        north = math.sqrt(1e6 - 20.5**2)
        scenario = make_scenario([(north, 0.0)])
        world = build_world(scenario)
        link = world.links["m01"]
        beam = Beam(
            mbs_id="m01",
            sector_index=1,
            ue_id="probe",
            steering_azimuth_deg=link.azimuth_to_fss_deg,
            steering_elevation_deg=link.elevation_to_fss_deg,
            sector_boresight_deg=180.0,
        )
        from dataclasses import replace
        from coexsim.antenna import FssAntennaParams, fss_gain

        az_back, el_back = geo.angles_between(world.fss_position, link.position)
        dish = FssAntennaParams(
            boresight_azimuth_deg=az_back, boresight_elevation_deg=el_back
        )
        link = replace(link, fss_gain_dbi=fss_gain(az_back, el_back, dish))
        world = replace(world, links={**dict(world.links), "m01": link})
        value = iet.beam_interference(beam, world, CLEAR)
        assert value == pytest.approx(-60.87459957583174, abs=1e-6)

    def test_rain_subtracts_exactly(self):
        scenario = make_scenario([(2000.0, 45.0)])
        world = build_world(scenario)
        beam = world.beams["m01"][0]
        dry = iet.beam_interference(beam, world, CLEAR)
        wet = iet.beam_interference(beam, world, RAINY)
        d3d = world.links["m01"].distance_3d_m
        from coexsim.propagation import rain_specific_attenuation

        expected = rain_specific_attenuation(10.0, 12.45) * d3d / 1000.0
        assert dry - wet == pytest.approx(expected, abs=1e-12)

    def test_extra_pathloss_is_linear(self):
        scenario = make_scenario([(1500.0, 120.0)])
        world = build_world(scenario)
        beam = world.beams["m01"][0]
        base = iet.beam_interference(beam, world, CLEAR)
        louder = iet.beam_interference(
            beam, world, CLEAR, params=iet.RadioParams(total_power_w=100.0)
        )
        assert louder - base == pytest.approx(10.0, abs=1e-12)


def random_world(seed: int, max_mbs=5, max_buildings=20):
    rng = random.Random(seed)
    stations = [
        (rng.uniform(200.0, 4800.0), rng.uniform(0.0, 360.0))
        for _ in range(rng.randint(1, max_mbs))
    ]
    buildings = [
        (
            rng.uniform(-3000.0, 3000.0),
            rng.uniform(-3000.0, 3000.0),
            rng.uniform(8.0, 50.0),
            rng.uniform(8.0, 40.0),
        )
        for _ in range(rng.randint(0, max_buildings))
    ]
    return make_scenario(
        stations,
        buildings,
        sigma_los=4.0,
        sigma_nlos=7.8,
        ue_seed=seed * 3 + 1,
        shadow_seed=seed * 5 + 2,
    )


class TestEvaluate:
    def test_empty_world_sentinel(self):
        world = build_world(make_scenario([]))
        report = iet.evaluate(world, CLEAR)
        assert report.aggregate_i_over_n_db is None
        assert report.active_mbs_count == 0
        assert report.meets(-8.5)

    def test_single_beam_aggregate_matches_arithmetic(self):
        nf = iet.noise_floor(iet.RadioParams())
        assert iet.aggregate_from_watts({"m": 1e-12}, nf) == pytest.approx(
            3.9751871942281127, abs=1e-9
        )

    def test_matches_reference_oracle(self):
        for seed in range(12):
            scenario = random_world(seed)
            world = build_world(scenario)
            report = iet.evaluate(world, RAINY if seed % 2 else CLEAR)
            ref_w, ref_agg = ref_evaluate(scenario, 10.0 if seed % 2 else 0.0)
            for contribution in report.contributions:
                assert contribution.power_w == pytest.approx(
                    ref_w[contribution.mbs_id], rel=1e-9
                )
            assert report.aggregate_i_over_n_db == pytest.approx(ref_agg, rel=1e-9)

    def test_deactivation_is_watt_additive(self):
        scenario = make_scenario([(900.0, 10.0), (1800.0, 200.0), (3100.0, 110.0)])
        world = build_world(scenario)
        full = iet.evaluate(world, CLEAR)
        partial = iet.evaluate(world.with_active(["m01", "m03"]), CLEAR)
        dropped = full.per_mbs_w["m02"]
        assert math.fsum(partial.per_mbs_w.values()) == pytest.approx(
            math.fsum(full.per_mbs_w.values()) - dropped, rel=1e-12
        )
        assert partial.aggregate_i_over_n_db <= full.aggregate_i_over_n_db

    def test_aggregate_dominates_individuals(self):
        world = build_world(make_scenario([(700.0, 0.0), (1500.0, 90.0), (2500.0, 180.0)]))
        report = iet.evaluate(world, CLEAR)
        for contribution in report.contributions:
            assert report.aggregate_i_over_n_db >= contribution.individual_in_db

    def test_permutation_invariance(self):
        # Same stations declared in a different order: every per-station
        # value and the aggregate must agree bit for bit.
        specs = [(900.0, 10.0), (1800.0, 200.0), (3100.0, 110.0)]
        a = iet.evaluate(build_world(make_scenario(specs)), CLEAR)
        # Rebuild with ids permuted by constructing in reverse and renaming
        # cannot reuse ids; instead evaluate the same world with a permuted
        # active list and compare per-station values.
        world = build_world(make_scenario(specs))
        b = iet.evaluate(world.with_active(["m03", "m01", "m02"]), CLEAR)
        assert a.per_mbs_w == b.per_mbs_w
        assert a.aggregate_i_over_n_db == b.aggregate_i_over_n_db

    def test_parallel_identical_to_sequential(self):
        scenario = random_world(99)
        world = build_world(scenario)
        seq = iet.evaluate(world, CLEAR)
        par = iet.evaluate(world, CLEAR, workers=4)
        assert seq.per_mbs_w == par.per_mbs_w
        assert seq.aggregate_i_over_n_db == par.aggregate_i_over_n_db
        assert [c.per_beam_dbw for c in seq.contributions] == [
            c.per_beam_dbw for c in par.contributions
        ]

    def test_wall_time_recorded(self):
        world = build_world(make_scenario([(1000.0, 0.0)]))
        report = iet.evaluate(world, CLEAR)
        assert report.elapsed_ms > 0.0

    def test_unknown_active_id_rejected(self):
        world = build_world(make_scenario([(1000.0, 0.0)]))
        with pytest.raises(KeyError, match="unknown mbs ids"):
            world.with_active(["nope"])


def test_report_csv_shape():
    world = build_world(make_scenario([(1000.0, 0.0), (2000.0, 90.0)]))
    report = iet.evaluate(world, CLEAR)
    lines = iet.report_csv(report).strip().splitlines()
    assert lines[0] == "mbs_id,distance_m,los,individual_in_db"
    assert len(lines) == 3
    assert lines[1].startswith("m01,")
    cells = lines[1].split(",")
    assert cells[2] in ("true", "false")
    float(cells[1]), float(cells[3])  # parse cleanly
