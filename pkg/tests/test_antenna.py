import pytest
from hypothesis import given, strategies as st

from coexsim import antenna

MBS = antenna.MbsAntennaParams()
FSS = antenna.FssAntennaParams()


def make_beam(steer_az=0.0, steer_el=-2.0, boresight=0.0):
    return antenna.Beam(
        mbs_id="m01",
        sector_index=0,
        ue_id="m01/s0/u0",
        steering_azimuth_deg=steer_az,
        steering_elevation_deg=steer_el,
        sector_boresight_deg=boresight,
    )


class TestBeam:
    def test_steering_must_stay_in_sector(self):
        with pytest.raises(ValueError, match="outside sector"):
            make_beam(steer_az=61.0, boresight=0.0)

    def test_sector_wraps_through_north(self):
        beam = make_beam(steer_az=350.0, boresight=0.0)
        assert beam.contains_azimuth(350.0)
        assert beam.contains_azimuth(10.0)
        assert not beam.contains_azimuth(280.0)

    def test_sector_index_range(self):
        with pytest.raises(ValueError):
            antenna.Beam("m", 3, "u", 0.0, 0.0, 0.0)


class TestMbsBeamGain:
    def test_boresight(self):
        beam = make_beam(steer_az=10.0, steer_el=-3.0)
        assert antenna.mbs_beam_gain(beam, 10.0, -3.0, MBS) == 26.0

    def test_one_beamwidth_off_in_azimuth(self):
        beam = make_beam(steer_az=10.0, steer_el=0.0)
        assert antenna.mbs_beam_gain(beam, 20.0, 0.0, MBS) == pytest.approx(14.0)

    def test_out_of_sector_takes_double_floor(self):
        beam = make_beam(steer_az=0.0, steer_el=0.0)
        assert antenna.mbs_beam_gain(beam, 90.0, 0.0, MBS) == pytest.approx(-34.0)

    def test_elevation_contributes(self):
        beam = make_beam(steer_az=0.0, steer_el=0.0)
        assert antenna.mbs_beam_gain(beam, 0.0, 10.0, MBS) == pytest.approx(14.0)

    @given(st.floats(0.0, 360.0), st.floats(-90.0, 90.0))
    def test_never_exceeds_peak(self, az, el):
        beam = make_beam(steer_az=20.0, steer_el=-2.0)
        assert antenna.mbs_beam_gain(beam, az, el, MBS) <= MBS.peak_gain_dbi

    @given(st.floats(0.0, 360.0), st.floats(-90.0, 90.0))
    def test_floor_bound(self, az, el):
        beam = make_beam(steer_az=20.0, steer_el=-2.0)
        assert antenna.mbs_beam_gain(beam, az, el, MBS) >= (
            MBS.peak_gain_dbi - 2.0 * MBS.sidelobe_floor_db
        )

    def test_peak_only_at_boresight(self):
        beam = make_beam(steer_az=20.0, steer_el=-2.0)
        assert antenna.mbs_beam_gain(beam, 20.0, -2.0, MBS) == MBS.peak_gain_dbi
        assert antenna.mbs_beam_gain(beam, 20.5, -2.0, MBS) < MBS.peak_gain_dbi

    @given(st.floats(-180.0, 180.0))
    def test_rotation_invariance(self, offset):
        beam_a = make_beam(steer_az=10.0, steer_el=-2.0, boresight=0.0)
        beam_b = antenna.Beam(
            "m01", 0, "u", (10.0 + offset) % 360.0, -2.0, offset % 360.0
        )
        g_a = antenna.mbs_beam_gain(beam_a, 40.0, 1.0, MBS)
        g_b = antenna.mbs_beam_gain(beam_b, (40.0 + offset) % 360.0, 1.0, MBS)
        assert g_b == pytest.approx(g_a, abs=1e-9)


class TestFssGain:
    def test_boresight(self):
        assert antenna.fss_gain(180.0, 40.0, FSS) == 33.8

    def test_envelope_at_10_degrees(self):
        # Same azimuth, elevation 10 degrees under boresight: separation is 10.
        assert antenna.fss_gain(180.0, 30.0, FSS) == pytest.approx(4.0, abs=1e-9)

    def test_backlobe_beyond_far_out(self):
        assert antenna.fss_gain(180.0, -20.0, FSS) == -10.0

    def test_envelope_floors_at_backlobe(self):
        # At 40 degrees the raw envelope sits below the backlobe level.
        assert antenna.fss_gain(180.0, 0.0, FSS) == pytest.approx(-10.0)

    @given(st.floats(0.0, 360.0), st.floats(-90.0, 90.0))
    def test_bounded(self, az, el):
        g = antenna.fss_gain(az, el, FSS)
        assert FSS.backlobe_dbi <= g <= FSS.boresight_gain_dbi

    def test_monotone_envelope_in_separation(self):
        # Sampled along a meridian cut, gain never increases as the
        # separation grows across all three branches.
        gains = [antenna.fss_gain(180.0, 40.0 - sep, FSS) for sep in
                 [0.0, 0.5, 0.99, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 47.9, 48.5, 60.0, 90.0]]
        assert all(a >= b - 1e-12 for a, b in zip(gains, gains[1:]))

    @given(st.floats(-180.0, 180.0))
    def test_rotation_invariance(self, offset):
        params = antenna.FssAntennaParams(
            boresight_azimuth_deg=(180.0 + offset) % 360.0, boresight_elevation_deg=40.0
        )
        assert antenna.fss_gain((150.0 + offset) % 360.0, 10.0, params) == pytest.approx(
            antenna.fss_gain(150.0, 10.0, FSS), abs=1e-9
        )

    def test_param_validation(self):
        with pytest.raises(ValueError):
            antenna.FssAntennaParams(near_in_deg=0.0)
        with pytest.raises(ValueError):
            antenna.FssAntennaParams(near_in_deg=50.0, far_out_deg=48.0)
        with pytest.raises(ValueError):
            antenna.FssAntennaParams(boresight_gain_dbi=20.0, near_in_deg=1.0)


def test_angular_separation_basics():
    assert antenna.angular_separation_deg(0, 0, 0, 0) == 0.0
    assert antenna.angular_separation_deg(0, 0, 90, 0) == pytest.approx(90.0)
    assert antenna.angular_separation_deg(10, 40, 10, 30) == pytest.approx(10.0, abs=1e-9)
    # Azimuth differences shrink with elevation (great-circle, not rectangle).
    assert antenna.angular_separation_deg(0, 60, 20, 60) < 20.0
