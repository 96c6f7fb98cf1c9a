import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from coexsim import geo

ORIGIN = geo.GeoPoint(37.2025, -80.4344, 0.0)


class TestToEnu:
    def test_identity_at_origin(self):
        p = geo.to_enu(ORIGIN, geo.GeoPoint(37.2025, -80.4344, 12.0))
        assert (p.east_m, p.north_m, p.up_m) == (0.0, 0.0, 12.0)

    def test_north_offset(self):
        p = geo.to_enu(ORIGIN, geo.GeoPoint(37.2125, -80.4344, 0.0))
        assert p.north_m == pytest.approx(1111.9492664453662, abs=1e-6)
        assert p.east_m == 0.0

    def test_east_offset_scaled_by_latitude(self):
        p = geo.to_enu(ORIGIN, geo.GeoPoint(37.2025, -80.4244, 0.0))
        expected = 1111.9492664453662 * math.cos(math.radians(37.2025))
        assert p.east_m == pytest.approx(expected, rel=1e-9)
        assert p.north_m == 0.0

    def test_from_enu_inverts(self):
        p = geo.GeoPoint(37.21, -80.45, 17.0)
        back = geo.from_enu(ORIGIN, geo.to_enu(ORIGIN, p))
        assert back.latitude_deg == pytest.approx(p.latitude_deg, abs=1e-12)
        assert back.longitude_deg == pytest.approx(p.longitude_deg, abs=1e-12)
        assert back.height_m == pytest.approx(p.height_m, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            geo.GeoPoint(91.0, 0.0)
        with pytest.raises(ValueError):
            geo.GeoPoint(0.0, 181.0)
        with pytest.raises(ValueError):
            geo.GeoPoint(0.0, 0.0, -1.0)


class TestDistances:
    def test_zero(self):
        a = geo.EnuPoint(3.0, 4.0, 5.0)
        assert geo.distance_2d(a, a) == 0.0
        assert geo.distance_3d(a, a) == 0.0

    def test_345(self):
        a, b = geo.EnuPoint(0, 0, 0), geo.EnuPoint(3, 4, 0)
        assert geo.distance_2d(a, b) == 5.0
        assert geo.distance_3d(a, b) == 5.0

    def test_pythagorean_triple_3d(self):
        assert geo.distance_3d(geo.EnuPoint(0, 0, 0), geo.EnuPoint(3, 4, 12)) == 13.0

    @given(
        st.tuples(*[st.floats(-1e4, 1e4) for _ in range(9)]),
    )
    def test_triangle_inequality(self, coords):
        a = geo.EnuPoint(*coords[0:3])
        b = geo.EnuPoint(*coords[3:6])
        c = geo.EnuPoint(*coords[6:9])
        assert geo.distance_3d(a, b) <= geo.distance_3d(a, c) + geo.distance_3d(c, b) + 1e-9

    @given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(0, 100), st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(0, 100))
    def test_3d_at_least_2d(self, e1, n1, u1, e2, n2, u2):
        a, b = geo.EnuPoint(e1, n1, u1), geo.EnuPoint(e2, n2, u2)
        assert geo.distance_3d(a, b) >= geo.distance_2d(a, b) - 1e-12


class TestAngles:
    def test_due_north(self):
        assert geo.angles_between(geo.EnuPoint(0, 0, 0), geo.EnuPoint(0, 100, 0)) == (0.0, 0.0)

    def test_due_east(self):
        az, el = geo.angles_between(geo.EnuPoint(0, 0, 0), geo.EnuPoint(100, 0, 0))
        assert az == pytest.approx(90.0)
        assert el == 0.0

    def test_north_up_45(self):
        az, el = geo.angles_between(geo.EnuPoint(0, 0, 0), geo.EnuPoint(0, 100, 100))
        assert az == pytest.approx(0.0)
        assert el == pytest.approx(45.0)

    def test_degenerate(self):
        p = geo.EnuPoint(1, 2, 3)
        with pytest.raises(ValueError, match="degenerate"):
            geo.angles_between(p, p)


def _square(cx, cy, half):
    return ((cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half), (cx - half, cy + half))


class TestIsLos:
    def test_empty_scene(self):
        assert geo.is_los(geo.EnuPoint(0, 0, 25), geo.EnuPoint(0, 1000, 4.5), [])

    def test_tall_building_blocks(self):
        # 25 m -> 4.5 m link over 1 km; ray height at the midpoint is 14.75 m.
        b = geo.Building(id="b", footprint=_square(0.0, 500.0, 20.0), height_m=30.0)
        assert not geo.is_los(geo.EnuPoint(0, 0, 25), geo.EnuPoint(0, 1000, 4.5), [b])

    def test_short_building_clears(self):
        b = geo.Building(id="b", footprint=_square(0.0, 500.0, 20.0), height_m=5.0)
        assert geo.is_los(geo.EnuPoint(0, 0, 25), geo.EnuPoint(0, 1000, 4.5), [b])

    def test_building_hosting_endpoint_does_not_block(self):
        b = geo.Building(id="b", footprint=_square(0.0, 0.0, 30.0), height_m=40.0)
        assert geo.is_los(geo.EnuPoint(0, 0, 25), geo.EnuPoint(0, 1000, 4.5), [b])

    def test_off_axis_building_irrelevant(self):
        b = geo.Building(id="b", footprint=_square(500.0, 500.0, 20.0), height_m=40.0)
        assert geo.is_los(geo.EnuPoint(0, 0, 25), geo.EnuPoint(0, 1000, 4.5), [b])

    def test_symmetry(self):
        b = geo.Building(id="b", footprint=_square(0.0, 500.0, 20.0), height_m=30.0)
        tx, rx = geo.EnuPoint(0, 0, 25), geo.EnuPoint(0, 1000, 4.5)
        assert geo.is_los(tx, rx, [b]) == geo.is_los(rx, tx, [b])

    def test_coincident_points_rejected(self):
        p = geo.EnuPoint(0, 0, 5)
        with pytest.raises(ValueError, match="degenerate"):
            geo.is_los(p, p, [])


def random_scene(rng: random.Random, n_buildings: int):
    buildings = []
    for i in range(n_buildings):
        cx, cy = rng.uniform(-800, 800), rng.uniform(-800, 800)
        half = rng.uniform(5, 60)
        buildings.append(
            geo.Building(id=f"b{i}", footprint=_square(cx, cy, half), height_m=rng.uniform(5, 45))
        )
    return buildings


class TestSpatialIndex:
    def test_query_is_superset_of_intersectors(self):
        rng = random.Random(4)
        buildings = random_scene(rng, 25)
        index = geo.SpatialIndex.build(buildings, cell_size_m=100.0)
        for _ in range(50):
            a = geo.EnuPoint(rng.uniform(-900, 900), rng.uniform(-900, 900), 25)
            b = geo.EnuPoint(rng.uniform(-900, 900), rng.uniform(-900, 900), 4.5)
            got = {bld.id for bld in index.query_segment(a, b)}
            for bld in buildings:
                if not geo.is_los(a, b, [bld]):
                    assert bld.id in got

    @pytest.mark.parametrize("cell", [25.0, 100.0, 400.0])
    def test_los_independent_of_cell_size(self, cell):
        rng = random.Random(9)
        buildings = random_scene(rng, 30)
        index = geo.SpatialIndex.build(buildings, cell_size_m=cell)
        for _ in range(60):
            a = geo.EnuPoint(rng.uniform(-900, 900), rng.uniform(-900, 900), rng.uniform(2, 40))
            b = geo.EnuPoint(rng.uniform(-900, 900), rng.uniform(-900, 900), rng.uniform(2, 40))
            assert geo.is_los(a, b, buildings, index) == geo.is_los(a, b, buildings)

    def test_empty_index(self):
        index = geo.SpatialIndex.build([])
        assert index.query_segment(geo.EnuPoint(0, 0, 0), geo.EnuPoint(1, 1, 1)) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_indexed_equals_brute_force(seed):
    rng = random.Random(seed)
    buildings = random_scene(rng, rng.randint(0, 20))
    index = geo.SpatialIndex.build(buildings)
    for _ in range(10):
        a = geo.EnuPoint(rng.uniform(-900, 900), rng.uniform(-900, 900), rng.uniform(2, 50))
        b = geo.EnuPoint(rng.uniform(-900, 900), rng.uniform(-900, 900), rng.uniform(2, 50))
        assert geo.is_los(a, b, buildings, index) == geo.is_los(a, b, buildings, None)


def test_translation_invariance_within_extent():
    # Shifting every latitude by the same small amount should move derived
    # distances/angles by well under 0.1% inside a 5 km extent.
    rng = random.Random(2)
    for _ in range(40):
        lat_a, lon_a = 37.2 + rng.uniform(-0.04, 0.04), -80.43 + rng.uniform(-0.04, 0.04)
        lat_b, lon_b = 37.2 + rng.uniform(-0.04, 0.04), -80.43 + rng.uniform(-0.04, 0.04)
        shift = 0.01
        base = geo.distance_3d(
            geo.to_enu(ORIGIN, geo.GeoPoint(lat_a, lon_a, 10.0)),
            geo.to_enu(ORIGIN, geo.GeoPoint(lat_b, lon_b, 20.0)),
        )
        origin2 = geo.GeoPoint(ORIGIN.latitude_deg + shift, ORIGIN.longitude_deg, 0.0)
        shifted = geo.distance_3d(
            geo.to_enu(origin2, geo.GeoPoint(lat_a + shift, lon_a, 10.0)),
            geo.to_enu(origin2, geo.GeoPoint(lat_b + shift, lon_b, 20.0)),
        )
        assert shifted == pytest.approx(base, rel=1e-3)


def test_building_validation():
    with pytest.raises(ValueError, match="3 vertices"):
        geo.Building(id="x", footprint=((0, 0), (1, 1)), height_m=5.0)
    with pytest.raises(ValueError, match="height"):
        geo.Building(id="x", footprint=_square(0, 0, 5), height_m=0.0)
    bowtie = ((0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0))
    with pytest.raises(ValueError, match="self-intersects"):
        geo.Building(id="x", footprint=bowtie, height_m=5.0)
