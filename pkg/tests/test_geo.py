import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajcompress.geo import (EARTH_RADIUS_M, equirectangular_distance,
                              euclidean_distance, haversine_distance,
                              interpolate_time_ratio, local_equirect_xy)

# frozen from a 50-digit evaluation of the haversine formula (mpmath)
BEIJING_PAIR_M = 8530.4868325417183
BEIJING_SMALL_PAIR_M = 1401.4339446832304  # (39.9,116.3)-(39.91,116.31)
EQUATOR_MILLIDEG_M = 111.19492664455874  # (0,0)-(0,0.001)


class TestEuclidean:
    def test_identity(self):
        assert euclidean_distance((0, 0, 0), (0, 0, 0)) == 0.0

    def test_3_4_5(self):
        assert euclidean_distance((0, 0, 0), (3, 4, 0)) == pytest.approx(5.0)

    def test_translated(self):
        assert euclidean_distance((1, 2, 3), (4, 6, 3)) == pytest.approx(5.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            euclidean_distance((0, 0), (0, 0, 0))


class TestHaversine:
    def test_identity(self):
        assert haversine_distance(39.9, 116.3, 39.9, 116.3) == 0.0

    def test_quarter_great_circle(self):
        d = haversine_distance(0.0, 0.0, 0.0, 90.0)
        assert d == pytest.approx(math.pi / 2 * EARTH_RADIUS_M, abs=0.1)

    def test_beijing_pair_oracle(self):
        d = haversine_distance(39.9, 116.3, 39.9, 116.4)
        assert d == pytest.approx(BEIJING_PAIR_M, rel=1e-9)

    def test_antipodal_no_nan(self):
        d = haversine_distance(0.0, 0.0, 0.0, 180.0)
        assert d == pytest.approx(math.pi * EARTH_RADIUS_M, rel=1e-9)

    def test_vectorized(self):
        lats = np.array([0.0, 39.9])
        d = haversine_distance(lats, np.array([0.0, 116.3]), lats, np.array([0.001, 116.4]))
        assert d.shape == (2,)
        assert d[1] == pytest.approx(BEIJING_PAIR_M, rel=1e-9)


class TestEquirectangular:
    def test_identity(self):
        assert equirectangular_distance(40.0, 116.0, 40.0, 116.0) == 0.0

    def test_equatorial_matches_haversine(self):
        e = equirectangular_distance(0.0, 0.0, 0.0, 0.01)
        h = haversine_distance(0.0, 0.0, 0.0, 0.01)
        assert e == pytest.approx(h, rel=1e-6)

    def test_beijing_small_pair_within_0_1_percent(self):
        e = equirectangular_distance(39.9, 116.3, 39.91, 116.31)
        assert e == pytest.approx(BEIJING_SMALL_PAIR_M, rel=1e-3)

    def test_reference_latitude_variant(self):
        lat1, lat2 = 39.9, 39.91
        mean = equirectangular_distance(lat1, 116.3, lat2, 116.31)
        ref = equirectangular_distance(lat1, 116.3, lat2, 116.31,
                                       ref_lat=(lat1 + lat2) / 2)
        assert mean == pytest.approx(ref, rel=1e-12)


coord = st.tuples(st.floats(-80, 80), st.floats(-179, 179))


@given(coord, coord)
@settings(max_examples=200, deadline=None)
def test_distances_symmetric_and_zero_at_identity(p, q):
    for fn in (haversine_distance, equirectangular_distance):
        assert fn(p[0], p[1], p[0], p[1]) == pytest.approx(0.0, abs=1e-6)
        assert fn(p[0], p[1], q[0], q[1]) == pytest.approx(
            fn(q[0], q[1], p[0], p[1]), rel=1e-12, abs=1e-9)
    assert haversine_distance(*p, *q) <= math.pi * EARTH_RADIUS_M * (1 + 1e-12)


@given(st.floats(39.75, 40.25), st.floats(-0.25, 0.25),
       st.floats(39.75, 40.25), st.floats(-0.25, 0.25))
@settings(max_examples=300, deadline=None)
def test_equirect_agrees_with_haversine_in_half_degree_box(lat1, lon1, lat2, lon2):
    h = haversine_distance(lat1, lon1, lat2, lon2)
    e = equirectangular_distance(lat1, lon1, lat2, lon2)
    assert abs(e - h) <= 0.005 * h + 1e-9


class TestInterpolateTimeRatio:
    def test_endpoint(self):
        out = interpolate_time_ratio((1.0, 2.0, 0.0), (5.0, 6.0, 10.0), 0.0)
        assert np.allclose(out, [1.0, 2.0])

    def test_midpoint(self):
        out = interpolate_time_ratio((0.0, 0.0, 0.0), (2.0, 4.0, 10.0), 5.0)
        assert np.allclose(out, [1.0, 2.0])

    def test_quarter(self):
        out = interpolate_time_ratio((0.0, 0.0, 0.0), (10.0, 0.0, 4.0), 1.0)
        assert np.allclose(out, [2.5, 0.0])

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            interpolate_time_ratio((0, 0, 0), (1, 1, 10), 11.0)

    def test_degenerate_segment(self):
        with pytest.raises(ValueError, match="degenerate"):
            interpolate_time_ratio((0, 0, 5), (1, 1, 5), 5.0)

    @given(st.floats(0, 1))
    @settings(max_examples=100, deadline=None)
    def test_convex_combination(self, ratio):
        a = np.array([2.0, -3.0, 0.0])
        b = np.array([7.0, 4.0, 10.0])
        out = interpolate_time_ratio(a, b, ratio * 10.0)
        for d in range(2):
            lo, hi = min(a[d], b[d]), max(a[d], b[d])
            assert lo - 1e-9 <= out[d] <= hi + 1e-9


def test_local_equirect_frame_distances():
    pts = np.array([[116.3, 39.9, 0.0], [116.4, 39.9, 10.0]])
    xy = local_equirect_xy(pts[:, :2])
    planar = np.linalg.norm(xy[1] - xy[0])
    assert planar == pytest.approx(BEIJING_PAIR_M, rel=1e-3)
