import io

import numpy as np
import pytest

from trajcompress.core import GEOTEMPORAL, SPATIAL3D, Trajectory
from trajcompress.geo import haversine_distance, interpolate_time_ratio
from trajcompress.simplify import (EpsilonSearch, Simplified, douglas_peucker,
                                   find_epsilon_for_target,
                                   interpolate_to_full_length,
                                   perpendicular_distance, sed_distance,
                                   td_tr, time_synchronize,
                                   write_simplified_csv)


def spatial(points):
    return Trajectory(np.asarray(points, dtype=float), SPATIAL3D)


def geo(points):
    return Trajectory(np.asarray(points, dtype=float), GEOTEMPORAL)


def random_spatial(rng, n):
    return spatial(rng.normal(0.0, 10.0, size=(n, 3)))


def random_geo(rng, n):
    return geo(np.column_stack([
        116.3 + np.cumsum(rng.uniform(-0.002, 0.002, n)),
        39.9 + np.cumsum(rng.uniform(-0.002, 0.002, n)),
        np.cumsum(rng.uniform(5.0, 30.0, n)),
    ]))


class TestPerpendicular:
    def test_height_above_axis(self):
        assert perpendicular_distance((1, 1), (0, 0), (2, 0)) == pytest.approx(1.0)

    def test_on_segment(self):
        assert perpendicular_distance((1, 0), (0, 0), (2, 0)) == pytest.approx(0.0)

    def test_degenerate_segment(self):
        assert perpendicular_distance((3, 4), (0, 0), (0, 0)) == pytest.approx(5.0)


class TestSed:
    def test_at_start_time(self):
        d = sed_distance((1.0, 1.0, 0.0), (0.0, 0.0, 0.0), (10.0, 0.0, 10.0))
        assert d == pytest.approx(np.sqrt(2))

    def test_zero_on_time_ratio_point(self):
        d = sed_distance((5.0, 0.0, 5.0), (0.0, 0.0, 0.0), (10.0, 0.0, 10.0))
        assert d == pytest.approx(0.0)

    def test_midpoint_offset(self):
        d = sed_distance((5.0, 3.0, 5.0), (0.0, 0.0, 0.0), (10.0, 0.0, 10.0))
        assert d == pytest.approx(3.0)

    def test_haversine_base(self):
        d = sed_distance((116.4, 39.9, 5.0), (116.3, 39.9, 0.0), (116.5, 39.9, 10.0),
                         base="haversine")
        assert d == pytest.approx(0.0, abs=1e-6)


class TestDouglasPeucker:
    def test_collinear_eps_zero_keeps_endpoints(self):
        t = spatial([[0, 0, 0], [1, 1, 0], [2, 2, 0], [3, 3, 0]])
        s = douglas_peucker(t, 0.0)
        assert list(s.kept_indices) == [0, 3]

    def test_v_shape_small_eps(self):
        t = spatial([[0, 0, 0], [1, 1, 0], [2, 0, 0]])
        assert list(douglas_peucker(t, 0.5).kept_indices) == [0, 1, 2]

    def test_v_shape_large_eps(self):
        t = spatial([[0, 0, 0], [1, 1, 0], [2, 0, 0]])
        assert list(douglas_peucker(t, 1.5).kept_indices) == [0, 2]

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError, match=">= 0"):
            douglas_peucker(spatial([[0, 0, 0], [1, 1, 0]]), -1.0)


class TestTdTr:
    def test_constant_velocity_line(self):
        pts = [[k * 1e-3, 0.0, 10.0 * k] for k in range(8)]
        for eps in (0.0, 5.0, np.inf):
            assert list(td_tr(geo(pts), eps).kept_indices) == [0, 7]

    def test_temporal_dawdle_kept(self):
        # spatially collinear, but the middle point lags in time
        pts = [[116.30, 39.9, 0.0], [116.35, 39.9, 90.0], [116.40, 39.9, 100.0]]
        t = geo(pts)
        straight = interpolate_time_ratio(t.points[0], t.points[2], 90.0)
        dev = haversine_distance(39.9, straight[0], 39.9, pts[1][0])
        assert dev > 1000  # the dawdle is far from its time-ratio position
        kept = td_tr(t, dev / 2).kept_indices
        assert list(kept) == [0, 1, 2]
        assert list(douglas_peucker(t, 1.0).kept_indices) == [0, 2]  # no spatial deviation

    def test_spatial_mode_rejected(self):
        with pytest.raises(ValueError, match="geotemporal"):
            td_tr(spatial([[0, 0, 0], [1, 1, 1]]), 1.0)


def brute_force_levels(t, algo):
    """Achievable kept counts by probing every deviation value as epsilon."""
    simplify = td_tr if algo == "tdtr" else douglas_peucker
    n = len(t)
    candidates = {0.0}
    for i in range(n):
        for j in range(i + 2, n):
            for k in range(i + 1, j):
                if algo == "tdtr":
                    d = sed_distance(t.points[k], t.points[i], t.points[j],
                                     base="haversine")
                else:
                    d = perpendicular_distance(t.points[k], t.points[i], t.points[j])
                candidates.add(float(d))
    levels = {}
    for c in sorted(candidates):
        for eps in (c, max(0.0, c - 1e-9)):
            count = len(simplify(t, eps))
            levels.setdefault(count, eps)
    return levels


class TestEpsilonSearch:
    def test_target_all_points(self):
        rng = np.random.default_rng(5)
        t = random_spatial(rng, 8)
        res = find_epsilon_for_target(t, 8)
        assert res.achieved_points == len(douglas_peucker(t, res.epsilon))
        assert res.achieved_points == 8

    def test_target_two(self):
        rng = np.random.default_rng(6)
        t = random_spatial(rng, 8)
        res = find_epsilon_for_target(t, 2)
        assert res.achieved_points == 2
        assert len(douglas_peucker(t, res.epsilon)) == 2

    def test_v_fixture_target_three(self):
        # two distinct deviation levels: the spike (big) and the bump (small)
        t = spatial([[0, 0, 0], [1, 5, 0], [2, 0, 0], [3, 0.5, 0], [4, 0, 0]])
        res = find_epsilon_for_target(t, 3)
        assert res.achieved_points == 3
        assert len(douglas_peucker(t, res.epsilon)) == 3

    def test_bounds_validated(self):
        t = random_spatial(np.random.default_rng(0), 6)
        with pytest.raises(ValueError):
            find_epsilon_for_target(t, 1)
        with pytest.raises(ValueError):
            find_epsilon_for_target(t, 7)

    @pytest.mark.parametrize("algo", ["dp", "tdtr"])
    def test_matches_brute_force_enumeration(self, algo):
        rng = np.random.default_rng(99)
        for trial in range(40):
            n = int(rng.integers(4, 11))
            t = random_geo(rng, n) if algo == "tdtr" else random_spatial(rng, n)
            levels = brute_force_levels(t, algo)
            for target in range(2, n + 1):
                res = find_epsilon_for_target(t, target, algo)
                best = min(levels, key=lambda c: (abs(c - target), c))
                assert res.achieved_points == best, (trial, target, levels)
                simplify = td_tr if algo == "tdtr" else douglas_peucker
                assert len(simplify(t, res.epsilon)) == best


def covering_deviation(t, s, algo):
    """Max deviation of removed points to their covering kept segment."""
    worst = 0.0
    idx = s.kept_indices
    for a, b in zip(idx[:-1], idx[1:]):
        for k in range(a + 1, b):
            if algo == "tdtr":
                d = sed_distance(t.points[k], t.points[a], t.points[b], base="haversine")
            else:
                d = perpendicular_distance(t.points[k], t.points[a], t.points[b])
            worst = max(worst, float(d))
    return worst


class TestGuarantees:
    @pytest.mark.parametrize("algo", ["dp", "tdtr"])
    def test_removed_points_within_epsilon(self, algo):
        rng = np.random.default_rng(3)
        simplify = td_tr if algo == "tdtr" else douglas_peucker
        for _ in range(60):
            n = int(rng.integers(5, 30))
            t = random_geo(rng, n) if algo == "tdtr" else random_spatial(rng, n)
            scale = 500.0 if algo == "tdtr" else 10.0
            eps = float(rng.uniform(0.0, scale))
            s = simplify(t, eps)
            assert covering_deviation(t, s, algo) <= eps + 1e-9

    @pytest.mark.parametrize("algo", ["dp", "tdtr"])
    def test_kept_sets_monotone_in_epsilon(self, algo):
        rng = np.random.default_rng(4)
        simplify = td_tr if algo == "tdtr" else douglas_peucker
        for _ in range(60):
            n = int(rng.integers(5, 30))
            t = random_geo(rng, n) if algo == "tdtr" else random_spatial(rng, n)
            scale = 500.0 if algo == "tdtr" else 10.0
            e1, e2 = sorted(rng.uniform(0.0, scale, 2))
            k1 = set(simplify(t, e1).kept_indices)
            k2 = set(simplify(t, e2).kept_indices)
            assert k2 <= k1


class TestInterpolateToFullLength:
    def test_identity_when_all_kept(self):
        t = random_spatial(np.random.default_rng(1), 7)
        s = Simplified(np.arange(7), t.points.copy(), t.mode)
        out = interpolate_to_full_length(t, s)
        assert np.array_equal(out.points, t.points)

    def test_index_ratio_spatial(self):
        t = spatial([[0, 0, 0], [9, 9, 0], [10, 0, 0]])
        s = Simplified(np.array([0, 2]), t.points[[0, 2]], SPATIAL3D)
        out = interpolate_to_full_length(t, s)
        assert np.allclose(out.points[1], [5.0, 0.0, 0.0])

    def test_time_ratio_geotemporal(self):
        t = geo([[116.30, 39.90, 0.0], [116.36, 39.95, 30.0], [116.40, 39.90, 40.0]])
        s = Simplified(np.array([0, 2]), t.points[[0, 2]], GEOTEMPORAL)
        out = interpolate_to_full_length(t, s)
        expected = interpolate_time_ratio(t.points[0], t.points[2], 30.0)
        assert np.allclose(out.points[1, :2], expected)
        assert out.points[1, 2] == 30.0

    def test_kept_points_never_move(self):
        rng = np.random.default_rng(8)
        t = random_spatial(rng, 15)
        s = douglas_peucker(t, 2.0)
        out = interpolate_to_full_length(t, s)
        assert np.array_equal(out.points[s.kept_indices], s.points)

    def test_mismatch_rejected(self):
        t = random_spatial(np.random.default_rng(2), 6)
        bad = Simplified(np.array([0, 5]), t.points[[0, 4]], SPATIAL3D)
        with pytest.raises(ValueError, match="does not match"):
            interpolate_to_full_length(t, bad)


class TestTimeSynchronize:
    def test_self_synchronization(self):
        t = random_geo(np.random.default_rng(0), 10)
        out = time_synchronize(t, t)
        assert np.allclose(out.points, t.points)

    def test_matching_timestamps_verbatim(self):
        other = random_geo(np.random.default_rng(1), 10)
        ref = Trajectory(other.points.copy(), GEOTEMPORAL)
        out = time_synchronize(ref, other)
        assert np.allclose(out.points[:, :2], other.points[:, :2])

    def test_constant_velocity_exact(self):
        other = geo([[0.0, 0.0, 0.0], [0.01, 0.0, 10.0]])
        ref = geo([[99.0, 99.0, 2.5], [99.0, 99.0, 7.5]])
        out = time_synchronize(ref, other)
        assert np.allclose(out.points[:, 0], [0.0025, 0.0075])
        assert np.allclose(out.points[:, 2], [2.5, 7.5])

    def test_clamps_outside_span(self):
        other = geo([[1.0, 1.0, 10.0], [2.0, 2.0, 20.0]])
        ref = geo([[0.0, 0.0, 5.0], [0.0, 0.0, 25.0]])
        out = time_synchronize(ref, other)
        assert np.allclose(out.points[0, :2], [1.0, 1.0])
        assert np.allclose(out.points[1, :2], [2.0, 2.0])

    def test_too_short_other(self):
        ref = random_geo(np.random.default_rng(2), 5)
        other = Trajectory(ref.points[:1], GEOTEMPORAL, validate=False)
        with pytest.raises(ValueError, match="too short"):
            time_synchronize(ref, other)


def test_simplified_csv():
    t = spatial([[0, 0, 0], [1, 5, 0], [2, 0, 0]])
    s = douglas_peucker(t, 0.5)
    buf = io.StringIO()
    write_simplified_csv(buf, [s])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "id,kept_index,c0,c1,c2"
    assert len(lines) == 1 + len(s)


def test_epsilon_search_result_type():
    t = spatial([[0, 0, 0], [1, 5, 0], [2, 0, 0]])
    res = find_epsilon_for_target(t, 3)
    assert isinstance(res, EpsilonSearch)
    assert res.target_points == 3
