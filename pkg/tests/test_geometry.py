import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pedscale import geometry


def test_length_and_bearings_straight():
    coords = geometry.as_coords([(0, 0), (100, 0)])
    assert geometry.length(coords) == 100.0
    in_b, out_b = geometry.end_bearings(coords)
    assert in_b == 90.0  # compass: east
    assert out_b == 90.0
    assert geometry.cumulative_angle(coords) == 0.0


def test_bearing_compass_convention():
    assert geometry.bearing(0, 0, 0, 1) == 0.0  # north
    assert geometry.bearing(0, 0, 1, 0) == 90.0  # east
    assert geometry.bearing(0, 0, 0, -1) == 180.0
    assert geometry.bearing(0, 0, -1, 0) == 270.0


def test_angular_diff_signed_shortest():
    assert geometry.angular_diff(350.0, 10.0) == 20.0
    assert geometry.angular_diff(10.0, 350.0) == -20.0
    assert geometry.angular_diff(0.0, 180.0) == 180.0
    assert abs(geometry.angular_diff(90.0, 90.0)) == 0.0


def test_cumulative_angle_l_shape():
    coords = geometry.as_coords([(0, 0), (100, 0), (100, 100)])
    assert geometry.cumulative_angle(coords) == pytest.approx(90.0)


def test_cumulative_angle_sums_absolute_values():
    # two 45-degree turns of opposite sign still sum to 90
    coords = geometry.as_coords([(0, 0), (100, 0), (170.71067811865476, 70.71067811865476),
                                 (270.71067811865476, 70.71067811865476)])
    assert geometry.cumulative_angle(coords) == pytest.approx(90.0, abs=1e-9)


def test_interpolate_and_substring():
    coords = geometry.as_coords([(0, 0), (100, 0), (100, 100)])
    assert geometry.interpolate(coords, 150.0) == (100.0, 50.0)
    sub = geometry.substring(coords, 50.0, 150.0)
    assert geometry.length(sub) == pytest.approx(100.0)
    assert tuple(sub[0]) == (50.0, 0.0)
    assert tuple(sub[-1]) == (100.0, 50.0)


def test_substring_rejects_inverted_range():
    coords = geometry.as_coords([(0, 0), (100, 0)])
    with pytest.raises(ValueError):
        geometry.substring(coords, 60.0, 60.0)


def test_concat_requires_shared_vertex():
    a = geometry.as_coords([(0, 0), (50, 0)])
    b = geometry.as_coords([(50, 0), (50, 60)])
    joined = geometry.concat(a, b)
    assert joined.shape == (3, 2)
    with pytest.raises(ValueError):
        geometry.concat(b, a)


@given(st.integers(min_value=1, max_value=9), st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_split_at_equal_conserves_length(n, seed):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.uniform(-50, 50, size=(rng.integers(2, 8), 2)), axis=0)
    if geometry.length(pts) == 0.0:
        return
    pieces = geometry.split_at_equal(pts, n)
    assert len(pieces) == n
    total = sum(geometry.length(p) for p in pieces)
    assert total == pytest.approx(geometry.length(pts), rel=1e-12)
    lengths = [geometry.length(p) for p in pieces]
    assert max(lengths) - min(lengths) < 1e-6


def test_point_segment_distance():
    assert geometry.point_segment_distance(50, 5, 0, 0, 100, 0) == pytest.approx(5.0)
    assert geometry.point_segment_distance(-30, 0, 0, 0, 100, 0) == pytest.approx(30.0)
    assert geometry.point_segment_distance(3, 4, 0, 0, 0, 0) == pytest.approx(5.0)
