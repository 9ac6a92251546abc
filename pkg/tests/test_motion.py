import math
import random

import pytest

from tracefp.geo import GpsPoint, haversine_km, initial_bearing_deg
from tracefp.motion import (
    DEFAULT_STEPS,
    MotionSample,
    quantize_features,
    quantize_value,
    weighted_direction_deg,
    windowed_features,
)
from tracefp.store import Trajectory


def P(lat, lon, t=None):
    return GpsPoint.from_degrees(lat, lon, t)


class TestWeightedDirection:
    def test_reference_value(self):
        # 1 km at 45 deg plus 2 km at 90 deg
        assert weighted_direction_deg([1.0, 2.0], [45.0, 90.0]) == pytest.approx(75.36, abs=0.01)

    def test_not_the_arithmetic_weighted_mean(self):
        # The naive distance-weighted mean gives (1*45 + 2*90) / 3 = 75.00;
        # the vector-sum rule must not degrade to it. Standing regression.
        vector = weighted_direction_deg([1.0, 2.0], [45.0, 90.0])
        arithmetic = (1.0 * 45.0 + 2.0 * 90.0) / 3.0
        assert arithmetic == 75.0
        assert abs(vector - arithmetic) > 0.1

    def test_single_segment_is_its_bearing(self):
        rng = random.Random(1)
        for _ in range(50):
            b = rng.uniform(0, 360)
            assert weighted_direction_deg([rng.uniform(0.1, 5)], [b]) == pytest.approx(b % 360)

    def test_equal_bearings_aggregate_exactly(self):
        rng = random.Random(2)
        for _ in range(50):
            b = rng.uniform(0, 359.99)
            lengths = [rng.uniform(0.1, 3) for _ in range(5)]
            got = weighted_direction_deg(lengths, [b] * 5)
            assert min(abs(got - b), 360 - abs(got - b)) < 1e-9

    def test_zero_net_displacement_rejected(self):
        with pytest.raises(ValueError):
            weighted_direction_deg([0.0, 0.0], [0.0, 180.0])


class TestQuantize:
    def test_examples(self):
        assert quantize_value(75.36, 1.0) == 75.0
        assert quantize_value(0.0, 0.5) == 0.0

    def test_bad_step(self):
        with pytest.raises(ValueError):
            quantize_value(1.0, 0.0)

    def test_floor_oracle_batch(self):
        rng = random.Random(3)
        for _ in range(300):
            v = rng.uniform(0, 500)
            step = rng.choice([0.01, 0.5, 1.0, 5.0])
            assert quantize_value(v, step) == math.floor(v / step) * step

    def test_requantize(self):
        samples = [MotionSample(0, "direction_deg", 75.36, 75.0)]
        out = quantize_features(samples, 10.0)
        assert out[0].quantized == 70.0
        assert out[0].value == 75.36


def walk_east(n, start_t, dt, dlon=0.001):
    return Trajectory("u", tuple(P(0, i * dlon, start_t + i * dt) for i in range(n)))


class TestWindowedFeatures:
    def test_requires_timestamps(self):
        tr = Trajectory("u", (P(0, 0), P(0, 1)))
        with pytest.raises(ValueError):
            windowed_features(tr, 30, "speed_kmh")

    def test_bad_args(self):
        tr = walk_east(4, 0, 10)
        with pytest.raises(ValueError):
            windowed_features(tr, 0, "speed_kmh")
        with pytest.raises(ValueError):
            windowed_features(tr, 30, "altitude")

    def test_single_point_window_emits_nothing(self):
        # points at t=0,10 then a lone point at t=35 in the second window
        tr = Trajectory("u", (P(0, 0, 0), P(0, 0.001, 10), P(0, 0.002, 35)))
        samples = windowed_features(tr, 30, "distance_km")
        assert [s.window_start for s in samples] == [0]

    def test_windows_anchored_at_first_fix(self):
        tr = walk_east(4, 1000, 10)
        samples = windowed_features(tr, 30, "distance_km")
        assert samples[0].window_start == 1000

    def test_distance_is_segment_sum(self):
        tr = walk_east(4, 0, 5)
        samples = windowed_features(tr, 30, "distance_km")
        expected = math.fsum(
            haversine_km(a, b) for a, b in zip(tr.points, tr.points[1:])
        )
        assert samples[0].value == pytest.approx(expected, abs=1e-9)

    def test_speed_two_points_one_km_30s(self):
        # ~1 km east at the equator in 30 s -> ~120 km/h
        tr = Trajectory("u", (P(0, 0, 0), P(0, 0.008993, 30)))
        s = windowed_features(tr, 60, "speed_kmh")[0]
        d = haversine_km(tr.points[0], tr.points[1])
        assert s.value == pytest.approx(d * 120.0)
        assert s.value == pytest.approx(120.0, abs=0.1)

    def test_direction_matches_vector_rule(self):
        pts = (P(0, 0, 0), P(0.005, 0.005, 5), P(0.005, 0.02, 10))
        tr = Trajectory("u", pts)
        s = windowed_features(tr, 60, "direction_deg")[0]
        lengths = [haversine_km(a, b) for a, b in zip(pts, pts[1:])]
        bearings = [initial_bearing_deg(a, b) for a, b in zip(pts, pts[1:])]
        assert s.value == pytest.approx(weighted_direction_deg(lengths, bearings))

    def test_stationary_window_skipped_for_direction(self):
        tr = Trajectory("u", (P(0, 0, 0), P(0, 0, 10)))
        assert windowed_features(tr, 30, "direction_deg") == []

    def test_zero_elapsed_skipped_for_speed(self):
        tr = Trajectory("u", (P(0, 0, 10), P(0, 0.001, 10)))
        assert windowed_features(tr, 30, "speed_kmh") == []

    def test_default_quantization(self):
        tr = walk_east(3, 0, 10)
        for kind in DEFAULT_STEPS:
            for s in windowed_features(tr, 30, kind):
                assert s.quantized == quantize_value(s.value, DEFAULT_STEPS[kind])
