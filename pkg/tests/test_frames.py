import math

import numpy as np
import pytest

from vdllsim import frames
from vdllsim.frames import GeodeticCoord

# Independently derived: polar radius b = a * (1 - f)
POLAR_RADIUS = 6378137.0 * (1.0 - 1.0 / 298.257223563)


def test_polar_radius_oracle_value():
    assert POLAR_RADIUS == pytest.approx(6356752.314245179, abs=1e-6)
    assert frames.WGS84_B == pytest.approx(POLAR_RADIUS, abs=1e-9)


def test_geodetic_to_ecef_equator():
    p = frames.geodetic_to_ecef(GeodeticCoord(0.0, 0.0, 0.0))
    assert np.allclose(p, [6378137.0, 0.0, 0.0], atol=1e-9)


def test_geodetic_to_ecef_pole():
    p = frames.geodetic_to_ecef(GeodeticCoord(math.pi / 2.0, 0.0, 0.0))
    assert abs(p[2] - POLAR_RADIUS) < 1e-6
    assert math.hypot(p[0], p[1]) < 1e-6


def test_geodetic_to_ecef_equator_90e_with_height():
    p = frames.geodetic_to_ecef(GeodeticCoord(0.0, math.pi / 2.0, 100.0))
    assert abs(p[0]) < 1e-6
    assert p[1] == pytest.approx(6378237.0, abs=1e-9)
    assert abs(p[2]) < 1e-9


def test_ecef_to_geodetic_equator():
    g = frames.ecef_to_geodetic(np.array([6378137.0, 0.0, 0.0]))
    assert abs(g.latitude) < 1e-12
    assert abs(g.longitude) < 1e-12
    assert abs(g.height) < 1e-6


def test_ecef_to_geodetic_polar_point_with_height():
    g = frames.ecef_to_geodetic(np.array([0.0, 0.0, POLAR_RADIUS + 500.0]))
    assert g.latitude == pytest.approx(math.pi / 2.0, abs=1e-12)
    assert g.height == pytest.approx(500.0, abs=1e-6)


def test_geodetic_round_trip_random_points():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        lat = rng.uniform(-89.9, 89.9) * math.pi / 180.0
        lon = rng.uniform(-math.pi, math.pi)
        h = rng.uniform(-1000.0, 20e6)
        g = GeodeticCoord(lat, lon, h)
        back = frames.ecef_to_geodetic(frames.geodetic_to_ecef(g))
        assert abs(back.latitude - lat) < 1e-12
        assert abs(math.remainder(back.longitude - lon, 2 * math.pi)) < 1e-12
        assert abs(back.height - h) < 1e-6


def test_geocenter_rejected():
    with pytest.raises(frames.ConvergenceError):
        frames.ecef_to_geodetic(np.zeros(3))


def test_make_geodetic_normalizes_longitude():
    g = frames.make_geodetic(0.1, 3.5 * math.pi, 0.0)
    assert -math.pi < g.longitude <= math.pi
    assert g.longitude == pytest.approx(-0.5 * math.pi, abs=1e-12)
    with pytest.raises(ValueError):
        frames.make_geodetic(2.0, 0.0, 0.0)


def test_enu_axes_at_prime_meridian_equator():
    ref = GeodeticCoord(0.0, 0.0, 0.0)
    origin = frames.geodetic_to_ecef(ref)
    # ECEF +y is local east there
    enu = frames.ecef_to_enu(origin + np.array([0.0, 100.0, 0.0]), ref)
    assert np.allclose(enu, [100.0, 0.0, 0.0], atol=1e-9)
    # ECEF +x is local up there
    enu = frames.ecef_to_enu(origin + np.array([50.0, 0.0, 0.0]), ref)
    assert np.allclose(enu, [0.0, 0.0, 50.0], atol=1e-9)


def test_enu_is_isometry():
    rng = np.random.default_rng(11)
    for _ in range(200):
        ref = GeodeticCoord(
            rng.uniform(-1.4, 1.4), rng.uniform(-math.pi, math.pi), rng.uniform(0, 5e3)
        )
        p = frames.geodetic_to_ecef(ref) + rng.normal(scale=1e5, size=3)
        enu = frames.ecef_to_enu(p, ref)
        d = p - frames.geodetic_to_ecef(ref)
        assert np.linalg.norm(enu) == pytest.approx(
            np.linalg.norm(d), rel=1e-9
        )


def test_enu_round_trip():
    ref = GeodeticCoord(0.62, -1.1, 350.0)
    rng = np.random.default_rng(3)
    v = rng.normal(scale=2e4, size=3)
    assert np.allclose(frames.ecef_to_enu(frames.enu_to_ecef(v, ref), ref), v, atol=1e-6)


def test_unit_los_basic_antisymmetric_and_normalized():
    rx = np.zeros(3)
    sv = np.array([26560000.0, 0.0, 0.0])
    assert np.allclose(frames.unit_los(rx, sv), [1.0, 0.0, 0.0], atol=1e-15)
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = rng.normal(scale=1e7, size=3)
        b = rng.normal(scale=1e7, size=3)
        u = frames.unit_los(a, b)
        assert abs(np.linalg.norm(u) - 1.0) < 1e-12
        assert np.allclose(u, -frames.unit_los(b, a), atol=1e-15)
    with pytest.raises(ValueError):
        frames.unit_los(a, a)


def test_elevation_azimuth_zenith():
    ref = GeodeticCoord(0.0, 0.0, 0.0)
    rx = np.array([6378137.0, 0.0, 0.0])
    sv = np.array([26560000.0, 0.0, 0.0])
    el, az = frames.elevation_azimuth(rx, sv, ref)
    assert el == pytest.approx(math.pi / 2.0, abs=1e-9)
    assert az == 0.0


def test_elevation_azimuth_due_north_horizon():
    ref = GeodeticCoord(0.0, 0.0, 0.0)
    rx = frames.geodetic_to_ecef(ref)
    sv = frames.enu_to_ecef([0.0, 1e6, 0.0], ref)
    el, az = frames.elevation_azimuth(rx, sv, ref)
    assert abs(az) < 1e-9
    assert abs(el) < 1e-3  # a distant point in the tangent plane sits near 0 elevation


def test_elevation_negative_below_tangent_plane():
    ref = GeodeticCoord(0.7, 0.2, 0.0)
    rx = frames.geodetic_to_ecef(ref)
    sv = frames.enu_to_ecef([5e5, -3e5, -2e5], ref)
    el, _ = frames.elevation_azimuth(rx, sv, ref)
    assert el < 0.0


def test_elevation_matches_enu_definition():
    rng = np.random.default_rng(17)
    for _ in range(100):
        ref = GeodeticCoord(rng.uniform(-1.4, 1.4), rng.uniform(-math.pi, math.pi), 0.0)
        rx = frames.geodetic_to_ecef(ref) + rng.normal(scale=100.0, size=3)
        sv = rng.normal(scale=1.5e7, size=3) + np.array([2e7, 0, 0])
        el, _ = frames.elevation_azimuth(rx, sv, ref)
        los = frames.ecef_to_enu(sv, ref) - frames.ecef_to_enu(rx, ref)
        expected = math.asin(los[2] / np.linalg.norm(los))
        assert abs(el - expected) < 1e-12


def test_elevations_many_matches_scalar():
    ref = GeodeticCoord(0.44, 2.1, 10.0)
    rng = np.random.default_rng(23)
    rx = frames.geodetic_to_ecef(ref) + rng.normal(scale=50.0, size=(4, 3))
    sv = rng.normal(scale=1.2e7, size=(4, 6, 3)) + np.array([1.8e7, 0, 0])
    got = frames.elevations_many(rx, sv, ref)
    for k in range(4):
        for j in range(6):
            el, _ = frames.elevation_azimuth(rx[k], sv[k, j], ref)
            assert got[k, j] == pytest.approx(el, abs=1e-12)
