"""WGS-84 coordinate frames: geodetic, ECEF, and local east-north-up.

Angles are radians and distances metres everywhere inside the package;
degrees exist only at the config/CSV boundary. All functions are pure.
The ``*_many`` variants are the vectorized forms used when the harness
precomputes whole-run geometry.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# WGS-84 ellipsoid, fixed by design (the simulator never varies the datum)
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)  # first eccentricity squared

_GEODETIC_TOL = 1e-12
_GEODETIC_MAX_ITER = 20


class GeodeticCoord(NamedTuple):
    """Latitude/longitude in radians, height in metres above the ellipsoid."""

    latitude: float
    longitude: float
    height: float


class ConvergenceError(RuntimeError):
    """Iterative latitude solution failed to converge (degenerate input)."""


def make_geodetic(latitude: float, longitude: float, height: float) -> GeodeticCoord:
    """Build a GeodeticCoord, normalizing longitude to (-pi, pi].

    Raises ValueError when |latitude| > pi/2.
    """
    if not abs(latitude) <= math.pi / 2.0:
        raise ValueError(f"latitude {latitude} outside [-pi/2, pi/2]")
    lon = math.remainder(longitude, 2.0 * math.pi)
    if lon <= -math.pi:
        lon += 2.0 * math.pi
    return GeodeticCoord(latitude, lon, height)


def geodetic_to_ecef(g: GeodeticCoord) -> np.ndarray:
    """Geodetic coordinates to an ECEF position vector (metres)."""
    sin_lat = math.sin(g.latitude)
    cos_lat = math.cos(g.latitude)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    return np.array(
        [
            (n + g.height) * cos_lat * math.cos(g.longitude),
            (n + g.height) * cos_lat * math.sin(g.longitude),
            (n * (1.0 - WGS84_E2) + g.height) * sin_lat,
        ]
    )


def ecef_to_geodetic(p) -> GeodeticCoord:
    """Inverse of :func:`geodetic_to_ecef` by fixed-point latitude iteration.

    Converges to |dlat| < 1e-12 rad within 20 iterations for any point
    from -1000 m depth out to GNSS orbit altitudes; raises
    ConvergenceError for degenerate near-geocenter input.
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    rho = math.hypot(x, y)
    if rho == 0.0 and z == 0.0:
        raise ConvergenceError("geocenter has no geodetic image")
    lon = math.atan2(y, x)
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))

    def _height(lat_val: float) -> float:
        sin_lat = math.sin(lat_val)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        # the cos form is ill-conditioned near the poles, the sin form
        # near the equator; pick per octant
        if rho > abs(z):
            return rho / math.cos(lat_val) - n
        return z / sin_lat - n * (1.0 - WGS84_E2)

    for _ in range(_GEODETIC_MAX_ITER):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        height = _height(lat)
        lat_new = math.atan2(z, rho * (1.0 - WGS84_E2 * n / (n + height)))
        done = abs(lat_new - lat) < _GEODETIC_TOL
        lat = lat_new
        if done:
            return GeodeticCoord(lat, lon, _height(lat))
    raise ConvergenceError(f"latitude iteration did not converge for {p!r}")


def enu_rotation(ref: GeodeticCoord) -> np.ndarray:
    """Rotation matrix taking ECEF deltas into the ENU frame at ``ref``."""
    sin_lat, cos_lat = math.sin(ref.latitude), math.cos(ref.latitude)
    sin_lon, cos_lon = math.sin(ref.longitude), math.cos(ref.longitude)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ]
    )


def ecef_to_enu(p, ref: GeodeticCoord) -> np.ndarray:
    """Rotate ``p - ecef(ref)`` into the local tangent frame at ``ref``."""
    return enu_rotation(ref) @ (np.asarray(p, dtype=float) - geodetic_to_ecef(ref))


def enu_to_ecef(enu, ref: GeodeticCoord) -> np.ndarray:
    """Inverse of :func:`ecef_to_enu`."""
    return geodetic_to_ecef(ref) + enu_rotation(ref).T @ np.asarray(enu, dtype=float)


def ecef_to_enu_many(points: np.ndarray, ref: GeodeticCoord) -> np.ndarray:
    """Vectorized :func:`ecef_to_enu` over the leading axes of ``points``."""
    rot = enu_rotation(ref)
    return (np.asarray(points, dtype=float) - geodetic_to_ecef(ref)) @ rot.T


def unit_los(rx, sv) -> np.ndarray:
    """Unit line-of-sight vector from ``rx`` toward ``sv`` in ECEF."""
    diff = np.asarray(sv, dtype=float) - np.asarray(rx, dtype=float)
    dist = math.sqrt(float(diff @ diff))
    if dist == 0.0:
        raise ValueError("coincident receiver and satellite")
    return diff / dist


def elevation_azimuth(rx, sv, ref: GeodeticCoord) -> tuple[float, float]:
    """Elevation and azimuth (radians) of ``sv`` seen from ``rx``.

    Azimuth is measured clockwise from north in [0, 2*pi); a satellite at
    exact zenith gets azimuth 0 by convention. Elevation is negative
    below the tangent plane.
    """
    los = enu_rotation(ref) @ (np.asarray(sv, dtype=float) - np.asarray(rx, dtype=float))
    dist = math.sqrt(float(los @ los))
    if dist == 0.0:
        raise ValueError("coincident receiver and satellite")
    elevation = math.asin(max(-1.0, min(1.0, los[2] / dist)))
    azimuth = math.atan2(los[0], los[1])
    if azimuth < 0.0:
        azimuth += 2.0 * math.pi
    return elevation, azimuth


def elevations_many(rx: np.ndarray, sv: np.ndarray, ref: GeodeticCoord) -> np.ndarray:
    """Elevations for epoch-major receiver/satellite position arrays.

    ``rx`` has shape (k, 3) and ``sv`` (k, m, 3); the result is (k, m),
    using the tangent plane at the fixed ``ref``.
    """
    rot = enu_rotation(ref)
    los = (sv - rx[:, None, :]) @ rot.T
    dist = np.linalg.norm(los, axis=-1)
    return np.arcsin(np.clip(los[..., 2] / dist, -1.0, 1.0))
