"""Point-level distance functions and time-ratio interpolation.

All geographic functions take latitude/longitude in degrees and convert to
radians internally; distances come back in meters on a spherical earth.
"""

from __future__ import annotations

import math

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


def euclidean_distance(p, q) -> float:
    """Euclidean distance between two equal-length coordinate sequences."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((q - p) ** 2)))


def haversine_distance(lat1, lon1, lat2, lon2, radius: float = EARTH_RADIUS_M):
    """Great-circle distance in meters between two points given in degrees.

    Accepts scalars or numpy arrays (broadcast elementwise).
    """
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = np.radians(np.subtract(lat2, lat1))
    dlam = np.radians(np.subtract(lon2, lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    # rounding can push the arcsin argument marginally outside [0, 1]
    a = np.clip(a, 0.0, 1.0)
    d = 2.0 * radius * np.arcsin(np.sqrt(a))
    return float(d) if np.ndim(d) == 0 else d


def equirectangular_distance(lat1, lon1, lat2, lon2, radius: float = EARTH_RADIUS_M,
                             ref_lat=None):
    """Planar small-extent approximation of the great-circle distance, meters.

    Uses the mean latitude of the two points unless ``ref_lat`` (degrees) is
    given. Cheap compared to haversine; accurate for metropolitan-scale
    extents. Accepts scalars or numpy arrays.
    """
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    if ref_lat is None:
        phim = (phi1 + phi2) / 2.0
    else:
        phim = np.radians(ref_lat)
    x = np.radians(np.subtract(lon2, lon1)) * np.cos(phim)
    y = phi2 - phi1
    d = radius * np.sqrt(x * x + y * y)
    return float(d) if np.ndim(d) == 0 else d


def interpolate_time_ratio(a, b, t: float) -> np.ndarray:
    """Spatial position on segment a-b at timestamp t, by linear time ratio.

    ``a`` and ``b`` are point triples whose last component is the timestamp;
    returns the two spatial components. Requires a.t < b.t and a.t <= t <= b.t.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ta, tb = a[-1], b[-1]
    if ta == tb:
        raise ValueError("degenerate segment: endpoints share a timestamp")
    if not (ta <= t <= tb):
        raise ValueError(f"timestamp {t} outside segment range [{ta}, {tb}]")
    ratio = (t - ta) / (tb - ta)
    return a[:-1] + ratio * (b[:-1] - a[:-1])


def local_equirect_xy(points: np.ndarray, radius: float = EARTH_RADIUS_M) -> np.ndarray:
    """Project (lon, lat) degree columns to a local planar frame in meters.

    Origin at the first point, longitude scaled by the cosine of the mean
    latitude. Used where planar geometry (perpendicular distances) is needed
    on GPS data.
    """
    pts = np.asarray(points, dtype=float)
    lon = np.radians(pts[:, 0])
    lat = np.radians(pts[:, 1])
    cos_mid = math.cos(float(np.mean(lat)))
    x = (lon - lon[0]) * cos_mid * radius
    y = (lat - lat[0]) * radius
    return np.column_stack([x, y])
