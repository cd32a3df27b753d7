"""Directions, rotations and quadrature grids on the unit sphere."""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class Direction:
    """A point on S^2 as colatitude ``theta`` in [0, pi] and longitude ``alpha``."""

    theta: float
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("colatitude must lie in [0, pi]")
        object.__setattr__(self, "alpha", float(self.alpha) % (2.0 * math.pi))

    @property
    def vector(self):
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.alpha), st * math.sin(self.alpha), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        theta = math.acos(min(1.0, max(-1.0, v[2])))
        alpha = math.atan2(v[1], v[0])
        return cls(theta, alpha)


NORTH = Direction(0.0, 0.0)


def as_vectors(points):
    """Coerce a Direction, a 3-vector or an (n, 3) array into an (n, 3) array."""
    if isinstance(points, Direction):
        return points.vector[None, :]
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], Direction):
        return np.array([p.vector for p in points])
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 3)


def to_angles(vectors):
    """(n, 3) unit vectors -> (theta, alpha) arrays."""
    v = np.asarray(vectors, dtype=float)
    z = np.clip(v[..., 2] / np.linalg.norm(v, axis=-1), -1.0, 1.0)
    return np.arccos(z), np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * math.pi)


def from_angles(theta, alpha):
    theta = np.asarray(theta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(alpha), st * np.sin(alpha), np.cos(theta)], axis=-1)


def rotation_to(z):
    """Rotation matrix taking the north pole to direction ``z``.

    Built as ``Rz(alpha) @ Ry(theta)``, so cap-local longitude 0 maps to the
    meridian through ``z``.
    """
    if not isinstance(z, Direction):
        z = Direction.from_vector(z)
    ct, st = math.cos(z.theta), math.sin(z.theta)
    ca, sa = math.cos(z.alpha), math.sin(z.alpha)
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry


def cap_volume(r):
    """Area of a geodesic cap of radius r: 4 pi sin^2(r/2)."""
    if not 0.0 < r <= math.pi:
        raise ValueError("cap radius must lie in (0, pi]")
    return FOUR_PI * math.sin(0.5 * r) ** 2


def geodesic_distance(u, v):
    """Great-circle distance between unit vectors (broadcasting)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def cap_gauss_nodes(n, r):
    """Gauss-Legendre nodes in ``x = cos(theta)`` on ``[cos r, 1]``.

    The interval length ``1 - cos r`` is taken as ``2 sin^2(r/2)`` to keep
    tiny caps accurate.
    """
    t, w = gauss_legendre(n)
    h = 2.0 * math.sin(0.5 * r) ** 2
    x = 1.0 - 0.5 * h * (1.0 - t)
    return x, 0.5 * h * w


def sample_cap(n, r, rng, z=None):
    """Uniform points in the cap B_r(z) by inverse CDF in cos(theta).

    Returns an (n, 3) array. ``z`` defaults to the north pole.
    """
    u = rng.random(n)
    h = 2.0 * math.sin(0.5 * r) ** 2
    cos_t = 1.0 - h * u
    alpha = 2.0 * math.pi * rng.random(n)
    sin_t = np.sqrt(np.clip(1.0 - cos_t * cos_t, 0.0, None))
    pts = np.stack([sin_t * np.cos(alpha), sin_t * np.sin(alpha), cos_t], axis=-1)
    if z is None:
        return pts
    return pts @ rotation_to(z).T


def uniform_sphere(n, rng):
    z = 2.0 * rng.random(n) - 1.0
    alpha = 2.0 * math.pi * rng.random(n)
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(alpha), s * np.sin(alpha), z], axis=-1)
