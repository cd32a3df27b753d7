"""The monochromatic Gaussian ensemble of degree-m spherical harmonics.

Coefficient vectors have length ``2m + 1`` and are indexed as::

    0        -> (j=0, cos)
    2j - 1   -> (j, cos)     for j >= 1
    2j       -> (j, sin)

The basis is the ultraspherical one centred at the north pole (see
:mod:`sphcap.specfun` for the normalization).
"""
import math
from dataclasses import dataclass

import numpy as np

from .geometry import as_vectors, to_angles
from .rng import as_seed
from .specfun import assoc_legendre_orders, legendre

_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def index_of(j, parity):
    """Position of basis function (j, parity) in a coefficient vector."""
    if j == 0:
        if parity != "cos":
            raise ValueError("(j=0, sin) is not a basis function")
        return 0
    return 2 * j - 1 if parity == "cos" else 2 * j


def order_of(index):
    """Inverse of :func:`index_of`: returns (j, parity)."""
    if index == 0:
        return 0, "cos"
    j = (index + 1) // 2
    return j, ("cos" if index % 2 else "sin")


@dataclass
class HarmonicCoefficients:
    m: int
    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (2 * self.m + 1,):
            raise ValueError(f"expected {2 * self.m + 1} coefficients, got shape {self.c.shape}")
        if not np.all(np.isfinite(self.c)):
            raise ValueError("coefficients must be finite")

    @classmethod
    def zeros(cls, m):
        return cls(m, np.zeros(2 * m + 1))

    @classmethod
    def unit(cls, m, j, parity):
        c = np.zeros(2 * m + 1)
        c[index_of(j, parity)] = 1.0
        return cls(m, c)

    def rotated_z(self, gamma):
        """Coefficients of x -> phi(R_z(-gamma) x), a rotation about the pole by gamma."""
        c = self.c.copy()
        j = np.arange(1, self.m + 1)
        a, b = self.c[1::2], self.c[2::2]
        cg, sg = np.cos(j * gamma), np.sin(j * gamma)
        c[1::2] = a * cg - b * sg
        c[2::2] = a * sg + b * cg
        return HarmonicCoefficients(self.m, c)


def sample_coefficients(m, seed):
    """Draw 2m+1 iid N(0, 1/(2m+1)) coefficients from ``seed``."""
    if m < 1:
        raise ValueError("degree must be at least 1")
    rng = as_seed(seed).generator()
    return HarmonicCoefficients(m, rng.standard_normal(2 * m + 1) / math.sqrt(2 * m + 1))


def sample_coefficient_matrix(m, seed, n):
    """(n, 2m+1) array; row i is ``sample_coefficients(m, seed.child(i)).c``."""
    seed = as_seed(seed)
    return np.stack([sample_coefficients(m, seed.child(i)).c for i in range(n)])


def basis_from_angles(m, theta, alpha):
    """Values of all 2m+1 basis functions; shape ``theta.shape + (2m+1,)``."""
    theta = np.asarray(theta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    pbar = assoc_legendre_orders(m, np.cos(theta))
    pbar = np.moveaxis(pbar, 0, -1)
    out = np.empty(theta.shape + (2 * m + 1,))
    out[..., 0] = pbar[..., 0] * _INV_SQRT_2PI
    if m:
        ja = alpha[..., None] * np.arange(1, m + 1)
        out[..., 1::2] = pbar[..., 1:] * np.cos(ja) * _INV_SQRT_PI
        out[..., 2::2] = pbar[..., 1:] * np.sin(ja) * _INV_SQRT_PI
    return out


def basis_matrix(m, points):
    """(n_points, 2m+1) matrix of basis values at the given points."""
    theta, alpha = to_angles(as_vectors(points))
    return basis_from_angles(m, theta, alpha)


def evaluate_field(coeffs, points):
    """phi(x) = sum_{j,T} c_{j,T} phi_{j,T}(x).

    ``points`` may be a :class:`~sphcap.geometry.Direction`, a 3-vector or
    an (n, 3) array. A single Direction returns a float.
    """
    vals = basis_matrix(coeffs.m, points) @ coeffs.c
    if vals.size == 1 and not (isinstance(points, np.ndarray) and points.ndim == 2):
        return float(vals[0])
    return vals


def kernel(m, x, y):
    """Reproducing kernel (2m+1)/(4 pi) P_m(x . y)."""
    xv, yv = as_vectors(x), as_vectors(y)
    dot = np.clip(np.sum(xv * yv, axis=-1), -1.0, 1.0)
    val = (2 * m + 1) / (4.0 * math.pi) * legendre(m, dot)
    return float(val[0]) if np.size(val) == 1 else val
