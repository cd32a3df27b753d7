"""The cap-mass random variable X_z and its diagonalization.

For a cap B_r(z) and a random degree-m harmonic phi,

    X_z = (1 / vol(B_r)) * int_{B_r(z)} phi^2

is a quadratic form in the 2m+1 Gaussian coefficients. In the
ultraspherical basis centred at z the form is diagonal:
``X = sum_k lam_k g_k^2`` with iid standard normal ``g_k``. The weights
(the *lambda spectrum*) use the same ordering as coefficient vectors:
index 0 is order j=0, indices 2j-1 and 2j are the cos/sin pair of order j.
"""
import math
from dataclasses import dataclass

import numpy as np

from .ensemble import basis_matrix, basis_from_angles
from .geometry import FOUR_PI, Direction, NORTH, cap_gauss_nodes, cap_volume, rotation_to, sample_cap
from .rng import as_seed
from .specfun import assoc_legendre_orders, bessel_moments, legendre

MEAN_X = 1.0 / FOUR_PI


class RegimeError(ValueError):
    """A parameter combination lies outside the regime where a formula applies."""


@dataclass(frozen=True)
class CapSpec:
    m: int
    r: float
    z: Direction = NORTH

    def __post_init__(self):
        if not 0.0 < self.r <= math.pi:
            raise ValueError("cap radius must lie in (0, pi]")
        if self.m < 1:
            raise ValueError("degree must be at least 1")

    @property
    def volume(self):
        return cap_volume(self.r)


@dataclass
class LambdaSpectrum:
    m: int
    r: float
    lam: np.ndarray
    method: str = "quadrature"

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if self.lam.shape != (2 * self.m + 1,):
            raise ValueError("spectrum must have 2m+1 entries")

    @property
    def by_order(self):
        """Weights indexed by order j = 0..m (one per cos/sin pair)."""
        return self.lam[np.r_[0, 1:2 * self.m + 1:2]]

    def rows(self):
        """(k, j, parity, lambda) tuples in storage order."""
        out = []
        for k, v in enumerate(self.lam):
            j = (k + 1) // 2
            parity = "cos" if k == 0 or k % 2 else "sin"
            out.append((k, j, parity, float(v)))
        return out


def _expand_pairs(per_order):
    m = len(per_order) - 1
    lam = np.empty(2 * m + 1)
    lam[0] = per_order[0]
    lam[1::2] = per_order[1:]
    lam[2::2] = per_order[1:]
    return lam


def lambda_quadrature(m, r):
    """Exact spectrum by Gauss-Legendre quadrature over the cap.

    ``Pbar_m^j(x)^2`` is a polynomial of degree 2m in x, so m+1 nodes on
    ``[cos r, 1]`` integrate it exactly; the full-sphere integral of the
    fully normalized function is 1.
    """
    if m < 1:
        raise ValueError("degree must be at least 1")
    vol = cap_volume(r)
    x, w = cap_gauss_nodes(m + 1, r)
    pbar = assoc_legendre_orders(m, x)
    per_order = (pbar ** 2) @ w
    return LambdaSpectrum(m, r, _expand_pairs(per_order / ((2 * m + 1) * vol)), "quadrature")


def lambda_bessel(m, r):
    """Spectrum from Hilb's approximation and the closed-form Bessel moment.

    ``lam_j ~ M_j((m+1/2) r) / M_j((m+1/2) pi) / ((2m+1) vol(B_r))`` with
    ``M_j(t) = int_0^t x J_j(x)^2 dx``.
    """
    if r * m < 5:
        raise RegimeError(f"Bessel approximation needs r*m >= 5 (got {r * m:g})")
    n = m + 0.5
    num = bessel_moments(m, n * r)
    den = bessel_moments(m, n * math.pi)
    per_order = num / den / ((2 * m + 1) * cap_volume(r))
    return LambdaSpectrum(m, r, _expand_pairs(per_order), "bessel")


def lambda_asymptotic_branch(m, r, k, p=0.5):
    """Which asymptotic regime order k falls in: ellipse, transition or tail."""
    t = r * m
    kp = k ** p if k > 0 else 0.0
    if k + kp < t:
        return "ellipse"
    if k - kp > t:
        return "tail"
    return "transition"


def lambda_asymptotic(m, r, k, eta=0.05, c=2.0 / 3.0, p=0.5):
    """Closed-form size of the order-k weight.

    ellipse:     (1 / (2 pi^2)) sqrt(1 - (k / rm)^2) / (rm)
    transition:  (rm)^(-4/3 + eta)         (a bound, not an estimate)
    tail:        exp(-c k^((3p-1)/2)) / (rm)^2   (a bound)
    """
    t = r * m
    branch = lambda_asymptotic_branch(m, r, k, p)
    if branch == "ellipse":
        u = k / t
        return math.sqrt(max(0.0, 1.0 - u * u)) / (2.0 * math.pi ** 2 * t)
    if branch == "transition":
        return t ** (-4.0 / 3.0 + eta)
    return math.exp(-c * k ** ((3 * p - 1) / 2.0)) / t ** 2


def lambda_asymptotic_spectrum(m, r, **kw):
    per_order = np.array([lambda_asymptotic(m, r, k, **kw) for k in range(m + 1)])
    return LambdaSpectrum(m, r, _expand_pairs(per_order), "asymptotic")


def _weights(lam):
    return lam.lam if isinstance(lam, LambdaSpectrum) else np.asarray(lam, dtype=float)


def variance_from_spectrum(lam):
    """var X = 2 sum lam_k^2."""
    w = _weights(lam)
    return 2.0 * float(np.dot(w, w))


def trace_power(lam, p):
    """tr(A^p) = sum lam_k^p."""
    if p < 1:
        raise ValueError("power must be >= 1")
    return float(np.sum(_weights(lam) ** p))


def variance_asymptotic(rm):
    """Leading-order variance (2 / (3 pi^4)) / (rm)."""
    return 2.0 / (3.0 * math.pi ** 4) / rm


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n: int


def covariance_mc(m, r, z, z2, n, seed):
    """Monte Carlo estimate of Cov[X_z, X_z'] from the kernel formula.

    ``Cov = 2 / (4 pi)^2 * E[P_m(x . x')^2]`` with x uniform in B_r(z) and
    x' uniform in B_r(z'), independently.
    """
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    rng = as_seed(seed).generator()
    x = sample_cap(n, r, rng, z)
    y = sample_cap(n, r, rng, z2)
    vals = 2.0 / FOUR_PI ** 2 * legendre(m, np.clip(np.sum(x * y, axis=1), -1.0, 1.0)) ** 2
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), n)


def metric_squared(m, r, z, z2, n, seed):
    """d(z, z')^2 = E[(X_z - X_z')^2] = 2 (var - cov), estimated as a V-statistic.

    With empirical cap measures mu, mu' of n points each, the estimate is
    ``2/(4 pi)^2 * sum K (mu - mu') x (mu - mu')`` for the positive definite
    kernel ``K(x, y) = P_m(x . y)^2``, so it is never negative (up to rounding).
    Cost is O(n^2 m).
    """
    rng = as_seed(seed).generator()
    u = sample_cap(n, r, rng)
    x = u @ rotation_to(z).T
    y = u @ rotation_to(z2).T

    def mean_k(a, b):
        total = 0.0
        for start in range(0, n, 256):
            d = np.clip(a[start:start + 256] @ b.T, -1.0, 1.0)
            total += float(np.sum(legendre(m, d) ** 2))
        return total / (n * n)

    val = mean_k(x, x) + mean_k(y, y) - 2.0 * mean_k(x, y)
    return 2.0 / FOUR_PI ** 2 * val


def sample_x(lam, seed, size=None, chunk=20000):
    """Draw X = sum lam_k g_k^2 directly from the spectrum.

    Each cos/sin pair with equal weight is drawn as ``lam * chi^2_2``
    (an exponential with mean 2); unpaired weights use squared normals.
    Returns a float when ``size`` is None.
    """
    w = _weights(lam)
    rng = as_seed(seed).generator()
    n = 1 if size is None else int(size)
    if isinstance(lam, LambdaSpectrum):
        single = w[:1]
        paired = w[1::2]
    else:
        single, paired = w, w[:0]
    out = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        k = stop - start
        val = (rng.standard_normal((k, single.size)) ** 2) @ single
        if paired.size:
            val += (2.0 * rng.standard_exponential((k, paired.size))) @ paired
        out[start:stop] = val
    return float(out[0]) if size is None else out


class CapQuadrature:
    """Product rule for integrals over one cap, reusable across fields.

    Colatitude uses Gauss-Legendre in cos(theta) on [cos r, 1] with m+1
    nodes; longitude uses 2m+2 equispaced nodes. Both are exact for the
    degree-2m integrand phi^2, so ``average`` returns X_z to rounding.
    """

    def __init__(self, cap):
        self.cap = cap
        m = cap.m
        x, w = cap_gauss_nodes(m + 1, cap.r)
        n_alpha = 2 * m + 2
        alpha = 2.0 * math.pi * np.arange(n_alpha) / n_alpha
        theta = np.arccos(x)
        tt, aa = np.meshgrid(theta, alpha, indexing="ij")
        local = np.stack([np.sin(tt) * np.cos(aa), np.sin(tt) * np.sin(aa), np.cos(tt)], axis=-1).reshape(-1, 3)
        self.nodes = local @ rotation_to(cap.z).T
        self.weights = np.repeat(w, n_alpha) * (2.0 * math.pi / n_alpha)
        if cap.z.theta == 0.0 and cap.z.alpha == 0.0:
            self.basis = basis_from_angles(m, tt.ravel(), aa.ravel())
        else:
            self.basis = basis_matrix(m, self.nodes)

    def average(self, coeffs):
        """X_z for one coefficient vector, or a row per vector for an (n, 2m+1) array."""
        c = coeffs.c if hasattr(coeffs, "c") else np.asarray(coeffs, dtype=float)
        vals = self.basis @ c.T
        return (self.weights @ vals ** 2) / self.cap.volume


def cap_average(coeffs, cap):
    """X_z = (1 / vol B_r) int_{B_r(z)} phi^2 by exact product quadrature."""
    if coeffs.m != cap.m:
        raise ValueError("coefficient degree does not match the cap spec")
    return float(CapQuadrature(cap).average(coeffs))


def cap_average_batch(coeff_matrix, cap, chunk=1000):
    """Cap averages for many fields sharing one cap (rows of ``coeff_matrix``)."""
    q = CapQuadrature(cap)
    coeff_matrix = np.asarray(coeff_matrix, dtype=float)
    out = np.empty(coeff_matrix.shape[0])
    for s in range(0, coeff_matrix.shape[0], chunk):
        out[s:s + chunk] = q.average(coeff_matrix[s:s + chunk])
    return out


def triple_trace_mc(m, r, n, seed, chunk=200000):
    """Monte Carlo of the cyclic integral for tr(A^3).

    ``(4 pi)^-3 E[P(x1.x2) P(x2.x3) P(x3.x1)]`` with x_i uniform in one cap.
    """
    rng = as_seed(seed).generator()
    vals = np.empty(n)
    for s in range(0, n, chunk):
        k = min(chunk, n - s)
        x1, x2, x3 = (sample_cap(k, r, rng) for _ in range(3))

        def pm(a, b):
            return legendre(m, np.clip(np.sum(a * b, axis=1), -1.0, 1.0))

        vals[s:s + k] = pm(x1, x2) * pm(x2, x3) * pm(x3, x1)
    vals /= FOUR_PI ** 3
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), n)
