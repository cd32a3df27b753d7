"""Global discrepancy D(r, m) = sup_z |X_z - 1/(4 pi)| over covering nets.

Cap averages over a whole net are computed from one field evaluation per
replicate. Since phi^2 is band-limited to degree 2m, averaging it over
caps of radius r is a zonal convolution: the degree-l part of phi^2 is
multiplied by ``2 pi int_{cos r}^1 P_l(t) dt / vol(B_r)``. Analysis on a
Gauss product grid and synthesis at the net are both exact, so the values
agree with per-cap quadrature (:func:`sphcap.capmass.cap_average`) to
rounding.
"""
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import binomtest, qmc

from .capmass import MCEstimate, MEAN_X
from .ensemble import basis_matrix, sample_coefficients
from .geometry import cap_volume, from_angles, gauss_legendre, geodesic_distance, sample_cap, to_angles
from .rng import as_seed
from .specfun import assoc_legendre_degrees, assoc_legendre_orders, legendre_table

FIBONACCI_DENSITY = 14.0
# ring spacing is sqrt(2) * delta shrunk by this margin
_RING_MARGIN = 0.98
_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(eq=False)
class SphereNet:
    """A finite point set intended to cover S^2 within geodesic distance ``delta``.

    ``construction`` is ``"fibonacci"`` or ``"rings"``. Ring nets are
    products of colatitude rings and equally spaced longitudes, stored as
    ``ring_theta`` and ``n_alpha``; points run longitude-fastest.
    """

    points: np.ndarray
    delta: float
    construction: str
    ring_theta: np.ndarray = None
    n_alpha: int = 0

    def __len__(self):
        return len(self.points)

    @property
    def key(self):
        return (self.construction, float(self.delta), len(self.points))

    def covering_radius(self, n_probe=100_000):
        """Largest distance from a Sobol probe direction to its nearest net point."""
        return probe_covering_radius(self.points, n_probe)


def fibonacci_net(delta):
    n = max(2, int(math.ceil(FIBONACCI_DENSITY / delta ** 2)))
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    alpha = np.mod(2.0 * math.pi * i / _GOLDEN, 2.0 * math.pi)
    return SphereNet(from_angles(np.arccos(z), alpha), float(delta), "fibonacci")


def ring_net(delta):
    step = math.sqrt(2.0) * delta * _RING_MARGIN
    n_ring = max(1, int(math.ceil(math.pi / step)))
    n_alpha = max(3, int(math.ceil(2.0 * math.pi / step)))
    theta = (np.arange(n_ring) + 0.5) * math.pi / n_ring
    alpha = 2.0 * math.pi * np.arange(n_alpha) / n_alpha
    tt, aa = np.meshgrid(theta, alpha, indexing="ij")
    pts = from_angles(tt.ravel(), aa.ravel())
    return SphereNet(pts, float(delta), "rings", theta, n_alpha)


def build_net(delta, construction="fibonacci"):
    """Deterministic delta-covering net.

    ``fibonacci``: ``ceil(14 / delta^2)`` Fibonacci-lattice points.
    ``rings``: about ``pi^2 / delta^2`` points on colatitude rings; this is
    the layout the fast discrepancy path needs.
    """
    if not 0.0 < delta <= math.pi:
        raise ValueError("delta must lie in (0, pi]")
    if construction == "fibonacci":
        return fibonacci_net(delta)
    if construction == "rings":
        return ring_net(delta)
    raise ValueError(f"unknown net construction {construction!r}")


def probe_covering_radius(points, n_probe=100_000):
    sob = qmc.Sobol(d=2, scramble=False).random_base2(int(math.ceil(math.log2(n_probe))))[:n_probe]
    # skip the Sobol origin; map the square to the sphere area-preservingly
    sob = sob[1:]
    probes = from_angles(np.arccos(1.0 - 2.0 * sob[:, 0]), 2.0 * math.pi * sob[:, 1])
    tree = cKDTree(points)
    chord, _ = tree.query(probes)
    return float(2.0 * np.arcsin(np.clip(chord.max() / 2.0, 0.0, 1.0)))


def cap_multipliers(lmax, r):
    """Funk-Hecke multipliers of the cap indicator divided by vol(B_r).

    ``2 pi int_{cos r}^1 P_l(t) dt / vol(B_r)`` for l = 0..lmax.
    """
    x0 = math.cos(r)
    p = legendre_table(lmax + 1, x0)
    out = np.empty(lmax + 1)
    out[0] = 2.0 * math.sin(0.5 * r) ** 2
    l = np.arange(1, lmax + 1)
    out[1:] = (p[l - 1] - p[l + 1]) / (2 * l + 1)
    return 2.0 * math.pi * out / cap_volume(r)


class _FieldGrid:
    """Gauss product grid exact for degree-4m integrands, with phi^2 analysis."""

    def __init__(self, m):
        self.m = m
        self.L = 2 * m
        self.x, self.w = gauss_legendre(2 * m + 1)
        self.n_alpha = 4 * m + 2
        alpha = 2.0 * math.pi * np.arange(self.n_alpha) / self.n_alpha
        self.pbar = assoc_legendre_orders(m, self.x).T  # (n_theta, m+1)
        j = np.arange(m + 1)
        self.cos_j = np.cos(np.outer(j, alpha))
        self.sin_j = np.sin(np.outer(j[1:], alpha))
        k = np.arange(self.L + 1)
        scale = np.full(self.L + 1, 2.0 / self.n_alpha)
        scale[0] = 1.0 / self.n_alpha
        self.ana_cos = (np.cos(np.outer(alpha, k)) * scale)
        self.ana_sin = (np.sin(np.outer(alpha, k)) * scale)

    def field(self, c):
        a = np.empty(self.m + 1)
        a[0] = c[0] / math.sqrt(2.0 * math.pi)
        a[1:] = c[1::2] / math.sqrt(math.pi)
        b = c[2::2] / math.sqrt(math.pi)
        return (self.pbar * a) @ self.cos_j + (self.pbar[:, 1:] * b) @ self.sin_j

    def square_modes(self, c):
        """Fourier modes A_k(x_i), B_k(x_i) of phi^2 on each Gauss ring, times w_i."""
        g = self.field(c) ** 2
        return (g @ self.ana_cos) * self.w[:, None], (g @ self.ana_sin) * self.w[:, None]


@lru_cache(maxsize=8)
def _field_grid(m):
    return _FieldGrid(m)


class CapAverager:
    """Exact cap averages X_z for all points of a ring net, reusable across fields."""

    def __init__(self, m, r, net):
        if net.construction != "rings":
            raise ValueError("CapAverager needs a ring net")
        self.m, self.r, self.net = m, r, net
        grid = _field_grid(m)
        L = grid.L
        mult = cap_multipliers(L, r)
        x_out = np.cos(net.ring_theta)
        self.ops = np.empty((L + 1, x_out.size, grid.x.size))
        for k in range(L + 1):
            p_out = assoc_legendre_degrees(k, L, x_out)
            p_in = assoc_legendre_degrees(k, L, grid.x)
            self.ops[k] = (p_out * mult[k:, None]).T @ p_in
        alpha = 2.0 * math.pi * np.arange(net.n_alpha) / net.n_alpha
        kk = np.arange(L + 1)
        self.syn_cos = np.cos(np.outer(kk, alpha))
        self.syn_sin = np.sin(np.outer(kk, alpha))
        self.grid = grid

    def averages(self, coeffs):
        """(n_ring, n_alpha) array of X_z on the net."""
        c = coeffs.c if hasattr(coeffs, "c") else np.asarray(coeffs, dtype=float)
        a, b = self.grid.square_modes(c)
        ck = np.matmul(self.ops, a.T[:, :, None])[:, :, 0]
        sk = np.matmul(self.ops, b.T[:, :, None])[:, :, 0]
        return ck.T @ self.syn_cos + sk.T @ self.syn_sin


@lru_cache(maxsize=4)
def _cap_averager(m, r, delta):
    return CapAverager(m, r, ring_net(delta))


def _averager_for(m, r, net):
    if net.construction == "rings":
        cached = _cap_averager(m, r, net.delta)
        if len(cached.net) == len(net):
            return cached
        return CapAverager(m, r, net)
    return None


def cap_averages_scattered(coeffs, r, points, chunk=20000):
    """X_z at arbitrary points via the degree-2m expansion of phi^2 (slow path)."""
    m = coeffs.m
    grid = _field_grid(m)
    L = grid.L
    a, b = grid.square_modes(coeffs.c)
    mult = cap_multipliers(L, r)
    theta, alpha = to_angles(points)
    x = np.cos(theta)
    out = np.zeros(len(x))
    for k in range(L + 1):
        p_in = assoc_legendre_degrees(k, L, grid.x)
        qa = mult[k:] * (p_in @ a[:, k])
        qb = mult[k:] * (p_in @ b[:, k])
        for s in range(0, len(x), chunk):
            p_out = assoc_legendre_degrees(k, L, x[s:s + chunk])
            ca, sa = np.cos(k * alpha[s:s + chunk]), np.sin(k * alpha[s:s + chunk])
            out[s:s + chunk] += (qa @ p_out) * ca + (qb @ p_out) * sa
    return out


def cap_averages_on_net(coeffs, r, net):
    """X_z for every net point, flattened in net order."""
    avg = _averager_for(coeffs.m, r, net)
    if avg is not None:
        return avg.averages(coeffs).ravel()
    return cap_averages_scattered(coeffs, r, net.points)


def discrepancy_estimate(coeffs, r, net):
    """max over net points of |X_z - 1/(4 pi)| and the maximizing direction."""
    if net.delta > 1.0 / coeffs.m * (1 + 1e-12):
        warnings.warn(f"net delta {net.delta:g} exceeds 1/m = {1.0 / coeffs.m:g}", stacklevel=2)
    dev = np.abs(cap_averages_on_net(coeffs, r, net) - MEAN_X)
    i = int(np.argmax(dev))
    return float(dev[i]), net.points[i].copy()


class _RingField:
    def __init__(self, m, net):
        self.size = len(net)
        self.pbar = assoc_legendre_orders(m, np.cos(net.ring_theta)).T
        alpha = 2.0 * math.pi * np.arange(net.n_alpha) / net.n_alpha
        j = np.arange(m + 1)
        self.cos_j = np.cos(np.outer(j, alpha))
        self.sin_j = np.sin(np.outer(j[1:], alpha))

    def field(self, c):
        a = np.empty(self.pbar.shape[1])
        a[0] = c[0] / math.sqrt(2.0 * math.pi)
        a[1:] = c[1::2] / math.sqrt(math.pi)
        b = c[2::2] / math.sqrt(math.pi)
        return (self.pbar * a) @ self.cos_j + (self.pbar[:, 1:] * b) @ self.sin_j


@lru_cache(maxsize=4)
def _ring_field(m, delta):
    return _RingField(m, ring_net(delta))


def field_on_net(coeffs, net, chunk=20000):
    if net.construction == "rings":
        rf = _ring_field(coeffs.m, net.delta)
        if rf.size != len(net):
            rf = _RingField(coeffs.m, net)
        return rf.field(coeffs.c).ravel()
    out = np.empty(len(net))
    for s in range(0, len(net), chunk):
        out[s:s + chunk] = basis_matrix(coeffs.m, net.points[s:s + chunk]) @ coeffs.c
    return out


def sup_norm_estimate(coeffs, net):
    """max |phi| over the net (a lower bound on the true sup norm)."""
    if net.delta > 1.0 / (2 * coeffs.m) * (1 + 1e-12):
        warnings.warn("net is coarser than 1/(2m); sup norm may be badly underestimated", stacklevel=2)
    return float(np.max(np.abs(field_on_net(coeffs, net))))


def symmetric_difference_fraction(r, delta, n=1_000_000, seed=0):
    """vol(B_r(z) sym-diff B_r(z')) / vol(B_r) for centres at distance delta.

    Points are drawn uniformly from B_r(z); by symmetry the symmetric
    difference is twice the part of B_r(z) outside B_r(z').
    """
    if not 0.0 <= delta <= 2.0 * r:
        raise ValueError("need 0 <= delta <= 2 r")
    if delta == 0.0:
        return MCEstimate(0.0, 0.0, n)
    rng = as_seed(seed).generator()
    pts = sample_cap(n, r, rng)
    z2 = np.array([math.sin(delta), 0.0, math.cos(delta)])
    outside = geodesic_distance(pts, z2) > r
    p = float(outside.mean())
    return MCEstimate(2.0 * p, 2.0 * math.sqrt(p * (1.0 - p) / n), n)


# ------------------------------------------------------------ experiments

@dataclass
class ReplicateResult:
    replicate: int
    D: float
    supnorm2: float
    argmax_theta: float
    argmax_alpha: float


@dataclass
class DiscrepancyRun:
    m: int
    r: float
    delta: float
    seed: object
    results: list = field(default_factory=list)
    epsilon: float = float("nan")

    CSV_FIELDS = ("replicate", "m", "r", "delta", "D", "supnorm2", "argmax_theta", "argmax_alpha")

    @property
    def replicates(self):
        return len(self.results)

    @property
    def D(self):
        return np.array([res.D for res in self.results])

    def csv_rows(self):
        return [[res.replicate, self.m, self.r, self.delta, res.D, res.supnorm2, res.argmax_theta, res.argmax_alpha]
                for res in self.results]

    def tail_probability(self, epsilon, confidence=0.95):
        """Empirical P{D > epsilon} with a Wilson interval."""
        k = int(np.sum(self.D > epsilon))
        n = self.replicates
        ci = binomtest(k, n).proportion_ci(confidence, method="wilson")
        return k / n, (float(ci.low), float(ci.high))


def _run_block(args):
    m, r, delta, seed, indices = args
    seed = as_seed(seed)
    avg = _cap_averager(m, r, delta)
    sup_delta = 0.5 * delta
    out = []
    for i in indices:
        coeffs = sample_coefficients(m, seed.child(i))
        dev = np.abs(avg.averages(coeffs).ravel() - MEAN_X)
        k = int(np.argmax(dev))
        th, al = to_angles(avg.net.points[k])
        phi = _ring_field(m, sup_delta).field(coeffs.c)
        out.append(ReplicateResult(int(i), float(dev[k]), float(np.max(phi * phi)), float(th), float(al)))
    return out


def run_discrepancy(m, r, replicates, seed, delta=None, workers=1):
    """Per-replicate D(r, m) on a ring net of spacing delta (default 1/m).

    Replicate i always uses ``seed.child(i)``, and results are stored by
    replicate index, so the output does not depend on ``workers``.
    The sup norm is taken on the net refined by a factor of 2.
    """
    seed = as_seed(seed)
    delta = 1.0 / m if delta is None else float(delta)
    blocks = [list(range(s, min(replicates, s + 25))) for s in range(0, replicates, 25)]
    tasks = [(m, r, delta, seed, b) for b in blocks]
    if workers <= 1:
        chunks = [_run_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_block, tasks))
    results = sorted((res for ch in chunks for res in ch), key=lambda res: res.replicate)
    return DiscrepancyRun(m, r, delta, seed, results)


def tail_probability_experiment(m, r, epsilon, replicates, seed, delta=None, workers=1):
    """Empirical P{D(r, m) > epsilon}: returns (p_hat, (ci_lo, ci_hi), run)."""
    if replicates < 50:
        raise ValueError("need at least 50 replicates")
    run = run_discrepancy(m, r, replicates, seed, delta, workers)
    run.epsilon = float(epsilon)
    p_hat, ci = run.tail_probability(epsilon)
    return p_hat, ci, run
