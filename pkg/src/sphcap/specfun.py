"""Special functions: Legendre, normalized associated Legendre, Bessel J.

Conventions
-----------
``legendre(m, x)`` is the classical Legendre polynomial with ``P_m(1) = 1``.

The associated functions are *fully normalized* on ``[-1, 1]``::

    int_{-1}^{1} Pbar_m^j(x)**2 dx = 1

with no Condon-Shortley phase, so ``Pbar_m^m(cos t) > 0`` for ``0 < t < pi``.
The real spherical harmonics used throughout the package are then::

    phi_{0}      = Pbar_m^0(cos t) / sqrt(2 pi)
    phi_{j,cos}  = Pbar_m^j(cos t) cos(j a) / sqrt(pi)
    phi_{j,sin}  = Pbar_m^j(cos t) sin(j a) / sqrt(pi)

which is an orthonormal basis of degree-m harmonics on the unit sphere.
"""
import math

import numpy as np

_BIG = 1e150
_SMALL = 1e-150
# sin(theta) below this is treated as an exact pole
_POLE_EPS = 1e-100


def _check_unit_interval(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument must satisfy |x| <= 1")
    return x


def legendre(m, x):
    """Legendre polynomial P_m(x) via the three-term recurrence.

    Accepts scalar or array ``x``; returns the same shape.
    """
    if m < 0:
        raise ValueError("degree m must be nonnegative")
    x = _check_unit_interval(x)
    p_prev = np.ones_like(x)
    if m == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for n in range(1, m):
        p_prev, p = p, ((2 * n + 1) * x * p - n * p_prev) / (n + 1)
    return p if p.ndim else float(p)


def legendre_table(m, x):
    """All P_0(x), ..., P_m(x); shape ``(m + 1,) + x.shape``."""
    x = _check_unit_interval(x)
    out = np.empty((m + 1,) + x.shape)
    out[0] = 1.0
    if m >= 1:
        out[1] = x
    for n in range(1, m):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def assoc_legendre_orders(m, x):
    """Fully normalized Pbar_m^j(x) for every order j = 0..m.

    Uses the downward recurrence in the order j, started from ``j = m``
    with an arbitrary positive value. The minimal solution of the order
    recurrence is exactly the associated Legendre function, so the
    downward sweep is stable. The overall scale comes from the addition
    theorem identity::

        Pbar_m^0(x)**2 + 2 * sum_{j>=1} Pbar_m^j(x)**2 = (2m + 1) / 2

    No factorials are formed, so the routine works for m in the tens of
    thousands. Cost is O(m) per point.

    Parameters
    ----------
    m : int
        Degree.
    x : array_like
        Points in [-1, 1] (``x = cos(theta)``).

    Returns
    -------
    ndarray, shape ``(m + 1,) + x.shape``
    """
    if m < 0:
        raise ValueError("degree m must be nonnegative")
    x = _check_unit_interval(x)
    shape = x.shape
    x = x.ravel()
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pole = s < _POLE_EPS
    out = np.zeros((m + 1, x.size))

    # exact pole values: only the zonal function survives
    if np.any(pole):
        out[0, pole] = math.sqrt((2 * m + 1) / 2.0) * np.where(x[pole] > 0, 1.0, (-1.0) ** m)
    ok = ~pole
    if m == 0 or not np.any(ok):
        if m == 0:
            out[0, ok] = math.sqrt(0.5)
        return out.reshape((m + 1,) + shape)

    xs = x[ok]
    cot = xs / s[ok]
    vals = np.zeros((m + 1, xs.size))
    nxt = np.zeros(xs.size)
    cur = np.ones(xs.size)
    vals[m] = cur
    for j in range(m, 0, -1):
        a = math.sqrt((m + j + 1) * (m - j))
        b = math.sqrt((m + j) * (m - j + 1))
        new = (2.0 * j * cot * cur - a * nxt) / b
        vals[j - 1] = new
        nxt, cur = cur, new
        big = np.abs(cur) > _BIG
        if np.any(big):
            cur[big] *= _SMALL
            nxt[big] *= _SMALL
            vals[j - 1:, big] *= _SMALL
    norm = vals[0] ** 2 + 2.0 * np.sum(vals[1:] ** 2, axis=0)
    vals *= np.sqrt((2 * m + 1) / 2.0 / norm)
    out[:, ok] = vals
    return out.reshape((m + 1,) + shape)


def assoc_legendre_degrees(k, lmax, x):
    """Fully normalized Pbar_l^k(x) for l = k..lmax at fixed order k.

    Standard upward recurrence in the degree. The sectoral seed
    ``Pbar_k^k`` is carried as a mantissa plus a log-scale so that
    ``sin(theta)**k`` never underflows before the recurrence has had a
    chance to grow it back.

    Returns
    -------
    ndarray, shape ``(lmax - k + 1,) + x.shape``; row ``i`` is degree ``k + i``.
    """
    if not 0 <= k <= lmax:
        raise ValueError("need 0 <= k <= lmax")
    x = _check_unit_interval(x)
    shape = x.shape
    x = x.ravel()
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    # log of the sectoral normalization constant
    log_c = 0.5 * math.log(0.5) + 0.5 * sum(math.log((2 * i + 1) / (2.0 * i)) for i in range(1, k + 1))
    with np.errstate(divide="ignore"):
        log_seed = log_c + k * np.log(s) if k else np.full(x.size, log_c)
    out = np.zeros((lmax - k + 1, x.size))
    live = np.isfinite(log_seed)
    if not np.any(live):
        return out.reshape((lmax - k + 1,) + shape)
    xl = x[live]
    logscale = log_seed[live].copy()
    vals = np.zeros((lmax - k + 1, xl.size))
    prev = np.zeros(xl.size)
    cur = np.ones(xl.size)
    vals[0] = cur
    for i, l in enumerate(range(k, lmax)):
        # degree l -> l + 1
        a = math.sqrt((2 * l + 1) * (2 * l + 3) / ((l + 1 - k) * (l + 1 + k)))
        b = math.sqrt((2 * l + 3) * (l - k) * (l + k) / ((2 * l - 1) * (l + 1 - k) * (l + 1 + k))) if l > k else 0.0
        new = a * xl * cur - b * prev
        vals[i + 1] = new
        prev, cur = cur, new
        big = np.abs(cur) > _BIG
        if np.any(big):
            cur[big] *= _SMALL
            prev[big] *= _SMALL
            vals[: i + 2, big] *= _SMALL
            logscale[big] += math.log(_BIG)
    with np.errstate(under="ignore"):
        vals *= np.exp(logscale)
    out[:, live] = vals
    return out.reshape((lmax - k + 1,) + shape)


def normalized_basis_value(m, j, parity, theta, alpha):
    """The orthonormal real harmonic phi_{j,T}(theta, alpha).

    ``parity`` is ``"cos"`` or ``"sin"``; ``(0, "sin")`` is rejected since
    that combination vanishes identically.
    """
    if not 0 <= j <= m:
        raise ValueError("order must satisfy 0 <= j <= m")
    if parity not in ("cos", "sin"):
        raise ValueError("parity must be 'cos' or 'sin'")
    if j == 0 and parity == "sin":
        raise ValueError("(j=0, sin) is not a basis function")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > math.pi)):
        raise ValueError("colatitude must lie in [0, pi]")
    pbar = assoc_legendre_orders(m, np.cos(theta))[j]
    if j == 0:
        val = pbar / math.sqrt(2 * math.pi)
    else:
        trig = np.cos if parity == "cos" else np.sin
        val = pbar * trig(j * np.asarray(alpha, dtype=float)) / math.sqrt(math.pi)
    return val if np.ndim(val) else float(val)


# the name used by the rest of the package
assoc_legendre_norm = normalized_basis_value


# ---------------------------------------------------------------- Bessel J

def _series_j(k, x):
    """Power series; used for x <= max(8, k/4)."""
    if x == 0.0:
        return 1.0 if k == 0 else 0.0
    log_pref = k * math.log(x / 2.0) - math.lgamma(k + 1)
    if log_pref < -745.0:
        return 0.0
    q = -(x * x) / 4.0
    term = 1.0
    total = 1.0
    s = 0
    while True:
        s += 1
        term *= q / (s * (k + s))
        total += term
        if abs(term) < 1e-17 * abs(total) and s > 2:
            break
    return math.exp(log_pref) * total


def _hankel_ok(k, x):
    return x >= 50.0 and x >= 2.0 * k * k


def _hankel_j(k, x):
    """Large-argument Hankel expansion, only used when x >= max(50, 2 k^2)."""
    mu = 4.0 * k * k
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    n = 0
    while True:
        n += 1
        term *= (mu - (2 * n - 1) ** 2) / (n * 8.0 * x)
        if abs(term) < 1e-17:
            break
        if n % 2:
            q_sum += term if (n // 2) % 2 == 0 else -term
        else:
            p_sum += -term if (n // 2) % 2 else term
        if n > 60:
            break
    chi = x - (0.5 * k + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def _miller_start(kmax, x):
    n = max(kmax, int(math.ceil(x))) + int(math.ceil(10.0 + 2.0 * math.sqrt(x) + 4.0 * x ** (1.0 / 3.0)))
    return n + (n % 2)


def bessel_j_orders(kmax, x):
    """J_0(x), ..., J_kmax(x) at one argument by Miller's algorithm.

    Downward recurrence from an order safely inside the evanescent region,
    normalized with ``J_0 + 2 * sum J_{2i} = 1``. Intermediate values are
    rescaled to stay finite.
    """
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if kmax < 0:
        raise ValueError("order must be nonnegative")
    out = np.zeros(kmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    n = _miller_start(kmax, x)
    two_over_x = 2.0 / x
    nxt, cur = 0.0, 1e-300
    even_sum = 0.0
    for j in range(n, 0, -1):
        # cur = J_j (unnormalized); produce J_{j-1}
        prv = j * two_over_x * cur - nxt
        nxt, cur = cur, prv
        if j - 1 <= kmax:
            out[j - 1] = cur
        if (j - 1) % 2 == 0 and j - 1 > 0:
            even_sum += cur
        if abs(cur) > 1e250:
            cur *= 1e-250
            nxt *= 1e-250
            even_sum *= 1e-250
            out *= 1e-250
    norm = cur + 2.0 * even_sum
    return out / norm


def bessel_j(k, x):
    """Bessel function of the first kind J_k(x), integer k >= 0, real x >= 0.

    Regimes: power series for ``x <= max(8, k/4)``; Hankel asymptotics for
    ``x >= max(50, 2 k^2)``; Miller downward recurrence otherwise (this
    covers the transition window ``|x - k| ~ k^(1/3)``).
    """
    k = int(k)
    x = float(x)
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if k < 0:
        raise ValueError("order must be nonnegative")
    if x <= max(8.0, k / 4.0):
        return _series_j(k, x)
    if _hankel_ok(k, x):
        return _hankel_j(k, x)
    return float(bessel_j_orders(k, x)[k])


def bessel_moment(k, t):
    """Closed form of int_0^t x J_k(x)^2 dx.

    ``(t^2 / 2) (J_k(t)^2 - J_{k-1}(t) J_{k+1}(t))`` with ``J_{-1} = -J_1``.
    """
    if t < 0:
        raise ValueError("upper limit must be nonnegative")
    if t == 0:
        return 0.0
    if k == 0:
        j0, j1 = bessel_j(0, t), bessel_j(1, t)
        return 0.5 * t * t * (j0 * j0 + j1 * j1)
    jm, jk, jp = (bessel_j(k - 1, t), bessel_j(k, t), bessel_j(k + 1, t))
    # rounding can leave a tiny negative residue deep in the evanescent range
    return max(0.0, 0.5 * t * t * (jk * jk - jm * jp))


def bessel_moments(kmax, t):
    """bessel_moment(k, t) for k = 0..kmax from a single Miller sweep."""
    if t < 0:
        raise ValueError("upper limit must be nonnegative")
    if t == 0:
        return np.zeros(kmax + 1)
    if t <= 8.0 or _hankel_ok(kmax + 1, t):
        return np.array([bessel_moment(k, t) for k in range(kmax + 1)])
    j = bessel_j_orders(kmax + 1, t)
    jm = np.concatenate(([-j[1]], j[:-2]))
    jk = j[:-1]
    jp = j[1:]
    return np.maximum(0.0, 0.5 * t * t * (jk * jk - jm * jp))


def hilb_approx(m, j, theta):
    """Main term of Hilb's approximation for the order-j Legendre function.

    Returns ``c_{m,j} sqrt(theta / sin theta) J_j((m + 1/2) theta)`` where
    ``c_{m,j}`` is chosen so the result approximates
    ``Pbar_m^j(cos theta) / sqrt((2m + 1)/2)``. For ``j = 0`` this is the
    classical ``P_m(cos theta)`` approximation.

    The factor ``h_{j,m}`` of the Jacobi form drops out after L2
    normalization; the constant kept here is
    ``sqrt((m + j)! / (m - j)!) (m + 1/2)^(-j)``.
    The error term of the Jacobi asymptotic is of size
    ``theta^(1/2) (m - j)^(-3/2)`` relative to that scale.
    """
    if not 0 <= j <= m:
        raise ValueError("order must satisfy 0 <= j <= m")
    if not 0.0 <= theta < math.pi:
        raise ValueError("colatitude must lie in [0, pi)")
    n = m + 0.5
    if theta == 0.0:
        return 1.0 if j == 0 else 0.0
    log_c = 0.5 * (math.lgamma(m + j + 1) - math.lgamma(m - j + 1)) - j * math.log(n)
    return math.exp(log_c) * math.sqrt(theta / math.sin(theta)) * bessel_j(j, n * theta)


def bernstein_bound(m, theta):
    """Bernstein's uniform bound (2/pi) / (m sin theta) on P_m(cos theta)^2."""
    if m < 1:
        raise ValueError("degree must be at least 1")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0.0) | (theta >= math.pi)):
        raise ValueError("bound is undefined at the poles")
    s = np.sin(theta)
    val = (2.0 / math.pi) / (m * s)
    return val if np.ndim(val) else float(val)
