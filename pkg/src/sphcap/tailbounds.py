"""Chernoff bounds for nonnegative quadratic forms X = sum lam_j g_j^2.

Works with any nonnegative weight vector (a :class:`LambdaSpectrum` is
accepted too). ``E[X] = sum lam``; the moment generating function is
``prod (1 - 2 s lam_j)^(-1/2)`` for ``s < 1 / (2 max lam)``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .capmass import LambdaSpectrum, RegimeError

APPLICABILITY_LIMIT = 1.0 / 3.0


def _weights(lam):
    w = lam.lam if isinstance(lam, LambdaSpectrum) else np.asarray(lam, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty vector")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative and not all zero")
    return w


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("deviation epsilon must be positive")


def log_mgf(lam, s):
    """log E[exp(s X)] = -1/2 sum log(1 - 2 s lam_j)."""
    w = _weights(lam)
    if s > 0 and 2.0 * s * w.max() >= 1.0:
        raise ValueError(f"s = {s:g} is outside the MGF domain s < {0.5 / w.max():g}")
    return -0.5 * float(np.sum(np.log1p(-2.0 * s * w)))


def mgf(lam, s):
    return math.exp(log_mgf(lam, s))


def power_sums(lam):
    w = _weights(lam)
    return float(w.sum()), float(np.dot(w, w)), float(np.sum(w ** 3))


def applicability(lam, eps):
    """eps * max(lam) / sum(lam^2) < 1/3, the condition under which the
    closed-form upper bound is proved."""
    w = _weights(lam)
    return bool(eps * w.max() / float(np.dot(w, w)) < APPLICABILITY_LIMIT)


def tilt_s1(lam, eps):
    """First-order tilt eps / (2 sum lam^2), shared by both tails."""
    _check_eps(eps)
    _, s2, _ = power_sums(lam)
    return eps / (2.0 * s2)


def tilt_s2(lam, eps, side="upper"):
    """Second-order tilt from truncating the optimality series after two terms."""
    _check_eps(eps)
    _, s2, s3 = power_sums(lam)
    q = 4.0 * eps * s3 / (s2 * s2)
    pref = s2 / (4.0 * s3)
    if side == "upper":
        # sqrt(1+q) - 1 written without cancellation
        return pref * q / (math.sqrt(1.0 + q) + 1.0)
    if side == "lower":
        if q > 1.0:
            raise RegimeError("lower-tail second-order tilt has no real solution (4 eps S3/S2^2 > 1)")
        return pref * q / (1.0 + math.sqrt(1.0 - q))
    raise ValueError("side must be 'upper' or 'lower'")


def _bisect(f, lo, hi, tol=1e-12, max_iter=200):
    """Root of increasing f on [lo, hi] with f(lo) < 0 < f(hi)."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def optimal_tilt(lam, eps, side="upper"):
    """Numeric optimum s* of the Chernoff exponent.

    upper: sum lam / (1 - 2 s lam) = E + eps, bracketed by [0, 1/(2 max lam))
    lower: sum lam / (1 + 2 s lam) = E - eps, s in [0, inf)
    """
    _check_eps(eps)
    w = _weights(lam)
    mean = float(w.sum())
    if side == "upper":
        s_pole = 0.5 / w.max()
        return _bisect(lambda s: float(np.sum(w / (1.0 - 2.0 * s * w))) - mean - eps, 0.0, s_pole * (1.0 - 1e-15),
                       tol=1e-12 * s_pole)
    if side == "lower":
        if eps >= mean:
            raise ValueError("eps must be below E[X] for the lower tail")

        def g(s):
            return mean - eps - float(np.sum(w / (1.0 + 2.0 * s * w)))

        hi = tilt_s1(w, eps)
        while g(hi) < 0:
            hi *= 2.0
        return _bisect(g, 0.0, hi, tol=1e-12 * hi)
    raise ValueError("side must be 'upper' or 'lower'")


def chernoff_exponent(lam, eps, s, side="upper"):
    """log of the Chernoff bound at tilt s (any admissible s, not only the optimum)."""
    w = _weights(lam)
    mean = float(w.sum())
    if side == "upper":
        return log_mgf(w, s) - s * (mean + eps)
    return log_mgf(w, -s) + s * (mean - eps)


def upper_closed_form(lam, eps):
    """exp(-eps^2 / (8 sum lam^2)); a valid bound when :func:`applicability` holds."""
    _, s2, _ = power_sums(lam)
    return math.exp(-eps * eps / (8.0 * s2))


def lower_closed_form(lam, eps):
    """exp(-eps^2 / (4 sum lam^2)); valid for every eps > 0."""
    _, s2, _ = power_sums(lam)
    return math.exp(-eps * eps / (4.0 * s2))


@dataclass
class TailReport:
    side: str
    epsilon: float
    bound: float
    bound_closed: float
    bound_numeric: float
    s_used: float
    method: str
    applicability: bool
    D: float = float("nan")
    empirical: float = float("nan")
    n_samples: int = 0

    CSV_FIELDS = ("D", "epsilon", "side", "bound_closed", "bound_numeric", "s_used",
                  "applicability", "empirical", "n_samples")

    def csv_row(self):
        return [self.D, self.epsilon, self.side, self.bound_closed, self.bound_numeric, self.s_used,
                int(self.applicability), self.empirical, self.n_samples]


def chernoff_upper(lam, eps):
    """P{X > E X + eps} bounds: closed form and numeric optimum.

    ``bound`` is the smaller of the two (and of 1). If the applicability
    flag is false the closed form is not a proven bound and only the
    numeric value is used.
    """
    _check_eps(eps)
    closed = upper_closed_form(lam, eps)
    s_star = optimal_tilt(lam, eps, "upper")
    numeric = math.exp(min(0.0, chernoff_exponent(lam, eps, s_star, "upper")))
    ok = applicability(lam, eps)
    if ok and closed < numeric:
        bound, method, s_used = closed, "s1", tilt_s1(lam, eps)
    else:
        bound, method, s_used = numeric, "numeric", s_star
    return TailReport("upper", eps, min(bound, 1.0), closed, numeric, float(s_used), method, ok)


def chernoff_lower(lam, eps):
    """P{X < E X - eps} bounds; any s >= 0 is admissible for the lower tail."""
    _check_eps(eps)
    mean = power_sums(lam)[0]
    if eps >= mean:
        raise ValueError("eps >= E[X]: the lower-tail event {X < 0} is empty")
    closed = lower_closed_form(lam, eps)
    s_star = optimal_tilt(lam, eps, "lower")
    numeric = math.exp(min(0.0, chernoff_exponent(lam, eps, s_star, "lower")))
    if closed < numeric:
        bound, method, s_used = closed, "s1", tilt_s1(lam, eps)
    else:
        bound, method, s_used = numeric, "numeric", s_star
    return TailReport("lower", eps, min(bound, 1.0), closed, numeric, float(s_used), method, applicability(lam, eps))
