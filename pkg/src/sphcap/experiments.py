"""Experiment tables behind the command line runner.

Each ``*_table`` function returns ``(header, rows)`` plus, where relevant,
a summary table. Nothing here touches the filesystem.
"""
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .capmass import (MEAN_X, CapQuadrature, CapSpec, RegimeError, lambda_asymptotic_spectrum, lambda_bessel,
                      lambda_quadrature, sample_x, trace_power, variance_asymptotic, variance_from_spectrum)
from .discrepancy import run_discrepancy
from .ensemble import sample_coefficients
from .rng import as_seed
from .specfun import bessel_moments
from .tailbounds import TailReport, chernoff_lower, chernoff_upper, lower_closed_form

# sub-stream tags under the run seed
FIELD_STREAM = 0
SPECTRUM_STREAM = 1


def spectrum_table(m, r):
    """Per-index quadrature, Bessel and asymptotic weights with a final ``sum`` row."""
    quad = lambda_quadrature(m, r)
    bess = lambda_bessel(m, r)
    asym = lambda_asymptotic_spectrum(m, r)
    header = ["k", "j", "parity", "lambda_quadrature", "lambda_bessel", "lambda_asymptotic"]
    rows = [[k, j, par, v, bess.lam[k], asym.lam[k]] for k, j, par, v in quad.rows()]
    rows.append(["sum", "", "", float(quad.lam.sum()), float(bess.lam.sum()), float(asym.lam.sum())])
    return header, rows


def variance_table(m, r):
    lam = lambda_quadrature(m, r)
    rm = r * m
    var = variance_from_spectrum(lam)
    asym = variance_asymptotic(rm)
    header = ["m", "r", "rm", "var_quadrature", "var_asymptotic", "ratio", "var_times_rm", "trace3"]
    return header, [[m, r, rm, var, asym, var / asym, var * rm, trace_power(lam, 3)]]


def tails_table(m, r, epsilons, n_samples, seed):
    """Upper and lower Chernoff bounds per epsilon with Monte Carlo tail frequencies."""
    lam = lambda_quadrature(m, r)
    x = sample_x(lam, as_seed(seed).child(SPECTRUM_STREAM), n_samples)
    mean = float(lam.lam.sum())
    rows = []
    for eps in epsilons:
        up = chernoff_upper(lam, eps)
        up.empirical = float(np.mean(x > MEAN_X + eps))
        if eps < mean:
            lo = chernoff_lower(lam, eps)
        else:
            # {X < E X - eps} is empty, so 0 is an exact bound
            closed = lower_closed_form(lam, eps)
            lo = TailReport("lower", eps, 0.0, closed, 0.0, float("nan"), "empty", False)
        lo.empirical = float(np.mean(x < MEAN_X - eps))
        for rep in (up, lo):
            rep.D = 2.0 * r * m
            rep.n_samples = n_samples
            rows.append(rep.csv_row())
    return list(TailReport.CSV_FIELDS), rows


def figure1_table(m, rm):
    """k versus M_k(rm) / M_k(pi m) for 0 <= k <= 2 rm, with M_k(t) = int_0^t x J_k(x)^2 dx.

    The ``ellipse`` column is the reference quarter ellipse
    ``(rm / (pi m)) sqrt(1 - (k / rm)^2)``.
    """
    kmax = int(math.floor(2.0 * rm))
    num = bessel_moments(kmax, rm)
    den = bessel_moments(kmax, math.pi * m)
    k = np.arange(kmax + 1)
    ellipse = rm / (math.pi * m) * np.sqrt(np.clip(1.0 - (k / rm) ** 2, 0.0, None))
    rows = [[int(i), float(a), float(b)] for i, a, b in zip(k, num / den, ellipse)]
    return ["k", "ratio", "ellipse"], rows


def _capdrop_block(args):
    m, r, seed, indices = args
    seed = as_seed(seed)
    lam = lambda_quadrature(m, r)
    quad = CapQuadrature(CapSpec(m, r))
    out = []
    for i in indices:
        xa = float(quad.average(sample_coefficients(m, seed.child(FIELD_STREAM, i))))
        xs = sample_x(lam, seed.child(SPECTRUM_STREAM, i))
        out.append((i, xa, xs))
    return out


def capdrop_table(m, r, replicates, seed, workers=1, block=500):
    """Per replicate: X from a sampled field by cap quadrature, and X drawn from the spectrum.

    The two columns should share one distribution. The summary compares
    their means and variances in units of the combined standard error.
    """
    blocks = [list(range(s, min(replicates, s + block))) for s in range(0, replicates, block)]
    tasks = [(m, r, as_seed(seed), b) for b in blocks]
    if workers <= 1:
        chunks = [_capdrop_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_capdrop_block, tasks))
    rows = sorted((row for ch in chunks for row in ch), key=lambda row: row[0])
    header = ["replicate", "m", "r", "cap_average", "sample_x"]
    table = [[i, m, r, a, b] for i, a, b in rows]
    a = np.array([row[1] for row in rows])
    b = np.array([row[2] for row in rows])
    return header, table, capdrop_summary(a, b)


def _mean_var_se(v):
    n = v.size
    var = float(v.var(ddof=1))
    mu4 = float(np.mean((v - v.mean()) ** 4))
    return float(v.mean()), math.sqrt(var / n), var, math.sqrt(max(mu4 - var * var, 0.0) / n)


def capdrop_summary(a, b):
    ma, sea, va, sva = _mean_var_se(a)
    mb, seb, vb, svb = _mean_var_se(b)
    header = ["statistic", "cap_average", "sample_x", "combined_se", "z"]
    rows = []
    for name, x, y, sx, sy in (("mean", ma, mb, sea, seb), ("variance", va, vb, sva, svb)):
        se = math.hypot(sx, sy)
        rows.append([name, x, y, se, (x - y) / se if se > 0 else 0.0])
    return header, rows


def discrepancy_tables(m, r, epsilons, replicates, seed, delta=None, workers=1):
    """Per-replicate D values and a summary of P{D > eps} with Wilson intervals."""
    if replicates < 50:
        raise ValueError("need at least 50 replicates")
    run = run_discrepancy(m, r, replicates, seed, delta, workers)
    summary = []
    for eps in epsilons:
        p, (lo, hi) = run.tail_probability(eps)
        summary.append([eps, run.replicates, p, lo, hi])
    return (list(run.CSV_FIELDS), run.csv_rows(),
            (["epsilon", "replicates", "p_hat", "ci_lo", "ci_hi"], summary), run)


__all__ = ["spectrum_table", "variance_table", "tails_table", "figure1_table", "capdrop_table",
           "capdrop_summary", "discrepancy_tables", "RegimeError"]
