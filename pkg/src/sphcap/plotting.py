"""PNG figures for the command line runner (optional; needs matplotlib).

Imported only when ``--plot`` is given, so the core package never depends
on matplotlib.
"""
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _col(header, rows, name):
    i = header.index(name)
    return np.array([row[i] for row in rows], dtype=float)


def _numeric_rows(rows):
    return [row for row in rows if not isinstance(row[0], str)]


def plot_spectrum(ax, cfg, header, rows):
    # one point per order j (cos entries; the sin partner is equal)
    rows = [row for row in _numeric_rows(rows) if row[header.index("parity")] == "cos"]
    j = _col(header, rows, "j")
    lam0 = rows[0][header.index("lambda_quadrature")]
    for name, style in (("lambda_quadrature", "-"), ("lambda_bessel", "--"), ("lambda_asymptotic", ":")):
        ax.plot(j, _col(header, rows, name), style, label=name.split("_")[1])
    ax.axvline(cfg.scale, color="0.6", lw=0.8)
    ax.set_yscale("log")
    ax.set_ylim(lam0 * 1e-12, lam0 * 10)
    ax.set_xlabel("order j")
    ax.set_ylabel(r"$\lambda_j$")
    ax.set_title(f"m = {cfg.m}, rm = {cfg.scale:g}")
    ax.legend()


def plot_figure1(ax, cfg, header, rows):
    k = _col(header, rows, "k")
    ax.plot(k, _col(header, rows, "ratio"), label="Bessel moment ratio")
    ax.plot(k, _col(header, rows, "ellipse"), "--", label="quarter ellipse")
    ax.axvline(cfg.scale, color="0.6", lw=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel(r"$\int_0^{rm} xJ_k^2 / \int_0^{\pi m} xJ_k^2$")
    ax.set_title(f"m = {cfg.m}, rm = {cfg.scale:g}")
    ax.legend()


def plot_tails(ax, cfg, header, rows):
    for side, marker in (("upper", "o"), ("lower", "s")):
        sub = [row for row in rows if row[header.index("side")] == side]
        eps = _col(header, sub, "epsilon")
        ax.semilogy(eps, _col(header, sub, "bound_closed"), marker + "-", label=f"{side} closed form")
        ax.semilogy(eps, _col(header, sub, "bound_numeric"), marker + "--", label=f"{side} numeric")
        emp = _col(header, sub, "empirical")
        ok = emp > 0
        ax.semilogy(eps[ok], emp[ok], marker, mfc="none", label=f"{side} empirical")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("tail probability")
    ax.legend()


def plot_histogram_pair(ax, cfg, header, rows):
    a = _col(header, rows, "cap_average")
    b = _col(header, rows, "sample_x")
    bins = np.histogram_bin_edges(np.concatenate([a, b]), bins=60)
    ax.hist(a, bins=bins, histtype="step", density=True, label="cap quadrature")
    ax.hist(b, bins=bins, histtype="step", density=True, label="spectrum draw")
    ax.axvline(1.0 / (4.0 * math.pi), color="0.6", lw=0.8)
    ax.set_xlabel(r"$X_z$")
    ax.legend()


def plot_discrepancy(ax, cfg, header, rows):
    d = _col(header, rows, "D")
    ax.hist(d, bins=40, histtype="stepfilled", alpha=0.6)
    for eps in cfg.epsilon:
        ax.axvline(eps, color="k", ls="--", lw=0.8)
    ax.set_xlabel("D(r, m)")
    ax.set_ylabel("replicates")
    ax.set_title(f"m = {cfg.m}, rm = {cfg.scale:g}")


def plot_variance(ax, cfg, header, rows):
    row = rows[0]
    vals = [row[header.index("var_quadrature")], row[header.index("var_asymptotic")]]
    ax.bar(["quadrature", "asymptotic"], vals)
    ax.set_ylabel(r"var $X_z$")
    ax.set_title(f"m = {cfg.m}, rm = {cfg.scale:g}")


PLOTTERS = {
    "spectrum": plot_spectrum,
    "figure1": plot_figure1,
    "tails": plot_tails,
    "capdrop": plot_histogram_pair,
    "discrepancy": plot_discrepancy,
    "variance": plot_variance,
}


def render(cfg, header, rows, path):
    """Draw the figure for ``cfg.command`` and save it to ``path``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        PLOTTERS[cfg.command](ax, cfg, header, rows)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
