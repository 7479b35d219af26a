"""Line charts of bound curves and tail estimates (matplotlib, Agg backend).

SVG output is made reproducible by fixing the hash salt and dropping the
date stamp; every curve is a group whose id is the curve name.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "excursion", "svg.fonttype": "none", "path.simplify": False}
_META = {"svg": {"Date": None}, "png": {}, "pdf": {"CreationDate": None, "ModDate": None}}

STYLES = {
    "p_ec": dict(color="tab:green", linestyle="--", label="P_E (EC approximation)"),
    "p_record": dict(color="tab:blue", linestyle="-", label="P_R (record bound)"),
    "p_direct": dict(color="tab:red", linestyle=":", label="P_M (direct bound)"),
}


def _save(fig, path):
    suffix = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, metadata=_META.get(suffix))
    plt.close(fig)


def _curves(ax, table, clamp, log_scale):
    t = table.clamped() if clamp else table
    for name, y in (("p_ec", t.pe), ("p_record", t.pr), ("p_direct", t.pm)):
        y = np.asarray(y, dtype=float)
        if log_scale:
            y = np.where(y > 0, y, np.nan)
        ax.plot(t.u, y, gid=name, **STYLES[name])
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("u")
    ax.set_ylabel("probability")
    ax.grid(True, which="both", alpha=0.3)


def plot_bounds(table, path, *, log_scale=False, clamp=True, title=None):
    """One chart with the EC, record and direct curves."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        _curves(ax, table, clamp, log_scale)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_panels(panels, path, *, log_scale=True, clamp=True):
    """Grid of comparison charts; ``panels`` is a sequence of (title, BoundTable)."""
    n = len(panels)
    cols = 3 if n > 4 else 2 if n > 1 else 1
    rows = -(-n // cols)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.3 * rows), squeeze=False)
        for ax, (title, table) in zip(axes.flat, panels):
            _curves(ax, table, clamp, log_scale)
            ax.set_title(title, fontsize=9)
        for ax in list(axes.flat)[n:]:
            ax.set_visible(False)
        axes.flat[0].legend(fontsize=7)
        fig.tight_layout()
        _save(fig, path)


def plot_tail(est, bounds, path, *, log_scale=True):
    """Empirical tail with its 95% band against named bound curves."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.errorbar(est.u, est.p_hat, yerr=est.half_width, fmt="o", ms=3, color="k",
                    label="grid maximum (MC)", gid="p_hat")
        for name, y in bounds.items():
            style = dict(STYLES.get(name, {}))
            style.setdefault("label", name)
            ax.plot(est.u, np.minimum(y, 1.0), gid=name, **style)
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("u")
        ax.set_ylabel("P(max >= u)")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        _save(fig, path)
